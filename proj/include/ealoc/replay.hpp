#pragma once

// Replays recorded RSS sessions with room labels through the closed loop:
// 3 sessions fit the initial model, the rest stream in a permuted order.

#include "ealoc/environment.hpp"
#include "ealoc/experiment.hpp"
#include "ealoc/hmm.hpp"
#include "ealoc/loop.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ealoc {

enum class OracleKind { None, Camera, Pir };

std::string_view to_string(OracleKind k) noexcept;

struct Room {
  std::string id;
  Point centroid;
  bool camera = false;
};

class RoomTable {
 public:
  RoomTable() = default;
  explicit RoomTable(std::vector<Room> rooms);

  int size() const { return static_cast<int>(rooms_.size()); }
  const Room& operator[](int i) const { return rooms_[i]; }
  std::optional<int> find(const std::string& id) const;
  double distance(int a, int b) const { return ealoc::distance(rooms_[a].centroid, rooms_[b].centroid); }
  double camera_fraction() const;
  const std::vector<Room>& rooms() const { return rooms_; }

 private:
  std::vector<Room> rooms_;
  std::map<std::string, int> index_;
};

struct ReplayTick {
  double t = 0;
  Observationd obs;
  int room = -1;
  std::optional<int> oracle_room;
  OracleKind oracle_kind = OracleKind::None;
};

struct Session {
  std::string name;
  std::vector<ReplayTick> ticks;
};

struct ReplayDataset {
  std::vector<std::string> ap_names;
  std::vector<Session> sessions;

  int n_aps() const { return static_cast<int>(ap_names.size()); }
  std::size_t tick_count() const;
};

// Room table CSV: room,x,y,camera (camera is 0 or 1).
RoomTable read_room_table(std::istream& is, const std::string& source = "rooms");
RoomTable load_room_table(const std::filesystem::path& path);
void write_room_table(std::ostream& os, const RoomTable& rooms);

// Session CSV: t,rss_<ap>...,room,oracle_room,oracle_kind; empty = absent.
Session read_session(std::istream& is, const std::string& name, const RoomTable& rooms,
                     std::vector<std::string>& ap_names);
void write_session(std::ostream& os, const Session& s, const std::vector<std::string>& ap_names,
                   const RoomTable& rooms);

/// Every *.csv in `dir` except the room table, in file-name order.
ReplayDataset load_dataset(const std::filesystem::path& dir, const std::filesystem::path& room_table_path);

struct FitResult {
  HmmParamsd params;
  std::vector<int> under_observed;  // rooms without labelled training ticks
};

/// Supervised moments per room and AP from the true room column, transitions
/// from consecutive pairs with add-one smoothing, uniform prior.
FitResult fit_initial_model(const ReplayDataset& data, const std::vector<int>& train, const RoomTable& rooms);

struct SplitPlan {
  std::vector<int> train;  // sorted
  std::vector<int> test;   // streaming order
  int repeat = 0;
};

inline constexpr int kTrainSessions = 3;

SplitPlan make_split_plan(int n_sessions, std::uint64_t seed, int repeat);

struct ReplayConfig {
  LoopConfig loop;
  std::vector<Policy> policies{Policy::Greedy, Policy::EpsilonGreedy, Policy::Softmax};
  int repeats = 20;
  std::uint64_t seed = 1;
  int threads = 0;

  void validate() const;
};

inline constexpr int kCheckpoints = 3;
inline constexpr double kCheckpointFractions[kCheckpoints] = {0.25, 0.5, 1.0};

// One row per policy and model (control, reinforced, dependence).
struct CheckpointRow {
  Policy policy;
  std::string model;
  double mean[kCheckpoints];
  double std[kCheckpoints];
};

struct ReplayResult {
  std::vector<RecordRow> records;  // one per (repeat, policy, test session)
  std::vector<CheckpointRow> summary;
};

/// Test sessions [first, last) making up each checkpoint segment:
/// (0,25%], (25%,50%], (50%,100%] of the stream.
std::vector<std::pair<int, int>> checkpoint_segments(int n_test);

ReplayResult run_replay(const ReplayDataset& data, const RoomTable& rooms, const ReplayConfig& cfg);

void write_checkpoint_csv(std::ostream& os, const std::vector<CheckpointRow>& rows);

// Synthetic dataset from a simulated house: rooms are grid cells, cameras sit
// on the oracle mask, PIR fires elsewhere. Each session gets a per-AP offset.
struct FixtureConfig {
  int experiments = 12;
  int ticks = 200;
  int cols = 3;
  int rows = 3;
  double cell_size = 3.0;
  int aps = 4;
  double camera_coverage = 1.0 / 3.0;
  double session_offset_sigma = 3.0;
  double packet_loss = 0.05;
  double pir_rate = 0.5;
  PathLossParams path_loss;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Fixture {
  RoomTable rooms;
  ReplayDataset data;
};

Fixture make_fixture(const FixtureConfig& cfg);
void write_fixture(const std::filesystem::path& dir, const Fixture& f);

}  // namespace ealoc
