#pragma once

// Flat sectioned key = value configuration shared by all subcommands.
//
//   # comment
//   [sarsa]
//   alpha = 0.4
//
// Every key is addressed as "section.key"; the same names work for --set on
// the command line. Unknown keys are errors.

#include "ealoc/environment.hpp"
#include "ealoc/experiment.hpp"
#include "ealoc/loop.hpp"
#include "ealoc/replay.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ealoc {

struct ConfigEntry {
  std::string key;  // section.key
  std::string value;
  int line = 0;
};

std::vector<ConfigEntry> parse_config(std::istream& is, const std::string& source);

struct RunConfig {
  LoopConfig loop;
  PathLossParams path_loss;
  Setting setting;  // simulate runs exactly this setting
  bool square_side = false;
  int replications = 20;
  std::uint64_t seed = 1;
  int threads = 0;

  std::vector<Policy> sweep_policies{Policy::Greedy, Policy::EpsilonGreedy, Policy::Softmax};
  std::vector<double> sweep_coverages{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<int> sweep_grids;  // empty: world.grid
  std::vector<int> sweep_aps;    // empty: world.aps
  double final_fraction = 0.2;

  std::string replay_data;
  std::string replay_rooms;  // empty: <data>/rooms.csv
  int replay_repeats = 20;
  std::vector<Policy> replay_policies{Policy::Greedy, Policy::EpsilonGreedy, Policy::Softmax};

  FixtureConfig fixture;

  std::string out = "-";
  std::string records;
  std::string curves;

  /// Sets one "section.key" from its text form; throws InputError naming the key.
  void set(const std::string& key, const std::string& value);
  void apply(const std::vector<ConfigEntry>& entries, const std::string& source);

  ExperimentConfig simulate_config() const;
  ExperimentConfig sweep_config() const;
  ReplayConfig replay_config() const;
  void validate() const;
};

/// Defaults overlaid with the file; a missing file is an InputError naming it.
RunConfig load_config(const std::filesystem::path& path);

/// Every key with its current value, in file order.
void write_config(std::ostream& os, const RunConfig& cfg);

}  // namespace ealoc
