#pragma once

// Closed-loop controller: each tick the SARSA agent's state decides whether
// the oracle sensors are on (S1: compare decoded window against oracle labels,
// re-estimate the reinforced model) or off (S2: keep the previous error).

#include "ealoc/environment.hpp"
#include "ealoc/hmm.hpp"
#include "ealoc/reestimation.hpp"
#include "ealoc/sarsa.hpp"

#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace ealoc {

// Which labelled window ticks feed a re-estimation.
enum class BatchRule {
  Fresh,   // labels not used by an earlier re-estimation
  Window,  // every labelled tick currently in the window
};

struct LoopConfig {
  SarsaConfig sarsa;
  OracleWeight oracle_weight;
  ReestimationScope scope = ReestimationScope::means_only();
  BatchRule batch_rule = BatchRule::Fresh;
  int play_length = 200;
  int n_plays = 100;
  int window = 20;
  MdpState initial_state = MdpState::S1;
  // Error before the first measurement; nullopt is the +inf sentinel, so the
  // first measured error always earns B = +1.
  std::optional<double> initial_error;

  void validate() const;
};

/// Mean Euclidean distance between decoded and true cell centroids.
double distance_error(std::span<const int> decoded, std::span<const int> truth,
                      std::span<const Point> centroids);
double distance_error(std::span<const int> decoded, std::span<const int> truth, const GridWorld& world);

/// Boost with the "no error yet" sentinel: a first measurement counts as an
/// improvement, and two missing errors compare as equal.
int tracked_boost(std::optional<double> e_t, std::optional<double> e_prev);

// SARSA side of a tick, shared by simulation and replay.
struct AgentState {
  QTable q;
  MdpState state = MdpState::S1;
  MdpAction action = MdpAction::A1;
  std::optional<double> error;
};

struct AgentStep {
  MdpState state;
  MdpAction action;
  int reward;
  int boost;
  std::optional<double> error;  // e(t) after this tick
};

AgentState initial_agent(const LoopConfig& cfg);

/// Applies boost, action selection for s_{t+1} = next_state(a_t), the boosted
/// SARSA update and the state transition. `measured` is e(t) when the tick
/// produced a fresh error, nullopt to retain e(t-1).
AgentStep advance_agent(AgentState& agent, std::optional<double> measured, const SarsaConfig& cfg, Rng& rng);

// A labelled tick held in the inference window.
struct WindowTick {
  Observationd obs;
  int truth = -1;
  std::optional<int> label;  // oracle label available for this tick
  bool label_scores = true;  // label may be used for e(t), not only re-estimation
  bool follows_previous = false;
  bool consumed = false;  // already used by a re-estimation
};

// Fixed-capacity history with per-model cached, rescaled emissions.
class SlidingWindow {
 public:
  SlidingWindow(int capacity, int n_models);

  /// Installs (or replaces) a model's parameters and refreshes its cache.
  void set_model(int model, const HmmParamsd& params);
  void push(WindowTick tick);
  void clear();

  int size() const { return static_cast<int>(ticks_.size()); }
  const WindowTick& operator[](int i) const { return ticks_[i]; }

  /// Smoothed per-step MAP over the window.
  std::vector<int> decode(int model, const HmmParamsd& params) const;
  /// MAP of the newest tick.
  int decode_last(int model, const HmmParamsd& params) const;

  /// Labelled ticks for re-estimation; nullopt when none qualify. The Fresh
  /// rule marks the returned ticks as used.
  std::optional<LabeledBatch<double>> take_batch(BatchRule rule);

 private:
  Eigen::MatrixXd scaled(int model) const;

  int capacity_;
  std::vector<std::optional<EmissionTable<double>>> tables_;
  std::deque<WindowTick> ticks_;
  std::deque<std::vector<Eigen::VectorXd>> cache_;  // [tick][model], exp(log b - max)
};

struct StepRecord {
  long tick = 0;
  MdpState mdp_state = MdpState::S1;
  MdpAction action = MdpAction::A1;
  int reward = 0;
  int boost = 0;
  std::optional<double> error;  // tracked e(t), meters
  int true_cell = -1;
  int decoded_control = -1;
  int decoded_reinforced = -1;
  int decoded_underlying = -1;
  bool reestimated = false;
};

struct PlayRecord {
  int play = 0;
  double err_control = 0;
  double err_reinforced = 0;
  double err_underlying = 0;
  // Standard errors of the play means (per-tick spread / sqrt(L)).
  double se_control = 0;
  double se_reinforced = 0;
  double se_underlying = 0;
  double dependence = 0;  // fraction of ticks spent in S1
};

// One replication: private world copy, models, agent and random streams.
// Q and the reinforced model persist across plays.
class Replication {
 public:
  Replication(GridWorld world, ModelTriplet models, LoopConfig cfg, std::uint64_t seed);

  StepRecord run_tick();
  PlayRecord run_play();

  const ModelTriplet& models() const { return models_; }
  const AgentState& agent() const { return agent_; }
  const GridWorld& world() const { return world_; }
  const LoopConfig& config() const { return cfg_; }
  int plays_run() const { return plays_; }

 private:
  enum Model { kReinforced = 0, kControl = 1, kUnderlying = 2 };

  GridWorld world_;
  ModelTriplet models_;
  LoopConfig cfg_;
  AgentState agent_;
  SlidingWindow window_;
  Rng motion_;
  Rng sensing_;
  Rng policy_;
  int cell_;
  long tick_ = 0;
  int plays_ = 0;
};

}  // namespace ealoc
