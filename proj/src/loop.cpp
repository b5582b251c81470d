#include "ealoc/loop.hpp"

#include "ealoc/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace ealoc {

void LoopConfig::validate() const {
  sarsa.validate();
  if (play_length < 1) throw std::invalid_argument("loop.play_length must be >= 1");
  if (n_plays < 1) throw std::invalid_argument("loop.plays must be >= 1");
  if (window < 1) throw std::invalid_argument("loop.window must be >= 1");
  if (initial_error && !(*initial_error >= 0.0 && std::isfinite(*initial_error)))
    throw std::invalid_argument("loop.initial_error must be finite and >= 0, or inf");
}

double distance_error(std::span<const int> decoded, std::span<const int> truth,
                      std::span<const Point> centroids) {
  if (decoded.size() != truth.size()) throw std::invalid_argument("distance_error: length mismatch");
  if (decoded.empty()) throw std::invalid_argument("distance_error: empty sequence");
  double sum = 0;
  for (std::size_t t = 0; t < decoded.size(); ++t) sum += distance(centroids[decoded[t]], centroids[truth[t]]);
  return sum / static_cast<double>(decoded.size());
}

double distance_error(std::span<const int> decoded, std::span<const int> truth, const GridWorld& world) {
  return distance_error(decoded, truth, std::span<const Point>(world.centroids));
}

int tracked_boost(std::optional<double> e_t, std::optional<double> e_prev) {
  if (!e_prev) return e_t ? +1 : -1;
  if (!e_t) throw std::logic_error("tracked error cannot be lost once measured");
  return boost(*e_t, *e_prev);
}

AgentState initial_agent(const LoopConfig& cfg) {
  AgentState a;
  a.state = cfg.initial_state;
  a.action = action_into(cfg.initial_state);
  a.error = cfg.initial_error;
  return a;
}

AgentStep advance_agent(AgentState& agent, std::optional<double> measured, const SarsaConfig& cfg, Rng& rng) {
  const std::optional<double> e_t = measured ? measured : agent.error;
  AgentStep step{agent.state, agent.action, immediate_reward(agent.state, agent.action),
                 tracked_boost(e_t, agent.error), e_t};
  const MdpState s_next = next_state(agent.action);
  const MdpAction a_next = select_action(agent.q, s_next, cfg, rng);
  agent.q = sarsa_update(agent.q, agent.state, agent.action, step.boost, s_next, a_next, cfg);
  agent.state = s_next;
  agent.action = a_next;
  agent.error = e_t;
  return step;
}

SlidingWindow::SlidingWindow(int capacity, int n_models) : capacity_(capacity), tables_(n_models) {
  if (capacity < 1) throw std::invalid_argument("window capacity must be >= 1");
}

void SlidingWindow::set_model(int model, const HmmParamsd& params) {
  tables_.at(model).emplace(params);
  for (std::size_t t = 0; t < ticks_.size(); ++t)
    cache_[t][model] = scale_emissions<double>((*tables_[model])(ticks_[t].obs)).first;
}

void SlidingWindow::push(WindowTick tick) {
  if (!tick.obs.present_finite()) throw std::invalid_argument("window: non-finite RSS reading");
  std::vector<Eigen::VectorXd> rows;
  rows.reserve(tables_.size());
  for (const auto& table : tables_) {
    if (!table) throw std::logic_error("window: model not installed");
    rows.push_back(scale_emissions<double>((*table)(tick.obs)).first);
  }
  if (ticks_.empty()) tick.follows_previous = false;
  ticks_.push_back(std::move(tick));
  cache_.push_back(std::move(rows));
  if (size() > capacity_) {
    ticks_.pop_front();
    cache_.pop_front();
    ticks_.front().follows_previous = false;
  }
}

void SlidingWindow::clear() {
  ticks_.clear();
  cache_.clear();
}

Eigen::MatrixXd SlidingWindow::scaled(int model) const {
  if (ticks_.empty()) throw std::logic_error("window is empty");
  Eigen::MatrixXd out(size(), cache_.front()[model].size());
  for (int t = 0; t < size(); ++t) out.row(t) = cache_[t][model].transpose();
  return out;
}

std::vector<int> SlidingWindow::decode(int model, const HmmParamsd& params) const {
  // Shifts only move the log-evidence, not the posteriors.
  const auto path = decode_map(forward_backward_scaled(params, scaled(model), std::vector<double>(size(), 0.0)));
  return {path.begin(), path.end()};
}

int SlidingWindow::decode_last(int model, const HmmParamsd& params) const {
  return static_cast<int>(argmax_lowest(filter_last_scaled(params, scaled(model))));
}

std::optional<LabeledBatch<double>> SlidingWindow::take_batch(BatchRule rule) {
  LabeledBatch<double> batch;
  int prev = -2;
  for (int t = 0; t < size(); ++t) {
    auto& tick = ticks_[t];
    if (!tick.label || (rule == BatchRule::Fresh && tick.consumed)) continue;
    batch.items.push_back({*tick.label, tick.obs, prev == t - 1 && tick.follows_previous});
    if (rule == BatchRule::Fresh) tick.consumed = true;
    prev = t;
  }
  if (batch.items.empty()) return std::nullopt;
  return batch;
}

Replication::Replication(GridWorld world, ModelTriplet models, LoopConfig cfg, std::uint64_t seed)
    : world_(std::move(world)),
      models_(std::move(models)),
      cfg_(std::move(cfg)),
      agent_(initial_agent(cfg_)),
      window_(cfg_.window, 3),
      motion_(derive_seed(seed, {kStreamMotion})),
      sensing_(derive_seed(seed, {kStreamSensing})),
      policy_(derive_seed(seed, {kStreamPolicy})) {
  cfg_.validate();
  std::uniform_int_distribution<int> start(0, world_.n_cells() - 1);
  cell_ = start(motion_);
  window_.set_model(kReinforced, models_.reinforced);
  window_.set_model(kControl, models_.control);
  window_.set_model(kUnderlying, models_.underlying);
}

StepRecord Replication::run_tick() {
  cell_ = step_trajectory(world_, cell_, motion_);
  WindowTick wt;
  wt.obs = sample_observation(models_.underlying, cell_, sensing_);
  wt.truth = cell_;
  if (world_.oracle_mask[cell_]) wt.label = cell_;
  wt.follows_previous = true;
  window_.push(std::move(wt));

  StepRecord rec;
  rec.tick = tick_++;
  rec.true_cell = cell_;
  rec.decoded_control = window_.decode_last(kControl, models_.control);
  rec.decoded_underlying = window_.decode_last(kUnderlying, models_.underlying);

  std::optional<double> measured;
  if (agent_.state == MdpState::S1) {
    const std::vector<int> decoded = window_.decode(kReinforced, models_.reinforced);
    rec.decoded_reinforced = decoded.back();
    std::vector<int> est, lab;
    for (int t = 0; t < window_.size(); ++t) {
      const auto& tick = window_[t];
      if (tick.label && tick.label_scores) {
        est.push_back(decoded[t]);
        lab.push_back(*tick.label);
      }
    }
    if (!est.empty()) {
      measured = distance_error(est, lab, world_);
      if (auto batch = window_.take_batch(cfg_.batch_rule)) {
        models_.reinforced = reestimate(models_.reinforced, *batch, cfg_.oracle_weight, cfg_.scope);
        window_.set_model(kReinforced, models_.reinforced);
        rec.reestimated = true;
      }
    }
  } else {
    rec.decoded_reinforced = window_.decode_last(kReinforced, models_.reinforced);
  }

  const AgentStep step = advance_agent(agent_, measured, cfg_.sarsa, policy_);
  rec.mdp_state = step.state;
  rec.action = step.action;
  rec.reward = step.reward;
  rec.boost = step.boost;
  rec.error = step.error;
  return rec;
}

namespace {

struct MeanSe {
  double sum = 0;
  double sum_sq = 0;
  void add(double x) {
    sum += x;
    sum_sq += x * x;
  }
  double mean(int n) const { return sum / n; }
  double se(int n) const {
    if (n < 2) return 0.0;
    const double m = mean(n);
    const double var = std::max(0.0, (sum_sq - n * m * m) / (n - 1));
    return std::sqrt(var / n);
  }
};

}  // namespace

PlayRecord Replication::run_play() {
  const int L = cfg_.play_length;
  MeanSe ctrl, reinf, under;
  int s1_ticks = 0;
  for (int i = 0; i < L; ++i) {
    const StepRecord r = run_tick();
    ctrl.add(world_.cell_distance(r.decoded_control, r.true_cell));
    reinf.add(world_.cell_distance(r.decoded_reinforced, r.true_cell));
    under.add(world_.cell_distance(r.decoded_underlying, r.true_cell));
    s1_ticks += r.mdp_state == MdpState::S1;
  }
  PlayRecord out;
  out.play = plays_++;
  out.err_control = ctrl.mean(L);
  out.err_reinforced = reinf.mean(L);
  out.err_underlying = under.mean(L);
  out.se_control = ctrl.se(L);
  out.se_reinforced = reinf.se(L);
  out.se_underlying = under.se(L);
  out.dependence = static_cast<double>(s1_ticks) / L;
  return out;
}

}  // namespace ealoc
