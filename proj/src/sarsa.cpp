#include "ealoc/sarsa.hpp"

#include <cmath>
#include <stdexcept>

namespace ealoc {

std::string_view to_string(MdpState s) noexcept { return s == MdpState::S1 ? "S1" : "S2"; }

std::string_view to_string(MdpAction a) noexcept { return a == MdpAction::A1 ? "A1" : "A2"; }

std::string_view to_string(Policy p) noexcept {
  switch (p) {
    case Policy::Greedy: return "greedy";
    case Policy::EpsilonGreedy: return "epsilon_greedy";
    case Policy::Softmax: return "softmax";
  }
  return "unknown";
}

MdpState parse_state(std::string_view text) {
  if (text == "S1") return MdpState::S1;
  if (text == "S2") return MdpState::S2;
  throw std::invalid_argument("unknown MDP state '" + std::string(text) + "'");
}

MdpAction parse_action(std::string_view text) {
  if (text == "A1") return MdpAction::A1;
  if (text == "A2") return MdpAction::A2;
  throw std::invalid_argument("unknown MDP action '" + std::string(text) + "'");
}

Policy parse_policy(std::string_view text) {
  if (text == "greedy") return Policy::Greedy;
  if (text == "epsilon_greedy" || text == "e-greedy" || text == "egreedy") return Policy::EpsilonGreedy;
  if (text == "softmax") return Policy::Softmax;
  throw std::invalid_argument("unknown policy '" + std::string(text) + "'");
}

QTable::QTable(const Eigen::Matrix2d& q) : q_(q) {
  if (!q_.allFinite()) throw std::invalid_argument("QTable entries must be finite");
}

void SarsaConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("sarsa.alpha must lie in [0,1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("sarsa.gamma must lie in [0,1)");
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("sarsa.epsilon must lie in [0,1]");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("sarsa.tau must be > 0");
}

int immediate_reward(MdpState s, MdpAction a) noexcept {
  if (s == MdpState::S1 && a == MdpAction::A1) return -1;
  if (s == MdpState::S2 && a == MdpAction::A2) return +1;
  return 0;
}

int boost(double e_t, double e_prev) {
  if (!std::isfinite(e_t) || !std::isfinite(e_prev) || e_t < 0.0 || e_prev < 0.0)
    throw std::invalid_argument("boost: errors must be finite and non-negative");
  return e_t >= e_prev ? -1 : +1;
}

QTable sarsa_update(const QTable& q, MdpState s, MdpAction a, int boost_value,
                    MdpState s_next, MdpAction a_next, const SarsaConfig& cfg) {
  cfg.validate();
  QTable out = q;
  const double td = boost_value + immediate_reward(s, a) + cfg.gamma * q(s_next, a_next) - q(s, a);
  out(s, a) = q(s, a) + cfg.alpha * td;
  return out;
}

MdpAction select_greedy(const QTable& q, MdpState s) {
  return q(s, MdpAction::A2) > q(s, MdpAction::A1) ? MdpAction::A2 : MdpAction::A1;
}

MdpAction select_epsilon_greedy(const QTable& q, MdpState s, const SarsaConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < cfg.epsilon) {
    return unit(rng) < 0.5 ? MdpAction::A1 : MdpAction::A2;
  }
  return select_greedy(q, s);
}

Eigen::Vector2d softmax_probs(const QTable& q, MdpState s, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("softmax_probs: tau must be > 0");
  const Eigen::Vector2d scaled = q.row(s).transpose() / tau;
  const Eigen::Vector2d w = (scaled.array() - scaled.maxCoeff()).exp();
  return w / w.sum();
}

MdpAction select_softmax(const QTable& q, MdpState s, const SarsaConfig& cfg, Rng& rng) {
  const Eigen::Vector2d p = softmax_probs(q, s, cfg.tau);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return unit(rng) < p(0) ? MdpAction::A1 : MdpAction::A2;
}

MdpAction select_action(const QTable& q, MdpState s, const SarsaConfig& cfg, Rng& rng) {
  switch (cfg.policy) {
    case Policy::Greedy: return select_greedy(q, s);
    case Policy::EpsilonGreedy: return select_epsilon_greedy(q, s, cfg, rng);
    case Policy::Softmax: return select_softmax(q, s, cfg, rng);
  }
  return select_greedy(q, s);
}

}  // namespace ealoc
