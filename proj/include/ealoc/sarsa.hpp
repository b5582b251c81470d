#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace ealoc {

using Rng = std::mt19937_64;

// S1: enhanced (oracle) sensing, S2: low-power RSS-only sensing.
enum class MdpState : int { S1 = 0, S2 = 1 };
// Taking A1 leads to S1, A2 leads to S2.
enum class MdpAction : int { A1 = 0, A2 = 1 };

enum class Policy { Greedy, EpsilonGreedy, Softmax };

constexpr MdpState next_state(MdpAction a) noexcept {
  return a == MdpAction::A1 ? MdpState::S1 : MdpState::S2;
}

// Action that keeps the system in (or moves it to) `s`.
constexpr MdpAction action_into(MdpState s) noexcept {
  return s == MdpState::S1 ? MdpAction::A1 : MdpAction::A2;
}

std::string_view to_string(MdpState s) noexcept;
std::string_view to_string(MdpAction a) noexcept;
std::string_view to_string(Policy p) noexcept;
MdpState parse_state(std::string_view text);
MdpAction parse_action(std::string_view text);
Policy parse_policy(std::string_view text);

/// 2x2 state-action value matrix; rows are states, columns actions.
class QTable {
 public:
  QTable() : q_(Eigen::Matrix2d::Zero()) {}
  explicit QTable(const Eigen::Matrix2d& q);

  double operator()(MdpState s, MdpAction a) const {
    return q_(static_cast<int>(s), static_cast<int>(a));
  }
  double& operator()(MdpState s, MdpAction a) {
    return q_(static_cast<int>(s), static_cast<int>(a));
  }
  auto row(MdpState s) const { return q_.row(static_cast<int>(s)); }
  const Eigen::Matrix2d& matrix() const { return q_; }
  bool all_finite() const { return q_.allFinite(); }

  friend bool operator==(const QTable& a, const QTable& b) { return a.q_ == b.q_; }

 private:
  Eigen::Matrix2d q_;
};

struct SarsaConfig {
  double alpha = 0.4;
  double gamma = 0.9;
  double epsilon = 0.1;
  double tau = 1.0;
  Policy policy = Policy::EpsilonGreedy;
  std::uint64_t rng_seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// -1 for (S1,A1), +1 for (S2,A2), 0 otherwise.
int immediate_reward(MdpState s, MdpAction a) noexcept;

/// Error-trend boost: -1 when the tracked error did not decrease, +1 when it did.
/// Rejects non-finite or negative errors.
int boost(double e_t, double e_prev);

/// Boosted on-policy update of the single entry (s, a):
///   Q(s,a) += alpha * (B + r(s,a) + gamma * Q(s',a') - Q(s,a))
QTable sarsa_update(const QTable& q, MdpState s, MdpAction a, int boost_value,
                    MdpState s_next, MdpAction a_next, const SarsaConfig& cfg);

// Ties go to A1.
MdpAction select_greedy(const QTable& q, MdpState s);

// The exploratory branch draws uniformly from both actions, so the greedy
// action can be re-drawn: P(greedy) = 1 - eps + eps/2.
MdpAction select_epsilon_greedy(const QTable& q, MdpState s, const SarsaConfig& cfg, Rng& rng);

/// Boltzmann probabilities over (A1, A2) with max-subtraction.
Eigen::Vector2d softmax_probs(const QTable& q, MdpState s, double tau);

MdpAction select_softmax(const QTable& q, MdpState s, const SarsaConfig& cfg, Rng& rng);

/// Dispatches on cfg.policy.
MdpAction select_action(const QTable& q, MdpState s, const SarsaConfig& cfg, Rng& rng);

}  // namespace ealoc
