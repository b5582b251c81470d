#pragma once

// One-shot weighted re-estimation of HMM parameters from oracle-labelled
// observations. The retention weight w is the share of the old distribution
// kept; (1 - w) goes to the batch sample moments:
//
//   mu'     = w mu + (1 - w) mean
//   sigma'^2 = max(floor^2, w sigma^2 + (1 - w) var)     (population variance)
//   A'_i    = w A_i + (1 - w) counts_i / sum(counts_i)
//
// Only (state, AP) cells and transition rows that the batch touches move.
// The prior is never re-estimated.

#include "ealoc/hmm.hpp"

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ealoc {

class OracleWeight {
 public:
  constexpr OracleWeight() = default;
  explicit OracleWeight(double w) : w_(w) {
    if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("oracle weight must lie in [0,1]");
  }
  constexpr double value() const { return w_; }

 private:
  double w_ = 0.7;
};

template <typename Scalar>
struct LabeledBatch {
  struct Item {
    Eigen::Index state;
    Observation<Scalar> obs;
    bool follows_previous = false;  // item i-1 was the immediately preceding tick
  };
  std::vector<Item> items;

  std::size_t pair_count() const {
    std::size_t n = 0;
    for (std::size_t i = 1; i < items.size(); ++i) n += items[i].follows_previous;
    return n;
  }
};

template <typename Scalar>
struct TransitionUpdate {
  HmmParams<Scalar> params;
  bool used_pairs = false;  // false: no consecutive pairs, params returned unchanged
};

namespace detail {
template <typename Scalar>
void check_batch(const HmmParams<Scalar>& params, const LabeledBatch<Scalar>& batch) {
  if (batch.items.empty()) throw std::invalid_argument("re-estimation: empty batch");
  for (const auto& it : batch.items) {
    if (it.state < 0 || it.state >= params.n_states())
      throw std::out_of_range("re-estimation: label out of range");
    if (it.obs.size() != params.n_aps())
      throw std::invalid_argument("re-estimation: observation width != n_aps");
  }
}
}  // namespace detail

template <typename Scalar>
HmmParams<Scalar> reestimate_emissions(const HmmParams<Scalar>& params,
                                       const LabeledBatch<Scalar>& batch, OracleWeight weight) {
  detail::check_batch(params, batch);
  using Matrix = typename HmmParams<Scalar>::Matrix;
  const auto T = params.n_states();
  const auto M = params.n_aps();

  // Welford accumulators per (state, AP).
  Eigen::MatrixXi count = Eigen::MatrixXi::Zero(T, M);
  Matrix mean = Matrix::Zero(T, M);
  Matrix m2 = Matrix::Zero(T, M);
  for (const auto& it : batch.items) {
    for (Eigen::Index k = 0; k < M; ++k) {
      if (!it.obs.present(k)) continue;
      const Scalar x = it.obs.rss(k);
      if (!std::isfinite(x)) throw std::invalid_argument("re-estimation: non-finite reading");
      const int n = ++count(it.state, k);
      const Scalar delta = x - mean(it.state, k);
      mean(it.state, k) += delta / Scalar(n);
      m2(it.state, k) += delta * (x - mean(it.state, k));
    }
  }

  const Scalar w = Scalar(weight.value());
  const Scalar floor2 = Scalar(kSigmaFloor) * Scalar(kSigmaFloor);
  HmmParams<Scalar> out = params;
  for (Eigen::Index j = 0; j < T; ++j) {
    for (Eigen::Index k = 0; k < M; ++k) {
      const int n = count(j, k);
      if (n == 0) continue;
      const Scalar var = n > 1 ? m2(j, k) / Scalar(n) : Scalar(0);
      const Scalar s = params.sigma(j, k);
      out.mu(j, k) = w * params.mu(j, k) + (Scalar(1) - w) * mean(j, k);
      out.sigma(j, k) = std::sqrt(std::max(floor2, w * s * s + (Scalar(1) - w) * var));
    }
  }
  return out;
}

template <typename Scalar>
TransitionUpdate<Scalar> reestimate_transitions(const HmmParams<Scalar>& params,
                                                const LabeledBatch<Scalar>& batch,
                                                OracleWeight weight) {
  detail::check_batch(params, batch);
  using Matrix = typename HmmParams<Scalar>::Matrix;
  const auto T = params.n_states();
  Matrix counts = Matrix::Zero(T, T);
  bool any = false;
  for (std::size_t i = 1; i < batch.items.size(); ++i) {
    if (!batch.items[i].follows_previous) continue;
    counts(batch.items[i - 1].state, batch.items[i].state) += Scalar(1);
    any = true;
  }
  TransitionUpdate<Scalar> out{params, any};
  if (!any) return out;

  const Scalar w = Scalar(weight.value());
  for (Eigen::Index i = 0; i < T; ++i) {
    const Scalar total = counts.row(i).sum();
    if (total == Scalar(0)) continue;
    out.params.trans.row(i) = w * params.trans.row(i) + (Scalar(1) - w) * counts.row(i) / total;
  }
  return out;
}

// Which parameter blocks a combined re-estimation touches.
struct ReestimationScope {
  bool means = true;
  bool variances = true;
  bool transitions = true;

  static constexpr ReestimationScope all() { return {true, true, true}; }
  static constexpr ReestimationScope means_only() { return {true, false, false}; }
  static constexpr ReestimationScope emissions() { return {true, true, false}; }
};

/// Emissions, then transitions when the batch holds consecutive pairs,
/// restricted to the blocks selected by `scope`.
template <typename Scalar>
HmmParams<Scalar> reestimate(const HmmParams<Scalar>& params, const LabeledBatch<Scalar>& batch,
                             OracleWeight weight, ReestimationScope scope = ReestimationScope::all()) {
  HmmParams<Scalar> out = params;
  if (scope.means || scope.variances) {
    auto updated = reestimate_emissions(params, batch, weight);
    if (scope.means) out.mu = std::move(updated.mu);
    if (scope.variances) out.sigma = std::move(updated.sigma);
  }
  if (scope.transitions) out = reestimate_transitions(out, batch, weight).params;
  return out;
}

}  // namespace ealoc
