#pragma once

// Gaussian-emission HMM over discrete location states: scaled forward-backward
// smoothing and per-step MAP decoding.
//
// The joint factorises with an unobserved initial state x0:
//   p(x_{0:L}, z_{1:L}) = p(x0) * prod_t p(z_t | x_t) p(x_t | x_{t-1})
// so the predicted distribution for the first observation is prior^T * trans.
// Emissions are a product of independent per-AP Gaussians; absent readings
// contribute nothing.

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ealoc {

inline constexpr double kSigmaFloor = 0.1;  // dB
inline constexpr double kRssMin = -120.0;   // dBm
inline constexpr double kRssMax = 0.0;      // dBm

template <typename Scalar>
struct HmmParams {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector prior;  // p(x0), length T
  Matrix trans;  // T x T, row-stochastic
  Matrix mu;     // T x M, dBm
  Matrix sigma;  // T x M, dB

  Eigen::Index n_states() const { return prior.size(); }
  Eigen::Index n_aps() const { return mu.cols(); }

  void validate(Scalar tol = Scalar(1e-9)) const {
    const auto T = n_states();
    if (T < 1) throw std::invalid_argument("HmmParams: need at least one state");
    if (trans.rows() != T || trans.cols() != T)
      throw std::invalid_argument("HmmParams: trans must be T x T");
    if (mu.rows() != T || sigma.rows() != T || sigma.cols() != mu.cols() || mu.cols() < 1)
      throw std::invalid_argument("HmmParams: mu/sigma must both be T x M with M >= 1");
    if (!prior.allFinite() || !trans.allFinite() || !mu.allFinite() || !sigma.allFinite())
      throw std::invalid_argument("HmmParams: non-finite entry");
    if ((prior.array() < 0).any() || std::abs(prior.sum() - Scalar(1)) > tol)
      throw std::invalid_argument("HmmParams: prior must be a probability vector");
    if ((trans.array() < 0).any() ||
        ((trans.rowwise().sum().array() - Scalar(1)).abs() > tol).any())
      throw std::invalid_argument("HmmParams: trans rows must be probability vectors");
    if ((sigma.array() < Scalar(kSigmaFloor) * (Scalar(1) - Scalar(1e-12))).any())
      throw std::invalid_argument("HmmParams: sigma below floor");
  }

  friend bool operator==(const HmmParams& a, const HmmParams& b) {
    return a.prior == b.prior && a.trans == b.trans && a.mu == b.mu && a.sigma == b.sigma;
  }
};

template <typename Scalar>
struct Observation {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mask = Eigen::Array<bool, Eigen::Dynamic, 1>;

  Vector rss;    // dBm; value ignored where !present
  Mask present;

  static Observation full(const Vector& values) {
    return {values, Mask::Constant(values.size(), true)};
  }
  static Observation none(Eigen::Index n_aps) {
    return {Vector::Zero(n_aps), Mask::Constant(n_aps, false)};
  }

  Eigen::Index size() const { return rss.size(); }

  bool present_finite() const {
    for (Eigen::Index k = 0; k < rss.size(); ++k)
      if (present(k) && !std::isfinite(rss(k))) return false;
    return true;
  }
  bool in_range() const {
    for (Eigen::Index k = 0; k < rss.size(); ++k)
      if (present(k) && !(rss(k) >= Scalar(kRssMin) && rss(k) <= Scalar(kRssMax))) return false;
    return true;
  }
};

template <typename Scalar>
struct PosteriorSeq {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gamma;  // L x T
  Scalar loglik = 0;
};

using HmmParamsd = HmmParams<double>;
using Observationd = Observation<double>;
using PosteriorSeqd = PosteriorSeq<double>;

namespace detail {
template <typename Scalar>
constexpr Scalar half_log_two_pi() {
  return Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
}
}  // namespace detail

/// log p(z | x = j); 0 when every reading is absent.
template <typename Scalar>
Scalar log_emission(const HmmParams<Scalar>& params, const Observation<Scalar>& obs,
                    Eigen::Index j) {
  if (j < 0 || j >= params.n_states()) throw std::out_of_range("log_emission: state index");
  Scalar acc = 0;
  for (Eigen::Index k = 0; k < obs.size(); ++k) {
    if (!obs.present(k)) continue;
    const Scalar s = params.sigma(j, k);
    const Scalar d = (obs.rss(k) - params.mu(j, k)) / s;
    acc -= detail::half_log_two_pi<Scalar>() + std::log(s) + Scalar(0.5) * d * d;
  }
  return acc;
}

/// log p(z | x = j) for every state j.
template <typename Scalar>
typename HmmParams<Scalar>::Vector log_emissions(const HmmParams<Scalar>& params,
                                                 const Observation<Scalar>& obs) {
  if (obs.size() != params.n_aps()) throw std::invalid_argument("observation width != n_aps");
  using Vector = typename HmmParams<Scalar>::Vector;
  Vector out = Vector::Zero(params.n_states());
  for (Eigen::Index k = 0; k < obs.size(); ++k) {
    if (!obs.present(k)) continue;
    const auto s = params.sigma.col(k).array();
    out.array() -= detail::half_log_two_pi<Scalar>() + s.log() +
                   Scalar(0.5) * ((obs.rss(k) - params.mu.col(k).array()) / s).square();
  }
  return out;
}

/// L x T matrix of per-step log emissions.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> log_emission_matrix(
    const HmmParams<Scalar>& params, const std::vector<Observation<Scalar>>& seq) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(seq.size(), params.n_states());
  for (std::size_t t = 0; t < seq.size(); ++t) {
    if (!seq[t].present_finite())
      throw std::invalid_argument("non-finite RSS reading at step " + std::to_string(t));
    out.row(t) = log_emissions(params, seq[t]).transpose();
  }
  return out;
}

// Per-(state, AP) constants for evaluating many observations against one
// parameter set without recomputing logarithms.
template <typename Scalar>
class EmissionTable {
 public:
  using Vector = typename HmmParams<Scalar>::Vector;
  using Matrix = typename HmmParams<Scalar>::Matrix;

  explicit EmissionTable(const HmmParams<Scalar>& params)
      : mu_(params.mu),
        inv_sigma_(params.sigma.cwiseInverse()),
        log_norm_(-(params.sigma.array().log() + detail::half_log_two_pi<Scalar>()).matrix()) {}

  /// Same values as log_emissions(params, obs).
  Vector operator()(const Observation<Scalar>& obs) const {
    if (obs.size() != mu_.cols()) throw std::invalid_argument("observation width != n_aps");
    Vector out = Vector::Zero(mu_.rows());
    for (Eigen::Index k = 0; k < obs.size(); ++k) {
      if (!obs.present(k)) continue;
      out.array() += log_norm_.col(k).array() -
                     Scalar(0.5) * ((obs.rss(k) - mu_.col(k).array()) * inv_sigma_.col(k).array()).square();
    }
    return out;
  }

 private:
  Matrix mu_;
  Matrix inv_sigma_;
  Matrix log_norm_;
};

/// exp(log_b - max(log_b)) and the subtracted maximum.
template <typename Scalar, typename Derived>
std::pair<typename HmmParams<Scalar>::Vector, Scalar> scale_emissions(const Eigen::MatrixBase<Derived>& log_b) {
  const Scalar shift = log_b.maxCoeff();
  return {(log_b.array() - shift).exp().matrix(), shift};
}

/// Scaled forward-backward over rescaled emissions b (L x T, each row
/// exp(log_b - shift_t)). loglik adds the shifts back.
template <typename Scalar, typename Derived>
PosteriorSeq<Scalar> forward_backward_scaled(const HmmParams<Scalar>& params, const Eigen::MatrixBase<Derived>& b,
                                             const std::vector<Scalar>& shifts) {
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  const Eigen::Index L = b.rows();
  const Eigen::Index T = params.n_states();
  if (L < 1) throw std::invalid_argument("forward_backward: empty observation sequence");
  if (b.cols() != T) throw std::invalid_argument("forward_backward: emission width != T");
  if (static_cast<Eigen::Index>(shifts.size()) != L) throw std::invalid_argument("forward_backward: shift count");

  PosteriorSeq<Scalar> out;
  out.gamma.resize(L, T);
  std::vector<Scalar> scale(L);
  Scalar loglik = 0;

  RowVector pred = params.prior.transpose() * params.trans;
  for (Eigen::Index t = 0; t < L; ++t) {
    RowVector alpha = pred.cwiseProduct(b.row(t));
    const Scalar c = alpha.sum();
    if (!(c > 0)) throw std::domain_error("forward_backward: observation sequence has zero likelihood");
    alpha /= c;
    scale[t] = c;
    loglik += std::log(c) + shifts[t];
    out.gamma.row(t) = alpha;
    pred.noalias() = alpha * params.trans;
  }

  RowVector beta = RowVector::Ones(T);
  RowVector next(T);
  for (Eigen::Index t = L - 2; t >= 0; --t) {
    next = b.row(t + 1).cwiseProduct(beta);
    beta.noalias() = next * params.trans.transpose();
    beta /= scale[t + 1];
    out.gamma.row(t) = out.gamma.row(t).cwiseProduct(beta);
    out.gamma.row(t) /= out.gamma.row(t).sum();
  }
  out.loglik = loglik;
  return out;
}

/// Scaled forward-backward over log emissions (L x T).
template <typename Scalar, typename Derived>
PosteriorSeq<Scalar> forward_backward_log(const HmmParams<Scalar>& params,
                                          const Eigen::MatrixBase<Derived>& log_b) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> b(log_b.rows(), log_b.cols());
  std::vector<Scalar> shifts(log_b.rows());
  for (Eigen::Index t = 0; t < log_b.rows(); ++t) {
    auto [row, shift] = scale_emissions<Scalar>(log_b.row(t).transpose());
    b.row(t) = row.transpose();
    shifts[t] = shift;
  }
  return forward_backward_scaled(params, b, shifts);
}

template <typename Scalar>
PosteriorSeq<Scalar> forward_backward(const HmmParams<Scalar>& params,
                                      const std::vector<Observation<Scalar>>& seq) {
  if (seq.empty()) throw std::invalid_argument("forward_backward: empty observation sequence");
  return forward_backward_log(params, log_emission_matrix(params, seq));
}

/// Filtered posterior of the final step (equal to the smoothed one there),
/// over rescaled emissions.
template <typename Scalar, typename Derived>
typename HmmParams<Scalar>::Vector filter_last_scaled(const HmmParams<Scalar>& params,
                                                      const Eigen::MatrixBase<Derived>& b) {
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  if (b.rows() < 1) throw std::invalid_argument("filter_last: empty observation sequence");
  RowVector pred = params.prior.transpose() * params.trans;
  RowVector alpha(params.n_states());
  for (Eigen::Index t = 0; t < b.rows(); ++t) {
    alpha = pred.cwiseProduct(b.row(t));
    const Scalar c = alpha.sum();
    if (!(c > 0)) throw std::domain_error("filter_last: observation sequence has zero likelihood");
    alpha /= c;
    if (t + 1 < b.rows()) pred.noalias() = alpha * params.trans;
  }
  return alpha.transpose();
}

template <typename Scalar, typename Derived>
typename HmmParams<Scalar>::Vector filter_last(const HmmParams<Scalar>& params,
                                               const Eigen::MatrixBase<Derived>& log_b) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> b(log_b.rows(), log_b.cols());
  for (Eigen::Index t = 0; t < log_b.rows(); ++t)
    b.row(t) = scale_emissions<Scalar>(log_b.row(t).transpose()).first.transpose();
  return filter_last_scaled(params, b);
}

/// Lowest index wins exact ties.
template <typename Derived>
Eigen::Index argmax_lowest(const Eigen::DenseBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < v.size(); ++j)
    if (v(j) > v(best)) best = j;
  return best;
}

template <typename Scalar>
std::vector<Eigen::Index> decode_map(const PosteriorSeq<Scalar>& post) {
  std::vector<Eigen::Index> path(post.gamma.rows());
  for (Eigen::Index t = 0; t < post.gamma.rows(); ++t) path[t] = argmax_lowest(post.gamma.row(t));
  return path;
}

}  // namespace ealoc
