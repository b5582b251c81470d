#pragma once

// Test-only helpers: random instances and an exhaustive path-enumeration
// oracle that shares no code with the library's forward-backward.

#include "ealoc/hmm.hpp"
#include "ealoc/sarsa.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace testing {

using ealoc::HmmParamsd;
using ealoc::Observationd;

inline Eigen::VectorXd random_simplex(int n, ealoc::Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = e(rng) + 1e-3;
  return v / v.sum();
}

inline HmmParamsd random_params(int T, int M, ealoc::Rng& rng) {
  std::uniform_real_distribution<double> mu(-90.0, -40.0), sd(1.0, 8.0);
  HmmParamsd p;
  p.prior = random_simplex(T, rng);
  p.trans.resize(T, T);
  for (int i = 0; i < T; ++i) p.trans.row(i) = random_simplex(T, rng).transpose();
  p.mu.resize(T, M);
  p.sigma.resize(T, M);
  for (int j = 0; j < T; ++j)
    for (int k = 0; k < M; ++k) {
      p.mu(j, k) = mu(rng);
      p.sigma(j, k) = sd(rng);
    }
  return p;
}

// Readings near the model means, with some channels dropped.
inline std::vector<Observationd> random_sequence(const HmmParamsd& p, int L, ealoc::Rng& rng, double drop = 0.2) {
  std::uniform_int_distribution<int> state(0, static_cast<int>(p.n_states()) - 1);
  std::normal_distribution<double> z(0.0, 1.0);
  std::bernoulli_distribution lost(drop);
  std::vector<Observationd> seq;
  for (int t = 0; t < L; ++t) {
    const int j = state(rng);
    Observationd o = Observationd::none(p.n_aps());
    for (Eigen::Index k = 0; k < p.n_aps(); ++k) {
      if (lost(rng)) continue;
      o.rss(k) = p.mu(j, k) + 1.5 * p.sigma(j, k) * z(rng);
      o.present(k) = true;
    }
    seq.push_back(o);
  }
  return seq;
}

struct Enumerated {
  Eigen::MatrixXd marginals;  // L x T
  double loglik = 0;
};

inline double gaussian_density(double x, double mu, double sigma) {
  const double u = (x - mu) / sigma;
  return std::exp(-0.5 * u * u) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

// p(x_1..x_L, z) = sum_{x0} prior(x0) prod_t A(x_{t-1}, x_t) b_t(x_t), by
// visiting all T^L paths.
inline Enumerated enumerate_paths(const HmmParamsd& p, const std::vector<Observationd>& seq) {
  const int T = static_cast<int>(p.n_states());
  const int L = static_cast<int>(seq.size());
  Eigen::MatrixXd b(L, T);
  for (int t = 0; t < L; ++t)
    for (int j = 0; j < T; ++j) {
      double v = 1.0;
      for (Eigen::Index k = 0; k < seq[t].size(); ++k)
        if (seq[t].present(k)) v *= gaussian_density(seq[t].rss(k), p.mu(j, k), p.sigma(j, k));
      b(t, j) = v;
    }

  Enumerated out;
  out.marginals = Eigen::MatrixXd::Zero(L, T);
  double total = 0;
  std::vector<int> path(L, 0);
  for (;;) {
    double w = 0;
    for (int x0 = 0; x0 < T; ++x0) w += p.prior(x0) * p.trans(x0, path[0]);
    w *= b(0, path[0]);
    for (int t = 1; t < L; ++t) w *= p.trans(path[t - 1], path[t]) * b(t, path[t]);
    total += w;
    for (int t = 0; t < L; ++t) out.marginals(t, path[t]) += w;

    int t = L - 1;
    while (t >= 0 && ++path[t] == T) path[t--] = 0;
    if (t < 0) break;
  }
  out.marginals /= total;
  out.loglik = std::log(total);
  return out;
}

}  // namespace testing
