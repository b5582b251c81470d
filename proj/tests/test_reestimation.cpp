#include "ealoc/reestimation.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace ealoc;

namespace {

using Batch = LabeledBatch<double>;

HmmParamsd two_state() {
  HmmParamsd p;
  p.prior = Eigen::Vector2d(0.5, 0.5);
  p.trans.resize(2, 2);
  p.trans << 0.5, 0.5, 0.3, 0.7;
  p.mu.resize(2, 1);
  p.mu << -50, -70;
  p.sigma.resize(2, 1);
  p.sigma << 2, 3;
  return p;
}

Batch::Item item(Eigen::Index state, double z, bool follows = false) {
  return {state, Observationd::full(Eigen::VectorXd::Constant(1, z)), follows};
}

Batch random_batch(const HmmParamsd& p, int n, Rng& rng) {
  std::uniform_int_distribution<int> state(0, static_cast<int>(p.n_states()) - 1);
  std::bernoulli_distribution follows(0.7);
  Batch b;
  const auto obs = testing::random_sequence(p, n, rng, 0.3);
  for (int i = 0; i < n; ++i) b.items.push_back({state(rng), obs[i], i > 0 && follows(rng)});
  return b;
}

double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return ((a - b).cwiseAbs().array() / b.cwiseAbs().array().max(1e-300)).maxCoeff();
}

}  // namespace

TEST_CASE("oracle weight range") {
  CHECK(OracleWeight{}.value() == 0.7);
  CHECK_NOTHROW(OracleWeight(0.0));
  CHECK_NOTHROW(OracleWeight(1.0));
  CHECK_THROWS(OracleWeight(1.01));
  CHECK_THROWS(OracleWeight(-0.1));
}

TEST_CASE("hand-evaluated emission blend") {
  auto p = two_state();
  Batch b{{item(0, -40), item(0, -44)}};
  const auto q = reestimate_emissions(p, b, OracleWeight(0.7));
  CHECK(q.mu(0, 0) == doctest::Approx(-47.6).epsilon(1e-14));
  CHECK(q.sigma(0, 0) * q.sigma(0, 0) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(q.mu(1, 0) == p.mu(1, 0));
  CHECK(q.sigma(1, 0) == p.sigma(1, 0));
}

TEST_CASE("single sample shrinks the variance by w") {
  auto p = two_state();
  const auto q = reestimate_emissions(p, Batch{{item(1, -65)}}, OracleWeight(0.7));
  CHECK(q.mu(1, 0) == doctest::Approx(0.7 * -70 + 0.3 * -65));
  CHECK(q.sigma(1, 0) * q.sigma(1, 0) == doctest::Approx(0.7 * 9));
}

TEST_CASE("full replacement at w = 0") {
  auto p = two_state();
  const auto q = reestimate_emissions(p, Batch{{item(0, -40), item(0, -44), item(0, -42)}}, OracleWeight(0.0));
  CHECK(q.mu(0, 0) == doctest::Approx(-42));
  CHECK(q.sigma(0, 0) * q.sigma(0, 0) == doctest::Approx(8.0 / 3));
  // Identical samples: variance clamps to the floor.
  const auto r = reestimate_emissions(p, Batch{{item(0, -40), item(0, -40)}}, OracleWeight(0.0));
  CHECK(r.sigma(0, 0) == doctest::Approx(kSigmaFloor));
}

TEST_CASE("hand-evaluated transition blend") {
  auto p = two_state();
  const auto u = reestimate_transitions(p, Batch{{item(0, -50), item(1, -70, true)}}, OracleWeight(0.7));
  CHECK(u.used_pairs);
  CHECK(u.params.trans(0, 0) == doctest::Approx(0.35));
  CHECK(u.params.trans(0, 1) == doctest::Approx(0.65));
  CHECK(u.params.trans.row(1) == p.trans.row(1));

  const auto full = reestimate_transitions(p, Batch{{item(0, -50), item(1, -70, true), item(0, -50), item(1, -70, true)}},
                                           OracleWeight(0.0));
  CHECK(full.params.trans(0, 0) == 0.0);
  CHECK(full.params.trans(0, 1) == 1.0);
}

TEST_CASE("no consecutive pairs leaves transitions alone and says so") {
  auto p = two_state();
  const auto u = reestimate_transitions(p, Batch{{item(0, -50), item(1, -70, false)}}, OracleWeight(0.2));
  CHECK_FALSE(u.used_pairs);
  CHECK(u.params == p);
}

TEST_CASE("bad batches are rejected") {
  auto p = two_state();
  CHECK_THROWS(reestimate(p, Batch{}, OracleWeight{}));
  CHECK_THROWS(reestimate(p, Batch{{item(2, -50)}}, OracleWeight{}));
  Batch wide{{{0, Observationd::full(Eigen::Vector2d(-50, -60)), false}}};
  CHECK_THROWS(reestimate(p, wide, OracleWeight{}));
}

TEST_CASE("w = 1 is the identity") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = testing::random_params(4, 3, rng);
    const auto q = reestimate(p, random_batch(p, 15, rng), OracleWeight(1.0));
    CHECK(rel_diff(q.mu, p.mu) <= 1e-15);
    CHECK(rel_diff(q.sigma, p.sigma) <= 1e-15);
    CHECK(rel_diff(q.trans, p.trans) <= 1e-15);
    CHECK(q.prior == p.prior);
  }
}

TEST_CASE("chained re-estimations keep rows stochastic and sigmas floored") {
  Rng rng(2);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  auto p = testing::random_params(5, 3, rng);
  for (int i = 0; i < 1000; ++i) {
    p = reestimate(p, random_batch(p, 1 + i % 12, rng), OracleWeight(w(rng)));
    REQUIRE((p.trans.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-9);
    REQUIRE(p.sigma.minCoeff() >= kSigmaFloor);
    REQUIRE((p.trans.array() >= 0).all());
  }
}

TEST_CASE("updated means lie between the old mean and the batch mean") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    auto p = testing::random_params(3, 1, rng);
    Batch b;
    std::normal_distribution<double> z(-60, 10);
    double sum = 0;
    const int n = 1 + trial % 6;
    for (int i = 0; i < n; ++i) {
      const double x = z(rng);
      sum += x;
      b.items.push_back(item(1, x));
    }
    const double xbar = sum / n;
    const auto q = reestimate_emissions(p, b, OracleWeight(0.7));
    const double lo = std::min(p.mu(1, 0), xbar), hi = std::max(p.mu(1, 0), xbar);
    CHECK(q.mu(1, 0) >= lo - 1e-12);
    CHECK(q.mu(1, 0) <= hi + 1e-12);
  }
}

TEST_CASE("batch whose moments match the model is a fixpoint") {
  auto p = two_state();
  // mean -50, population variance 4 = sigma^2; pairs 0->0, 0->1 in proportion to row 0.
  Batch b{{item(0, -48), item(0, -52, true), item(1, -70, true)}};
  b.items[2].obs = Observationd::none(1);  // keep state 1's emission untouched
  const auto q = reestimate(p, b, OracleWeight(0.7));
  CHECK(std::abs(q.mu(0, 0) - p.mu(0, 0)) <= 1e-12);
  CHECK(std::abs(q.sigma(0, 0) - p.sigma(0, 0)) <= 1e-12);
  CHECK((q.trans - p.trans).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("scope selects the blocks that move") {
  Rng rng(4);
  const auto p = testing::random_params(3, 2, rng);
  const auto b = random_batch(p, 20, rng);
  const auto full = reestimate(p, b, OracleWeight(0.5));
  const auto means = reestimate(p, b, OracleWeight(0.5), ReestimationScope::means_only());
  CHECK(means.mu == full.mu);
  CHECK(means.sigma == p.sigma);
  CHECK(means.trans == p.trans);
  const auto em = reestimate(p, b, OracleWeight(0.5), ReestimationScope::emissions());
  CHECK(em.sigma == full.sigma);
  CHECK(em.trans == p.trans);
}

TEST_CASE("absent readings do not count as samples") {
  auto p = two_state();
  Batch b{{item(0, -40), {0, Observationd::none(1), false}}};
  const auto q = reestimate_emissions(p, b, OracleWeight(0.5));
  CHECK(q.mu(0, 0) == doctest::Approx(-45));
}
