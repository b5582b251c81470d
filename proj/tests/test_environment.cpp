#include "ealoc/environment.hpp"
#include "ealoc/rng.hpp"

#include <doctest.h>

#include <map>
#include <sstream>

using namespace ealoc;

TEST_CASE("log-distance path loss") {
  PathLossParams p;
  CHECK(path_loss_mean({0, 0}, {1, 0}, p) == p.p0);
  CHECK(path_loss_mean({0, 0}, {10, 0}, p) == doctest::Approx(p.p0 - 20));
  CHECK(path_loss_mean({0, 0}, {0.3, 0}, p) == p.p0);
  double prev = p.p0;
  for (double d = 1.0; d < 50; d += 0.37) {
    const double v = path_loss_mean({0, 0}, {d, 0}, p);
    CHECK(v <= prev);
    prev = v;
  }
}

TEST_CASE("path loss parameter validation") {
  PathLossParams p;
  p.d0 = 0;
  CHECK_THROWS_WITH(p.validate(), doctest::Contains("d0"));
  p = {};
  p.exponent = -1;
  CHECK_THROWS(p.validate());
  p = {};
  p.shadow_sigma = -1;
  CHECK_THROWS(p.validate());
}

TEST_CASE("near-square layouts for the cell counts used in sweeps") {
  CHECK(GridShape::near_square(10) == GridShape{5, 2});
  CHECK(GridShape::near_square(20) == GridShape{5, 4});
  CHECK(GridShape::near_square(30) == GridShape{6, 5});
  CHECK(GridShape::square(4).cells() == 16);
}

TEST_CASE("world construction") {
  PathLossParams p;
  auto [w, m] = build_world(GridShape{5, 4}, 6, 0.5, p, 42);
  CHECK(w.n_cells() == 20);
  CHECK(w.n_aps() == 6);
  for (const auto& ap : w.ap_positions) {
    CHECK(ap.x >= 0);
    CHECK(ap.x <= 5);
    CHECK(ap.y >= 0);
    CHECK(ap.y <= 4);
  }
  CHECK(w.oracle_count() == 10);
  CHECK_NOTHROW(m.underlying.validate());
  CHECK_NOTHROW(m.control.validate());
  CHECK(m.control == m.reinforced);
  CHECK(m.control.trans == m.underlying.trans);
  CHECK(m.control.sigma == m.underlying.sigma);
  CHECK(m.control.mu != m.underlying.mu);
  CHECK(m.underlying.trans == lazy_walk_kernel(w.shape));
  CHECK(m.underlying.mu(3, 2) == path_loss_mean(w.ap_positions[2], w.centroids[3], p));
  CHECK(w.centroids[7].x == 2.5);
  CHECK(w.centroids[7].y == 1.5);
}

TEST_CASE("world validation") {
  PathLossParams p;
  CHECK_THROWS(build_world(GridShape{1, 1}, 2, 0.5, p, 1));
  CHECK_THROWS(build_world(GridShape{3, 3}, 0, 0.5, p, 1));
  CHECK_THROWS(build_world(GridShape{3, 3}, 2, 0.0, p, 1));
  CHECK_THROWS(build_world(GridShape{3, 3}, 2, 1.1, p, 1));
}

TEST_CASE("full coverage and zero corruption") {
  PathLossParams p;
  p.awgn_sigma_ctrl = 0;
  auto [w, m] = build_world(GridShape{4, 4}, 3, 1.0, p, 9);
  CHECK(w.oracle_count() == 16);
  CHECK(m.control == m.underlying);
}

TEST_CASE("coverage within one cell of the target") {
  for (int n : {10, 20, 30, 49})
    for (int i = 1; i <= 10; ++i) {
      const double c = i / 10.0;
      const auto mask = oracle_mask(n, c, derive_seed(5, {static_cast<std::uint64_t>(n)}));
      const auto count = std::count(mask.begin(), mask.end(), true);
      CHECK(std::abs(count - c * n) <= 1.0);
    }
}

TEST_CASE("masks for one seed are nested across coverages") {
  const auto lo = oracle_mask(20, 0.3, 77);
  const auto hi = oracle_mask(20, 0.6, 77);
  for (int i = 0; i < 20; ++i)
    if (lo[i]) CHECK(hi[i]);
}

TEST_CASE("control corruption energy matches the configured sigma") {
  PathLossParams p;
  auto [w, m] = build_world(GridShape::square(12), 6, 0.5, p, 3);
  const double mse = (m.control.mu - m.underlying.mu).squaredNorm() / m.control.mu.size();
  CHECK(mse == doctest::Approx(p.awgn_sigma_ctrl * p.awgn_sigma_ctrl).epsilon(0.2));
}

TEST_CASE("equal seeds give equal worlds, trajectories and observations") {
  PathLossParams p;
  auto a = build_world(GridShape{5, 4}, 6, 0.4, p, 123);
  auto b = build_world(GridShape{5, 4}, 6, 0.4, p, 123);
  CHECK(a.second.underlying == b.second.underlying);
  CHECK(a.second.control == b.second.control);
  CHECK(a.first.oracle_mask == b.first.oracle_mask);
  Rng r1(8), r2(8);
  int c1 = 0, c2 = 0;
  for (int t = 0; t < 200; ++t) {
    c1 = step_trajectory(a.first, c1, r1);
    c2 = step_trajectory(b.first, c2, r2);
    CHECK(c1 == c2);
    const auto o1 = sample_observation(a.second.underlying, c1, r1);
    const auto o2 = sample_observation(b.second.underlying, c2, r2);
    CHECK(o1.rss == o2.rss);
  }
  auto c = build_world(GridShape{5, 4}, 6, 0.4, p, 124);
  CHECK_FALSE(c.second.underlying == a.second.underlying);
}

TEST_CASE("lazy walk move distribution") {
  GridWorld w;
  w.shape = {4, 3};
  Rng rng(1);
  constexpr int n = 100000;
  auto freq = [&](int from) {
    std::map<int, int> hits;
    for (int i = 0; i < n; ++i) ++hits[step_trajectory(w, from, rng)];
    return hits;
  };
  const auto corner = freq(0);
  CHECK(corner.size() == 3);
  for (auto [cell, k] : corner) CHECK(std::abs(k / double(n) - 1.0 / 3) < 0.01);
  const auto interior = freq(5);
  CHECK(interior.size() == 5);
  for (auto [cell, k] : interior) CHECK(std::abs(k / double(n) - 0.2) < 0.01);

  GridWorld single;
  single.shape = {1, 1};
  for (int i = 0; i < 100; ++i) CHECK(step_trajectory(single, 0, rng) == 0);
  CHECK_THROWS(step_trajectory(w, 12, rng));
}

TEST_CASE("lazy walk kernel is row-stochastic") {
  const auto k = lazy_walk_kernel({6, 5});
  CHECK((k.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(k(0, 0) == doctest::Approx(1.0 / 3));
  CHECK(k(7, 8) == doctest::Approx(0.2));
  CHECK(k(0, 7) == 0.0);
}

TEST_CASE("observation sampling") {
  HmmParamsd p;
  p.mu = Eigen::MatrixXd::Constant(2, 3, -60);
  p.mu(1, 2) = -75;
  p.sigma = Eigen::MatrixXd::Zero(2, 3);
  p.prior = Eigen::Vector2d(0.5, 0.5);
  p.trans = Eigen::MatrixXd::Constant(2, 2, 0.5);
  Rng rng(4);
  CHECK(sample_observation(p, 1, rng).rss == Eigen::Vector3d(-60, -60, -75));
  CHECK(sample_observation(p, 1, rng).present.all());

  p.sigma.setConstant(4.0);
  constexpr int n = 100000;
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (int i = 0; i < n; ++i) sum += sample_observation(p, 1, rng).rss;
  const Eigen::Vector3d mean = sum / n;
  for (int k = 0; k < 3; ++k) CHECK(std::abs(mean(k) - p.mu(1, k)) < 3 * 4.0 / std::sqrt(double(n)));
}

TEST_CASE("world file round-trip") {
  auto [w, m] = build_world(GridShape{5, 2}, 4, 0.3, PathLossParams{}, 17);
  std::stringstream ss;
  write_world(ss, w, m);
  auto [w2, m2] = read_world(ss);
  CHECK(w2.shape == w.shape);
  CHECK(w2.oracle_mask == w.oracle_mask);
  CHECK(w2.ap_positions.size() == w.ap_positions.size());
  CHECK(w2.ap_positions[1].x == w.ap_positions[1].x);
  CHECK(m2.underlying == m.underlying);
  CHECK(m2.control == m.control);
  CHECK(m2.reinforced == m.reinforced);
  std::istringstream bad("world 2 2 1\naps 0\n");
  CHECK_THROWS(read_world(bad));
}
