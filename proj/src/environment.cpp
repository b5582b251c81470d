#include "ealoc/environment.hpp"

#include "ealoc/hmm_io.hpp"
#include "ealoc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace ealoc {

double distance(Point a, Point b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

void PathLossParams::validate() const {
  if (!(d0 > 0)) throw std::invalid_argument("world.d0 must be > 0");
  if (!(exponent > 0)) throw std::invalid_argument("world.exponent must be > 0");
  if (!(shadow_sigma >= 0)) throw std::invalid_argument("world.shadow_sigma must be >= 0");
  if (!(awgn_sigma_ctrl >= 0)) throw std::invalid_argument("world.awgn_sigma must be >= 0");
  if (!std::isfinite(p0)) throw std::invalid_argument("world.p0 must be finite");
}

GridShape GridShape::near_square(int cells) {
  if (cells < 1) throw std::invalid_argument("grid cell count must be positive");
  int rows = 1;
  for (int r = 1; r * r <= cells; ++r)
    if (cells % r == 0) rows = r;
  return {cells / rows, rows};
}

int GridWorld::oracle_count() const {
  return static_cast<int>(std::count(oracle_mask.begin(), oracle_mask.end(), true));
}

double path_loss_mean(Point ap, Point cell, const PathLossParams& p) {
  const double d = std::max(distance(ap, cell), p.d0);
  return p.p0 - 10.0 * p.exponent * std::log10(d / p.d0);
}

namespace {

std::vector<int> legal_moves(const GridShape& shape, int cell) {
  const int c = cell % shape.cols;
  const int r = cell / shape.cols;
  std::vector<int> out{cell};
  if (c > 0) out.push_back(cell - 1);
  if (c + 1 < shape.cols) out.push_back(cell + 1);
  if (r > 0) out.push_back(cell - shape.cols);
  if (r + 1 < shape.rows) out.push_back(cell + shape.cols);
  return out;
}

}  // namespace

Eigen::MatrixXd lazy_walk_kernel(const GridShape& shape) {
  const int n = shape.cells();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const auto moves = legal_moves(shape, i);
    for (int j : moves) k(i, j) = 1.0 / static_cast<double>(moves.size());
  }
  return k;
}

std::vector<bool> oracle_mask(int n_cells, double coverage, std::uint64_t seed) {
  if (!(coverage > 0.0 && coverage <= 1.0)) throw std::invalid_argument("world.coverage must lie in (0,1]");
  std::vector<int> order(n_cells);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const int covered = std::min(n_cells, static_cast<int>(std::ceil(coverage * n_cells - 1e-9)));
  std::vector<bool> mask(n_cells, false);
  for (int i = 0; i < covered; ++i) mask[order[i]] = true;
  return mask;
}

std::pair<GridWorld, ModelTriplet> build_world(GridShape shape, int m_aps, double coverage,
                                               const PathLossParams& p, std::uint64_t seed,
                                               double cell_size) {
  p.validate();
  if (shape.cols < 1 || shape.rows < 1 || shape.cells() < 2)
    throw std::invalid_argument("world.grid must have at least 2 cells");
  if (m_aps < 1) throw std::invalid_argument("world.aps must be >= 1");
  if (!(coverage > 0.0 && coverage <= 1.0)) throw std::invalid_argument("world.coverage must lie in (0,1]");

  if (!(cell_size > 0)) throw std::invalid_argument("world.cell_size must be > 0");

  GridWorld world;
  world.shape = shape;
  world.cell_size = cell_size;
  const int n = shape.cells();
  world.centroids.reserve(n);
  for (int i = 0; i < n; ++i)
    world.centroids.push_back({(i % shape.cols + 0.5) * world.cell_size, (i / shape.cols + 0.5) * world.cell_size});

  Rng place(derive_seed(seed, {kStreamWorld}));
  std::uniform_real_distribution<double> ux(0.0, shape.cols * world.cell_size);
  std::uniform_real_distribution<double> uy(0.0, shape.rows * world.cell_size);
  for (int k = 0; k < m_aps; ++k) {
    const double x = ux(place);
    world.ap_positions.push_back({x, uy(place)});
  }
  world.oracle_mask = oracle_mask(n, coverage, derive_seed(seed, {kStreamOracleMask}));

  HmmParamsd truth;
  truth.prior = Eigen::VectorXd::Constant(n, 1.0 / n);
  truth.trans = lazy_walk_kernel(shape);
  truth.mu.resize(n, m_aps);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < m_aps; ++k) truth.mu(j, k) = path_loss_mean(world.ap_positions[k], world.centroids[j], p);
  truth.sigma = Eigen::MatrixXd::Constant(n, m_aps, std::max(p.shadow_sigma, kSigmaFloor));

  HmmParamsd corrupted = truth;
  if (p.awgn_sigma_ctrl > 0) {
    Rng noise(derive_seed(seed, {kStreamCorruption}));
    std::normal_distribution<double> awgn(0.0, p.awgn_sigma_ctrl);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < m_aps; ++k) corrupted.mu(j, k) += awgn(noise);
  }
  return {std::move(world), ModelTriplet{std::move(truth), corrupted, corrupted}};
}

int step_trajectory(const GridWorld& world, int cell, Rng& rng) {
  if (cell < 0 || cell >= world.n_cells()) throw std::out_of_range("step_trajectory: cell index");
  const auto moves = legal_moves(world.shape, cell);
  std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
  return moves[pick(rng)];
}

Observationd sample_observation(const HmmParamsd& underlying, int cell, Rng& rng) {
  if (cell < 0 || cell >= underlying.n_states()) throw std::out_of_range("sample_observation: cell index");
  std::normal_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd z(underlying.n_aps());
  for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = underlying.mu(cell, k) + underlying.sigma(cell, k) * unit(rng);
  return Observationd::full(z);
}

void write_world(std::ostream& os, const GridWorld& world, const ModelTriplet& models) {
  const auto old_precision = os.precision(17);
  os << "world " << world.shape.cols << ' ' << world.shape.rows << ' ' << world.cell_size << '\n';
  os << "aps " << world.n_aps() << '\n';
  for (const auto& ap : world.ap_positions) os << ap.x << ' ' << ap.y << '\n';
  os << "oracle ";
  for (bool b : world.oracle_mask) os << (b ? '1' : '0');
  os << '\n';
  os.precision(old_precision);
  os << "model underlying\n";
  write_hmm(os, models.underlying);
  os << "model control\n";
  write_hmm(os, models.control);
  os << "model reinforced\n";
  write_hmm(os, models.reinforced);
}

std::pair<GridWorld, ModelTriplet> read_world(std::istream& is) {
  auto expect = [&](const std::string& word) {
    std::string got;
    if (!(is >> got) || got != word) throw std::runtime_error("world file: expected '" + word + "'");
  };
  GridWorld world;
  expect("world");
  if (!(is >> world.shape.cols >> world.shape.rows >> world.cell_size))
    throw std::runtime_error("world file: bad header");
  expect("aps");
  int m = 0;
  if (!(is >> m) || m < 1) throw std::runtime_error("world file: bad AP count");
  world.ap_positions.resize(m);
  for (auto& ap : world.ap_positions)
    if (!(is >> ap.x >> ap.y)) throw std::runtime_error("world file: bad AP position");
  expect("oracle");
  std::string bits;
  is >> bits;
  if (static_cast<int>(bits.size()) != world.shape.cells()) throw std::runtime_error("world file: oracle mask length");
  for (char c : bits) world.oracle_mask.push_back(c == '1');
  for (int i = 0; i < world.shape.cells(); ++i)
    world.centroids.push_back({(i % world.shape.cols + 0.5) * world.cell_size, (i / world.shape.cols + 0.5) * world.cell_size});

  ModelTriplet models;
  expect("model");
  expect("underlying");
  models.underlying = read_hmm(is);
  expect("model");
  expect("control");
  models.control = read_hmm(is);
  expect("model");
  expect("reinforced");
  models.reinforced = read_hmm(is);
  return {std::move(world), std::move(models)};
}

}  // namespace ealoc
