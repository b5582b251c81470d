#pragma once

// Synthetic grid world: 1 m x 1 m cells, access points placed uniformly in the
// bounding box, log-distance path-loss RSS means, a miscalibrated copy of the
// true model, and oracle-covered cells.

#include "ealoc/hmm.hpp"
#include "ealoc/sarsa.hpp"

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

namespace ealoc {

struct Point {
  double x = 0;
  double y = 0;
};

double distance(Point a, Point b) noexcept;

struct PathLossParams {
  double p0 = -45.0;           // dBm at d0
  double d0 = 1.0;             // m
  double exponent = 2.0;
  double shadow_sigma = 4.0;   // dB, emission spread of the true model
  double awgn_sigma_ctrl = 3.0;  // dB, one-off perturbation of control/reinforced means

  void validate() const;
};

struct GridShape {
  int cols = 1;
  int rows = 1;

  int cells() const noexcept { return cols * rows; }

  // Most nearly square cols x rows factorisation with cols >= rows:
  // 10 -> 5x2, 20 -> 5x4, 30 -> 6x5.
  static GridShape near_square(int cells);
  static GridShape square(int side) { return {side, side}; }

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

struct GridWorld {
  GridShape shape;
  double cell_size = 1.0;
  std::vector<Point> ap_positions;
  std::vector<bool> oracle_mask;  // per cell
  std::vector<Point> centroids;   // per cell, row-major

  int n_cells() const noexcept { return shape.cells(); }
  int n_aps() const noexcept { return static_cast<int>(ap_positions.size()); }
  int oracle_count() const;
  double cell_distance(int a, int b) const { return distance(centroids.at(a), centroids.at(b)); }
};

struct ModelTriplet {
  HmmParamsd underlying;  // ground truth
  HmmParamsd control;     // corrupted, frozen
  HmmParamsd reinforced;  // corrupted, adapted online
};

/// p0 - 10 n log10(max(d, d0) / d0).
double path_loss_mean(Point ap, Point cell, const PathLossParams& p);

/// Row-stochastic lazy random walk: uniform over staying and in-grid 4-neighbour moves.
Eigen::MatrixXd lazy_walk_kernel(const GridShape& shape);

/// Cells marked as oracle-covered for a coverage fraction. Masks for the same
/// seed are nested: a higher coverage keeps every cell of a lower one.
std::vector<bool> oracle_mask(int n_cells, double coverage, std::uint64_t seed);

std::pair<GridWorld, ModelTriplet> build_world(GridShape shape, int m_aps, double coverage,
                                               const PathLossParams& p, std::uint64_t seed,
                                               double cell_size = 1.0);

int step_trajectory(const GridWorld& world, int cell, Rng& rng);

/// One reading per AP drawn from the given (true) model; nothing is missing.
Observationd sample_observation(const HmmParamsd& underlying, int cell, Rng& rng);

// Text form: a world header followed by the three models in HmmParams format.
//   world <cols> <rows> <cell_size>
//   aps <M>
//   <x> <y>            (M lines)
//   oracle <bitstring, one char per cell>
//   model underlying / control / reinforced, each followed by an HmmParams block
void write_world(std::ostream& os, const GridWorld& world, const ModelTriplet& models);
std::pair<GridWorld, ModelTriplet> read_world(std::istream& is);

}  // namespace ealoc
