#pragma once

// Monte Carlo experiment engine: settings x seeded replications x plays, with
// CSV record tables and curve / sweep summaries.

#include "ealoc/environment.hpp"
#include "ealoc/loop.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ealoc {

struct Setting {
  Policy policy = Policy::EpsilonGreedy;
  int grid = 20;  // location cells
  int aps = 6;
  double coverage = 0.5;

  friend bool operator==(const Setting&, const Setting&) = default;
};

struct ExperimentConfig {
  LoopConfig loop;
  PathLossParams path_loss;
  std::vector<Policy> policies{Policy::EpsilonGreedy};
  std::vector<int> grids{20};
  std::vector<int> aps{6};
  std::vector<double> coverages{0.5};
  // Use a side x side grid (grid value = side) instead of a near-square
  // arrangement of `grid` cells.
  bool square_side = false;
  int n_runs = 20;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency

  std::vector<Setting> settings() const;
  void validate() const;
};

struct RecordRow {
  Setting setting;
  int replication = 0;
  PlayRecord play;
};

GridShape grid_shape(int grid, bool square_side);

/// Seed for replication r; independent of how many replications are run.
std::uint64_t replication_seed(std::uint64_t base, int replication);

/// All plays of one replication. The world, trajectory and observations depend
/// only on (seed, grid, aps), so policies and coverages are paired.
std::vector<RecordRow> run_replication(const Setting& setting, const ExperimentConfig& cfg, int replication);

/// Rows ordered by setting, then replication, then play.
std::vector<RecordRow> run_experiment(const ExperimentConfig& cfg);

// policy,grid,aps,coverage,replication,play,err_control,err_reinforced,err_underlying,dependence
void write_records_csv(std::ostream& os, const std::vector<RecordRow>& rows);
std::vector<RecordRow> read_records_csv(std::istream& is);

enum class Curve { Control, Reinforced, Underlying, Dependence };
std::string_view to_string(Curve c) noexcept;

struct CurvePoint {
  Setting setting;
  int play = 0;
  Curve curve = Curve::Control;
  double mean = 0;
  double std = 0;
  int n = 0;
};

/// Per-play mean and sample std across replications, for every curve.
std::vector<CurvePoint> aggregate_curves(const std::vector<RecordRow>& rows);
void write_curves_csv(std::ostream& os, const std::vector<CurvePoint>& points);

struct SettingSummary {
  Setting setting;
  int n_runs = 0;
  double improvement_mean = 0;  // control - reinforced over the final plays
  double improvement_std = 0;
  double dependence_mean = 0;
  double dependence_std = 0;
};

/// Per-replication means over the last `final_fraction` of plays, then mean
/// and std across replications.
std::vector<SettingSummary> summarize_settings(const std::vector<RecordRow>& rows, double final_fraction = 0.2);
void write_summary_csv(std::ostream& os, const std::vector<SettingSummary>& rows);

// Shared numeric formatting: up to 10 significant digits, always with a
// decimal point.
std::string format_number(double x);

double sample_std(const std::vector<double>& xs);
double mean_of(const std::vector<double>& xs);

}  // namespace ealoc
