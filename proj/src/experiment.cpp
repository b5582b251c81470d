#include "ealoc/experiment.hpp"

#include "ealoc/errors.hpp"
#include "ealoc/parallel.hpp"
#include "ealoc/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace ealoc {

std::vector<Setting> ExperimentConfig::settings() const {
  std::vector<Setting> out;
  for (Policy p : policies)
    for (int g : grids)
      for (int m : aps)
        for (double c : coverages) out.push_back({p, g, m, c});
  return out;
}

void ExperimentConfig::validate() const {
  loop.validate();
  path_loss.validate();
  if (policies.empty()) throw std::invalid_argument("sweep.policies must not be empty");
  if (grids.empty()) throw std::invalid_argument("sweep.grids must not be empty");
  if (aps.empty()) throw std::invalid_argument("sweep.aps must not be empty");
  if (coverages.empty()) throw std::invalid_argument("sweep.coverages must not be empty");
  for (int g : grids)
    if (grid_shape(g, square_side).cells() < 2) throw std::invalid_argument("world.grid must give at least 2 cells");
  for (int m : aps)
    if (m < 1) throw std::invalid_argument("world.aps must be >= 1");
  for (double c : coverages)
    if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("world.coverage must lie in (0,1]");
  if (n_runs < 1) throw std::invalid_argument("loop.replications must be >= 1");
}

GridShape grid_shape(int grid, bool square_side) {
  if (grid < 1) throw std::invalid_argument("world.grid must be positive");
  return square_side ? GridShape::square(grid) : GridShape::near_square(grid);
}

std::uint64_t replication_seed(std::uint64_t base, int replication) {
  return derive_seed(base, {static_cast<std::uint64_t>(replication)});
}

std::vector<RecordRow> run_replication(const Setting& setting, const ExperimentConfig& cfg, int replication) {
  const std::uint64_t rep_seed = replication_seed(cfg.seed, replication);
  const std::uint64_t world_seed =
      derive_seed(rep_seed, {static_cast<std::uint64_t>(setting.grid), static_cast<std::uint64_t>(setting.aps)});
  auto [world, models] =
      build_world(grid_shape(setting.grid, cfg.square_side), setting.aps, setting.coverage, cfg.path_loss, world_seed);
  LoopConfig loop = cfg.loop;
  loop.sarsa.policy = setting.policy;
  Replication rep(std::move(world), std::move(models), loop, world_seed);

  std::vector<RecordRow> rows;
  rows.reserve(loop.n_plays);
  for (int p = 0; p < loop.n_plays; ++p) rows.push_back({setting, replication, rep.run_play()});
  return rows;
}

std::vector<RecordRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto settings = cfg.settings();
  const std::size_t jobs = settings.size() * static_cast<std::size_t>(cfg.n_runs);
  std::vector<std::vector<RecordRow>> results(jobs);

  parallel_for(jobs, cfg.threads, [&](std::size_t j) {
    results[j] = run_replication(settings[j / cfg.n_runs], cfg, static_cast<int>(j % cfg.n_runs));
  });

  std::vector<RecordRow> rows;
  rows.reserve(jobs * cfg.loop.n_plays);
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  return rows;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  std::string s(buf);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

void write_records_csv(std::ostream& os, const std::vector<RecordRow>& rows) {
  os << "policy,grid,aps,coverage,replication,play,err_control,err_reinforced,err_underlying,dependence\n";
  for (const auto& r : rows) {
    os << to_string(r.setting.policy) << ',' << r.setting.grid << ',' << r.setting.aps << ','
       << format_number(r.setting.coverage) << ',' << r.replication << ',' << r.play.play << ','
       << format_number(r.play.err_control) << ',' << format_number(r.play.err_reinforced) << ','
       << (std::isnan(r.play.err_underlying) ? std::string() : format_number(r.play.err_underlying)) << ',' << format_number(r.play.dependence) << '\n';
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, int row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError("records csv row " + std::to_string(row) + ": bad number '" + s + "'");
  }
}

int parse_int(const std::string& s, int row) {
  const double v = parse_double(s, row);
  if (v != std::floor(v)) throw InputError("records csv row " + std::to_string(row) + ": expected integer");
  return static_cast<int>(v);
}

}  // namespace

std::vector<RecordRow> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InputError("records csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "policy,grid,aps,coverage,replication,play,err_control,err_reinforced,err_underlying,dependence")
    throw InputError("records csv row 1: unexpected header");
  std::vector<RecordRow> rows;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 10) throw InputError("records csv row " + std::to_string(row) + ": expected 10 fields");
    RecordRow r;
    try {
      r.setting.policy = parse_policy(f[0]);
    } catch (const std::exception& e) {
      throw InputError("records csv row " + std::to_string(row) + ": " + e.what());
    }
    r.setting.grid = parse_int(f[1], row);
    r.setting.aps = parse_int(f[2], row);
    r.setting.coverage = parse_double(f[3], row);
    r.replication = parse_int(f[4], row);
    r.play.play = parse_int(f[5], row);
    r.play.err_control = parse_double(f[6], row);
    r.play.err_reinforced = parse_double(f[7], row);
    r.play.err_underlying = f[8].empty() ? std::nan("") : parse_double(f[8], row);
    r.play.dependence = parse_double(f[9], row);
    rows.push_back(r);
  }
  return rows;
}

std::string_view to_string(Curve c) noexcept {
  switch (c) {
    case Curve::Control: return "control";
    case Curve::Reinforced: return "reinforced";
    case Curve::Underlying: return "underlying";
    case Curve::Dependence: return "dependence";
  }
  return "unknown";
}

namespace {

// Settings in first-appearance order.
std::vector<Setting> distinct_settings(const std::vector<RecordRow>& rows) {
  std::vector<Setting> out;
  for (const auto& r : rows)
    if (std::find(out.begin(), out.end(), r.setting) == out.end()) out.push_back(r.setting);
  return out;
}

}  // namespace

std::vector<CurvePoint> aggregate_curves(const std::vector<RecordRow>& rows) {
  std::vector<CurvePoint> out;
  for (const Setting& s : distinct_settings(rows)) {
    std::map<int, std::array<std::vector<double>, 4>> by_play;
    for (const auto& r : rows) {
      if (!(r.setting == s)) continue;
      auto& v = by_play[r.play.play];
      v[0].push_back(r.play.err_control);
      v[1].push_back(r.play.err_reinforced);
      v[2].push_back(r.play.err_underlying);
      v[3].push_back(r.play.dependence);
    }
    for (Curve c : {Curve::Control, Curve::Reinforced, Curve::Underlying, Curve::Dependence}) {
      for (const auto& [play, v] : by_play) {
        std::vector<double> xs;
        for (double x : v[static_cast<int>(c)])
          if (!std::isnan(x)) xs.push_back(x);
        if (xs.empty()) continue;  // e.g. no underlying model in replay records
        out.push_back({s, play, c, mean_of(xs), sample_std(xs), static_cast<int>(xs.size())});
      }
    }
  }
  return out;
}

void write_curves_csv(std::ostream& os, const std::vector<CurvePoint>& points) {
  os << "policy,grid,aps,coverage,curve,play,mean,std,n\n";
  for (const auto& p : points) {
    os << to_string(p.setting.policy) << ',' << p.setting.grid << ',' << p.setting.aps << ','
       << format_number(p.setting.coverage) << ',' << to_string(p.curve) << ',' << p.play << ','
       << format_number(p.mean) << ',' << format_number(p.std) << ',' << p.n << '\n';
  }
}

std::vector<SettingSummary> summarize_settings(const std::vector<RecordRow>& rows, double final_fraction) {
  if (!(final_fraction > 0.0 && final_fraction <= 1.0))
    throw std::invalid_argument("final fraction must lie in (0,1]");
  std::vector<SettingSummary> out;
  for (const Setting& s : distinct_settings(rows)) {
    int max_play = 0;
    for (const auto& r : rows)
      if (r.setting == s) max_play = std::max(max_play, r.play.play);
    const int n_plays = max_play + 1;
    const int first = n_plays - std::max(1, static_cast<int>(std::lround(final_fraction * n_plays)));

    std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_rep;
    for (const auto& r : rows) {
      if (!(r.setting == s) || r.play.play < first) continue;
      by_rep[r.replication].first.push_back(r.play.err_control - r.play.err_reinforced);
      by_rep[r.replication].second.push_back(r.play.dependence);
    }
    std::vector<double> imp, dep;
    for (const auto& [rep, v] : by_rep) {
      imp.push_back(mean_of(v.first));
      dep.push_back(mean_of(v.second));
    }
    out.push_back({s, static_cast<int>(imp.size()), mean_of(imp), sample_std(imp), mean_of(dep), sample_std(dep)});
  }
  return out;
}

void write_summary_csv(std::ostream& os, const std::vector<SettingSummary>& rows) {
  os << "policy,grid,aps,coverage,replications,improvement_mean,improvement_std,dependence_mean,dependence_std\n";
  for (const auto& r : rows) {
    os << to_string(r.setting.policy) << ',' << r.setting.grid << ',' << r.setting.aps << ','
       << format_number(r.setting.coverage) << ',' << r.n_runs << ',' << format_number(r.improvement_mean) << ','
       << format_number(r.improvement_std) << ',' << format_number(r.dependence_mean) << ','
       << format_number(r.dependence_std) << '\n';
  }
}

}  // namespace ealoc
