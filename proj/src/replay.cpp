#include "ealoc/replay.hpp"

#include "ealoc/errors.hpp"
#include "ealoc/parallel.hpp"
#include "ealoc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ealoc {

namespace fs = std::filesystem;

std::string_view to_string(OracleKind k) noexcept {
  switch (k) {
    case OracleKind::None: return "";
    case OracleKind::Camera: return "camera";
    case OracleKind::Pir: return "pir";
  }
  return "";
}

RoomTable::RoomTable(std::vector<Room> rooms) : rooms_(std::move(rooms)) {
  for (int i = 0; i < size(); ++i) {
    const auto& r = rooms_[i];
    if (r.id.empty()) throw InputError("room table: empty room id");
    if (!std::isfinite(r.centroid.x) || !std::isfinite(r.centroid.y))
      throw InputError("room table: non-finite centroid for room '" + r.id + "'");
    if (!index_.emplace(r.id, i).second) throw InputError("room table: duplicate room id '" + r.id + "'");
  }
}

std::optional<int> RoomTable::find(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double RoomTable::camera_fraction() const {
  if (rooms_.empty()) return 0.0;
  const auto n = std::count_if(rooms_.begin(), rooms_.end(), [](const Room& r) { return r.camera; });
  return static_cast<double>(n) / size();
}

std::size_t ReplayDataset::tick_count() const {
  std::size_t n = 0;
  for (const auto& s : sessions) n += s.ticks.size();
  return n;
}

namespace {

std::vector<std::string> split_fields(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

[[noreturn]] void fail(const std::string& source, int row, const std::string& msg) {
  throw InputError(source + " row " + std::to_string(row) + ": " + msg);
}

double number(const std::string& s, const std::string& source, int row, const std::string& column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  fail(source, row, "bad number '" + s + "' in column " + column);
}

}  // namespace

RoomTable read_room_table(std::istream& is, const std::string& source) {
  std::string line;
  if (!std::getline(is, line)) throw InputError(source + ": empty room table");
  if (split_fields(line) != std::vector<std::string>{"room", "x", "y", "camera"})
    fail(source, 1, "expected header room,x,y,camera");
  std::vector<Room> rooms;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split_fields(line);
    if (f.size() != 4) fail(source, row, "expected 4 fields");
    Room r;
    r.id = f[0];
    r.centroid = {number(f[1], source, row, "x"), number(f[2], source, row, "y")};
    if (f[3] != "0" && f[3] != "1") fail(source, row, "camera must be 0 or 1");
    r.camera = f[3] == "1";
    rooms.push_back(r);
  }
  if (rooms.empty()) throw InputError(source + ": no rooms declared");
  try {
    return RoomTable(std::move(rooms));
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
}

RoomTable load_room_table(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open room table " + path.string());
  return read_room_table(in, path.string());
}

void write_room_table(std::ostream& os, const RoomTable& rooms) {
  os << "room,x,y,camera\n";
  for (const auto& r : rooms.rooms())
    os << r.id << ',' << format_number(r.centroid.x) << ',' << format_number(r.centroid.y) << ','
       << (r.camera ? 1 : 0) << '\n';
}

Session read_session(std::istream& is, const std::string& name, const RoomTable& rooms,
                     std::vector<std::string>& ap_names) {
  std::string line;
  if (!std::getline(is, line)) throw InputError(name + ": empty file");
  const auto header = split_fields(line);
  const std::size_t n = header.size();
  if (n < 5 || header[0] != "t" || header[n - 3] != "room" || header[n - 2] != "oracle_room" ||
      header[n - 1] != "oracle_kind")
    fail(name, 1, "expected header t,rss_<ap>...,room,oracle_room,oracle_kind");
  std::vector<std::string> aps;
  for (std::size_t k = 1; k + 3 < n; ++k) {
    if (header[k].rfind("rss_", 0) != 0 || header[k].size() == 4) fail(name, 1, "bad AP column '" + header[k] + "'");
    aps.push_back(header[k].substr(4));
  }
  if (ap_names.empty()) ap_names = aps;
  else if (ap_names != aps) fail(name, 1, "AP columns differ from other sessions");
  const auto m = static_cast<Eigen::Index>(aps.size());

  auto room_of = [&](const std::string& id, int row, const char* column) {
    const auto r = rooms.find(id);
    if (!r) fail(name, row, std::string("unknown room '") + id + "' in column " + column);
    return *r;
  };

  Session s;
  s.name = name;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split_fields(line);
    if (f.size() != n) fail(name, row, "expected " + std::to_string(n) + " fields, got " + std::to_string(f.size()));
    ReplayTick tick;
    tick.t = number(f[0], name, row, "t");
    if (!s.ticks.empty() && !(tick.t > s.ticks.back().t))
      fail(name, row, "timestamps not strictly increasing in session " + name);
    tick.obs = Observationd::none(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto& cell = f[1 + k];
      if (cell.empty()) continue;
      const double v = number(cell, name, row, header[1 + k]);
      if (v < kRssMin || v > kRssMax) fail(name, row, "RSS out of range in column " + header[1 + k]);
      tick.obs.rss(k) = v;
      tick.obs.present(k) = true;
    }
    tick.room = room_of(f[n - 3], row, "room");
    const auto& oroom = f[n - 2];
    const auto& kind = f[n - 1];
    if (oroom.empty() != kind.empty()) fail(name, row, "oracle_room and oracle_kind must both be set or both empty");
    if (!oroom.empty()) {
      tick.oracle_room = room_of(oroom, row, "oracle_room");
      if (kind == "camera") tick.oracle_kind = OracleKind::Camera;
      else if (kind == "pir") tick.oracle_kind = OracleKind::Pir;
      else fail(name, row, "oracle_kind must be camera or pir");
    }
    s.ticks.push_back(std::move(tick));
  }
  if (s.ticks.empty()) throw InputError(name + ": no ticks");
  return s;
}

void write_session(std::ostream& os, const Session& s, const std::vector<std::string>& ap_names,
                   const RoomTable& rooms) {
  os << 't';
  for (const auto& a : ap_names) os << ",rss_" << a;
  os << ",room,oracle_room,oracle_kind\n";
  for (const auto& tick : s.ticks) {
    os << format_number(tick.t);
    for (Eigen::Index k = 0; k < tick.obs.size(); ++k) {
      os << ',';
      if (tick.obs.present(k)) os << format_number(tick.obs.rss(k));
    }
    os << ',' << rooms[tick.room].id << ',';
    if (tick.oracle_room) os << rooms[*tick.oracle_room].id;
    os << ',' << to_string(tick.oracle_kind) << '\n';
  }
}

ReplayDataset load_dataset(const fs::path& dir, const fs::path& room_table_path) {
  if (!fs::is_directory(dir)) throw InputError("dataset directory not found: " + dir.string());
  const RoomTable rooms = load_room_table(room_table_path);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
    std::error_code ec;
    if (fs::equivalent(e.path(), room_table_path, ec)) continue;
    files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no session CSVs in " + dir.string());

  ReplayDataset data;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) throw InputError("cannot open " + f.string());
    data.sessions.push_back(read_session(in, f.string(), rooms, data.ap_names));
    data.sessions.back().name = f.stem().string();
  }
  return data;
}

FitResult fit_initial_model(const ReplayDataset& data, const std::vector<int>& train, const RoomTable& rooms) {
  const int T = rooms.size();
  const int M = data.n_aps();
  Eigen::MatrixXd n = Eigen::MatrixXd::Zero(T, M), sum = n, sum_sq = n;
  Eigen::MatrixXd pairs = Eigen::MatrixXd::Ones(T, T);  // add-one smoothing
  std::vector<int> labelled(T, 0);

  for (int si : train) {
    const auto& ticks = data.sessions.at(si).ticks;
    for (std::size_t t = 0; t < ticks.size(); ++t) {
      const auto& tick = ticks[t];
      ++labelled[tick.room];
      for (int k = 0; k < M; ++k) {
        if (!tick.obs.present(k)) continue;
        n(tick.room, k) += 1;
        sum(tick.room, k) += tick.obs.rss(k);
        sum_sq(tick.room, k) += tick.obs.rss(k) * tick.obs.rss(k);
      }
      if (t > 0) pairs(ticks[t - 1].room, tick.room) += 1;
    }
  }

  FitResult out;
  auto& p = out.params;
  p.prior = Eigen::VectorXd::Constant(T, 1.0 / T);
  p.trans = pairs.array().colwise() / pairs.rowwise().sum().array();
  p.mu.resize(T, M);
  p.sigma.resize(T, M);
  for (int k = 0; k < M; ++k) {
    // Pooled moments stand in for rooms never seen with this AP.
    const double n_all = n.col(k).sum();
    double pooled_mu = -90.0, pooled_sd = 10.0;
    if (n_all > 0) {
      pooled_mu = sum.col(k).sum() / n_all;
      pooled_sd = std::sqrt(std::max(0.0, sum_sq.col(k).sum() / n_all - pooled_mu * pooled_mu));
    }
    for (int j = 0; j < T; ++j) {
      double mu = pooled_mu, sd = pooled_sd;
      if (n(j, k) > 0) {
        mu = sum(j, k) / n(j, k);
        sd = std::sqrt(std::max(0.0, sum_sq(j, k) / n(j, k) - mu * mu));
      }
      p.mu(j, k) = mu;
      p.sigma(j, k) = std::max(sd, kSigmaFloor);
    }
  }
  for (int j = 0; j < T; ++j)
    if (labelled[j] == 0) out.under_observed.push_back(j);
  return out;
}

SplitPlan make_split_plan(int n_sessions, std::uint64_t seed, int repeat) {
  if (n_sessions <= kTrainSessions)
    throw InputError("replay needs more than " + std::to_string(kTrainSessions) + " sessions, got " +
                     std::to_string(n_sessions));
  std::vector<int> order(n_sessions);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, {kStreamSplit, static_cast<std::uint64_t>(repeat)}));
  std::shuffle(order.begin(), order.end(), rng);
  SplitPlan plan;
  plan.repeat = repeat;
  plan.train.assign(order.begin(), order.begin() + kTrainSessions);
  std::sort(plan.train.begin(), plan.train.end());
  plan.test.assign(order.begin() + kTrainSessions, order.end());
  return plan;
}

void ReplayConfig::validate() const {
  loop.validate();
  if (policies.empty()) throw std::invalid_argument("replay.policies must not be empty");
  if (repeats < 1) throw std::invalid_argument("replay.repeats must be >= 1");
}

std::vector<std::pair<int, int>> checkpoint_segments(int n_test) {
  std::vector<std::pair<int, int>> out;
  int first = 0;
  for (double f : kCheckpointFractions) {
    const int last = std::min(n_test, static_cast<int>(std::ceil(f * n_test - 1e-9)));
    out.emplace_back(first, std::max(first, last));
    first = std::max(first, last);
  }
  return out;
}

namespace {

struct SessionTotals {
  double ctrl = 0;
  double reinf = 0;
  int s1 = 0;
  int ticks = 0;
};

enum ReplayModel { kReinforced = 0, kControl = 1 };

std::vector<SessionTotals> stream_sessions(const ReplayDataset& data, const RoomTable& rooms, const SplitPlan& plan,
                                           const HmmParamsd& fitted, const LoopConfig& cfg, Rng& policy_rng) {
  const HmmParamsd control = fitted;
  HmmParamsd reinforced = fitted;
  AgentState agent = initial_agent(cfg);
  SlidingWindow window(cfg.window, 2);
  window.set_model(kReinforced, reinforced);
  window.set_model(kControl, control);

  std::vector<SessionTotals> out;
  for (int si : plan.test) {
    window.clear();
    SessionTotals tot;
    for (const auto& tick : data.sessions[si].ticks) {
      WindowTick wt;
      wt.obs = tick.obs;
      wt.truth = tick.room;
      wt.label = tick.oracle_room;
      wt.label_scores = tick.oracle_kind == OracleKind::Camera;
      wt.follows_previous = true;
      window.push(std::move(wt));

      const int est_ctrl = window.decode_last(kControl, control);
      int est_reinf;
      std::optional<double> measured;
      if (agent.state == MdpState::S1) {
        const std::vector<int> decoded = window.decode(kReinforced, reinforced);
        est_reinf = decoded.back();
        // Camera labels are trusted location estimates while sensing is on.
        if (tick.oracle_kind == OracleKind::Camera) est_reinf = *tick.oracle_room;
        double err = 0;
        int scored = 0;
        for (int t = 0; t < window.size(); ++t) {
          if (window[t].label && window[t].label_scores) {
            err += rooms.distance(decoded[t], *window[t].label);
            ++scored;
          }
        }
        if (scored > 0) measured = err / scored;
        if (auto batch = window.take_batch(cfg.batch_rule)) {
          reinforced = reestimate(reinforced, *batch, cfg.oracle_weight, cfg.scope);
          window.set_model(kReinforced, reinforced);
        }
      } else {
        est_reinf = window.decode_last(kReinforced, reinforced);
      }
      tot.s1 += agent.state == MdpState::S1;
      advance_agent(agent, measured, cfg.sarsa, policy_rng);

      tot.ctrl += rooms.distance(est_ctrl, tick.room);
      tot.reinf += rooms.distance(est_reinf, tick.room);
      ++tot.ticks;
    }
    out.push_back(tot);
  }
  return out;
}

}  // namespace

ReplayResult run_replay(const ReplayDataset& data, const RoomTable& rooms, const ReplayConfig& cfg) {
  cfg.validate();
  if (rooms.size() < 1) throw InputError("replay: empty room table");
  const int n_sessions = static_cast<int>(data.sessions.size());
  std::vector<SplitPlan> plans;
  for (int r = 0; r < cfg.repeats; ++r) plans.push_back(make_split_plan(n_sessions, cfg.seed, r));
  std::vector<HmmParamsd> fits;
  for (const auto& plan : plans) fits.push_back(fit_initial_model(data, plan.train, rooms).params);

  const std::size_t n_pol = cfg.policies.size();
  std::vector<std::vector<SessionTotals>> totals(plans.size() * n_pol);
  parallel_for(totals.size(), cfg.threads, [&](std::size_t job) {
    const int r = static_cast<int>(job / n_pol);
    const std::size_t pi = job % n_pol;
    LoopConfig loop = cfg.loop;
    loop.sarsa.policy = cfg.policies[pi];
    Rng rng(derive_seed(cfg.seed, {kStreamPolicy, static_cast<std::uint64_t>(r),
                                   static_cast<std::uint64_t>(cfg.policies[pi])}));
    totals[job] = stream_sessions(data, rooms, plans[r], fits[r], loop, rng);
  });

  ReplayResult res;
  const auto segments = checkpoint_segments(n_sessions - kTrainSessions);
  for (std::size_t pi = 0; pi < n_pol; ++pi) {
    std::vector<double> per[3][kCheckpoints];
    for (std::size_t r = 0; r < plans.size(); ++r) {
      const auto& tots = totals[r * n_pol + pi];
      for (std::size_t i = 0; i < tots.size(); ++i) {
        RecordRow row;
        row.setting = {cfg.policies[pi], rooms.size(), data.n_aps(), rooms.camera_fraction()};
        row.replication = static_cast<int>(r);
        row.play.play = static_cast<int>(i);
        row.play.err_control = tots[i].ctrl / tots[i].ticks;
        row.play.err_reinforced = tots[i].reinf / tots[i].ticks;
        row.play.err_underlying = std::nan("");
        row.play.dependence = static_cast<double>(tots[i].s1) / tots[i].ticks;
        res.records.push_back(row);
      }
      for (int c = 0; c < kCheckpoints; ++c) {
        SessionTotals seg;
        for (int i = segments[c].first; i < segments[c].second; ++i) {
          seg.ctrl += tots[i].ctrl;
          seg.reinf += tots[i].reinf;
          seg.s1 += tots[i].s1;
          seg.ticks += tots[i].ticks;
        }
        if (seg.ticks == 0) continue;
        per[0][c].push_back(seg.ctrl / seg.ticks);
        per[1][c].push_back(seg.reinf / seg.ticks);
        per[2][c].push_back(static_cast<double>(seg.s1) / seg.ticks);
      }
    }
    static const char* names[3] = {"control", "reinforced", "dependence"};
    for (int m = 0; m < 3; ++m) {
      CheckpointRow row{cfg.policies[pi], names[m], {}, {}};
      for (int c = 0; c < kCheckpoints; ++c) {
        const bool empty = per[m][c].empty();
        row.mean[c] = empty ? std::nan("") : mean_of(per[m][c]);
        row.std[c] = empty ? std::nan("") : sample_std(per[m][c]);
      }
      res.summary.push_back(row);
    }
  }
  return res;
}

void write_checkpoint_csv(std::ostream& os, const std::vector<CheckpointRow>& rows) {
  os << "policy,model,pct25_mean,pct25_std,pct50_mean,pct50_std,pct100_mean,pct100_std\n";
  for (const auto& r : rows) {
    os << to_string(r.policy) << ',' << r.model;
    for (int c = 0; c < kCheckpoints; ++c) os << ',' << format_number(r.mean[c]) << ',' << format_number(r.std[c]);
    os << '\n';
  }
}

void FixtureConfig::validate() const {
  path_loss.validate();
  if (experiments <= kTrainSessions)
    throw std::invalid_argument("fixture.experiments must exceed " + std::to_string(kTrainSessions));
  if (ticks < 2) throw std::invalid_argument("fixture.ticks must be >= 2");
  if (cols < 1 || rows < 1 || cols * rows < 2) throw std::invalid_argument("fixture grid must have at least 2 rooms");
  if (!(cell_size > 0)) throw std::invalid_argument("fixture.cell_size must be > 0");
  if (aps < 1) throw std::invalid_argument("fixture.aps must be >= 1");
  if (!(camera_coverage > 0 && camera_coverage <= 1)) throw std::invalid_argument("fixture.camera_coverage must lie in (0,1]");
  if (!(session_offset_sigma >= 0)) throw std::invalid_argument("fixture.offset_sigma must be >= 0");
  if (!(packet_loss >= 0 && packet_loss < 1)) throw std::invalid_argument("fixture.packet_loss must lie in [0,1)");
  if (!(pir_rate >= 0 && pir_rate <= 1)) throw std::invalid_argument("fixture.pir_rate must lie in [0,1]");
}

Fixture make_fixture(const FixtureConfig& cfg) {
  cfg.validate();
  auto [world, models] = build_world({cfg.cols, cfg.rows}, cfg.aps, cfg.camera_coverage, cfg.path_loss,
                                     derive_seed(cfg.seed, {kStreamFixture}), cfg.cell_size);
  const HmmParamsd& truth = models.underlying;

  std::vector<Room> rooms;
  for (int j = 0; j < world.n_cells(); ++j) rooms.push_back({"room" + std::to_string(j), world.centroids[j], world.oracle_mask[j]});
  Fixture fx{RoomTable(std::move(rooms)), {}};
  for (int k = 0; k < cfg.aps; ++k) fx.data.ap_names.push_back("ap" + std::to_string(k));

  std::normal_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int e = 0; e < cfg.experiments; ++e) {
    Rng rng(derive_seed(cfg.seed, {kStreamFixture, static_cast<std::uint64_t>(e)}));
    Eigen::VectorXd offset(cfg.aps);
    for (int k = 0; k < cfg.aps; ++k) offset(k) = cfg.session_offset_sigma * unit(rng);
    std::uniform_int_distribution<int> start(0, world.n_cells() - 1);
    int cell = start(rng);

    std::ostringstream name;
    name << "exp" << std::setw(2) << std::setfill('0') << e;
    Session s{name.str(), {}};
    for (int t = 0; t < cfg.ticks; ++t) {
      cell = step_trajectory(world, cell, rng);
      ReplayTick tick;
      tick.t = t;
      tick.room = cell;
      tick.obs = Observationd::none(cfg.aps);
      for (int k = 0; k < cfg.aps; ++k) {
        const double z = truth.mu(cell, k) + offset(k) + truth.sigma(cell, k) * unit(rng);
        if (u01(rng) < cfg.packet_loss) continue;
        // Readings are rounded to 0.01 dB so files round-trip exactly.
        tick.obs.rss(k) = std::round(std::clamp(z, kRssMin, kRssMax) * 100.0) / 100.0;
        tick.obs.present(k) = true;
      }
      if (world.oracle_mask[cell]) {
        tick.oracle_room = cell;
        tick.oracle_kind = OracleKind::Camera;
      } else if (u01(rng) < cfg.pir_rate) {
        tick.oracle_room = cell;
        tick.oracle_kind = OracleKind::Pir;
      }
      s.ticks.push_back(std::move(tick));
    }
    fx.data.sessions.push_back(std::move(s));
  }
  return fx;
}

void write_fixture(const fs::path& dir, const Fixture& f) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "rooms.csv");
    if (!out) throw std::runtime_error("cannot write " + (dir / "rooms.csv").string());
    write_room_table(out, f.rooms);
  }
  for (const auto& s : f.data.sessions) {
    const auto path = dir / (s.name + ".csv");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_session(out, s, f.data.ap_names, f.rooms);
  }
}

}  // namespace ealoc
