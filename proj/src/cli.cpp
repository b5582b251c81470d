#include "ealoc/cli.hpp"

#include "ealoc/errors.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>

namespace ealoc {

namespace {

// "-" or empty means the given stream.
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& write) {
  if (path.empty() || path == "-") {
    write(fallback);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  write(f);
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const auto rows = run_experiment(cfg.simulate_config());
  emit(cfg.out, out, [&](std::ostream& os) { write_records_csv(os, rows); });
  if (!cfg.curves.empty()) emit(cfg.curves, out, [&](std::ostream& os) { write_curves_csv(os, aggregate_curves(rows)); });
  return 0;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const auto rows = run_experiment(cfg.sweep_config());
  emit(cfg.out, out, [&](std::ostream& os) { write_summary_csv(os, summarize_settings(rows, cfg.final_fraction)); });
  if (!cfg.records.empty()) emit(cfg.records, out, [&](std::ostream& os) { write_records_csv(os, rows); });
  if (!cfg.curves.empty()) emit(cfg.curves, out, [&](std::ostream& os) { write_curves_csv(os, aggregate_curves(rows)); });
  return 0;
}

int cmd_replay(const RunConfig& cfg, std::ostream& out) {
  if (cfg.replay_data.empty()) throw InputError("replay.data: no dataset directory given (--data)");
  const std::filesystem::path dir = cfg.replay_data;
  const std::filesystem::path rooms_path = cfg.replay_rooms.empty() ? dir / "rooms.csv" : std::filesystem::path(cfg.replay_rooms);
  const RoomTable rooms = load_room_table(rooms_path);
  const ReplayDataset data = load_dataset(dir, rooms_path);
  const ReplayResult res = run_replay(data, rooms, cfg.replay_config());
  emit(cfg.out, out, [&](std::ostream& os) { write_checkpoint_csv(os, res.summary); });
  if (!cfg.records.empty()) emit(cfg.records, out, [&](std::ostream& os) { write_records_csv(os, res.records); });
  return 0;
}

int cmd_report(const RunConfig& cfg, const std::string& records_path, std::ostream& out) {
  std::ifstream in(records_path);
  if (!in) throw InputError("cannot open records file " + records_path);
  const auto rows = read_records_csv(in);
  emit(cfg.out, out, [&](std::ostream& os) { write_curves_csv(os, aggregate_curves(rows)); });
  return 0;
}

int cmd_make_fixture(const RunConfig& cfg, const std::string& dir, std::ostream& err) {
  const Fixture fx = make_fixture(cfg.fixture);
  write_fixture(dir, fx);
  err << "wrote " << fx.data.sessions.size() << " sessions and rooms.csv to " << dir << '\n';
  return 0;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Energy-aware localisation: SARSA-scheduled oracle sensing over an RSS HMM"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> sets;
  long long seed = -1;
  int threads = -1;
  app.add_option("--config", config_path, "Configuration file");
  app.add_option("--set", sets, "Override a config key, e.g. --set sarsa.alpha=0.3");
  app.add_option("--seed", seed, "Base random seed");
  app.add_option("--threads", threads, "Worker threads (0: all cores)");

  // Flag values kept as text and routed through RunConfig::set, so files and
  // flags share one parser and one set of error messages.
  std::vector<std::pair<std::string, std::string>> flags;
  auto flag = [&flags](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(
        name, [&flags, key](const std::string& v) { flags.emplace_back(key, v); }, help);
  };

  auto* sim = app.add_subcommand("simulate", "Run replications of one setting; writes the record CSV");
  flag(sim, "--policy", "sarsa.policy", "greedy, epsilon_greedy or softmax");
  flag(sim, "--coverage", "world.coverage", "Oracle coverage in (0,1]");
  flag(sim, "--grid", "world.grid", "Location cells");
  flag(sim, "--aps", "world.aps", "Access points");
  flag(sim, "--replications", "loop.replications", "Independent replications");
  flag(sim, "--plays", "loop.plays", "Plays per replication");
  flag(sim, "--play-length", "loop.play_length", "Ticks per play");
  flag(sim, "--out", "output.out", "Record CSV path (- for stdout)");
  flag(sim, "--curves", "output.curves", "Also write the per-play curve CSV");

  auto* sweep = app.add_subcommand("sweep", "Policies x coverages (x grids x APs); one summary row per setting");
  flag(sweep, "--policy", "sweep.policies", "Comma-separated policies");
  flag(sweep, "--coverage", "sweep.coverages", "Comma-separated coverages");
  flag(sweep, "--grid", "sweep.grids", "Comma-separated cell counts");
  flag(sweep, "--aps", "sweep.aps", "Comma-separated AP counts");
  flag(sweep, "--replications", "loop.replications", "Independent replications");
  flag(sweep, "--plays", "loop.plays", "Plays per replication");
  flag(sweep, "--play-length", "loop.play_length", "Ticks per play");
  flag(sweep, "--out", "output.out", "Summary CSV path (- for stdout)");
  flag(sweep, "--records", "output.records", "Also write the record CSV");
  flag(sweep, "--curves", "output.curves", "Also write the per-play curve CSV");

  auto* rep = app.add_subcommand("replay", "Replay a recorded dataset; writes the checkpoint summary CSV");
  flag(rep, "--data", "replay.data", "Directory of session CSVs");
  flag(rep, "--rooms", "replay.rooms", "Room table CSV (default <data>/rooms.csv)");
  flag(rep, "--repeats", "replay.repeats", "Random train/test splits");
  flag(rep, "--policy", "replay.policies", "Comma-separated policies");
  flag(rep, "--out", "output.out", "Checkpoint CSV path (- for stdout)");
  flag(rep, "--records", "output.records", "Also write the per-session record CSV");

  auto* report = app.add_subcommand("report", "Per-play curve CSV from a record CSV, or export a replay fixture");
  std::string records_in, fixture_dir;
  report->add_option("records", records_in, "Record CSV from simulate or sweep");
  report->add_option("--make-fixture", fixture_dir, "Write a synthetic replay dataset into this directory");
  flag(report, "--out", "output.out", "Curve CSV path (- for stdout)");
  flag(report, "--experiments", "fixture.experiments", "Fixture sessions");
  flag(report, "--ticks", "fixture.ticks", "Ticks per fixture session");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw InputError("--set expects key=value, got '" + s + "'");
      cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [key, value] : flags) cfg.set(key, value);
    if (seed >= 0) {
      cfg.seed = static_cast<std::uint64_t>(seed);
      cfg.fixture.seed = static_cast<std::uint64_t>(seed);
    } else if (seed != -1) {
      throw InputError("--seed must be >= 0");
    }
    if (threads >= 0) cfg.threads = threads;
    cfg.validate();

    if (*sim) return cmd_simulate(cfg, out);
    if (*sweep) return cmd_sweep(cfg, out);
    if (*rep) return cmd_replay(cfg, out);
    if (!fixture_dir.empty()) {
      cmd_make_fixture(cfg, fixture_dir, err);
      if (records_in.empty()) return 0;
    }
    if (records_in.empty()) throw InputError("report: give a record CSV or --make-fixture DIR");
    return cmd_report(cfg, records_in, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace ealoc
