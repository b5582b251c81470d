#include "ealoc/config.hpp"

#include "ealoc/errors.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace ealoc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  if (v == "inf") return INFINITY;
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw InputError(key + ": expected a number, got '" + v + "'");
}

long long to_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw InputError(key + ": expected an integer, got '" + v + "'");
}

int to_int(const std::string& key, const std::string& v) { return static_cast<int>(to_integer(key, v)); }

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InputError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  for (char c : v + ",") {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else {
      item += c;
    }
  }
  return out;
}

template <typename T, typename F>
std::vector<T> map_list(const std::string& key, const std::string& v, F&& f) {
  std::vector<T> out;
  for (const auto& s : to_list(v)) out.push_back(f(key, s));
  return out;
}

Policy to_policy(const std::string& key, const std::string& v) {
  try {
    return parse_policy(v);
  } catch (const std::exception&) {
    throw InputError(key + ": unknown policy '" + v + "'");
  }
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream os;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) os << ',';
    if constexpr (std::is_same_v<T, Policy>) os << to_string(xs[i]);
    else if constexpr (std::is_same_v<T, double>) os << format_number(xs[i]);
    else os << xs[i];
  }
  return os.str();
}

ReestimationScope to_scope(const std::string& key, const std::string& v) {
  if (v == "means") return ReestimationScope::means_only();
  if (v == "emissions") return ReestimationScope::emissions();
  if (v == "all") return ReestimationScope::all();
  throw InputError(key + ": expected means, emissions or all, got '" + v + "'");
}

std::string scope_name(const ReestimationScope& s) {
  if (s.transitions) return "all";
  if (s.variances) return "emissions";
  return "means";
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& v)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Field {
  const char* key;
  Setter set;
  Getter get;
};

#define NUM(k, expr) {k, [](RunConfig& c, const std::string& key, const std::string& v) { expr = to_double(key, v); }, \
                      [](const RunConfig& c) { return format_number(expr); }}
#define INT(k, expr) {k, [](RunConfig& c, const std::string& key, const std::string& v) { expr = to_int(key, v); }, \
                      [](const RunConfig& c) { return std::to_string(expr); }}
#define STR(k, expr) {k, [](RunConfig& c, const std::string&, const std::string& v) { expr = v; }, \
                      [](const RunConfig& c) { return std::string(expr); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      NUM("sarsa.alpha", c.loop.sarsa.alpha),
      NUM("sarsa.gamma", c.loop.sarsa.gamma),
      NUM("sarsa.epsilon", c.loop.sarsa.epsilon),
      NUM("sarsa.tau", c.loop.sarsa.tau),
      {"sarsa.policy", [](RunConfig& c, const std::string& k, const std::string& v) { c.setting.policy = to_policy(k, v); },
       [](const RunConfig& c) { return std::string(to_string(c.setting.policy)); }},

      {"reestimation.weight",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         try {
           c.loop.oracle_weight = OracleWeight(to_double(k, v));
         } catch (const std::invalid_argument&) {
           throw InputError(k + ": must lie in [0,1], got '" + v + "'");
         }
       },
       [](const RunConfig& c) { return format_number(c.loop.oracle_weight.value()); }},
      {"reestimation.scope", [](RunConfig& c, const std::string& k, const std::string& v) { c.loop.scope = to_scope(k, v); },
       [](const RunConfig& c) { return scope_name(c.loop.scope); }},
      {"reestimation.batch",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "fresh") c.loop.batch_rule = BatchRule::Fresh;
         else if (v == "window") c.loop.batch_rule = BatchRule::Window;
         else throw InputError(k + ": expected fresh or window, got '" + v + "'");
       },
       [](const RunConfig& c) { return std::string(c.loop.batch_rule == BatchRule::Fresh ? "fresh" : "window"); }},

      INT("world.grid", c.setting.grid),
      INT("world.aps", c.setting.aps),
      NUM("world.coverage", c.setting.coverage),
      {"world.square", [](RunConfig& c, const std::string& k, const std::string& v) { c.square_side = to_bool(k, v); },
       [](const RunConfig& c) { return std::string(c.square_side ? "true" : "false"); }},
      NUM("world.p0", c.path_loss.p0),
      NUM("world.d0", c.path_loss.d0),
      NUM("world.exponent", c.path_loss.exponent),
      NUM("world.shadow_sigma", c.path_loss.shadow_sigma),
      NUM("world.awgn_sigma", c.path_loss.awgn_sigma_ctrl),

      INT("loop.play_length", c.loop.play_length),
      INT("loop.plays", c.loop.n_plays),
      INT("loop.window", c.loop.window),
      INT("loop.replications", c.replications),
      {"loop.initial_state", [](RunConfig& c, const std::string& k, const std::string& v) {
         try {
           c.loop.initial_state = parse_state(v);
         } catch (const std::exception&) {
           throw InputError(k + ": expected S1 or S2, got '" + v + "'");
         }
       },
       [](const RunConfig& c) { return std::string(to_string(c.loop.initial_state)); }},
      {"loop.initial_error",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const double e = to_double(k, v);
         if (std::isinf(e) && e > 0) c.loop.initial_error.reset();
         else c.loop.initial_error = e;
       },
       [](const RunConfig& c) { return c.loop.initial_error ? format_number(*c.loop.initial_error) : std::string("inf"); }},
      {"loop.seed",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const long long s = to_integer(k, v);
         if (s < 0) throw InputError(k + ": must be >= 0");
         c.seed = static_cast<std::uint64_t>(s);
       },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      INT("loop.threads", c.threads),

      {"sweep.policies",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.sweep_policies = map_list<Policy>(k, v, to_policy); },
       [](const RunConfig& c) { return join(c.sweep_policies); }},
      {"sweep.coverages",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.sweep_coverages = map_list<double>(k, v, to_double); },
       [](const RunConfig& c) { return join(c.sweep_coverages); }},
      {"sweep.grids", [](RunConfig& c, const std::string& k, const std::string& v) { c.sweep_grids = map_list<int>(k, v, to_int); },
       [](const RunConfig& c) { return join(c.sweep_grids); }},
      {"sweep.aps", [](RunConfig& c, const std::string& k, const std::string& v) { c.sweep_aps = map_list<int>(k, v, to_int); },
       [](const RunConfig& c) { return join(c.sweep_aps); }},
      NUM("sweep.final_fraction", c.final_fraction),

      STR("replay.data", c.replay_data),
      STR("replay.rooms", c.replay_rooms),
      INT("replay.repeats", c.replay_repeats),
      {"replay.policies",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.replay_policies = map_list<Policy>(k, v, to_policy); },
       [](const RunConfig& c) { return join(c.replay_policies); }},

      INT("fixture.experiments", c.fixture.experiments),
      INT("fixture.ticks", c.fixture.ticks),
      INT("fixture.cols", c.fixture.cols),
      INT("fixture.rows", c.fixture.rows),
      NUM("fixture.cell_size", c.fixture.cell_size),
      INT("fixture.aps", c.fixture.aps),
      NUM("fixture.camera_coverage", c.fixture.camera_coverage),
      NUM("fixture.offset_sigma", c.fixture.session_offset_sigma),
      NUM("fixture.packet_loss", c.fixture.packet_loss),
      NUM("fixture.pir_rate", c.fixture.pir_rate),
      {"fixture.seed",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const long long s = to_integer(k, v);
         if (s < 0) throw InputError(k + ": must be >= 0");
         c.fixture.seed = static_cast<std::uint64_t>(s);
       },
       [](const RunConfig& c) { return std::to_string(c.fixture.seed); }},

      STR("output.out", c.out),
      STR("output.records", c.records),
      STR("output.curves", c.curves),
  };
  return table;
}

#undef NUM
#undef INT
#undef STR

}  // namespace

std::vector<ConfigEntry> parse_config(std::istream& is, const std::string& source) {
  std::vector<ConfigEntry> out;
  std::string section, raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find_first_of("#;");
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw InputError(source + " line " + std::to_string(line) + ": unterminated section");
      section = trim(text.substr(1, text.size() - 2));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw InputError(source + " line " + std::to_string(line) + ": expected key = value");
    if (section.empty())
      throw InputError(source + " line " + std::to_string(line) + ": key outside of a [section]");
    out.push_back({section + "." + trim(text.substr(0, eq)), trim(text.substr(eq + 1)), line});
  }
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields())
    if (key == f.key) return f.set(*this, key, value);
  throw InputError("unknown config key '" + key + "'");
}

void RunConfig::apply(const std::vector<ConfigEntry>& entries, const std::string& source) {
  for (const auto& e : entries) {
    try {
      set(e.key, e.value);
    } catch (const InputError& err) {
      throw InputError(source + " line " + std::to_string(e.line) + ": " + err.what());
    }
  }
}

ExperimentConfig RunConfig::simulate_config() const {
  ExperimentConfig e;
  e.loop = loop;
  e.path_loss = path_loss;
  e.policies = {setting.policy};
  e.grids = {setting.grid};
  e.aps = {setting.aps};
  e.coverages = {setting.coverage};
  e.square_side = square_side;
  e.n_runs = replications;
  e.seed = seed;
  e.threads = threads;
  return e;
}

ExperimentConfig RunConfig::sweep_config() const {
  ExperimentConfig e = simulate_config();
  e.policies = sweep_policies;
  e.coverages = sweep_coverages;
  if (!sweep_grids.empty()) e.grids = sweep_grids;
  if (!sweep_aps.empty()) e.aps = sweep_aps;
  return e;
}

ReplayConfig RunConfig::replay_config() const {
  ReplayConfig r;
  r.loop = loop;
  r.policies = replay_policies;
  r.repeats = replay_repeats;
  r.seed = seed;
  r.threads = threads;
  return r;
}

void RunConfig::validate() const {
  simulate_config().validate();
  if (sweep_policies.empty()) throw std::invalid_argument("sweep.policies must not be empty");
  if (sweep_coverages.empty()) throw std::invalid_argument("sweep.coverages must not be empty");
  sweep_config().validate();
  replay_config().validate();
  fixture.validate();
  if (!(final_fraction > 0 && final_fraction <= 1)) throw std::invalid_argument("sweep.final_fraction must lie in (0,1]");
  if (threads < 0) throw std::invalid_argument("loop.threads must be >= 0");
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  RunConfig cfg;
  cfg.apply(parse_config(in, path.string()), path.string());
  return cfg;
}

void write_config(std::ostream& os, const RunConfig& cfg) {
  std::string section;
  bool first = true;
  for (const auto& f : fields()) {
    const std::string key = f.key;
    const auto dot = key.find('.');
    if (key.substr(0, dot) != section) {
      section = key.substr(0, dot);
      os << (first ? "[" : "\n[") << section << "]\n";
      first = false;
    }
    os << key.substr(dot + 1) << " = " << f.get(cfg) << '\n';
  }
}

}  // namespace ealoc
