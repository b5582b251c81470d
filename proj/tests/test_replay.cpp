#include "ealoc/errors.hpp"
#include "ealoc/replay.hpp"
#include "ealoc/rng.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace ealoc;
namespace fs = std::filesystem;

namespace {

const char* kRooms = "room,x,y,camera\nkitchen,0,0,1\nhall,3,0,0\nlounge,3,4,1\n";

RoomTable rooms() {
  std::istringstream is(kRooms);
  return read_room_table(is);
}

Session parse(const std::string& text, std::vector<std::string>& aps, const std::string& name = "s") {
  std::istringstream is(text);
  return read_session(is, name, rooms(), aps);
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ealoc_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ReplayConfig quick(int repeats = 2) {
  ReplayConfig c;
  c.repeats = repeats;
  c.threads = 1;
  return c;
}

const CheckpointRow& row(const ReplayResult& r, Policy p, const std::string& model) {
  for (const auto& x : r.summary)
    if (x.policy == p && x.model == model) return x;
  throw std::logic_error("missing row");
}

}  // namespace

TEST_CASE("room table parsing") {
  const auto t = rooms();
  CHECK(t.size() == 3);
  CHECK(t.find("hall") == 1);
  CHECK_FALSE(t.find("attic"));
  CHECK(t.distance(0, 2) == doctest::Approx(5.0));
  CHECK(t.camera_fraction() == doctest::Approx(2.0 / 3));

  std::istringstream dup("room,x,y,camera\na,0,0,1\na,1,1,0\n");
  CHECK_THROWS_WITH_AS(read_room_table(dup), doctest::Contains("duplicate"), InputError);
  std::istringstream bad("room,x,y,camera\na,0,zero,1\n");
  CHECK_THROWS_WITH_AS(read_room_table(bad), doctest::Contains("row 2"), InputError);
  std::istringstream flag("room,x,y,camera\na,0,0,yes\n");
  CHECK_THROWS_AS(read_room_table(flag), InputError);
  std::istringstream inf("room,x,y,camera\na,inf,0,1\n");
  CHECK_THROWS_AS(read_room_table(inf), InputError);
}

TEST_CASE("session parsing") {
  std::vector<std::string> aps;
  const auto s = parse(
      "t,rss_a,rss_b,room,oracle_room,oracle_kind\n"
      "0,-50,,kitchen,kitchen,camera\n"
      "1,-55,-70,hall,hall,pir\n"
      "2.5,,,lounge,,\n",
      aps);
  CHECK(aps == std::vector<std::string>{"a", "b"});
  REQUIRE(s.ticks.size() == 3);
  CHECK(s.ticks[0].obs.present(0));
  CHECK_FALSE(s.ticks[0].obs.present(1));
  CHECK(s.ticks[0].oracle_kind == OracleKind::Camera);
  CHECK(s.ticks[1].oracle_kind == OracleKind::Pir);
  CHECK(s.ticks[1].obs.rss(1) == -70);
  CHECK_FALSE(s.ticks[2].oracle_room);
  CHECK_FALSE(s.ticks[2].obs.present.any());
  CHECK(s.ticks[2].room == 2);
}

TEST_CASE("session schema errors") {
  std::vector<std::string> aps;
  const std::string header = "t,rss_a,room,oracle_room,oracle_kind\n";
  CHECK_THROWS_WITH_AS(parse(header + "0,-50,kitchen,,\n0,-50,kitchen,,\n", aps, "exp07"),
                       doctest::Contains("exp07"), InputError);
  CHECK_THROWS_WITH_AS(parse(header + "0,-50,attic,,\n", aps), doctest::Contains("unknown room"), InputError);
  CHECK_THROWS_WITH_AS(parse(header + "0,-50,hall,attic,camera\n", aps), doctest::Contains("unknown room"), InputError);
  CHECK_THROWS_WITH_AS(parse(header + "0,-50,kitchen,,\n1,-50,kitchen\n", aps), doctest::Contains("row 3"), InputError);
  CHECK_THROWS_AS(parse(header + "0,-50,kitchen,kitchen,\n", aps), InputError);
  CHECK_THROWS_AS(parse(header + "0,-50,kitchen,kitchen,radar\n", aps), InputError);
  CHECK_THROWS_AS(parse(header + "0,5,kitchen,,\n", aps), InputError);
  CHECK_THROWS_AS(parse(header + "0,loud,kitchen,,\n", aps), InputError);
  CHECK_THROWS_AS(parse("time,rss_a,room,oracle_room,oracle_kind\n0,-50,kitchen,,\n", aps), InputError);
  std::vector<std::string> other{"z"};
  CHECK_THROWS_WITH_AS(parse(header + "0,-50,kitchen,,\n", other), doctest::Contains("AP columns"), InputError);
}

TEST_CASE("fixture round-trips through the dataset loader") {
  FixtureConfig fc;
  fc.experiments = 5;
  fc.ticks = 60;
  const auto fx = make_fixture(fc);
  const auto dir = scratch("roundtrip");
  write_fixture(dir, fx);
  const auto data = load_dataset(dir, dir / "rooms.csv");
  REQUIRE(data.sessions.size() == 5);
  CHECK(data.tick_count() == fx.data.tick_count());
  CHECK(data.ap_names == fx.data.ap_names);
  for (std::size_t s = 0; s < 5; ++s) {
    CHECK(data.sessions[s].name == fx.data.sessions[s].name);
    for (std::size_t t = 0; t < 60; ++t) {
      const auto& a = data.sessions[s].ticks[t];
      const auto& b = fx.data.sessions[s].ticks[t];
      CHECK((a.obs.present == b.obs.present).all());
      for (Eigen::Index k = 0; k < a.obs.size(); ++k)
        if (b.obs.present(k)) CHECK(a.obs.rss(k) == b.obs.rss(k));
      CHECK(a.room == b.room);
      CHECK(a.oracle_room == b.oracle_room);
      CHECK(a.oracle_kind == b.oracle_kind);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("fixture labels follow the camera mask") {
  FixtureConfig fc;
  fc.experiments = 4;
  const auto fx = make_fixture(fc);
  bool any_pir = false, any_loss = false;
  for (const auto& s : fx.data.sessions)
    for (const auto& t : s.ticks) {
      if (fx.rooms[t.room].camera) CHECK(t.oracle_kind == OracleKind::Camera);
      else CHECK(t.oracle_kind != OracleKind::Camera);
      if (t.oracle_room) CHECK(*t.oracle_room == t.room);
      any_pir = any_pir || t.oracle_kind == OracleKind::Pir;
      any_loss = any_loss || !t.obs.present.all();
    }
  CHECK(any_pir);
  CHECK(any_loss);
}

TEST_CASE("dataset loading errors") {
  CHECK_THROWS_AS(load_dataset("/nonexistent/dir", "/nonexistent/rooms.csv"), InputError);
  const auto dir = scratch("empty");
  fs::create_directories(dir);
  std::ofstream(dir / "rooms.csv") << kRooms;
  CHECK_THROWS_WITH_AS(load_dataset(dir, dir / "rooms.csv"), doctest::Contains("no session"), InputError);
  std::ofstream(dir / "exp1.csv") << "t,rss_a,room,oracle_room,oracle_kind\n0,-50,cellar,,\n";
  CHECK_THROWS_WITH_AS(load_dataset(dir, dir / "rooms.csv"), doctest::Contains("exp1.csv row 2"), InputError);
  fs::remove_all(dir);
}

TEST_CASE("initial model fit") {
  ReplayDataset d;
  d.ap_names = {"a"};
  Session s{"s", {}};
  for (int t = 0; t < 4; ++t) {
    ReplayTick k;
    k.t = t;
    k.room = 0;
    k.obs = Observationd::full(Eigen::VectorXd::Constant(1, -60));
    s.ticks.push_back(k);
  }
  d.sessions = {s};
  const auto fit = fit_initial_model(d, {0}, rooms());
  CHECK(fit.params.mu(0, 0) == -60);
  CHECK(fit.params.sigma(0, 0) == kSigmaFloor);
  CHECK(fit.under_observed == std::vector<int>{1, 2});
  CHECK(fit.params.mu(1, 0) == -60);  // pooled default
  CHECK(fit.params.trans(0, 0) == doctest::Approx(4.0 / 6));
  CHECK_NOTHROW(fit.params.validate());
}

TEST_CASE("no consecutive pairs gives uniform transitions") {
  ReplayDataset d;
  d.ap_names = {"a"};
  for (int i = 0; i < 3; ++i) {
    ReplayTick k;
    k.room = i;
    k.obs = Observationd::full(Eigen::VectorXd::Constant(1, -50.0 - 10 * i));
    d.sessions.push_back({"s" + std::to_string(i), {k}});
  }
  const auto fit = fit_initial_model(d, {0, 1, 2}, rooms());
  CHECK((fit.params.trans.array() - 1.0 / 3).abs().maxCoeff() < 1e-15);
  CHECK(fit.under_observed.empty());
}

TEST_CASE("fitted means recover the generator") {
  FixtureConfig fc;
  fc.experiments = 4;
  fc.ticks = 25000;
  fc.session_offset_sigma = 0;
  fc.packet_loss = 0;
  const auto fx = make_fixture(fc);
  const auto fit = fit_initial_model(fx.data, {0, 1, 2, 3}, fx.rooms);
  auto [world, models] = build_world({fc.cols, fc.rows}, fc.aps, fc.camera_coverage, fc.path_loss,
                                     derive_seed(fc.seed, {kStreamFixture}), fc.cell_size);
  std::vector<int> n(fx.rooms.size(), 0);
  for (const auto& s : fx.data.sessions)
    for (const auto& t : s.ticks) ++n[t.room];
  for (int j = 0; j < fx.rooms.size(); ++j) {
    REQUIRE(n[j] >= 5000);
    for (int k = 0; k < fc.aps; ++k) {
      const double bound = 3 * models.underlying.sigma(j, k) / std::sqrt(double(n[j])) + 0.005;
      CHECK(std::abs(fit.params.mu(j, k) - models.underlying.mu(j, k)) <= bound);
    }
  }
}

TEST_CASE("split plans partition the sessions") {
  std::set<std::vector<int>> trains;
  for (int r = 0; r < 30; ++r) {
    const auto plan = make_split_plan(12, 5, r);
    CHECK(plan.train.size() == 3);
    CHECK(plan.test.size() == 9);
    std::vector<int> all = plan.train;
    all.insert(all.end(), plan.test.begin(), plan.test.end());
    std::sort(all.begin(), all.end());
    for (int i = 0; i < 12; ++i) CHECK(all[i] == i);
    CHECK(std::is_sorted(plan.train.begin(), plan.train.end()));
    trains.insert(plan.train);
    const auto again = make_split_plan(12, 5, r);
    CHECK(again.test == plan.test);
  }
  CHECK(trains.size() > 10);
  CHECK_THROWS_AS(make_split_plan(3, 1, 0), InputError);
}

TEST_CASE("checkpoint segments") {
  using S = std::vector<std::pair<int, int>>;
  CHECK(checkpoint_segments(9) == S{{0, 3}, {3, 5}, {5, 9}});
  CHECK(checkpoint_segments(16) == S{{0, 4}, {4, 8}, {8, 16}});
  CHECK(checkpoint_segments(4) == S{{0, 1}, {1, 2}, {2, 4}});
  CHECK(checkpoint_segments(1) == S{{0, 1}, {1, 1}, {1, 1}});
}

TEST_CASE("replay output shape and determinism") {
  FixtureConfig fc;
  fc.experiments = 6;
  fc.ticks = 80;
  const auto fx = make_fixture(fc);
  const auto res = run_replay(fx.data, fx.rooms, quick(2));
  CHECK(res.summary.size() == 9);
  CHECK(res.records.size() == 3 * 2 * 3);
  for (const auto& r : res.records) {
    CHECK(std::isnan(r.play.err_underlying));
    CHECK(r.play.err_control >= 0);
    CHECK(r.setting.grid == 9);
  }
  std::ostringstream a, b;
  write_checkpoint_csv(a, res.summary);
  write_checkpoint_csv(b, run_replay(fx.data, fx.rooms, quick(2)).summary);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("policy,model,pct25_mean,pct25_std,pct50_mean,pct50_std,pct100_mean,pct100_std\n", 0) == 0);
}

TEST_CASE("control errors do not depend on PIR labels or on the policy") {
  FixtureConfig fc;
  fc.experiments = 6;
  fc.ticks = 80;
  auto fx = make_fixture(fc);
  const auto with = run_replay(fx.data, fx.rooms, quick(3));
  for (auto& s : fx.data.sessions)
    for (auto& t : s.ticks)
      if (t.oracle_kind == OracleKind::Pir) {
        t.oracle_kind = OracleKind::None;
        t.oracle_room.reset();
      }
  const auto without = run_replay(fx.data, fx.rooms, quick(3));
  REQUIRE(with.records.size() == without.records.size());
  bool reinforced_moved = false;
  for (std::size_t i = 0; i < with.records.size(); ++i) {
    CHECK(with.records[i].play.err_control == without.records[i].play.err_control);
    reinforced_moved = reinforced_moved || with.records[i].play.err_reinforced != without.records[i].play.err_reinforced;
  }
  CHECK(reinforced_moved);
  const auto& g = row(with, Policy::Greedy, "control");
  const auto& s = row(with, Policy::Softmax, "control");
  for (int c = 0; c < kCheckpoints; ++c) CHECK(g.mean[c] == s.mean[c]);
}

TEST_CASE("separable rooms decode exactly") {
  FixtureConfig fc;
  fc.experiments = 5;
  fc.ticks = 50;
  fc.path_loss.shadow_sigma = 0;  // floored to 0.1 dB; rooms lie many dB apart
  fc.session_offset_sigma = 0;
  fc.packet_loss = 0;
  fc.aps = 6;
  const auto fx = make_fixture(fc);
  const auto res = run_replay(fx.data, fx.rooms, quick(1));
  for (const auto& r : res.records) CHECK(r.play.err_control == 0.0);
}

TEST_CASE("greedy stops using the cameras") {
  const auto fx = make_fixture(FixtureConfig{});
  auto cfg = quick(4);
  cfg.policies = {Policy::Greedy};
  const auto res = run_replay(fx.data, fx.rooms, cfg);
  CHECK(row(res, Policy::Greedy, "dependence").mean[2] <= 0.05);
}
