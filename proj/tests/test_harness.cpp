#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "gfn/config.hpp"
#include "gfn/errors.hpp"
#include "gfn/runner.hpp"
#include "gfn/svg_plot.hpp"

using namespace gfn;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "gfn_test_harness" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

RunConfig tiny(const std::filesystem::path& out, const std::string& regime = "rprs") {
  const std::string replay = regime == "none" ? "0" : "4";
  return parse_config_text("ndim = 2\nH = 4\nR0 = 0.01\ntrain_steps = 20\neval_every = 5\nbatch_online = 4\n"
                           "buffer_capacity = 10\n",
                           {"regime=" + regime, "batch_replay=" + replay, "out_dir=" + out.string()});
}

AggregateSeries series(std::vector<double> x, std::vector<double> mean, std::vector<double> se) {
  AggregateSeries s;
  s.x = std::move(x);
  s.mean = std::move(mean);
  s.stderr_ = std::move(se);
  return s;
}

}  // namespace

TEST_CASE("config file values and flag overrides combine") {
  const RunConfig cfg = parse_config_text("# hypergrid\nndim = 4\nR0 = 0.001   # hard setting\n\n", {"seed=3"});
  CHECK(cfg.r0 == 0.001);
  CHECK(cfg.seed == 3);
  CHECK(cfg.ndim == 4);
  CHECK(cfg.side == 8);
  CHECK(cfg.lr == 0.001);
  CHECK(cfg.batch_online == 16);
  CHECK(cfg.batch_replay == 16);
  CHECK(cfg.objective == Objective::FlowMatching);
  CHECK(parse_config_text("ndim=4\nR0=0.1\n", {"R0=0.01"}).r0 == 0.01);
}

TEST_CASE("config errors name the key") {
  auto message = [](const std::string& text, std::vector<std::string> flags) {
    try {
      parse_config_text(text, flags);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("ndim=4\nR0=0.001\nregime=none\nbatch_replay=16\n", {}).find("batch_replay") != std::string::npos);
  CHECK(message("ndim=4\nR0=0.7\n", {}).find("R0") != std::string::npos);
  CHECK(message("ndim=4\n", {}).find("R0") != std::string::npos);
  CHECK(message("ndim=4\nR0=0.01\ncolour=blue\n", {}).find("colour") != std::string::npos);
  CHECK(message("ndim=4\nR0=0.01\n", {"lr=fast"}).find("lr") != std::string::npos);
  CHECK(message("ndim=4\nR0=0.01\n", {"regime=random", "buffer_capacity=0"}).find("buffer_capacity") != std::string::npos);
  CHECK(message("ndim=4\nR0=0.01\nnot an assignment\n", {}).find("line 3") != std::string::npos);
}

TEST_CASE("empty file with everything supplied by flags") {
  const RunConfig cfg = parse_config_text("", {"ndim=2", "R0=0.01", "regime=none"});
  CHECK(cfg.regime == ReplayRegime::None);
  CHECK(cfg.batch_replay == 0);
  CHECK_NOTHROW(cfg.validate());
  const RunConfig again = parse_config_text(format_config(cfg), {});
  CHECK(format_config(again) == format_config(cfg));
}

TEST_CASE("config file on disk") {
  const auto dir = fresh_dir("config");
  std::ofstream(dir / "run.cfg") << "ndim = 3\nR0 = 0.01\n";
  CHECK(parse_config(dir / "run.cfg", {"H=6"}).side == 6);
  CHECK_THROWS_AS(parse_config(dir / "missing.cfg", {}), ConfigError);
}

TEST_CASE("identical config and seed give byte-identical CSVs") {
  const auto a = run(tiny(fresh_dir("det_a")));
  const auto b = run(tiny(fresh_dir("det_b")));
  REQUIRE(a.ok);
  CHECK(slurp(a.csv_path) == slurp(b.csv_path));
  CHECK(a.records.size() == 4);
  CHECK(slurp(a.csv_path).rfind(kMetricsCsvHeader, 0) == 0);
}

TEST_CASE("states visited counts online samples only") {
  for (const std::string regime : {"none", "random", "rprs"}) {
    const RunResult r = run(tiny(fresh_dir("count_" + regime), regime));
    REQUIRE(r.records.size() == 4);
    for (std::size_t i = 0; i < r.records.size(); ++i) {
      CHECK(r.records[i].states_visited == (i + 1) * 5 * 4);
      if (i > 0) CHECK(r.records[i].modes_found >= r.records[i - 1].modes_found);
    }
  }
}

TEST_CASE("the no-buffer regime never touches a buffer") {
  const RunResult none = run(tiny(fresh_dir("nobuf"), "none"));
  CHECK_FALSE(none.buffer_allocated);
  CHECK(none.buffer_operations == 0);
  const RunResult prs = run(tiny(fresh_dir("buf"), "rprs"));
  CHECK(prs.buffer_allocated);
  CHECK(prs.buffer_operations == 20 * (4 + 1));
}

TEST_CASE("single-state-chain run converges") {
  RunConfig cfg = parse_config_text("", {"ndim=1", "H=2", "R0=0.01", "regime=none", "train_steps=3000",
                                         "eval_every=500", "out_dir=" + fresh_dir("chain").string()});
  const RunResult r = run(cfg);
  REQUIRE(r.ok);
  CHECK(r.records.back().empirical_l1 < 0.02);
}

TEST_CASE("aggregation") {
  std::vector<MetricsRecord> s{{1, 10, 1, 0.25, 0.5, 1.0, 1.0}, {2, 20, 2, 0.5, 0.25, 0.5, 1.0}};
  const AggregateSeries same = aggregate({s, s, s}, "modes_pct");
  CHECK(same.mean == std::vector<double>{0.25, 0.5});
  CHECK(same.stderr_ == std::vector<double>{0.0, 0.0});
  CHECK(same.x == std::vector<double>{10, 20});

  auto t = s;
  t[0].modes_pct = 0.75;
  const AggregateSeries two = aggregate({s, t}, "modes_pct");
  CHECK(two.mean[0] == 0.5);
  // Sample stddev of {0.25, 0.75} is sqrt(0.125); divided by sqrt(2).
  CHECK(two.stderr_[0] == doctest::Approx(0.25));

  CHECK_THROWS_AS(aggregate({s}, "modes_pct"), UsageError);
  auto shifted = s;
  shifted[1].states_visited = 21;
  CHECK_THROWS_AS(aggregate({s, shifted}, "modes_pct"), UsageError);
  auto shorter = s;
  shorter.pop_back();
  CHECK(aggregate({s, shorter}, "modes_found").x.size() == 1);
}

TEST_CASE("matrix writes one CSV per cell and seed plus aggregates") {
  const auto dir = fresh_dir("matrix");
  RunConfig base = tiny(dir);
  base.train_steps = 10;
  const MatrixResult m = run_matrix(base, {{"batch_replay", {"2", "4"}}}, {0, 1}, 2);
  REQUIRE(m.cells.size() == 2);
  CHECK(m.cells[0].name == "batch_replay-2");
  std::size_t run_csvs = 0, aggregates = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.starts_with("metrics_seed")) ++run_csvs;
    if (name.ends_with("_aggregate.csv")) ++aggregates;
  }
  CHECK(run_csvs == 4);
  CHECK(aggregates == 2);
  CHECK(m.cells[1].configs[1].batch_replay == 4);
  CHECK(m.cells[1].configs[1].seed == 1);

  // Scheduling does not change results.
  const auto dir2 = fresh_dir("matrix_serial");
  base.out_dir = dir2;
  const MatrixResult serial = run_matrix(base, {{"batch_replay", {"2", "4"}}}, {0, 1}, 1);
  CHECK(slurp(*serial.cells[1].aggregate_path) == slurp(*m.cells[1].aggregate_path));

  const AggregateSeries back = read_aggregate_csv(*m.cells[0].aggregate_path, "modes_pct");
  CHECK(back.x.size() == 2);

  const auto single_dir = fresh_dir("matrix_single");
  base.out_dir = single_dir;
  const MatrixResult one = run_matrix(base, {}, {0});
  REQUIRE(one.cells.size() == 1);
  CHECK(one.cells[0].runs.size() == 1);
  CHECK_FALSE(one.cells[0].aggregate_path.has_value());

  CHECK_THROWS_AS(run_matrix(base, {{"colour", {"red"}}}, {0}), ConfigError);
}

TEST_CASE("matrix sweeping the regime resolves batch_replay for none") {
  const auto dir = fresh_dir("matrix_regime");
  RunConfig base = parse_config_text("", {"ndim=2", "H=4", "R0=0.01", "train_steps=5", "eval_every=5",
                                          "out_dir=" + dir.string()});
  const MatrixResult m = run_matrix(base, {{"regime", {"none", "rprs"}}}, {0});
  CHECK(m.cells[0].configs[0].batch_replay == 0);
  CHECK(m.cells[1].configs[0].batch_replay == 16);
  CHECK(slurp(m.summary_path).find("regime-none seed=0 ok") != std::string::npos);
}

TEST_CASE("seed lists and sweeps") {
  CHECK(parse_seed_list("0-4") == std::vector<std::uint64_t>{0, 1, 2, 3, 4});
  CHECK(parse_seed_list("3,1,7-8") == std::vector<std::uint64_t>{3, 1, 7, 8});
  CHECK_THROWS_AS(parse_seed_list("a"), ConfigError);
  CHECK_THROWS_AS(parse_seed_list("4-1"), ConfigError);
  const Sweep s = parse_sweep("batch_replay=4,8,12,16");
  CHECK(s.first == "batch_replay");
  CHECK(s.second.size() == 4);
}

TEST_CASE("svg plot") {
  const AggregateSeries flat = series({0, 1, 2}, {1, 1, 1}, {0, 0, 0});
  const std::string one = render_plot({flat}, {"flat"}, {});
  CHECK(count_of(one, "<polyline") == 1);
  const auto py = [&](const std::string& svg) {
    const auto start = svg.find("<polyline");
    const auto pts = svg.find("points=\"", start) + 8;
    return svg.substr(pts, svg.find('"', pts) - pts);
  };
  // All three vertices share one y coordinate.
  const std::string points = py(one);
  std::vector<std::string> ys;
  std::stringstream ss(points);
  std::string pt;
  while (ss >> pt) ys.push_back(pt.substr(pt.find(',') + 1));
  REQUIRE(ys.size() == 3);
  CHECK(ys[0] == ys[1]);
  CHECK(ys[1] == ys[2]);

  const AggregateSeries rising = series({0, 1, 2}, {0, 0.5, 1}, {0.1, 0.1, 0.1});
  const std::string two = render_plot({flat, rising}, {"a", "b"}, {"t", "x", "y"});
  CHECK(count_of(two, "class=\"legend\"") == 2);
  CHECK(count_of(two, "<polyline") == 2);
  CHECK(render_plot({flat, rising}, {"a", "b"}, {"t", "x", "y"}) == two);

  const AggregateSeries other_grid = series({0, 1, 3}, {0, 0, 0}, {0, 0, 0});
  CHECK_THROWS_AS(render_plot({flat, other_grid}, {"a", "b"}, {}), UsageError);
  CHECK_THROWS_AS(render_plot({flat}, {}, {}), UsageError);

  const auto path = fresh_dir("plot") / "p.svg";
  emit_plot({flat}, {"flat"}, {}, path);
  CHECK(slurp(path) == one);
}
