#include "gfn/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "gfn/errors.hpp"
#include "gfn/flow_model.hpp"
#include "gfn/replay_buffer.hpp"

namespace gfn {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finaliser over (seed, stream).
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + (stream + 1) * 0xD1B54A32D192ED03ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::filesystem::path run_csv_path(const RunConfig& cfg) {
  return cfg.out_dir / ("metrics_seed" + std::to_string(cfg.seed) + ".csv");
}

RunResult run(const RunConfig& cfg) {
  cfg.validate();
  RunResult result;
  result.csv_path = run_csv_path(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream csv(result.csv_path, std::ios::binary | std::ios::trunc);
  if (!csv) throw IoError("cannot open " + result.csv_path.string() + " for writing");
  csv << kMetricsCsvHeader << '\n';

  const HypergridEnv env(cfg.reward_params());
  FlowModel model = make_flow_model(env, cfg.objective, derive_seed(cfg.seed, 0));
  AdamState opt(AdamHyperParams{.lr = cfg.lr});
  TrajectorySampler sampler(SamplerConfig{cfg.epsilon, derive_seed(cfg.seed, 1)});
  Rng replay_rng(derive_seed(cfg.seed, 2));
  ModeTracker tracker(env);

  std::optional<ReplayBuffer> buffer;
  if (cfg.regime != ReplayRegime::None) {
    buffer.emplace(cfg.regime, cfg.buffer_capacity);
    result.buffer_allocated = true;
  }

  double loss_sum = 0.0;
  double reward_sum = 0.0;
  std::size_t loss_count = 0;
  std::size_t reward_count = 0;

  try {
    for (std::size_t step = 1; step <= cfg.train_steps; ++step) {
      const std::vector<Trajectory> online = sampler.sample_batch(model, env, cfg.batch_online);
      for (const Trajectory& t : online) {
        tracker.update(t.final_state(), SampleSource::Online);
        if (!result.states_to_all_modes && tracker.modes_found() == tracker.total_modes()) {
          result.states_to_all_modes = tracker.states_visited();
        }
        reward_sum += t.terminal_reward;
        ++reward_count;
        if (buffer) {
          buffer->insert(t);
          ++result.buffer_operations;
        }
      }

      std::vector<Trajectory> replayed;
      if (buffer && !buffer->empty()) {
        replayed = buffer->sample(cfg.batch_replay, replay_rng);
        ++result.buffer_operations;
        for (const Trajectory& t : replayed) tracker.update(t.final_state(), SampleSource::Replay);
      }

      loss_sum += train_step(model, env, online, replayed, opt).loss;
      ++loss_count;

      if (step % cfg.eval_every == 0 || step == cfg.train_steps) {
        MetricsRecord rec;
        rec.step = static_cast<std::int64_t>(step);
        rec.states_visited = tracker.states_visited();
        rec.modes_found = tracker.modes_found();
        rec.modes_pct = tracker.modes_fraction();
        rec.empirical_l1 = empirical_l1(model, env);
        rec.mean_loss = loss_sum / static_cast<double>(loss_count);
        rec.mean_online_reward = reward_sum / static_cast<double>(reward_count);
        csv << format_metrics_row(rec) << std::flush;
        result.records.push_back(rec);
        loss_sum = reward_sum = 0.0;
        loss_count = reward_count = 0;
      }
    }
  } catch (const DivergenceError& e) {
    result.ok = false;
    result.failure = e.what();
  }
  if (!csv) throw IoError("failed writing " + result.csv_path.string());
  return result;
}

double metric_value(const MetricsRecord& r, const std::string& metric) {
  if (metric == "states_visited") return static_cast<double>(r.states_visited);
  if (metric == "modes_found") return static_cast<double>(r.modes_found);
  if (metric == "modes_pct") return r.modes_pct;
  if (metric == "empirical_l1") return r.empirical_l1;
  if (metric == "mean_loss") return r.mean_loss;
  if (metric == "mean_online_reward") return r.mean_online_reward;
  throw UsageError("unknown metric '" + metric + "'");
}

AggregateSeries aggregate(const std::vector<std::vector<MetricsRecord>>& seeds, const std::string& metric) {
  if (seeds.size() < 2) throw UsageError("aggregation needs at least two seeds");
  std::size_t length = seeds.front().size();
  for (const auto& s : seeds) length = std::min(length, s.size());

  AggregateSeries out;
  out.metric = metric;
  for (std::size_t i = 0; i < length; ++i) {
    const double x = static_cast<double>(seeds.front()[i].states_visited);
    for (const auto& s : seeds) {
      if (static_cast<double>(s[i].states_visited) != x) throw UsageError("seed series do not share an x grid");
    }
    out.x.push_back(x);
  }
  for (const auto& s : seeds) {
    std::vector<double> ys;
    for (std::size_t i = 0; i < length; ++i) ys.push_back(metric_value(s[i], metric));
    out.per_seed.push_back(std::move(ys));
  }
  const double n = static_cast<double>(seeds.size());
  for (std::size_t i = 0; i < length; ++i) {
    double sum = 0.0;
    for (const auto& ys : out.per_seed) sum += ys[i];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& ys : out.per_seed) ss += (ys[i] - mean) * (ys[i] - mean);
    out.mean.push_back(mean);
    out.stderr_.push_back(std::sqrt(ss / (n - 1.0)) / std::sqrt(n));
  }
  return out;
}

void write_aggregate_csv(const std::vector<std::vector<MetricsRecord>>& seeds, const std::filesystem::path& path) {
  std::vector<AggregateSeries> series;
  for (const std::string& m : kAggregatedMetrics) series.push_back(aggregate(seeds, m));
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << "states_visited";
  for (const std::string& m : kAggregatedMetrics) os << ',' << m << "_mean," << m << "_stderr";
  os << '\n';
  for (std::size_t i = 0; i < series.front().x.size(); ++i) {
    os << static_cast<std::uint64_t>(series.front().x[i]);
    for (const auto& s : series) os << ',' << format_real(s.mean[i]) << ',' << format_real(s.stderr_[i]);
    os << '\n';
  }
  if (!os) throw IoError("failed writing " + path.string());
}

AggregateSeries read_aggregate_csv(const std::filesystem::path& path, const std::string& metric) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  std::string line;
  if (!std::getline(is, line)) throw IoError(path.string() + ": empty file");
  const auto header = split(line);
  const auto mean_col = std::find(header.begin(), header.end(), metric + "_mean");
  const auto se_col = std::find(header.begin(), header.end(), metric + "_stderr");
  if (header.empty() || header.front() != "states_visited" || mean_col == header.end() || se_col == header.end()) {
    throw IoError(path.string() + ": no columns for metric '" + metric + "'");
  }
  const auto mi = static_cast<std::size_t>(mean_col - header.begin());
  const auto si = static_cast<std::size_t>(se_col - header.begin());
  AggregateSeries out;
  out.metric = metric;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) throw IoError(path.string() + ": malformed row '" + line + "'");
    out.x.push_back(std::strtod(cells[0].c_str(), nullptr));
    out.mean.push_back(std::strtod(cells[mi].c_str(), nullptr));
    out.stderr_.push_back(std::strtod(cells[si].c_str(), nullptr));
  }
  return out;
}

namespace {

std::string cell_name(const std::vector<std::pair<std::string, std::string>>& settings) {
  if (settings.empty()) return "base";
  std::string name;
  for (const auto& [k, v] : settings) {
    if (!name.empty()) name += '_';
    name += k + '-' + v;
  }
  return name;
}

}  // namespace

MatrixResult run_matrix(const RunConfig& base, const std::vector<Sweep>& sweeps, const std::vector<std::uint64_t>& seeds,
                        std::size_t jobs) {
  if (seeds.empty()) throw ConfigError("matrix needs at least one seed");
  const auto& known = config_keys();
  for (const auto& [key, values] : sweeps) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown sweep key '" + key + "'");
    if (key == "seed" || key == "out_dir") throw ConfigError("key '" + key + "' cannot be swept");
    if (values.empty()) throw ConfigError("sweep '" + key + "' has no values");
  }

  MatrixResult result;
  std::vector<std::size_t> digit(sweeps.size(), 0);
  while (true) {
    MatrixCell cell;
    for (std::size_t i = 0; i < sweeps.size(); ++i) cell.settings.emplace_back(sweeps[i].first, sweeps[i].second[digit[i]]);
    cell.name = cell_name(cell.settings);
    for (std::uint64_t seed : seeds) {
      RunConfig cfg = base;
      for (const auto& [k, v] : cell.settings) apply_setting(cfg, k, v);
      apply_setting(cfg, "seed", std::to_string(seed));
      cfg.out_dir = base.out_dir / cell.name;
      finalize_config(cfg);
      cell.configs.push_back(std::move(cfg));
    }
    cell.runs.resize(seeds.size());
    result.cells.push_back(std::move(cell));

    std::size_t i = 0;
    while (i < sweeps.size() && ++digit[i] == sweeps[i].second.size()) digit[i++] = 0;
    if (i == sweeps.size()) break;
  }

  struct Task {
    std::size_t cell, seed;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    for (std::size_t s = 0; s < seeds.size(); ++s) tasks.push_back({c, s});
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      MatrixCell& cell = result.cells[tasks[k].cell];
      RunResult& out = cell.runs[tasks[k].seed];
      try {
        out = run(cell.configs[tasks[k].seed]);
      } catch (const std::exception& e) {
        out.ok = false;
        out.failure = e.what();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, tasks.size());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::filesystem::create_directories(base.out_dir);
  result.summary_path = base.out_dir / "summary.txt";
  std::ofstream summary(result.summary_path, std::ios::binary);
  for (MatrixCell& cell : result.cells) {
    std::vector<std::vector<MetricsRecord>> series;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const RunResult& r = cell.runs[s];
      summary << cell.name << " seed=" << seeds[s] << ' ' << (r.ok ? "ok" : "failed");
      if (!r.ok) summary << ": " << r.failure;
      summary << '\n';
      if (!r.records.empty()) series.push_back(r.records);
    }
    if (seeds.size() >= 2 && series.size() >= 2) {
      cell.aggregate_path = base.out_dir / (cell.name + "_aggregate.csv");
      write_aggregate_csv(series, *cell.aggregate_path);
    }
  }
  return result;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
      throw ConfigError("invalid seed list '" + text + "'");
    }
  };
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (const auto dash = item.find('-'); dash != std::string::npos) {
      const auto lo = number(item.substr(0, dash));
      const auto hi = number(item.substr(dash + 1));
      if (hi < lo) throw ConfigError("invalid seed range '" + item + "'");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    } else {
      out.push_back(number(item));
    }
  }
  if (out.empty()) throw ConfigError("seed list is empty");
  return out;
}

Sweep parse_sweep(const std::string& text) {
  const auto [key, values] = split_assignment(text);
  Sweep sweep{key, {}};
  std::stringstream ss(values);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) sweep.second.push_back(item);
  }
  if (sweep.second.empty()) throw ConfigError("sweep '" + key + "' has no values");
  return sweep;
}

}  // namespace gfn
