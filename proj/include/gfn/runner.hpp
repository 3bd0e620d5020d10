#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gfn/config.hpp"
#include "gfn/metrics.hpp"

namespace gfn {

struct RunResult {
  std::filesystem::path csv_path;
  std::vector<MetricsRecord> records;
  bool ok = true;
  std::string failure;  // diagnostic when !ok
  /// Online states visited when the last mode was first sampled.
  std::optional<std::uint64_t> states_to_all_modes;
  bool buffer_allocated = false;
  std::uint64_t buffer_operations = 0;  // insert + sample calls
};

/// Derives an independent stream seed from a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

std::filesystem::path run_csv_path(const RunConfig& cfg);

/// Trains one model under `cfg`, streaming a MetricsRecord row to the CSV
/// every eval_every steps (and after the last step). A diverging run is
/// reported through `ok`/`failure` with the rows written so far kept.
RunResult run(const RunConfig& cfg);

/// Mean and standard error of one metric over seeds.
struct AggregateSeries {
  std::string metric;
  std::vector<double> x;                    // states visited
  std::vector<std::vector<double>> per_seed;
  std::vector<double> mean;
  std::vector<double> stderr_;  // sample stddev / sqrt(#seeds)
};

inline const std::vector<std::string> kAggregatedMetrics = {"modes_found", "modes_pct", "empirical_l1", "mean_loss",
                                                            "mean_online_reward"};

double metric_value(const MetricsRecord& r, const std::string& metric);

/// Aggregates over the common prefix of the seeds' record series. Needs at
/// least two seeds.
AggregateSeries aggregate(const std::vector<std::vector<MetricsRecord>>& seeds, const std::string& metric);

/// Columns: states_visited, then <metric>_mean,<metric>_stderr for each
/// aggregated metric.
void write_aggregate_csv(const std::vector<std::vector<MetricsRecord>>& seeds, const std::filesystem::path& path);

/// Reads one metric's mean/stderr columns back from an aggregate CSV.
AggregateSeries read_aggregate_csv(const std::filesystem::path& path, const std::string& metric);

using Sweep = std::pair<std::string, std::vector<std::string>>;

struct MatrixCell {
  std::string name;
  std::vector<std::pair<std::string, std::string>> settings;
  std::vector<RunConfig> configs;  // one per seed
  std::vector<RunResult> runs;     // one per seed
  std::optional<std::filesystem::path> aggregate_path;
};

struct MatrixResult {
  std::vector<MatrixCell> cells;
  std::filesystem::path summary_path;
};

/// Cartesian product of `sweeps` x `seeds`. Each cell writes its runs under
/// out_dir/<cell>/ and, with two or more seeds, out_dir/<cell>_aggregate.csv.
/// Cells run on up to `jobs` threads; results do not depend on scheduling.
MatrixResult run_matrix(const RunConfig& base, const std::vector<Sweep>& sweeps, const std::vector<std::uint64_t>& seeds,
                        std::size_t jobs = 1);

/// "0,1,2" or "0-4" (inclusive), mixable: "0-2,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// "key=v1,v2,..."
Sweep parse_sweep(const std::string& text);

}  // namespace gfn
