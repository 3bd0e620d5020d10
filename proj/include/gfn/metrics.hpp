#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gfn/flow_model.hpp"
#include "gfn/hypergrid.hpp"

namespace gfn {

enum class SampleSource { Online, Replay };

/// Modes discovered so far and the number of online terminal states seen.
class ModeTracker {
 public:
  explicit ModeTracker(const HypergridEnv& env);

  void update(const GridState& terminal, SampleSource source);

  std::size_t modes_found() const { return discovered_.size(); }
  std::size_t total_modes() const { return total_modes_; }
  double modes_fraction() const;
  std::uint64_t states_visited() const { return states_visited_; }
  const std::set<GridState>& discovered() const { return discovered_; }

 private:
  const HypergridEnv* env_;
  std::size_t total_modes_;
  std::set<GridState> discovered_;
  std::uint64_t states_visited_ = 0;
};

struct MetricsRecord {
  std::int64_t step = 0;
  std::uint64_t states_visited = 0;
  std::size_t modes_found = 0;
  double modes_pct = 0.0;  // fraction in [0, 1]
  double empirical_l1 = 0.0;
  double mean_loss = 0.0;
  double mean_online_reward = 0.0;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

/// Exact probability that the ε=0 forward policy terminates in each state,
/// indexed by HypergridEnv::index_of. Mass is pushed through the DAG in
/// index order, which is topological.
std::vector<double> terminal_distribution(const FlowModel& model, const HypergridEnv& env);

/// Same DP over a precomputed dense policy table (one row per state index,
/// action_count wide).
std::vector<double> terminal_distribution_from_policy(const HypergridEnv& env,
                                                      const std::vector<std::vector<double>>& policy);

/// (1/|X|) * sum_x |p(x) - q(x)|.
double mean_abs_difference(std::span<const double> p, std::span<const double> q);

/// Mean absolute gap between the model's terminal distribution and R/Z.
double empirical_l1(const FlowModel& model, const HypergridEnv& env);

inline constexpr const char* kMetricsCsvHeader =
    "step,states_visited,modes_found,modes_pct,empirical_l1,mean_loss,mean_online_reward";

/// Shortest "%#.*g" rendering with at least 6 significant digits that
/// parses back to exactly `value`.
std::string format_real(double value);

/// One CSV data row (with trailing line feed) in header column order.
std::string format_metrics_row(const MetricsRecord& record);

void write_csv(std::span<const MetricsRecord> records, const std::filesystem::path& path);
std::vector<MetricsRecord> read_csv(const std::filesystem::path& path);

}  // namespace gfn
