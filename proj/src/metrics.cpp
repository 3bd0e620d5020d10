#include "gfn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "gfn/errors.hpp"

namespace gfn {

ModeTracker::ModeTracker(const HypergridEnv& env) : env_(&env), total_modes_(env.mode_count()) {}

void ModeTracker::update(const GridState& terminal, SampleSource source) {
  if (source == SampleSource::Online) ++states_visited_;
  if (env_->is_mode(terminal)) discovered_.insert(terminal);
}

double ModeTracker::modes_fraction() const {
  return total_modes_ == 0 ? 0.0 : static_cast<double>(discovered_.size()) / static_cast<double>(total_modes_);
}

std::vector<double> terminal_distribution_from_policy(const HypergridEnv& env,
                                                      const std::vector<std::vector<double>>& policy) {
  const std::size_t count = env.state_count();
  if (policy.size() != count) throw DimensionError("policy table must have one row per state");
  const std::size_t stop = env.ndim();
  std::vector<double> mass(count, 0.0);
  std::vector<double> terminal(count, 0.0);
  mass[0] = 1.0;
  std::vector<std::size_t> stride(env.ndim(), 1);
  for (std::size_t i = 1; i < env.ndim(); ++i) stride[i] = stride[i - 1] * env.side();

  for (std::size_t k = 0; k < count; ++k) {
    const double m = mass[k];
    if (m == 0.0) continue;
    terminal[k] = m * policy[k][stop];
    std::size_t rest = k;
    for (std::size_t i = 0; i < env.ndim(); ++i) {
      const std::size_t coord = rest % env.side();
      rest /= env.side();
      if (coord + 1 < static_cast<std::size_t>(env.side())) mass[k + stride[i]] += m * policy[k][i];
    }
  }
  return terminal;
}

std::vector<double> terminal_distribution(const FlowModel& model, const HypergridEnv& env) {
  const std::size_t count = env.state_count();
  constexpr std::size_t kChunk = 4096;
  std::vector<std::vector<double>> policy;
  policy.reserve(count);
  std::vector<GridState> chunk;
  for (std::size_t begin = 0; begin < count; begin += kChunk) {
    chunk.clear();
    const std::size_t end = std::min(count, begin + kChunk);
    for (std::size_t k = begin; k < end; ++k) chunk.push_back(env.state_at(k));
    for (auto& row : forward_policy_batch(model, env, chunk)) policy.push_back(std::move(row));
  }
  return terminal_distribution_from_policy(env, policy);
}

double mean_abs_difference(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw DimensionError("distributions must have the same non-zero length");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return acc / static_cast<double>(p.size());
}

double empirical_l1(const FlowModel& model, const HypergridEnv& env) {
  const std::vector<double> learned = terminal_distribution(model, env);
  const TrueDistribution target = env.true_distribution();
  return mean_abs_difference(learned, target.probs);
}

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%#.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

std::string format_metrics_row(const MetricsRecord& r) {
  std::ostringstream os;
  os << r.step << ',' << r.states_visited << ',' << r.modes_found << ',' << format_real(r.modes_pct) << ','
     << format_real(r.empirical_l1) << ',' << format_real(r.mean_loss) << ',' << format_real(r.mean_online_reward)
     << '\n';
  return os.str();
}

void write_csv(std::span<const MetricsRecord> records, const std::filesystem::path& path) {
  if (records.empty()) throw UsageError("write_csv needs at least one record");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << kMetricsCsvHeader << '\n';
  for (const MetricsRecord& r : records) os << format_metrics_row(r);
  if (!os) throw IoError("failed writing " + path.string());
}

std::vector<MetricsRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kMetricsCsvHeader) throw IoError(path.string() + ": unexpected header");
  std::vector<MetricsRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw IoError(path.string() + ": malformed row '" + line + "'");
    MetricsRecord r;
    try {
      r.step = std::stoll(cells[0]);
      r.states_visited = std::stoull(cells[1]);
      r.modes_found = std::stoull(cells[2]);
      r.modes_pct = std::strtod(cells[3].c_str(), nullptr);
      r.empirical_l1 = std::strtod(cells[4].c_str(), nullptr);
      r.mean_loss = std::strtod(cells[5].c_str(), nullptr);
      r.mean_online_reward = std::strtod(cells[6].c_str(), nullptr);
    } catch (const std::exception&) {
      throw IoError(path.string() + ": malformed row '" + line + "'");
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace gfn
