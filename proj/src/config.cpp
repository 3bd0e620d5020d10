#include "gfn/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gfn/errors.hpp"
#include "gfn/metrics.hpp"

namespace gfn {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_unsigned(const std::string& key, const std::string& value) {
  T out{};
  const auto* first = value.data();
  const auto* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || value.empty()) {
    throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + value + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double out = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(out)) {
    throw ConfigError("key '" + key + "': expected a finite real number, got '" + value + "'");
  }
  return out;
}

Objective parse_objective(const std::string& value) {
  if (value == "fm") return Objective::FlowMatching;
  if (value == "tb") return Objective::TrajectoryBalance;
  throw ConfigError("key 'objective': expected fm or tb, got '" + value + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "ndim",         "H",            "R0",           "R1",              "R2", "objective",
      "regime",       "batch_online", "batch_replay", "buffer_capacity", "lr", "epsilon",
      "train_steps",  "eval_every",   "seed",         "out_dir"};
  return keys;
}

std::string to_string(Objective objective) { return objective == Objective::FlowMatching ? "fm" : "tb"; }

RewardParams RunConfig::reward_params() const { return RewardParams{r0, r1, r2, side, ndim}; }

void RunConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) { throw ConfigError("key '" + key + "': " + why); };
  if (ndim < 1) fail("ndim", "must be at least 1");
  if (side < 2) fail("H", "must be at least 2");
  if (!(r0 > 0.0)) fail("R0", "must be positive");
  if (!(r0 < r1)) fail("R0", "must be smaller than R1");
  if (!(r1 < r2)) fail("R1", "must be smaller than R2");
  if (batch_online < 1) fail("batch_online", "must be at least 1");
  if (regime == ReplayRegime::None && batch_replay != 0) fail("batch_replay", "must be 0 when regime is none");
  if (regime != ReplayRegime::None && batch_replay == 0) fail("batch_replay", "must be positive when replay is enabled");
  if (regime != ReplayRegime::None && buffer_capacity < 1) fail("buffer_capacity", "must be at least 1");
  if (!(lr > 0.0)) fail("lr", "must be positive");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) fail("epsilon", "must lie in [0, 1)");
  if (train_steps < 1) fail("train_steps", "must be at least 1");
  if (eval_every < 1) fail("eval_every", "must be at least 1");
  if (out_dir.empty()) fail("out_dir", "must not be empty");
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "ndim") {
    cfg.ndim = parse_unsigned<std::size_t>(key, value);
  } else if (key == "H") {
    cfg.side = parse_unsigned<int>(key, value);
  } else if (key == "R0") {
    cfg.r0 = parse_real(key, value);
  } else if (key == "R1") {
    cfg.r1 = parse_real(key, value);
  } else if (key == "R2") {
    cfg.r2 = parse_real(key, value);
  } else if (key == "objective") {
    cfg.objective = parse_objective(value);
  } else if (key == "regime") {
    cfg.regime = parse_regime(value);
  } else if (key == "batch_online") {
    cfg.batch_online = parse_unsigned<std::size_t>(key, value);
  } else if (key == "batch_replay") {
    cfg.batch_replay = parse_unsigned<std::size_t>(key, value);
  } else if (key == "buffer_capacity") {
    cfg.buffer_capacity = parse_unsigned<std::size_t>(key, value);
  } else if (key == "lr") {
    cfg.lr = parse_real(key, value);
  } else if (key == "epsilon") {
    cfg.epsilon = parse_real(key, value);
  } else if (key == "train_steps") {
    cfg.train_steps = parse_unsigned<std::size_t>(key, value);
  } else if (key == "eval_every") {
    cfg.eval_every = parse_unsigned<std::size_t>(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_unsigned<std::uint64_t>(key, value);
  } else if (key == "out_dir") {
    if (value.empty()) throw ConfigError("key 'out_dir': must not be empty");
    cfg.out_dir = value;
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
  cfg.explicit_keys.insert(key);
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + text + "'");
  std::string key = trim(text.substr(0, eq));
  if (key.empty()) throw ConfigError("empty key in '" + text + "'");
  return {key, trim(text.substr(eq + 1))};
}

void finalize_config(RunConfig& cfg) {
  for (const std::string& key : kRequiredKeys) {
    if (!cfg.explicit_keys.contains(key)) throw ConfigError("missing required key '" + key + "'");
  }
  // The 16-trajectory replay default only applies when replay is enabled.
  if (cfg.regime == ReplayRegime::None && !cfg.explicit_keys.contains("batch_replay")) cfg.batch_replay = 0;
  cfg.validate();
}

RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    try {
      const auto [key, value] = split_assignment(line);
      apply_setting(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (const std::string& o : overrides) {
    const auto [key, value] = split_assignment(o);
    apply_setting(cfg, key, value);
  }
  finalize_config(cfg);
  return cfg;
}

RunConfig parse_config(const std::optional<std::filesystem::path>& path, const std::vector<std::string>& overrides) {
  std::string text;
  if (path) {
    std::ifstream is(*path, std::ios::binary);
    if (!is) throw ConfigError("cannot read config file " + path->string());
    std::ostringstream ss;
    ss << is.rdbuf();
    text = ss.str();
  }
  return parse_config_text(text, overrides);
}

std::string format_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "ndim = " << cfg.ndim << '\n'
     << "H = " << cfg.side << '\n'
     << "R0 = " << format_real(cfg.r0) << '\n'
     << "R1 = " << format_real(cfg.r1) << '\n'
     << "R2 = " << format_real(cfg.r2) << '\n'
     << "objective = " << to_string(cfg.objective) << '\n'
     << "regime = " << to_string(cfg.regime) << '\n'
     << "batch_online = " << cfg.batch_online << '\n'
     << "batch_replay = " << cfg.batch_replay << '\n'
     << "buffer_capacity = " << cfg.buffer_capacity << '\n'
     << "lr = " << format_real(cfg.lr) << '\n'
     << "epsilon = " << format_real(cfg.epsilon) << '\n'
     << "train_steps = " << cfg.train_steps << '\n'
     << "eval_every = " << cfg.eval_every << '\n'
     << "seed = " << cfg.seed << '\n'
     << "out_dir = " << cfg.out_dir.string() << '\n';
  return os.str();
}

}  // namespace gfn
