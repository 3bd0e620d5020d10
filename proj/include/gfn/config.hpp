#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gfn/flow_model.hpp"
#include "gfn/hypergrid.hpp"
#include "gfn/replay_buffer.hpp"

namespace gfn {

/// One training run. Defaults follow the Hypergrid setup: H=8, R1=0.5, R2=2,
/// Adam at lr 1e-3, flow matching, 16 online + 16 replayed trajectories.
struct RunConfig {
  std::size_t ndim = 4;
  int side = 8;
  double r0 = 1e-3;
  double r1 = 0.5;
  double r2 = 2.0;
  Objective objective = Objective::FlowMatching;
  ReplayRegime regime = ReplayRegime::Rprs;
  std::size_t batch_online = 16;
  std::size_t batch_replay = 16;
  std::size_t buffer_capacity = 1000;
  double lr = 1e-3;
  double epsilon = 0.05;
  std::size_t train_steps = 2500;
  std::size_t eval_every = 50;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "runs";

  /// Keys assigned explicitly (file, flag or sweep) rather than defaulted.
  std::set<std::string> explicit_keys;

  RewardParams reward_params() const;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Keys that must be given explicitly.
inline const std::vector<std::string> kRequiredKeys = {"ndim", "R0"};

/// All recognised keys, in canonical order.
const std::vector<std::string>& config_keys();

/// Assigns one key. Unknown keys and unparsable values raise ConfigError.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Splits "key=value" (whitespace around either side is ignored).
std::pair<std::string, std::string> split_assignment(const std::string& text);

/// Reads flat `key = value` lines (`#` starts a comment), then applies
/// `overrides` ("key=value") on top, checks required keys and validates.
RunConfig parse_config(const std::optional<std::filesystem::path>& path, const std::vector<std::string>& overrides);

/// Same as parse_config with the file contents given inline.
RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides);

/// Finalises a config after all assignments: resolves the implicit
/// batch_replay for regime none, checks required keys, validates.
void finalize_config(RunConfig& cfg);

std::string to_string(Objective objective);

/// Canonical `key = value` rendering, parsable by parse_config.
std::string format_config(const RunConfig& cfg);

}  // namespace gfn
