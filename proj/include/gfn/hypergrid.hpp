#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gfn/tensor.hpp"

namespace gfn {

/// Cell of the hypercube; each coordinate lies in [0, H-1].
struct GridState {
  std::vector<int> coords;

  std::size_t ndim() const { return coords.size(); }
  int coordinate_sum() const;
  std::string to_string() const;

  friend bool operator==(const GridState&, const GridState&) = default;
  friend auto operator<=>(const GridState&, const GridState&) = default;
};

struct Action {
  enum class Kind { Increment, Stop };

  Kind kind = Kind::Stop;
  std::size_t dim = 0;  // meaningful for Increment only

  static Action increment(std::size_t d) { return {Kind::Increment, d}; }
  static Action stop() { return {Kind::Stop, 0}; }
  bool is_stop() const { return kind == Kind::Stop; }

  friend bool operator==(const Action&, const Action&) = default;
};

struct Terminal {
  GridState state;
  friend bool operator==(const Terminal&, const Terminal&) = default;
};

using StepResult = std::variant<GridState, Terminal>;

/// Three-plateau reward
///   R(x) = R0 + R1 * prod_i 1[0.25 < |x_i/H - 0.5|]
///             + R2 * prod_i 1[0.3 < |x_i/H - 0.5| < 0.4]
struct RewardParams {
  double r0 = 1e-3;
  double r1 = 0.5;
  double r2 = 2.0;
  int side = 8;        // H
  std::size_t ndim = 2;  // n

  /// Throws ConfigError unless 0 < r0 < r1 < r2, side >= 1 and ndim >= 1.
  void validate() const;
};

struct Trajectory {
  std::vector<GridState> states;  // origin first
  std::vector<Action> actions;    // actions[i] is taken at states[i]; last is stop
  double terminal_reward = 0.0;

  const GridState& final_state() const { return states.back(); }
  std::size_t length() const { return actions.size(); }
};

struct TrueDistribution {
  std::vector<double> probs;  // indexed by HypergridEnv::index_of
  double partition = 0.0;     // Z = sum of rewards
};

/// Largest state space that exact enumeration (true distribution, DP) accepts.
inline constexpr std::size_t kMaxEnumerableStates = std::size_t{1} << 21;

/// The n-dimensional Hypergrid DAG. Actions increment one coordinate (not
/// allowed at H-1) or stop; stop is always allowed.
///
/// The reward is the three-plateau formula unless a custom function is
/// supplied; mode membership always refers to the R2 band.
class HypergridEnv {
 public:
  using RewardFn = std::function<double(const GridState&)>;

  explicit HypergridEnv(RewardParams params);
  HypergridEnv(RewardParams params, RewardFn custom_reward);

  const RewardParams& params() const { return params_; }
  std::size_t ndim() const { return params_.ndim; }
  int side() const { return params_.side; }

  /// Number of network outputs: one per increment action plus stop.
  std::size_t action_count() const { return ndim() + 1; }
  std::size_t action_index(const Action& a) const { return a.is_stop() ? ndim() : a.dim; }
  Action action_at(std::size_t index) const;

  GridState origin() const;
  bool is_valid(const GridState& s) const;

  std::vector<Action> allowed_actions(const GridState& s) const;
  /// Validity mask over action indices, stop last.
  std::vector<bool> action_mask(const GridState& s) const;
  StepResult step(const GridState& s, const Action& a) const;
  /// (parent, action leading from parent to s) for each nonzero coordinate.
  std::vector<std::pair<GridState, Action>> parents(const GridState& s) const;

  double reward(const GridState& s) const;
  bool is_mode(const GridState& s) const;
  std::size_t mode_count() const;
  std::vector<GridState> modes() const;

  std::size_t encoding_width() const { return ndim() * static_cast<std::size_t>(side()); }
  std::vector<double> encode(const GridState& s) const;
  GridState decode(std::span<const double> encoding) const;
  /// One-hot encodings of `states` as rows of a (count x n*H) tensor.
  Tensor encode_batch(std::span<const GridState> states) const;

  /// H^n, or CapacityError if that exceeds kMaxEnumerableStates.
  std::size_t state_count() const;
  /// Mixed-radix index sum_i x_i H^i. Parents always have smaller indices.
  std::size_t index_of(const GridState& s) const;
  GridState state_at(std::size_t index) const;

  TrueDistribution true_distribution() const;

  /// Throws UsageError if `t` violates the Trajectory invariants.
  void check_trajectory(const Trajectory& t) const;

 private:
  void require_valid(const GridState& s) const;

  RewardParams params_;
  RewardFn custom_reward_;
};

/// 1[0.25 < |x/H - 0.5|], evaluated in exact integer arithmetic.
bool in_outer_band(int x, int side);
/// 1[0.3 < |x/H - 0.5| < 0.4], evaluated in exact integer arithmetic.
bool in_mode_band(int x, int side);

}  // namespace gfn
