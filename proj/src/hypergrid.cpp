#include "gfn/hypergrid.hpp"

#include <cstdlib>
#include <numeric>
#include <sstream>

#include "gfn/errors.hpp"

namespace gfn {

int GridState::coordinate_sum() const { return std::accumulate(coords.begin(), coords.end(), 0); }

std::string GridState::to_string() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (i) os << ',';
    os << coords[i];
  }
  os << ')';
  return os.str();
}

void RewardParams::validate() const {
  if (!(r0 > 0.0)) throw ConfigError("R0 must be positive");
  if (!(r0 < r1)) throw ConfigError("R0 must be smaller than R1");
  if (!(r1 < r2)) throw ConfigError("R1 must be smaller than R2");
  if (side < 1) throw ConfigError("H must be at least 1");
  if (ndim < 1) throw ConfigError("ndim must be at least 1");
}

// With d = |2x - H|, |x/H - 0.5| = d / 2H, so
//   0.25 < d/2H        <=>  H < 2d
//   0.3 < d/2H < 0.4   <=>  3H < 5d  and  5d < 4H
bool in_outer_band(int x, int side) {
  const int d = std::abs(2 * x - side);
  return side < 2 * d;
}

bool in_mode_band(int x, int side) {
  const int d = std::abs(2 * x - side);
  return 3 * side < 5 * d && 5 * d < 4 * side;
}

HypergridEnv::HypergridEnv(RewardParams params) : params_(params) { params_.validate(); }

HypergridEnv::HypergridEnv(RewardParams params, RewardFn custom_reward)
    : params_(params), custom_reward_(std::move(custom_reward)) {
  params_.validate();
}

Action HypergridEnv::action_at(std::size_t index) const {
  if (index > ndim()) throw UsageError("action index out of range");
  return index == ndim() ? Action::stop() : Action::increment(index);
}

GridState HypergridEnv::origin() const { return GridState{std::vector<int>(ndim(), 0)}; }

bool HypergridEnv::is_valid(const GridState& s) const {
  if (s.ndim() != ndim()) return false;
  for (int c : s.coords) {
    if (c < 0 || c >= side()) return false;
  }
  return true;
}

void HypergridEnv::require_valid(const GridState& s) const {
  if (!is_valid(s)) throw UsageError("invalid grid state " + s.to_string());
}

std::vector<Action> HypergridEnv::allowed_actions(const GridState& s) const {
  require_valid(s);
  std::vector<Action> out;
  for (std::size_t i = 0; i < ndim(); ++i) {
    if (s.coords[i] < side() - 1) out.push_back(Action::increment(i));
  }
  out.push_back(Action::stop());
  return out;
}

std::vector<bool> HypergridEnv::action_mask(const GridState& s) const {
  require_valid(s);
  std::vector<bool> mask(action_count(), false);
  for (std::size_t i = 0; i < ndim(); ++i) mask[i] = s.coords[i] < side() - 1;
  mask[ndim()] = true;
  return mask;
}

StepResult HypergridEnv::step(const GridState& s, const Action& a) const {
  require_valid(s);
  if (a.is_stop()) return Terminal{s};
  if (a.dim >= ndim()) throw IllegalMoveError("increment of nonexistent dimension " + std::to_string(a.dim));
  if (s.coords[a.dim] >= side() - 1) {
    throw IllegalMoveError("cannot increment dimension " + std::to_string(a.dim) + " of " + s.to_string());
  }
  GridState next = s;
  next.coords[a.dim] += 1;
  return next;
}

std::vector<std::pair<GridState, Action>> HypergridEnv::parents(const GridState& s) const {
  require_valid(s);
  std::vector<std::pair<GridState, Action>> out;
  for (std::size_t i = 0; i < ndim(); ++i) {
    if (s.coords[i] > 0) {
      GridState p = s;
      p.coords[i] -= 1;
      out.emplace_back(std::move(p), Action::increment(i));
    }
  }
  return out;
}

double HypergridEnv::reward(const GridState& s) const {
  require_valid(s);
  if (custom_reward_) return custom_reward_(s);
  bool outer = true;
  bool band = true;
  for (int c : s.coords) {
    outer = outer && in_outer_band(c, side());
    band = band && in_mode_band(c, side());
  }
  return params_.r0 + (outer ? params_.r1 : 0.0) + (band ? params_.r2 : 0.0);
}

bool HypergridEnv::is_mode(const GridState& s) const {
  require_valid(s);
  for (int c : s.coords) {
    if (!in_mode_band(c, side())) return false;
  }
  return true;
}

std::size_t HypergridEnv::mode_count() const {
  std::size_t per_dim = 0;
  for (int x = 0; x < side(); ++x) per_dim += in_mode_band(x, side()) ? 1 : 0;
  std::size_t total = 1;
  for (std::size_t i = 0; i < ndim(); ++i) total *= per_dim;
  return total;
}

std::vector<GridState> HypergridEnv::modes() const {
  std::vector<int> band;
  for (int x = 0; x < side(); ++x) {
    if (in_mode_band(x, side())) band.push_back(x);
  }
  std::vector<GridState> out;
  if (band.empty()) return out;
  std::vector<std::size_t> digit(ndim(), 0);
  while (true) {
    GridState s{std::vector<int>(ndim())};
    for (std::size_t i = 0; i < ndim(); ++i) s.coords[i] = band[digit[i]];
    out.push_back(std::move(s));
    std::size_t i = 0;
    while (i < ndim() && ++digit[i] == band.size()) digit[i++] = 0;
    if (i == ndim()) break;
  }
  return out;
}

std::vector<double> HypergridEnv::encode(const GridState& s) const {
  require_valid(s);
  std::vector<double> out(encoding_width(), 0.0);
  for (std::size_t i = 0; i < ndim(); ++i) out[i * side() + s.coords[i]] = 1.0;
  return out;
}

GridState HypergridEnv::decode(std::span<const double> encoding) const {
  if (encoding.size() != encoding_width()) throw DimensionError("encoding has the wrong width");
  GridState s{std::vector<int>(ndim(), -1)};
  for (std::size_t i = 0; i < ndim(); ++i) {
    for (int x = 0; x < side(); ++x) {
      const double v = encoding[i * side() + x];
      if (v == 1.0 && s.coords[i] < 0) {
        s.coords[i] = x;
      } else if (v != 0.0) {
        throw UsageError("encoding block " + std::to_string(i) + " is not one-hot");
      }
    }
    if (s.coords[i] < 0) throw UsageError("encoding block " + std::to_string(i) + " is empty");
  }
  return s;
}

Tensor HypergridEnv::encode_batch(std::span<const GridState> states) const {
  Tensor out({states.size(), encoding_width()});
  for (std::size_t r = 0; r < states.size(); ++r) {
    require_valid(states[r]);
    for (std::size_t i = 0; i < ndim(); ++i) out.at(r, i * side() + states[r].coords[i]) = 1.0;
  }
  return out;
}

std::size_t HypergridEnv::state_count() const {
  std::size_t total = 1;
  for (std::size_t i = 0; i < ndim(); ++i) {
    total *= static_cast<std::size_t>(side());
    if (total > kMaxEnumerableStates) {
      throw CapacityError("state space " + std::to_string(side()) + "^" + std::to_string(ndim()) +
                          " is too large to enumerate");
    }
  }
  return total;
}

std::size_t HypergridEnv::index_of(const GridState& s) const {
  require_valid(s);
  std::size_t index = 0;
  for (std::size_t i = ndim(); i-- > 0;) index = index * side() + s.coords[i];
  return index;
}

GridState HypergridEnv::state_at(std::size_t index) const {
  GridState s{std::vector<int>(ndim())};
  for (std::size_t i = 0; i < ndim(); ++i) {
    s.coords[i] = static_cast<int>(index % side());
    index /= side();
  }
  if (index != 0) throw UsageError("state index out of range");
  return s;
}

TrueDistribution HypergridEnv::true_distribution() const {
  const std::size_t count = state_count();
  TrueDistribution dist;
  dist.probs.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    dist.probs[k] = reward(state_at(k));
    dist.partition += dist.probs[k];
  }
  for (double& p : dist.probs) p /= dist.partition;
  return dist;
}

void HypergridEnv::check_trajectory(const Trajectory& t) const {
  if (t.states.empty() || t.states.size() != t.actions.size()) {
    throw UsageError("trajectory needs one action per state");
  }
  if (t.states.front() != origin()) throw UsageError("trajectory does not start at the origin");
  for (std::size_t i = 0; i + 1 < t.states.size(); ++i) {
    if (t.actions[i].is_stop()) throw UsageError("stop action before the end of a trajectory");
    const StepResult next = step(t.states[i], t.actions[i]);
    if (std::get<GridState>(next) != t.states[i + 1]) {
      throw UsageError("trajectory states are not linked by their actions");
    }
  }
  if (!t.actions.back().is_stop()) throw UsageError("trajectory does not end with stop");
  if (t.terminal_reward != reward(t.final_state())) {
    throw UsageError("trajectory reward does not match its final state");
  }
}

}  // namespace gfn
