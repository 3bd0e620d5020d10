#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "doctest.h"
#include "gfn/errors.hpp"
#include "gfn/hypergrid.hpp"

using namespace gfn;

namespace {

HypergridEnv grid(std::size_t n, int h, double r0 = 1e-3) { return HypergridEnv(RewardParams{r0, 0.5, 2.0, h, n}); }

GridState at(std::vector<int> c) { return GridState{std::move(c)}; }

// Reward formula evaluated literally in floating point, for comparison with
// the integer-band implementation on grids where x/H is exact.
double literal_reward(const GridState& s, double r0, int h) {
  bool a = true, b = true;
  for (int c : s.coords) {
    const double d = std::abs(static_cast<double>(c) / h - 0.5);
    a = a && (0.25 < d);
    b = b && (0.3 < d && d < 0.4);
  }
  return r0 + 0.5 * (a ? 1.0 : 0.0) + 2.0 * (b ? 1.0 : 0.0);
}

}  // namespace

TEST_CASE("allowed actions at boundary and origin") {
  const HypergridEnv env = grid(2, 8);
  CHECK(env.allowed_actions(at({7, 7})) == std::vector<Action>{Action::stop()});
  CHECK(env.allowed_actions(at({0, 0})) ==
        std::vector<Action>{Action::increment(0), Action::increment(1), Action::stop()});
  std::size_t both = 0;
  for (std::size_t k = 0; k < env.state_count(); ++k) {
    const auto actions = env.allowed_actions(env.state_at(k));
    CHECK(actions.back().is_stop());
    if (actions.size() == 3) ++both;
  }
  CHECK(both == 49);
}

TEST_CASE("step increments, stops and rejects illegal moves") {
  const HypergridEnv env = grid(2, 8);
  CHECK(std::get<GridState>(env.step(at({3, 0}), Action::increment(1))) == at({3, 1}));
  CHECK(std::get<Terminal>(env.step(at({3, 0}), Action::stop())).state == at({3, 0}));
  CHECK_THROWS_AS(env.step(at({7, 2}), Action::increment(0)), IllegalMoveError);
  CHECK_THROWS_AS(env.step(at({1, 2}), Action::increment(5)), IllegalMoveError);
}

TEST_CASE("parents decrement each nonzero coordinate") {
  const HypergridEnv env = grid(2, 8);
  CHECK(env.parents(at({0, 0})).empty());
  const auto p = env.parents(at({1, 1}));
  REQUIRE(p.size() == 2);
  CHECK(p[0].first == at({0, 1}));
  CHECK(p[0].second == Action::increment(0));
  CHECK(p[1].first == at({1, 0}));
  CHECK(p[1].second == Action::increment(1));

  const HypergridEnv small = grid(2, 4);
  for (std::size_t k = 0; k < small.state_count(); ++k) {
    const GridState s = small.state_at(k);
    const auto nonzero = static_cast<std::size_t>(std::count_if(s.coords.begin(), s.coords.end(), [](int c) { return c > 0; }));
    CHECK(small.parents(s).size() == nonzero);
    for (const auto& [parent, action] : small.parents(s)) {
      CHECK(std::get<GridState>(small.step(parent, action)) == s);
      CHECK(small.index_of(parent) < small.index_of(s));
    }
  }
}

TEST_CASE("reward plateaus") {
  const HypergridEnv env = grid(2, 8);
  CHECK(env.reward(at({1, 7})) == doctest::Approx(2.501).epsilon(1e-15));
  CHECK(env.reward(at({0, 0})) == doctest::Approx(0.501).epsilon(1e-15));
  CHECK(env.reward(at({3, 3})) == doctest::Approx(0.001).epsilon(1e-15));
  for (std::size_t k = 0; k < env.state_count(); ++k) {
    const GridState s = env.state_at(k);
    CHECK(env.reward(s) == literal_reward(s, 1e-3, 8));
    CHECK(env.reward(s) >= 1e-3);
  }
}

TEST_CASE("reward parameters are validated") {
  CHECK_THROWS_AS(HypergridEnv(RewardParams{0.0, 0.5, 2.0, 8, 2}), ConfigError);
  CHECK_THROWS_AS(HypergridEnv(RewardParams{0.6, 0.5, 2.0, 8, 2}), ConfigError);
  CHECK_THROWS_AS(HypergridEnv(RewardParams{0.1, 2.0, 2.0, 8, 2}), ConfigError);
}

TEST_CASE("mode band and mode counts") {
  std::vector<int> band;
  for (int x = 0; x < 8; ++x) {
    const double d = std::abs(x / 8.0 - 0.5);
    if (0.3 < d && d < 0.4) band.push_back(x);
    CHECK(in_mode_band(x, 8) == (0.3 < d && d < 0.4));
  }
  CHECK(band == std::vector<int>{1, 7});
  CHECK(grid(2, 8).mode_count() == 4);
  CHECK(grid(4, 8).mode_count() == 16);
  CHECK(grid(6, 8).mode_count() == 64);
  CHECK(grid(4, 8).modes().size() == 16);
  const HypergridEnv env = grid(4, 8);
  CHECK(env.is_mode(at({1, 7, 1, 7})));
  CHECK_FALSE(env.is_mode(at({0, 0, 0, 0})));
  std::size_t scanned = 0;
  for (std::size_t k = 0; k < env.state_count(); ++k) scanned += env.is_mode(env.state_at(k)) ? 1 : 0;
  CHECK(scanned == 16);
}

TEST_CASE("one-hot encoding") {
  const HypergridEnv env = grid(2, 4);
  CHECK(env.encode(at({0, 3})) == std::vector<double>{1, 0, 0, 0, 0, 0, 0, 1});
  for (std::size_t k = 0; k < env.state_count(); ++k) {
    const GridState s = env.state_at(k);
    const auto e = env.encode(s);
    double sum = 0.0;
    for (double v : e) sum += v;
    CHECK(sum == 2.0);
    CHECK(env.decode(e) == s);
  }
  CHECK_THROWS_AS(env.decode(std::vector<double>(8, 0.0)), UsageError);
  const Tensor batch = env.encode_batch(std::vector<GridState>{at({0, 3}), at({2, 1})});
  CHECK(batch.shape() == Shape{2, 8});
  CHECK(batch.at(1, 2) == 1.0);
  CHECK(batch.at(1, 5) == 1.0);
}

TEST_CASE("true distribution by enumeration") {
  const TrueDistribution d = grid(2, 8).true_distribution();
  CHECK(d.partition == doctest::Approx(64 * 0.001 + 9 * 0.5 + 4 * 2.0).epsilon(1e-14));
  double sum = 0.0;
  for (double p : d.probs) {
    CHECK(p > 0.0);
    sum += p;
  }
  CHECK(std::abs(sum - 1.0) < 1e-12);

  const TrueDistribution one = grid(1, 8, 1e-2).true_distribution();
  CHECK(one.partition == doctest::Approx(8 * 0.01 + 3 * 0.5 + 2 * 2.0).epsilon(1e-14));

  CHECK_THROWS_AS(grid(8, 8).true_distribution(), CapacityError);
}

TEST_CASE("path counts match the multinomial coefficient") {
  const HypergridEnv env = grid(2, 4);
  // Count increment paths from the origin by depth-first enumeration.
  std::map<GridState, std::size_t> paths;
  std::function<void(const GridState&, std::size_t)> walk = [&](const GridState& s, std::size_t depth) {
    paths[s] += 1;
    CHECK(depth == static_cast<std::size_t>(s.coordinate_sum()));
    for (const Action& a : env.allowed_actions(s)) {
      if (!a.is_stop()) walk(std::get<GridState>(env.step(s, a)), depth + 1);
    }
  };
  walk(env.origin(), 0);
  REQUIRE(paths.size() == 16);
  auto factorial = [](int k) {
    std::size_t f = 1;
    for (int i = 2; i <= k; ++i) f *= static_cast<std::size_t>(i);
    return f;
  };
  for (const auto& [s, count] : paths) {
    std::size_t denom = 1;
    for (int c : s.coords) denom *= factorial(c);
    CHECK(count == factorial(s.coordinate_sum()) / denom);
  }
}

TEST_CASE("trajectory invariants are checked") {
  const HypergridEnv env = grid(2, 4);
  Trajectory t;
  t.states = {at({0, 0}), at({1, 0}), at({1, 1})};
  t.actions = {Action::increment(0), Action::increment(1), Action::stop()};
  t.terminal_reward = env.reward(at({1, 1}));
  CHECK_NOTHROW(env.check_trajectory(t));
  CHECK(t.length() == static_cast<std::size_t>(t.final_state().coordinate_sum()) + 1);
  Trajectory bad = t;
  bad.actions[1] = Action::increment(0);
  CHECK_THROWS_AS(env.check_trajectory(bad), UsageError);
  bad = t;
  bad.terminal_reward = 1.0;
  CHECK_THROWS_AS(env.check_trajectory(bad), UsageError);
}

TEST_CASE("custom reward replaces the plateau formula") {
  const HypergridEnv env(RewardParams{1e-3, 0.5, 2.0, 2, 1}, [](const GridState& s) { return s.coords[0] == 0 ? 0.501 : 2.501; });
  CHECK(env.reward(at({0})) == 0.501);
  CHECK(env.reward(at({1})) == 2.501);
  CHECK(env.true_distribution().partition == doctest::Approx(3.002));
}
