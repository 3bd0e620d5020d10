#include <algorithm>
#include <functional>
#include <set>

#include "doctest.h"
#include "gfn/errors.hpp"
#include "gfn/replay_buffer.hpp"

using namespace gfn;

namespace {

Trajectory with_reward(double r) {
  return Trajectory{{GridState{{0}}}, {Action::stop()}, r};
}

std::multiset<double> stored(const ReplayBuffer& b) {
  std::multiset<double> out;
  for (const auto& e : b.entries()) out.insert(e.reward);
  return out;
}

}  // namespace

TEST_CASE("R-PRS keeps the highest rewards") {
  ReplayBuffer b(ReplayRegime::Rprs, 2);
  CHECK(b.insert(with_reward(1.0)));
  CHECK(b.insert(with_reward(2.0)));
  CHECK_FALSE(b.insert(with_reward(0.5)));
  CHECK(stored(b) == std::multiset<double>{1.0, 2.0});
  CHECK(b.insert(with_reward(1.5)));
  CHECK(stored(b) == std::multiset<double>{1.5, 2.0});
  // A tie with the minimum keeps the incumbent.
  CHECK_FALSE(b.insert(with_reward(1.5)));
}

TEST_CASE("R-PRS evicts the newest among equal minima") {
  ReplayBuffer b(ReplayRegime::Rprs, 3);
  b.insert(with_reward(1.0));
  b.insert(with_reward(3.0));
  b.insert(with_reward(1.0));
  b.insert(with_reward(2.0));
  std::vector<std::uint64_t> ids;
  for (const auto& e : b.entries()) ids.push_back(e.insertion);
  std::sort(ids.begin(), ids.end());
  CHECK(ids == std::vector<std::uint64_t>{0, 1, 3});
}

TEST_CASE("regime none stores nothing and cannot be sampled") {
  ReplayBuffer b(ReplayRegime::None, 0);
  Rng rng(1);
  for (int i = 0; i < 5; ++i) CHECK_FALSE(b.insert(with_reward(1.0 + i)));
  CHECK(b.empty());
  CHECK_THROWS_AS(b.sample(1, rng), UsageError);
  ReplayBuffer empty(ReplayRegime::Random, 4);
  CHECK_THROWS_AS(empty.sample(1, rng), UsageError);
  CHECK_THROWS_AS(ReplayBuffer(ReplayRegime::Rprs, 0), ConfigError);
}

TEST_CASE("random regime evicts first in, first out") {
  ReplayBuffer b(ReplayRegime::Random, 3);
  for (int i = 0; i < 7; ++i) CHECK(b.insert(with_reward(1.0 + i)));
  CHECK(stored(b) == std::multiset<double>{5.0, 6.0, 7.0});
  std::uint64_t lowest = ~0ULL;
  for (const auto& e : b.entries()) lowest = std::min(lowest, e.insertion);
  CHECK(lowest == 4);
}

TEST_CASE("first-draw frequencies") {
  constexpr int kTrials = 100000;
  auto first_draw = [&](ReplayRegime regime) {
    ReplayBuffer b(regime, 3);
    b.insert(with_reward(2.0));
    b.insert(with_reward(1.0));
    b.insert(with_reward(1.0));
    Rng rng(2024);
    std::vector<double> freq(3, 0.0);
    for (int t = 0; t < kTrials; ++t) freq[b.sample_indices(1, rng)[0]] += 1.0 / kTrials;
    return freq;
  };
  const auto prs = first_draw(ReplayRegime::Rprs);
  CHECK(std::abs(prs[0] - 0.5) < 0.01);
  CHECK(std::abs(prs[1] - 0.25) < 0.01);
  CHECK(std::abs(prs[2] - 0.25) < 0.01);
  for (double f : first_draw(ReplayRegime::Random)) CHECK(std::abs(f - 1.0 / 3.0) < 0.01);
}

TEST_CASE("asking for more than stored returns everything once") {
  for (ReplayRegime regime : {ReplayRegime::Random, ReplayRegime::Rprs}) {
    ReplayBuffer b(regime, 10);
    for (int i = 0; i < 4; ++i) b.insert(with_reward(1.0 + i));
    Rng rng(3);
    auto idx = b.sample_indices(16, rng);
    std::sort(idx.begin(), idx.end());
    CHECK(idx == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(b.sample(16, rng).size() == 4);
  }
}

TEST_CASE("stats") {
  ReplayBuffer b(ReplayRegime::Random, 100);
  CHECK(b.stats().size == 0);
  CHECK_FALSE(b.stats().mean_reward.has_value());
  b.insert(with_reward(1.0));
  b.insert(with_reward(2.0));
  const BufferStats s = b.stats();
  CHECK(s.size == 2);
  CHECK(*s.mean_reward == 1.5);
  CHECK(*s.min_reward == 1.0);
  CHECK(*s.max_reward == 2.0);
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) b.insert(with_reward(rng.uniform(0.1, 3.0)));
  CHECK(b.stats().size == 100);
}

TEST_CASE("property: capacity, monotone minimum and top-k content") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const std::size_t capacity = 1 + rng.index(60);
    ReplayBuffer prs(ReplayRegime::Rprs, capacity);
    ReplayBuffer fifo(ReplayRegime::Random, capacity);
    std::vector<double> seen;
    double last_min = -1.0;
    for (int i = 0; i < 10000; ++i) {
      // Coarse values so ties are common.
      const double r = 0.001 + 0.25 * static_cast<double>(rng.index(40));
      prs.insert(with_reward(r));
      fifo.insert(with_reward(r));
      seen.push_back(r);
      CHECK(prs.size() <= capacity);
      CHECK(fifo.size() <= capacity);
      if (prs.size() == capacity) {
        const double m = *prs.stats().min_reward;
        CHECK(m >= last_min);
        last_min = m;
      }
    }
    std::vector<double> top = seen;
    std::sort(top.begin(), top.end(), std::greater<>());
    top.resize(capacity);
    CHECK(stored(prs) == std::multiset<double>(top.begin(), top.end()));
    CHECK(stored(fifo) == std::multiset<double>(seen.end() - static_cast<std::ptrdiff_t>(capacity), seen.end()));
  }
}

TEST_CASE("property: no duplicate entries within one sample call") {
  Rng rng(99);
  for (ReplayRegime regime : {ReplayRegime::Random, ReplayRegime::Rprs}) {
    ReplayBuffer b(regime, 50);
    for (int i = 0; i < 50; ++i) b.insert(with_reward(rng.uniform(0.01, 2.5)));
    for (int trial = 0; trial < 200; ++trial) {
      const auto idx = b.sample_indices(1 + rng.index(50), rng);
      CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == idx.size());
    }
  }
}

TEST_CASE("regime names") {
  CHECK(parse_regime("rprs") == ReplayRegime::Rprs);
  CHECK(to_string(ReplayRegime::Random) == "random");
  CHECK_THROWS_AS(parse_regime("per"), ConfigError);
}
