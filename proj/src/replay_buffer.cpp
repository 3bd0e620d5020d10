#include "gfn/replay_buffer.hpp"

#include <algorithm>
#include <numeric>

#include "gfn/errors.hpp"

namespace gfn {

std::string to_string(ReplayRegime regime) {
  switch (regime) {
    case ReplayRegime::None:
      return "none";
    case ReplayRegime::Random:
      return "random";
    case ReplayRegime::Rprs:
      return "rprs";
  }
  return "unknown";
}

ReplayRegime parse_regime(const std::string& name) {
  if (name == "none") return ReplayRegime::None;
  if (name == "random") return ReplayRegime::Random;
  if (name == "rprs") return ReplayRegime::Rprs;
  throw ConfigError("unknown replay regime '" + name + "' (expected none, random or rprs)");
}

ReplayBuffer::ReplayBuffer(ReplayRegime regime, std::size_t capacity) : regime_(regime), capacity_(capacity) {
  if (regime_ != ReplayRegime::None && capacity_ == 0) throw ConfigError("replay buffer capacity must be at least 1");
}

bool ReplayBuffer::insert(const Trajectory& traj) {
  const double reward = traj.terminal_reward;
  switch (regime_) {
    case ReplayRegime::None:
      return false;
    case ReplayRegime::Random:
      if (entries_.size() < capacity_) {
        entries_.push_back({traj, reward, next_insertion_++});
      } else {
        entries_[fifo_head_] = {traj, reward, next_insertion_++};
        fifo_head_ = (fifo_head_ + 1) % capacity_;
      }
      return true;
    case ReplayRegime::Rprs: {
      if (entries_.size() < capacity_) {
        entries_.push_back({traj, reward, next_insertion_++});
        return true;
      }
      auto victim = std::min_element(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
        if (a.reward != b.reward) return a.reward < b.reward;
        return a.insertion > b.insertion;
      });
      if (!(reward > victim->reward)) return false;
      *victim = {traj, reward, next_insertion_++};
      return true;
    }
  }
  return false;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count, Rng& rng) const {
  if (regime_ == ReplayRegime::None) throw UsageError("cannot sample from a buffer with regime none");
  if (entries_.empty()) throw UsageError("cannot sample from an empty replay buffer");
  const std::size_t m = std::min(count, entries_.size());

  std::vector<std::size_t> pool(entries_.size());
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::vector<std::size_t> picked;
  picked.reserve(m);

  if (regime_ == ReplayRegime::Random) {
    // Partial Fisher-Yates.
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t j = k + rng.index(pool.size() - k);
      std::swap(pool[k], pool[j]);
      picked.push_back(pool[k]);
    }
    return picked;
  }

  std::vector<double> weights(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) weights[i] = entries_[i].reward;
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t j = rng.categorical(weights);
    picked.push_back(j);
    weights[j] = 0.0;
  }
  return picked;
}

std::vector<Trajectory> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
  std::vector<Trajectory> out;
  for (std::size_t i : sample_indices(count, rng)) out.push_back(entries_[i].trajectory);
  return out;
}

BufferStats ReplayBuffer::stats() const {
  BufferStats s;
  s.size = entries_.size();
  if (entries_.empty()) return s;
  double lo = entries_.front().reward;
  double hi = lo;
  double sum = 0.0;
  for (const Entry& e : entries_) {
    lo = std::min(lo, e.reward);
    hi = std::max(hi, e.reward);
    sum += e.reward;
  }
  s.min_reward = lo;
  s.max_reward = hi;
  s.mean_reward = sum / static_cast<double>(entries_.size());
  return s;
}

}  // namespace gfn
