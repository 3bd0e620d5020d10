#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gfn/hypergrid.hpp"
#include "gfn/rng.hpp"

namespace gfn {

enum class ReplayRegime {
  None,    // training on online samples only
  Random,  // FIFO storage, uniform sampling
  Rprs,    // keep the highest-reward trajectories, sample proportional to reward
};

std::string to_string(ReplayRegime regime);
ReplayRegime parse_regime(const std::string& name);

struct BufferStats {
  std::size_t size = 0;
  // Empty when the buffer is empty.
  std::optional<double> min_reward;
  std::optional<double> max_reward;
  std::optional<double> mean_reward;
};

/// Bounded store of whole trajectories.
///
/// Random regime evicts in insertion order. R-PRS, when full, replaces the
/// lowest-reward entry if the newcomer has strictly higher reward; among
/// equal minima the newest entry is the one evicted.
class ReplayBuffer {
 public:
  struct Entry {
    Trajectory trajectory;
    double reward;
    std::uint64_t insertion;
  };

  ReplayBuffer(ReplayRegime regime, std::size_t capacity);

  ReplayRegime regime() const { return regime_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Returns whether the trajectory was stored.
  bool insert(const Trajectory& traj);

  /// min(count, size()) distinct entries. Random: uniform; R-PRS: successive
  /// draws proportional to reward among the entries not yet drawn.
  std::vector<Trajectory> sample(std::size_t count, Rng& rng) const;
  /// As sample(), returning entry positions instead of copies.
  std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;

  BufferStats stats() const;

 private:
  ReplayRegime regime_;
  std::size_t capacity_;
  std::vector<Entry> entries_;
  std::size_t fifo_head_ = 0;  // oldest slot once the random buffer is full
  std::uint64_t next_insertion_ = 0;
};

}  // namespace gfn
