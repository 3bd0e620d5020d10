#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace gfn {

/// Seeded 64-bit Mersenne Twister with platform-independent conversions.
///
/// The standard distributions are implementation-defined; these helpers are
/// not, so a (config, seed) pair yields the same draws on every toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Requires n > 0.
  std::size_t index(std::size_t n);

  /// Draws i with probability weights[i] / sum(weights). Weights must be
  /// non-negative with a positive sum.
  std::size_t categorical(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
};

}  // namespace gfn
