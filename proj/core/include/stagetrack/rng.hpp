#pragma once

#include <array>
#include <cstdint>

namespace stagetrack {

/// xoshiro256** seeded through SplitMix64. Distribution helpers are written
/// out here rather than taken from <random> so a seed reproduces the same
/// draws on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller; consumes two uniforms per call.
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }
  /// Exponential with the given mean (inverse CDF, one uniform).
  double exponential(double mean);

 private:
  std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace stagetrack
