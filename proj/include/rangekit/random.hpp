// SPDX-License-Identifier: Apache-2.0

#ifndef RANGEKIT_RANDOM_HPP
#define RANGEKIT_RANDOM_HPP

#include <cmath>
#include <cstdint>

#include "rangekit/core.hpp"

namespace rangekit {

// Deterministic random source (splitmix64). The standard <random>
// distributions are not reproducible across implementations, so every
// stochastic operation in the library draws from this instead. Draw order
// is part of each operation's contract.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  // Uniform integer in [lo, hi); hi must be > lo. Modulo bias is far below
  // anything these spans can expose.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) throw Error("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo);
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  // Basic Box-Muller; two uniforms per draw, no caching, so the consumed
  // stream length is a fixed function of the call count.
  double normal(double mean, double stddev) {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return mean + stddev * r * std::cos(2.0 * kPi * u2);
  }

private:
  std::uint64_t state_;
};

}  // namespace rangekit

#endif  // RANGEKIT_RANDOM_HPP
