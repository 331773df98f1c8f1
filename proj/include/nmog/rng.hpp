// SPDX-License-Identifier: Apache-2.0
#ifndef NMOG_RNG_HPP
#define NMOG_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace nmog {

// Seeded generator with explicit distribution transforms. The engine is
// mt19937_64 (fully specified by the standard); the transforms are spelled
// out here so draws are identical across standard libraries, which keeps
// seeded outputs portable and bit-stable.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : base_seed_(seed), eng_(seed) {}

  /// Child generator with an independent stream for the given tag.
  Rng substream(std::uint64_t tag) const {
    return Rng(mix(base_seed_, tag));
  }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // avoid log(0)
    while (u1 <= 0.0) u1 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    cached_ = radius * std::sin(angle);
    have_cached_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer in [0, bound), unbiased by rejection. bound >= 1.
  std::uint64_t integer(std::uint64_t bound) {
    const std::uint64_t limit = bound * ((~std::uint64_t{0}) / bound);
    std::uint64_t value = eng_();
    while (value >= limit) value = eng_();
    return value % bound;
  }

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    integer(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  /// Exponential(1) draw.
  double exponential() {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -std::log(u);
  }

  std::uint64_t seed() const noexcept { return base_seed_; }

private:
  // splitmix64-style mixing for substream derivation
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t base_seed_;
  std::mt19937_64 eng_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

} // namespace nmog

#endif
