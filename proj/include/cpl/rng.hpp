#pragma once

#include <cstdint>

namespace cpl {

/// SplitMix64 (Steele, Lea, Flood 2014): 64-bit state, splittable, and
/// fully specified, so seeded runs replay bit-for-bit on every platform.
/// Bounded draws use rejection sampling rather than <random>
/// distributions, whose output is implementation-defined.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Independent generator seeded from this one.
  SplitMix64 split() { return SplitMix64(next()); }

  /// Uniform in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  /// True with probability p.
  bool chance(double p) { return static_cast<double>(next() >> 11) * 0x1.0p-53 < p; }

 private:
  std::uint64_t state_;
};

/// The i-th child seed of `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t i) {
  SplitMix64 g(seed ^ (0xD1B54A32D192ED03ULL * (i + 1)));
  return g.next();
}

}  // namespace cpl
