#pragma once

#include <cstdint>
#include <cmath>

namespace apl {

/// Seeded random stream. Every stochastic component in the library draws from
/// one of these so that a run is a pure function of its master seed. The
/// generator is self-contained (splitmix64-seeded xoshiro256++) to keep
/// sequences identical across compilers and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
    cached_normal_valid_ = false;
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t raw() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(raw() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (second value cached).
  double normal() {
    if (cached_normal_valid_) {
      cached_normal_valid_ = false;
      return cached_normal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double theta = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(theta);
    cached_normal_valid_ = true;
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t integer(std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0} / n) * n;
    std::uint64_t x;
    do {
      x = raw();
    } while (x >= limit);
    return x % n;
  }

  /// Independent stream derived from this generator's seed and a stream tag.
  /// Derivation depends only on (seed, tag), not on draws made so far.
  Rng split(std::uint64_t tag) const {
    std::uint64_t x = seed_ ^ (0x9E3779B97F4A7C15ULL * (tag + 1));
    return Rng(splitmix64(x));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t state_[4];
  double cached_normal_ = 0.0;
  bool cached_normal_valid_ = false;
};

}  // namespace apl
