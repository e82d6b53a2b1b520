#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace epgi {

/// Deterministic random generator used throughout the simulation.
///
/// Wraps std::mt19937_64 (whose output sequence is pinned by the standard)
/// and implements every distribution explicitly, so a given seed reproduces
/// the same draw sequence regardless of standard library. Sub-generators
/// for parallel work are derived with split(), never by sharing state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  /// Derived generator for sub-stream `index`; depends only on the parent
  /// seed and the index, not on the order siblings are created or used.
  Rng split(std::uint64_t index) const {
    return Rng(splitmix64(seed_ ^ (0x9E3779B97F4A7C15ULL * (index + 1))));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, n), n > 0. Rejection sampling, unbiased.
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1], safe as a log() argument.
  double uniform_pos() { return 1.0 - uniform(); }

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal() {
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    return r * std::cos(6.283185307179586476925286766559 * uniform());
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  /// Exponential with unit mean.
  double exponential() { return -std::log(uniform_pos()); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Poisson count with the given mean, by counting unit-exponential
  /// arrivals. O(mean).
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::uint64_t n = 0;
    double sum = exponential();
    while (sum <= mean) {
      ++n;
      sum += exponential();
    }
    return n;
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

}  // namespace epgi
