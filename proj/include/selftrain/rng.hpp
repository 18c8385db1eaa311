#pragma once

#include <cstdint>
#include <cstddef>
#include <cmath>
#include <numbers>
#include <vector>

namespace selftrain {

/// Deterministic random stream based on splitmix64. We roll our own instead
/// of using <random> distributions so that seeded runs produce identical
/// streams across standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  /// Standard normal via Box-Muller (two uniforms per draw, no cached spare).
  double normal() {
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Poisson by inversion; fine for the small means used here.
  int poisson(double mean) {
    const double limit = std::exp(-mean);
    double product = uniform();
    int count = 0;
    while (product > limit) {
      product *= uniform();
      ++count;
    }
    return count;
  }

  /// Geometric run length >= 1 with mean `mean` (mean < 1 collapses to 1).
  int geometric_length(double mean) {
    if (mean <= 1.0) return 1;
    const double p = 1.0 / mean;  // stop probability per step
    int length = 1;
    while (uniform() >= p) ++length;
    return length;
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

  /// Derive an independent stream from the construction seed and a stream id.
  /// Forking does not depend on how many draws were consumed.
  Rng fork(std::uint64_t stream_id) const {
    Rng mixer(seed_ ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1)));
    return Rng(mixer.next_u64());
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace selftrain
