#pragma once

#include <cmath>
#include <cstdint>

namespace piezoq {

// Counter-based random stream. Each draw hashes (key, counter) with the
// splitmix64 finalizer, so independent streams can be derived per grid point
// from (seed, i, j) and results do not depend on evaluation order.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0)
      : key_(mix(mix(mix(seed ^ 0x2545f4914f6cdd1dULL) + a) + b)) {}

  SeedStream fork(std::uint64_t a, std::uint64_t b = 0) const {
    SeedStream s(0);
    s.key_ = mix(mix(key_ + a) + b);
    s.counter_ = 0;
    return s;
  }

  std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi_ * u2);
  }

  double lognormal(double sigma) { return std::exp(sigma * normal()); }

  /// Number of successes in n Bernoulli(p) trials.
  long binomial(long n, double p) {
    long k = 0;
    for (long i = 0; i < n; ++i) {
      if (uniform() < p) ++k;
    }
    return k;
  }

 private:
  static constexpr double two_pi_ = 6.283185307179586476925286766559;

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace piezoq
