#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace emgstream {

/// splitmix64 finalizer; full-avalanche 64-bit mix.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic sub-stream seed from a root seed and stream coordinates,
/// e.g. derive_seed(seed, {epoch, window_id, task}). Order-sensitive.
inline uint64_t derive_seed(uint64_t root, std::initializer_list<uint64_t> parts) {
  uint64_t h = mix64(root ^ 0x6d67676f6e656d67ULL);
  for (uint64_t p : parts) h = mix64(h ^ p);
  return h;
}

/// Deterministic RNG. mt19937_64 is fully specified by the standard and the
/// distributions below are hand-rolled, so draw sequences are identical
/// across standard-library implementations and platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, n); exact via rejection sampling.
  uint64_t uniform_int(uint64_t n) {
    if (n <= 1) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller (two uniforms per draw, no caching).
  double normal() {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  /// Poisson via Knuth's product method; fine for the small rates used here.
  int poisson(double lambda) {
    const double l = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > l);
    return k - 1;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace emgstream
