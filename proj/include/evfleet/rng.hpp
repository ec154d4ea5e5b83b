#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace evfleet {

// Deterministic RNG wrapper. All distribution transforms are spelled out here
// so that a (seed, config) pair maps to one byte-exact output stream; the
// std:: distribution objects are not pinned across library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // [0, 1)
  double next_double() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // [0, n)
  uint64_t next_below(uint64_t n) {
    // modulo bias is < 2^-40 for any n we use; not worth a rejection loop
    return eng_() % n;
  }

  int next_int(int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(next_below(static_cast<uint64_t>(hi - lo + 1)));
  }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  bool next_bernoulli(double p) { return next_double() < p; }

  double next_gaussian() {
    // Box-Muller, one value per call pair kept simple (no caching)
    double u1 = next_double();
    double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Derive an independent child stream (splitmix64 over the pair).
  static uint64_t derive(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace evfleet
