#pragma once

#include <cmath>
#include <cstdint>

// Deterministic RNG streams.  Every consumer derives its own stream from a
// master seed plus integer coordinates (trial index, chunk address, ...) via
// splitmix64 mixing, so results never depend on scheduling order.

namespace hwalk {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Order-sensitive hash combine built on splitmix64.
inline uint64_t mix64(uint64_t a, uint64_t b) {
  uint64_t s = a + 0x632be59bd9b4e019ULL;
  uint64_t h = splitmix64(s);
  s = h ^ b;
  return splitmix64(s);
}

// xoshiro256** core; seeded through splitmix64 so any 64-bit value works.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t s = seed;
    for (auto& w : s_) w = splitmix64(s);
  }

  uint64_t next() {
    uint64_t r = rotl(s_[1] * 5, 7) * 9;
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return r;
  }

  // Uniform in [0, 1) with 53 random bits.
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) {
    // Lemire-style rejection keeps the draw exactly uniform.
    uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    uint64_t lo = static_cast<uint64_t>(m);
    if (lo < n) {
      uint64_t thr = (0 - n) % n;
      while (lo < thr) {
        x = next();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
};

// Poisson draw by Knuth's product-of-uniforms inversion; for large means the
// mean is halved recursively (sum of independent Poissons), which stays exact
// and keeps the product above the underflow threshold.
inline uint64_t poisson(Rng& rng, double mean) {
  uint64_t total = 0;
  while (mean > 30.0) {
    double half = 0.5 * mean;
    total += poisson(rng, half);
    mean -= half;
  }
  double limit = std::exp(-mean);
  double prod = rng.u01();
  uint64_t k = 0;
  while (prod > limit) {
    ++k;
    prod *= rng.u01();
  }
  return total + k;
}

}  // namespace hwalk
