#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace ecvr {

// splitmix64 finalizer; used to derive independent substream seeds from a
// master seed so that, e.g., per-day simulation streams never overlap.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_bytes(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t tag) {
  return splitmix64(master ^ splitmix64(tag));
}

inline std::uint64_t substream_seed(std::uint64_t master, std::string_view tag) {
  return substream_seed(master, hash_bytes(tag));
}

// Deterministic RNG with explicit distribution code. All draws go through
// mt19937_64, whose output sequence is fixed by the standard, so streams are
// reproducible bit-for-bit for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = gen_();
    while (v >= limit) v = gen_();
    return v % n;
  }

  // Strictly positive exponential variate with the given mean.
  double exponential(double mean) {
    for (;;) {
      const double x = -mean * std::log1p(-uniform01());
      if (x > 0.0) return x;
    }
  }

  // Standard normal via Box-Muller; consumes two uniforms per draw.
  double gaussian() {
    for (;;) {
      const double u1 = uniform01();
      const double u2 = uniform01();
      if (u1 <= 0.0) continue;
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ecvr
