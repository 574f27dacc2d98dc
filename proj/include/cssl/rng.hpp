// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cssl {

// Identifier recorded in generated metadata. mt19937_64 is fully specified by
// the C++ standard and the uniform/normal conversions below avoid
// implementation-defined std distributions, so streams replay across
// compilers and standard libraries (up to libm rounding in log/sqrt).
inline constexpr const char* kRngId = "mt19937_64/splitmix64-streams/polar-normal-v1";

inline std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : base_(seed) {
    std::uint64_t s = seed;
    engine_.seed(splitmix64(s));
  }

  // Independent child stream; (seed, label) fully determines it.
  Rng derive(std::uint64_t label) const {
    std::uint64_t s = base_ ^ (0x5851f42d4c957f2dULL * (label + 1));
    return Rng(splitmix64(s));
  }

  std::uint64_t next_u64() { return engine_(); }

  // [0, 1) with 53 random bits
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [lo, hi] inclusive, rejection-based and unbiased
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t range = hi - lo + 1;
    if (range == 0) return next_u64();  // full 64-bit span
    const std::uint64_t limit = (UINT64_MAX / range) * range;
    while (true) {
      const std::uint64_t x = next_u64();
      if (x < limit) return lo + x % range;
    }
  }

  // Marsaglia polar method; spare value cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

 private:
  std::uint64_t base_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cssl
