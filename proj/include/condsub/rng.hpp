// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace condsub {

/// Counter-based random stream. Forking gives an independent stream, so
/// experiment trials are reproducible regardless of thread scheduling.
struct StreamRng {
  std::uint64_t key = 0;
  std::uint64_t ctr = 0;

  explicit StreamRng(std::uint64_t k = 0) : key(k) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() { return mix(key + 0x9E3779B97F4A7C15ULL * ++ctr); }

  StreamRng fork(std::uint64_t label) const {
    return StreamRng(mix(key ^ mix(label ^ 0xD1B54A32D192ED03ULL)));
  }

  /// Unbiased draw from [0, n).
  std::uint64_t bounded(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t lim = std::uint64_t(-1) - std::uint64_t(-1) % n;
    std::uint64_t v;
    do { v = next(); } while (v >= lim);
    return v % n;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

}  // namespace condsub
