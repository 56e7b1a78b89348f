// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace condsub {

using BigInt = boost::multiprecision::cpp_int;
using Uint256 = boost::multiprecision::uint256_t;

/// Exact rational with 64-bit parts, always reduced, denominator positive.
/// Parameters like eps enter the estimators through this type so that all
/// derived integer thresholds are reproducible across platforms.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Ratio() = default;
  Ratio(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("Ratio: zero denominator");
    if (den < 0) { num = -num; den = -den; }
    std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) { num /= g; den /= g; }
  }

  /// Nearest rational with denominator max_den. CLI doubles like 0.1 snap to
  /// the exact decimal they were typed as.
  static Ratio snap(double v, std::int64_t max_den = 1'000'000) {
    double scaled = v * static_cast<double>(max_den);
    auto n = static_cast<std::int64_t>(std::llround(scaled));
    return Ratio(n, max_den);
  }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  Ratio operator+(const Ratio& o) const { return Ratio(num * o.den + o.num * den, den * o.den); }
  Ratio operator*(const Ratio& o) const { return Ratio(num * o.num, den * o.den); }
  Ratio operator/(const Ratio& o) const {
    if (o.num == 0) throw std::invalid_argument("Ratio: division by zero");
    return Ratio(num * o.den, den * o.num);
  }
  bool operator==(const Ratio& o) const { return num == o.num && den == o.den; }
  bool positive() const { return num > 0; }
};

inline BigInt ipow(BigInt base, unsigned exp) {
  BigInt r = 1;
  while (exp) {
    if (exp & 1u) r *= base;
    base *= base;
    exp >>= 1u;
  }
  return r;
}

/// floor(a * r.num^i / r.den^i), exact. Caller guarantees the result fits.
inline std::int64_t floor_mul_pow(std::int64_t a, const Ratio& r, unsigned i) {
  BigInt v = BigInt(a) * ipow(BigInt(r.num), i) / ipow(BigInt(r.den), i);
  if (v > std::numeric_limits<std::int64_t>::max() || v < 0)
    throw std::overflow_error("floor_mul_pow: result out of range");
  return static_cast<std::int64_t>(v);
}

/// floor(2^k / r), exact; r > 0. Result must fit 256 bits.
inline Uint256 floor_pow2_div(unsigned k, const Ratio& r) {
  if (!r.positive()) throw std::invalid_argument("floor_pow2_div: nonpositive ratio");
  BigInt v = (BigInt(1) << k) * r.den / r.num;
  if (v >= (BigInt(1) << 256)) throw std::overflow_error("floor_pow2_div: too wide");
  return Uint256(v);
}

}  // namespace condsub
