// SPDX-License-Identifier: Apache-2.0
#include "condsub/gf2.hpp"

#include <array>
#include <mutex>
#include <stdexcept>
#include <vector>

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#include <wmmintrin.h>
#define CONDSUB_X86 1
#endif

namespace condsub {

namespace {

using U128 = unsigned __int128;

U128 clmul64_portable(std::uint64_t a, std::uint64_t b) {
  // 4-bit windowed shift-and-xor.
  U128 table[16];
  table[0] = 0;
  table[1] = a;
  for (int i = 2; i < 16; i += 2) {
    table[i] = table[i / 2] << 1;
    table[i + 1] = table[i] ^ a;
  }
  U128 acc = 0;
  for (int shift = 60; shift >= 0; shift -= 4) {
    acc = (acc << 4) ^ table[(b >> shift) & 0xF];
  }
  return acc;
}

#ifdef CONDSUB_X86
__attribute__((target("pclmul,sse4.1")))
U128 clmul64_hw(std::uint64_t a, std::uint64_t b) {
  __m128i va = _mm_set_epi64x(0, static_cast<long long>(a));
  __m128i vb = _mm_set_epi64x(0, static_cast<long long>(b));
  __m128i prod = _mm_clmulepi64_si128(va, vb, 0x00);
  alignas(16) std::uint64_t out[2];
  _mm_store_si128(reinterpret_cast<__m128i*>(out), prod);
  return (U128(out[1]) << 64) | out[0];
}

bool detect_pclmul() { return __builtin_cpu_supports("pclmul"); }
#endif

const bool g_has_clmul =
#ifdef CONDSUB_X86
    detect_pclmul();
#else
    false;
#endif

// Degree of a nonzero polynomial in a 128-bit register.
int poly_degree(U128 v) {
  int d = -1;
  while (v) { v >>= 1; ++d; }
  return d;
}

U128 poly_mod(U128 v, U128 p, int pdeg) {
  int d = poly_degree(v);
  while (d >= pdeg) {
    v ^= p << (d - pdeg);
    d = poly_degree(v);
  }
  return v;
}

U128 poly_mulmod(U128 a, U128 b, U128 p, int pdeg) {
  // pdeg <= 64 so operands fit 64 bits after reduction.
  U128 prod = clmul64(static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(b));
  return poly_mod(prod, p, pdeg);
}

U128 poly_gcd(U128 a, U128 b) {
  while (b) {
    int db = poly_degree(b);
    a = poly_mod(a, b, db);
    U128 t = a; a = b; b = t;
  }
  return a;
}

std::vector<int> prime_divisors(int n) {
  std::vector<int> out;
  for (int p = 2; p * p <= n; ++p) {
    if (n % p == 0) {
      out.push_back(p);
      while (n % p == 0) n /= p;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

}  // namespace

U128 clmul64(std::uint64_t a, std::uint64_t b) {
#ifdef CONDSUB_X86
  if (g_has_clmul) return clmul64_hw(a, b);
#endif
  return clmul64_portable(a, b);
}

bool gf2_poly_irreducible(std::uint64_t low_bits, int deg) {
  if (deg < 1 || deg > 64) return false;
  if ((low_bits & 1) == 0) return false;  // x divides it otherwise
  U128 p = (U128(1) << deg) | low_bits;
  // x^(2^deg) == x mod p, and x^(2^(deg/q)) != x for every prime q | deg.
  U128 x = 2;
  U128 t = x;
  for (int i = 0; i < deg; ++i) t = poly_mulmod(t, t, p, deg);
  if (t != x) return false;
  for (int q : prime_divisors(deg)) {
    U128 u = x;
    for (int i = 0; i < deg / q; ++i) u = poly_mulmod(u, u, p, deg);
    if (poly_gcd(u ^ x, p) != 1) return false;
  }
  return true;
}

Gf2Field::Gf2Field(int deg) : deg_(deg) {
  if (deg < 2 || deg > 64) throw std::invalid_argument("Gf2Field: degree out of range");
  std::uint64_t low = 1;
  for (;; low += 2) {
    if (gf2_poly_irreducible(low, deg)) break;
    if (low > (std::uint64_t(1) << (deg < 63 ? deg : 63)))
      throw std::logic_error("Gf2Field: no irreducible polynomial found");
  }
  poly_ = low;
  mask_ = deg == 64 ? ~std::uint64_t(0) : ((std::uint64_t(1) << deg) - 1);
}

std::uint64_t Gf2Field::mul(std::uint64_t a, std::uint64_t b) const {
  U128 z = clmul64(a, b);
  // x^deg == poly_ (mod modulus); fold the high part down until it vanishes.
  std::uint64_t lo = static_cast<std::uint64_t>(z) & mask_;
  U128 hi = z >> deg_;
  while (hi) {
    U128 f = clmul64(static_cast<std::uint64_t>(hi), poly_);
    lo ^= static_cast<std::uint64_t>(f) & mask_;
    hi = f >> deg_;
  }
  return lo;
}

const Gf2Field& Gf2Field::get(int deg) {
  static std::mutex mu;
  static std::array<const Gf2Field*, 65> cache{};
  if (deg < 2 || deg > 64) throw std::invalid_argument("Gf2Field: degree out of range");
  std::lock_guard<std::mutex> lock(mu);
  if (!cache[static_cast<std::size_t>(deg)])
    cache[static_cast<std::size_t>(deg)] = new Gf2Field(deg);
  return *cache[static_cast<std::size_t>(deg)];
}

}  // namespace condsub
