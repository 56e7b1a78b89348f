// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace condsub {

/// Arithmetic in GF(2^deg) for 2 <= deg <= 64. The modulus is the
/// lexicographically smallest irreducible polynomial of that degree, found
/// once at startup and cached, so two builds always agree on the field.
class Gf2Field {
 public:
  static const Gf2Field& get(int deg);

  int degree() const { return deg_; }
  std::uint64_t modulus_low_bits() const { return poly_; }
  std::uint64_t mask() const { return mask_; }

  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const;

  /// Affine map a*x + b over the field.
  std::uint64_t affine(std::uint64_t a, std::uint64_t b, std::uint64_t x) const {
    return mul(a, x) ^ b;
  }

 private:
  explicit Gf2Field(int deg);
  int deg_;
  std::uint64_t poly_;  // modulus minus its leading x^deg term
  std::uint64_t mask_;
};

/// Carry-less 64x64 -> 128 bit polynomial product; picks PCLMUL when the CPU
/// has it.
unsigned __int128 clmul64(std::uint64_t a, std::uint64_t b);

/// True if p (with implicit leading x^deg term, low bits given) is
/// irreducible over GF(2). Exposed for tests.
bool gf2_poly_irreducible(std::uint64_t low_bits, int deg);

}  // namespace condsub
