// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "condsub/predicate.hpp"

namespace condsub {

/// Inclusion probability for a pseudorandom subset: scale(x) * num / den,
/// where scale is identically 1 when empty.
struct SubsetInclusion {
  WeightFn scale;
  BigInt num = 1;
  BigInt den = 1;

  static SubsetInclusion constant(BigInt num, BigInt den) {
    SubsetInclusion g;
    g.num = std::move(num);
    g.den = std::move(den);
    return g;
  }
  static SubsetInclusion scaled(WeightFn f, BigInt den) {
    SubsetInclusion g;
    g.scale = std::move(f);
    g.den = std::move(den);
    return g;
  }
};

/// Subset of the point domain [1,side]^dim, each point included with
/// probability g (to 2^-k accuracy) via a seed-expanded bit stream.
/// Requires delta >= 1/|domain|.
Predicate pseudo_subset_domain(int dim, Coord side, const SubsetInclusion& g,
                               double delta, std::uint64_t seed);

/// Subset of the value range [1, addr_span], membership tested through the
/// address function: the predicate holds at x iff addr(x)'s stream slice
/// passes. Used for range-valued constructions.
Predicate pseudo_subset_value(WeightFn addr, std::int64_t addr_span,
                              const SubsetInclusion& g, double delta,
                              std::uint64_t seed);

/// Bits per element and space parameter chosen for a given address count
/// and accuracy. Exposed for size-growth tests.
int subset_k_bits(double addr_count, double delta);
int subset_space_bits(double addr_count, double delta);

}  // namespace condsub
