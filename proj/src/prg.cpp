// SPDX-License-Identifier: Apache-2.0
#include "condsub/prg.hpp"

#include <cmath>
#include <stdexcept>

namespace condsub {

namespace {

int ceil_log2_d(double v) {
  if (v <= 1.0) return 0;
  int b = static_cast<int>(std::ceil(std::log2(v) - 1e-12));
  return std::max(b, 1);
}

PrmSpec make_spec(double addr_count, std::int64_t addr_span_int,
                  const SubsetInclusion& g, double delta, std::uint64_t seed) {
  if (!(delta > 0.0)) throw std::invalid_argument("pseudo subset: delta must be positive");
  if (delta * addr_count < 1.0 - 1e-9)
    throw std::invalid_argument("pseudo subset: delta below 1/|domain|");
  if (g.num < 0 || g.den <= 0)
    throw std::invalid_argument("pseudo subset: bad inclusion probability");

  PrmSpec spec;
  spec.delta = delta;
  spec.addr_span = addr_span_int;
  spec.k_bits = subset_k_bits(addr_count, delta);
  if (spec.k_bits > 190) throw std::invalid_argument("pseudo subset: k out of supported range");
  int space = subset_space_bits(addr_count, delta);
  if (space > 64)
    throw std::invalid_argument("pseudo subset: domain too wide for the generator");
  auto stream_bits =
      static_cast<StreamPos>(addr_span_int) * static_cast<StreamPos>(spec.k_bits);
  spec.gen = std::make_shared<NisanGenerator>(
      NisanGenerator::from_master_seed(space, stream_bits, seed));

  if (g.scale.empty()) {
    BigInt t = (BigInt(1) << spec.k_bits) * g.num / g.den;
    BigInt cap = BigInt(1) << spec.k_bits;
    if (t > cap) t = cap;
    spec.const_threshold = Uint256(t);
  } else {
    spec.scale_fn = g.scale;
    spec.scale_denom = g.den / g.num;  // probabilities are scale(x)*num/den
    if (g.num != 1 && g.den % g.num != 0)
      throw std::invalid_argument("pseudo subset: scaled inclusion needs num | den");
    if (spec.scale_denom <= 0) throw std::invalid_argument("pseudo subset: bad denominator");
  }
  return spec;
}

}  // namespace

int subset_k_bits(double addr_count, double delta) {
  return std::max(1, ceil_log2_d(addr_count / delta));
}

int subset_space_bits(double addr_count, double delta) {
  return std::max(ceil_log2_d(addr_count), ceil_log2_d(1.0 / delta)) + 8;
}

Predicate pseudo_subset_domain(int dim, Coord side, const SubsetInclusion& g,
                               double delta, std::uint64_t seed) {
  double count = std::pow(static_cast<double>(side), dim);
  if (count >= std::ldexp(1.0, 62))
    throw std::invalid_argument("pseudo subset: domain exceeds 2^62 points");
  auto span = static_cast<std::int64_t>(count);
  PrmSpec spec = make_spec(count, span, g, delta, seed);
  spec.addr = PrmSpec::Address::DomainIndex;
  spec.dim = dim;
  spec.side = side;
  return Predicate::pseudo_random_member(std::move(spec));
}

Predicate pseudo_subset_value(WeightFn addr, std::int64_t addr_span,
                              const SubsetInclusion& g, double delta,
                              std::uint64_t seed) {
  if (addr.empty()) throw std::invalid_argument("pseudo subset: missing address fn");
  if (addr_span < 1) throw std::invalid_argument("pseudo subset: empty range");
  PrmSpec spec = make_spec(static_cast<double>(addr_span), addr_span, g, delta, seed);
  spec.addr = PrmSpec::Address::Value;
  spec.addr_fn = std::move(addr);
  return Predicate::pseudo_random_member(std::move(spec));
}

}  // namespace condsub
