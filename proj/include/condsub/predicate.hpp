// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "condsub/domain.hpp"
#include "condsub/grid.hpp"
#include "condsub/nisan.hpp"
#include "condsub/weight_expr.hpp"

#include <json.hpp>

namespace condsub {

enum class CmpOp { LT, LE, EQ, GE, GT };

bool cmp_apply(std::int64_t a, CmpOp op, std::int64_t b);
const char* cmp_name(CmpOp op);

/// Membership rule for a pseudorandom subset: the point's k-bit slice of a
/// seed-expanded stream is compared against a threshold. The threshold is
/// either fixed (inclusion probability t/2^k for all points) or scaled by a
/// weight, floor(f(x) * 2^k / denom).
struct PrmSpec {
  enum class Address { DomainIndex, Value };

  Address addr = Address::DomainIndex;
  int dim = 1;
  Coord side = 2;
  WeightFn addr_fn;               // Value mode: addresses f(x) in [1, addr_span]
  std::int64_t addr_span = 0;     // number of addresses
  int k_bits = 1;
  Uint256 const_threshold = 0;
  WeightFn scale_fn;              // empty -> constant threshold
  BigInt scale_denom = 1;
  double delta = 0;               // approximation parameter used at build time
  std::shared_ptr<const NisanGenerator> gen;

  // Derived at construction: native-width comparisons when k_bits <= 120.
  bool narrow = false;
  unsigned __int128 const_threshold_128 = 0;
  unsigned __int128 scale_denom_128 = 0;
};

/// Immutable description of a subset of the domain, evaluated pointwise.
/// size() is the description-cost charge: one unit per node, plus
/// per-bit charges for cell lists and pseudorandom members.
class Predicate {
 public:
  enum class Kind {
    ConstTrue, ConstFalse, CoordCompare, SqDistCompare, WeightCompare,
    NotEqualPoint, InCellSet, NeighborOfCellSet, PseudoRandomMember,
    And, Or, Not
  };

  Predicate();  // ConstTrue

  static Predicate const_true();
  static Predicate const_false();
  static Predicate coord_compare(int axis, CmpOp op, Coord threshold);
  static Predicate sqdist_compare(Point center, CmpOp op, std::int64_t threshold);
  static Predicate weight_compare(WeightFn f, CmpOp op, std::int64_t threshold);
  static Predicate not_equal_point(Point p);
  static Predicate in_cell_set(GridSpec grid, std::vector<std::int64_t> linear_ids);
  static Predicate neighbor_of_cells(GridSpec grid, std::vector<std::int64_t> linear_ids,
                                     std::int64_t cell_sqdist_threshold);
  static Predicate pseudo_random_member(PrmSpec spec);
  static Predicate conjoin(Predicate a, Predicate b);
  static Predicate disjoin(Predicate a, Predicate b);
  static Predicate negate(Predicate a);

  bool eval(PointSpan x, const EvalContext* ctx = nullptr) const;
  std::int64_t size() const;
  Kind kind() const;

  /// Tightest ball constraint among the root (or a root conjunction),
  /// for the oracle's accelerated match path.
  struct Ball {
    Point center;
    std::int64_t r2 = 0;
  };
  std::optional<Ball> ball_bound() const;

  /// Weight functions referenced anywhere in the tree (for oracle caching).
  void collect_weights(std::vector<const WeightFn*>& out) const;

  nlohmann::json debug_json() const;

  struct Node;  // opaque; defined in predicate.cpp

 private:
  explicit Predicate(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  static Predicate make_gate(Kind k, std::vector<Predicate> children);
  std::shared_ptr<const Node> node_;
};

}  // namespace condsub
