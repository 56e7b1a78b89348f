// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "condsub/domain.hpp"
#include "condsub/grid.hpp"
#include "condsub/nisan.hpp"

namespace condsub {

class WeightCache;

/// Shared scratch passed through predicate and weight evaluation. When the
/// evaluated point is row point_index of dataset, precomputed per-point
/// values can be served from the cache; semantics are unchanged either way.
struct EvalContext {
  const Dataset* dataset = nullptr;
  std::ptrdiff_t point_index = -1;
  const WeightCache* weights = nullptr;
};

/// Per-point values of registered weight expressions, owned by the oracle
/// and keyed by the expression's unique id (never reused, unlike node
/// addresses). Lookups remember the last hit; an oracle instance is single
/// threaded. Old entries are evicted in insertion order.
class WeightCache {
 public:
  void put(std::uint64_t id, std::vector<std::int64_t> values) {
    if (values_.size() >= kMaxEntries) {
      values_.erase(order_.front());
      order_.erase(order_.begin());
    }
    values_[id] = std::move(values);
    order_.push_back(id);
    last_key_ = 0;
  }
  const std::int64_t* find(std::uint64_t id) const {
    if (id == last_key_) return last_val_;
    auto it = values_.find(id);
    if (it == values_.end()) return nullptr;
    last_key_ = id;
    last_val_ = it->second.data();
    return last_val_;
  }
  bool has(std::uint64_t id) const { return values_.count(id) != 0; }

 private:
  static constexpr std::size_t kMaxEntries = 48;
  std::unordered_map<std::uint64_t, std::vector<std::int64_t>> values_;
  std::vector<std::uint64_t> order_;
  mutable std::uint64_t last_key_ = 0;
  mutable const std::int64_t* last_val_ = nullptr;
};

struct WeightInterval {
  BigInt lo;
  BigInt hi;
};

/// Arithmetic expression over a point, evaluating to a nonnegative integer.
/// Immutable and cheap to copy (nodes are shared).
class WeightExpr {
 public:
  WeightExpr() = default;

  static WeightExpr constant(std::int64_t c);
  static WeightExpr coord(int axis);
  static WeightExpr sqdist_to(Point center);
  static WeightExpr min_of(std::vector<WeightExpr> children);
  static WeightExpr max_of(std::vector<WeightExpr> children);
  static WeightExpr add(std::vector<WeightExpr> children);
  static WeightExpr mul(std::vector<WeightExpr> children);
  static WeightExpr clamp(WeightExpr inner, std::int64_t lo, std::int64_t hi);
  /// 1 when a <= b (resp. a < b) else 0.
  static WeightExpr ind_le(WeightExpr a, WeightExpr b);
  static WeightExpr ind_lt(WeightExpr a, WeightExpr b);
  /// 1-based linear cell id of the point under the grid.
  static WeightExpr grid_cell(GridSpec grid);
  /// Pseudorandom hash of the inner value: out_bits bits of the generator
  /// stream at the block addressed by the value. Inner values must lie in
  /// [1, addr_span].
  static WeightExpr prg_hash(WeightExpr inner, std::int64_t addr_span, int out_bits,
                             std::uint64_t seed);

  bool empty() const { return !node_; }
  std::int64_t eval(PointSpan x, const EvalContext* ctx = nullptr) const;
  std::int64_t size() const;
  WeightInterval interval(int dim, Coord side) const;
  std::uint64_t id() const;

  /// Balanced min-tournament over squared distances to the given centers.
  static WeightExpr min_sqdist(const std::vector<Point>& centers);

 private:
  struct Node;
  explicit WeightExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

/// A weight expression together with its declared range bound M. The
/// factory verifies by interval analysis that values stay within [0, M]
/// for every domain point and that no intermediate can overflow.
class WeightFn {
 public:
  WeightFn() = default;
  static WeightFn make(WeightExpr expr, std::int64_t bound, int dim, Coord side);

  const WeightExpr& expr() const { return expr_; }
  std::int64_t bound() const { return bound_; }
  bool empty() const { return expr_.empty(); }
  std::int64_t operator()(PointSpan x, const EvalContext* ctx = nullptr) const {
    if (ctx && ctx->point_index >= 0 && ctx->weights)
      if (const std::int64_t* v = ctx->weights->find(expr_.id()))
        return v[ctx->point_index];
    return expr_.eval(x, ctx);
  }

 private:
  WeightFn(WeightExpr e, std::int64_t b) : expr_(std::move(e)), bound_(b) {}
  WeightExpr expr_;
  std::int64_t bound_ = 1;
};

}  // namespace condsub
