// SPDX-License-Identifier: Apache-2.0
#include "condsub/weight_expr.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>

namespace condsub {

namespace {
enum class Wk { Const, Coord, SqDist, Min, Max, Add, Mul, Clamp, IndLE, IndLT, GridCell, PrgHash };

// Largest value any node may reach; keeps all evaluation in int64.
const BigInt kNodeCap = BigInt(1) << 62;
}  // namespace

namespace {
std::atomic<std::uint64_t> g_next_expr_id{1};
}

struct WeightExpr::Node {
  const std::uint64_t uid = g_next_expr_id.fetch_add(1, std::memory_order_relaxed);
  Wk kind;
  std::int64_t c = 0;          // Const value / Clamp lo
  std::int64_t c2 = 0;         // Clamp hi
  int axis = 0;
  Point center;
  std::vector<WeightExpr> children;
  GridSpec grid;
  // PrgHash
  std::shared_ptr<const NisanGenerator> gen;
  std::int64_t addr_span = 0;
  int out_bits = 0;
  mutable std::mutex cache_mu;
  mutable std::unordered_map<std::int64_t, std::int64_t> cache;

  static WeightExpr nary(Wk kind, std::vector<WeightExpr> children);
};

WeightExpr WeightExpr::Node::nary(Wk kind, std::vector<WeightExpr> children) {
  if (children.empty()) throw std::invalid_argument("WeightExpr: empty child list");
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->children = std::move(children);
  return WeightExpr(std::move(n));
}

WeightExpr WeightExpr::constant(std::int64_t c) {
  if (c < 0) throw std::invalid_argument("WeightExpr: negative constant");
  auto n = std::make_shared<Node>();
  n->kind = Wk::Const;
  n->c = c;
  return WeightExpr(std::move(n));
}

WeightExpr WeightExpr::coord(int axis) {
  auto n = std::make_shared<Node>();
  n->kind = Wk::Coord;
  n->axis = axis;
  return WeightExpr(std::move(n));
}

WeightExpr WeightExpr::sqdist_to(Point center) {
  auto n = std::make_shared<Node>();
  n->kind = Wk::SqDist;
  n->center = std::move(center);
  return WeightExpr(std::move(n));
}

WeightExpr WeightExpr::min_of(std::vector<WeightExpr> ch) { return Node::nary(Wk::Min, std::move(ch)); }
WeightExpr WeightExpr::max_of(std::vector<WeightExpr> ch) { return Node::nary(Wk::Max, std::move(ch)); }
WeightExpr WeightExpr::add(std::vector<WeightExpr> ch) { return Node::nary(Wk::Add, std::move(ch)); }
WeightExpr WeightExpr::mul(std::vector<WeightExpr> ch) { return Node::nary(Wk::Mul, std::move(ch)); }

WeightExpr WeightExpr::clamp(WeightExpr inner, std::int64_t lo, std::int64_t hi) {
  if (lo < 0 || hi < lo) throw std::invalid_argument("WeightExpr: bad clamp range");
  auto n = std::make_shared<Node>();
  n->kind = Wk::Clamp;
  n->c = lo;
  n->c2 = hi;
  n->children = {std::move(inner)};
  return WeightExpr(std::move(n));
}

WeightExpr WeightExpr::ind_le(WeightExpr a, WeightExpr b) {
  auto n = std::make_shared<Node>();
  n->kind = Wk::IndLE;
  n->children = {std::move(a), std::move(b)};
  return WeightExpr(std::move(n));
}

WeightExpr WeightExpr::ind_lt(WeightExpr a, WeightExpr b) {
  auto n = std::make_shared<Node>();
  n->kind = Wk::IndLT;
  n->children = {std::move(a), std::move(b)};
  return WeightExpr(std::move(n));
}

WeightExpr WeightExpr::grid_cell(GridSpec grid) {
  auto n = std::make_shared<Node>();
  n->kind = Wk::GridCell;
  n->grid = std::move(grid);
  return WeightExpr(std::move(n));
}

WeightExpr WeightExpr::prg_hash(WeightExpr inner, std::int64_t addr_span, int out_bits,
                                std::uint64_t seed) {
  if (addr_span < 1) throw std::invalid_argument("prg_hash: empty address space");
  if (out_bits < 1 || out_bits > 62) throw std::invalid_argument("prg_hash: out_bits outside [1,62]");
  auto n = std::make_shared<Node>();
  n->kind = Wk::PrgHash;
  n->children = {std::move(inner)};
  n->addr_span = addr_span;
  n->out_bits = out_bits;
  int addr_bits = 1;
  while ((std::int64_t(1) << addr_bits) < addr_span) ++addr_bits;
  int space = std::min(addr_bits + 8, 64);
  auto stream_bits = static_cast<StreamPos>(addr_span) * static_cast<StreamPos>(out_bits);
  n->gen = std::make_shared<NisanGenerator>(
      NisanGenerator::from_master_seed(space, stream_bits, seed));
  return WeightExpr(std::move(n));
}

WeightExpr WeightExpr::min_sqdist(const std::vector<Point>& centers) {
  if (centers.empty()) throw std::invalid_argument("min_sqdist: no centers");
  std::vector<WeightExpr> leaves;
  leaves.reserve(centers.size());
  for (const Point& p : centers) leaves.push_back(sqdist_to(p));
  // Balanced tournament.
  while (leaves.size() > 1) {
    std::vector<WeightExpr> next;
    for (std::size_t i = 0; i + 1 < leaves.size(); i += 2)
      next.push_back(min_of({leaves[i], leaves[i + 1]}));
    if (leaves.size() % 2) next.push_back(leaves.back());
    leaves = std::move(next);
  }
  return leaves.front();
}

std::int64_t WeightExpr::eval(PointSpan x, const EvalContext* ctx) const {
  const Node& n = *node_;
  switch (n.kind) {
    case Wk::Const: return n.c;
    case Wk::Coord: return x[static_cast<std::size_t>(n.axis)];
    case Wk::SqDist: return squared_distance(x, n.center);
    case Wk::Min: {
      std::int64_t v = n.children[0].eval(x, ctx);
      for (std::size_t i = 1; i < n.children.size(); ++i)
        v = std::min(v, n.children[i].eval(x, ctx));
      return v;
    }
    case Wk::Max: {
      std::int64_t v = n.children[0].eval(x, ctx);
      for (std::size_t i = 1; i < n.children.size(); ++i)
        v = std::max(v, n.children[i].eval(x, ctx));
      return v;
    }
    case Wk::Add: {
      std::int64_t v = 0;
      for (const auto& ch : n.children) v += ch.eval(x, ctx);
      return v;
    }
    case Wk::Mul: {
      std::int64_t v = 1;
      for (const auto& ch : n.children) v *= ch.eval(x, ctx);
      return v;
    }
    case Wk::Clamp: {
      std::int64_t v = n.children[0].eval(x, ctx);
      return std::clamp(v, n.c, n.c2);
    }
    case Wk::IndLE: return n.children[0].eval(x, ctx) <= n.children[1].eval(x, ctx) ? 1 : 0;
    case Wk::IndLT: return n.children[0].eval(x, ctx) < n.children[1].eval(x, ctx) ? 1 : 0;
    case Wk::GridCell: return n.grid.linear_of_point(x);
    case Wk::PrgHash: {
      std::int64_t v = n.children[0].eval(x, ctx);
      if (v < 1 || v > n.addr_span) throw std::out_of_range("prg_hash: address outside span");
      {
        std::lock_guard<std::mutex> lock(n.cache_mu);
        auto it = n.cache.find(v);
        if (it != n.cache.end()) return it->second;
      }
      auto off = static_cast<StreamPos>(v - 1) * static_cast<StreamPos>(n.out_bits);
      auto h = static_cast<std::int64_t>(static_cast<std::uint64_t>(n.gen->window(off, n.out_bits)));
      std::lock_guard<std::mutex> lock(n.cache_mu);
      n.cache.emplace(v, h);
      return h;
    }
  }
  throw std::logic_error("WeightExpr: bad node");
}

std::uint64_t WeightExpr::id() const { return node_ ? node_->uid : 0; }

std::int64_t WeightExpr::size() const {
  const Node& n = *node_;
  std::int64_t s = 1;
  for (const auto& ch : n.children) s += ch.size();
  if (n.kind == Wk::PrgHash) s += n.gen->seed_bits() + n.out_bits;
  return s;
}

WeightInterval WeightExpr::interval(int dim, Coord side) const {
  const Node& n = *node_;
  auto child = [&](std::size_t i) { return n.children[i].interval(dim, side); };
  WeightInterval out;
  switch (n.kind) {
    case Wk::Const: out = {BigInt(n.c), BigInt(n.c)}; break;
    case Wk::Coord:
      if (n.axis < 0 || n.axis >= dim) throw std::invalid_argument("WeightExpr: axis out of range");
      out = {BigInt(1), BigInt(side)};
      break;
    case Wk::SqDist: {
      if (n.center.dim() != dim) throw std::invalid_argument("WeightExpr: center dimension");
      BigInt hi = 0;
      for (int j = 0; j < dim; ++j) {
        BigInt a = BigInt(n.center[j] - 1), b = BigInt(side - n.center[j]);
        hi += (a > b ? a : b) * (a > b ? a : b);
      }
      out = {BigInt(0), hi};
      break;
    }
    case Wk::Min: {
      out = child(0);
      for (std::size_t i = 1; i < n.children.size(); ++i) {
        auto c = child(i);
        out.lo = std::min(out.lo, c.lo);
        out.hi = std::min(out.hi, c.hi);
      }
      break;
    }
    case Wk::Max: {
      out = child(0);
      for (std::size_t i = 1; i < n.children.size(); ++i) {
        auto c = child(i);
        out.lo = std::max(out.lo, c.lo);
        out.hi = std::max(out.hi, c.hi);
      }
      break;
    }
    case Wk::Add: {
      out = {BigInt(0), BigInt(0)};
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        auto c = child(i);
        out.lo += c.lo;
        out.hi += c.hi;
      }
      break;
    }
    case Wk::Mul: {
      out = {BigInt(1), BigInt(1)};
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        auto c = child(i);
        out.lo *= c.lo;
        out.hi *= c.hi;
      }
      break;
    }
    case Wk::Clamp: {
      auto c = child(0);
      out.lo = std::clamp(c.lo, BigInt(n.c), BigInt(n.c2));
      out.hi = std::clamp(c.hi, BigInt(n.c), BigInt(n.c2));
      break;
    }
    case Wk::IndLE:
    case Wk::IndLT:
      child(0); child(1);  // still validate subtrees
      out = {BigInt(0), BigInt(1)};
      break;
    case Wk::GridCell:
      out = {BigInt(1), BigInt(n.grid.linear_cell_count())};
      break;
    case Wk::PrgHash: {
      auto c = child(0);
      if (c.lo < 1 || c.hi > n.addr_span)
        throw std::invalid_argument("prg_hash: inner range exceeds address span");
      out = {BigInt(0), (BigInt(1) << n.out_bits) - 1};
      break;
    }
    default: throw std::logic_error("WeightExpr: bad node");
  }
  if (out.hi > kNodeCap) throw std::overflow_error("WeightExpr: value bound above 2^62");
  return out;
}

WeightFn WeightFn::make(WeightExpr expr, std::int64_t bound, int dim, Coord side) {
  if (bound < 1) throw std::invalid_argument("WeightFn: bound must be >= 1");
  WeightInterval iv = expr.interval(dim, side);
  if (iv.lo < 0 || iv.hi > bound)
    throw std::invalid_argument("WeightFn: expression range escapes [0, M]");
  return WeightFn(std::move(expr), bound);
}

}  // namespace condsub
