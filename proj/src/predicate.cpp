// SPDX-License-Identifier: Apache-2.0
#include "condsub/predicate.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace condsub {

bool cmp_apply(std::int64_t a, CmpOp op, std::int64_t b) {
  switch (op) {
    case CmpOp::LT: return a < b;
    case CmpOp::LE: return a <= b;
    case CmpOp::EQ: return a == b;
    case CmpOp::GE: return a >= b;
    case CmpOp::GT: return a > b;
  }
  return false;
}

const char* cmp_name(CmpOp op) {
  switch (op) {
    case CmpOp::LT: return "<";
    case CmpOp::LE: return "<=";
    case CmpOp::EQ: return "==";
    case CmpOp::GE: return ">=";
    case CmpOp::GT: return ">";
  }
  return "?";
}

struct Predicate::Node {
  Kind kind = Kind::ConstTrue;
  int axis = 0;
  CmpOp op = CmpOp::LE;
  std::int64_t threshold = 0;
  Point point;
  WeightFn weight;
  GridSpec grid;
  std::vector<std::int64_t> cells;        // sorted linear ids
  std::vector<std::int64_t> cell_coords;  // len*dim, sorted with cells by axis 0
  std::int64_t cell_sq_threshold = 0;
  std::int64_t cell_axis_radius = 0;
  PrmSpec prm;
  std::vector<Predicate> children;        // And/Or/Not
  std::vector<std::size_t> eval_order;    // cheapest children first
  std::int64_t cached_size = 1;
  int cost_rank = 0;
  // Value-addressed constant-threshold memberships repeat across points, so
  // memoize per address.
  mutable std::mutex memo_mu;
  mutable std::unordered_map<std::int64_t, bool> memo;
};

namespace {

using PNode = Predicate::Node;

std::int64_t cell_id_width(const GridSpec& g) {
  double bits = g.dim * std::log2(static_cast<double>(g.side));
  return static_cast<std::int64_t>(std::ceil(std::max(bits, 1.0)));
}

DomainIndex domain_index_of(PointSpan x, Coord side) {
  DomainIndex acc = 0;
  DomainIndex stride = 1;
  for (std::size_t j = 0; j < x.size(); ++j) {
    acc += static_cast<DomainIndex>(x[j] - 1) * stride;
    stride *= static_cast<DomainIndex>(side);
  }
  return acc;
}

bool prm_eval(const PNode& n, PointSpan x, const EvalContext* ctx) {
  const PrmSpec& p = n.prm;
  std::int64_t addr;
  if (p.addr == PrmSpec::Address::DomainIndex) {
    DomainIndex idx;
    if (ctx && ctx->point_index >= 0 && ctx->dataset)
      idx = ctx->dataset->domain_indices()[static_cast<std::size_t>(ctx->point_index)];
    else
      idx = domain_index_of(x, p.side);
    addr = static_cast<std::int64_t>(idx);
  } else {
    addr = p.addr_fn(x, ctx);
    if (addr < 1 || addr > p.addr_span) return false;  // value outside the range
    addr -= 1;
  }
  bool memoizable = p.addr == PrmSpec::Address::Value && p.scale_fn.empty();
  if (memoizable) {
    std::lock_guard<std::mutex> lock(n.memo_mu);
    auto it = n.memo.find(addr);
    if (it != n.memo.end()) return it->second;
  }
  auto offset = static_cast<StreamPos>(addr) * static_cast<StreamPos>(p.k_bits);
  bool in;
  if (p.narrow) {
    unsigned __int128 thr;
    if (p.scale_fn.empty()) {
      thr = p.const_threshold_128;
    } else {
      auto f = static_cast<unsigned __int128>(p.scale_fn(x, ctx));
      if (p.k_bits + 63 <= 126) {
        thr = (f << p.k_bits) / p.scale_denom_128;
      } else {
        Uint256 wide = (Uint256(static_cast<std::uint64_t>(f)) << p.k_bits) / Uint256(p.scale_denom);
        thr = wide > Uint256(~(unsigned __int128)0) ? ~(unsigned __int128)0
                                                    : static_cast<unsigned __int128>(wide);
      }
    }
    in = p.gen->window_less(offset, p.k_bits, thr);
  } else {
    Uint256 w = p.gen->window(offset, p.k_bits);
    Uint256 thr;
    if (p.scale_fn.empty()) {
      thr = p.const_threshold;
    } else {
      std::int64_t f = p.scale_fn(x, ctx);
      thr = (Uint256(static_cast<std::uint64_t>(f)) << p.k_bits) / Uint256(p.scale_denom);
    }
    in = w < thr;
  }
  if (memoizable) {
    std::lock_guard<std::mutex> lock(n.memo_mu);
    n.memo.emplace(addr, in);
  }
  return in;
}

bool neighbor_eval(const PNode& n, PointSpan x) {
  std::int64_t cell[8];
  n.grid.cell_of(x, cell);
  // Cells are sorted by axis-0 coordinate; only a bounded window can be
  // within the squared threshold.
  const std::int64_t lo = cell[0] - n.cell_axis_radius;
  const std::int64_t hi = cell[0] + n.cell_axis_radius;
  const int d = n.grid.dim;
  const auto& cc = n.cell_coords;
  std::size_t count = n.cells.size();
  std::size_t a = 0, b = count;
  while (a < b) {  // first index with axis0 >= lo
    std::size_t mid = (a + b) / 2;
    if (cc[mid * static_cast<std::size_t>(d)] < lo) a = mid + 1; else b = mid;
  }
  for (std::size_t i = a; i < count; ++i) {
    const std::int64_t* c = &cc[i * static_cast<std::size_t>(d)];
    if (c[0] > hi) break;
    std::int64_t acc = 0;
    for (int j = 0; j < d; ++j) {
      std::int64_t dd = c[j] - cell[j];
      acc += dd * dd;
      if (acc > n.cell_sq_threshold) break;
    }
    if (acc <= n.cell_sq_threshold) return true;
  }
  return false;
}

int rank_of(const PNode& n) {
  switch (n.kind) {
    case Predicate::Kind::ConstTrue:
    case Predicate::Kind::ConstFalse: return 0;
    case Predicate::Kind::CoordCompare:
    case Predicate::Kind::NotEqualPoint: return 1;
    case Predicate::Kind::SqDistCompare: return 2;
    case Predicate::Kind::WeightCompare: return 3;
    case Predicate::Kind::InCellSet: return 4;
    case Predicate::Kind::NeighborOfCellSet: return 5;
    case Predicate::Kind::PseudoRandomMember: return 10;
    default: return 6;
  }
}

std::shared_ptr<PNode> leaf(Predicate::Kind k) {
  auto n = std::make_shared<PNode>();
  n->kind = k;
  return n;
}

}  // namespace

Predicate::Predicate() : node_(leaf(Kind::ConstTrue)) {}

Predicate Predicate::const_true() { return Predicate(leaf(Kind::ConstTrue)); }
Predicate Predicate::const_false() { return Predicate(leaf(Kind::ConstFalse)); }

Predicate Predicate::coord_compare(int axis, CmpOp op, Coord threshold) {
  auto n = leaf(Kind::CoordCompare);
  n->axis = axis;
  n->op = op;
  n->threshold = threshold;
  n->cost_rank = 1;
  return Predicate(std::move(n));
}

Predicate Predicate::sqdist_compare(Point center, CmpOp op, std::int64_t threshold) {
  auto n = leaf(Kind::SqDistCompare);
  n->point = std::move(center);
  n->op = op;
  n->threshold = threshold;
  n->cost_rank = 2;
  return Predicate(std::move(n));
}

Predicate Predicate::weight_compare(WeightFn f, CmpOp op, std::int64_t threshold) {
  if (f.empty()) throw std::invalid_argument("weight_compare: empty weight");
  auto n = leaf(Kind::WeightCompare);
  n->weight = std::move(f);
  n->op = op;
  n->threshold = threshold;
  n->cached_size = 1 + n->weight.expr().size();
  n->cost_rank = 3;
  return Predicate(std::move(n));
}

Predicate Predicate::not_equal_point(Point p) {
  auto n = leaf(Kind::NotEqualPoint);
  n->point = std::move(p);
  n->cost_rank = 1;
  return Predicate(std::move(n));
}

Predicate Predicate::in_cell_set(GridSpec grid, std::vector<std::int64_t> ids) {
  auto n = leaf(Kind::InCellSet);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  n->grid = std::move(grid);
  n->cells = std::move(ids);
  n->cached_size = 1 + static_cast<std::int64_t>(n->cells.size()) * cell_id_width(n->grid);
  n->cost_rank = 4;
  return Predicate(std::move(n));
}

Predicate Predicate::neighbor_of_cells(GridSpec grid, std::vector<std::int64_t> ids,
                                       std::int64_t cell_sqdist_threshold) {
  auto n = leaf(Kind::NeighborOfCellSet);
  n->grid = std::move(grid);
  n->cell_sq_threshold = cell_sqdist_threshold;
  n->cell_axis_radius =
      static_cast<std::int64_t>(std::sqrt(static_cast<double>(std::max<std::int64_t>(cell_sqdist_threshold, 0)))) + 1;
  const int d = n->grid.dim;
  std::vector<std::vector<std::int64_t>> unpacked;
  unpacked.reserve(ids.size());
  for (std::int64_t id : ids) {
    std::vector<std::int64_t> c(static_cast<std::size_t>(d));
    n->grid.from_linear(id, c.data());
    unpacked.push_back(std::move(c));
  }
  std::sort(unpacked.begin(), unpacked.end());
  n->cells.clear();
  n->cell_coords.clear();
  for (const auto& c : unpacked) {
    n->cells.push_back(n->grid.linear_id(c.data()));
    n->cell_coords.insert(n->cell_coords.end(), c.begin(), c.end());
  }
  n->cached_size = 1 + static_cast<std::int64_t>(n->cells.size()) * cell_id_width(n->grid);
  n->cost_rank = 5;
  return Predicate(std::move(n));
}

Predicate Predicate::pseudo_random_member(PrmSpec spec) {
  if (!spec.gen) throw std::invalid_argument("pseudo_random_member: missing generator");
  auto n = leaf(Kind::PseudoRandomMember);
  spec.narrow = spec.k_bits <= 120;
  if (spec.narrow) {
    Uint256 capped = spec.const_threshold;
    Uint256 lim = Uint256(1);
    lim <<= 121;
    if (capped > lim) capped = lim;
    spec.const_threshold_128 = static_cast<unsigned __int128>(capped);
    if (spec.scale_denom > 0 && spec.scale_denom < (BigInt(1) << 126))
      spec.scale_denom_128 = static_cast<unsigned __int128>(Uint256(spec.scale_denom));
    else
      spec.narrow = spec.scale_fn.empty();
  }
  n->prm = std::move(spec);
  std::int64_t charge = 1 + n->prm.gen->seed_bits() + n->prm.k_bits;
  if (!n->prm.addr_fn.empty()) charge += n->prm.addr_fn.expr().size();
  if (!n->prm.scale_fn.empty()) charge += n->prm.scale_fn.expr().size();
  n->cached_size = charge;
  n->cost_rank = 10;
  return Predicate(std::move(n));
}

Predicate Predicate::conjoin(Predicate a, Predicate b) {
  return make_gate(Kind::And, {std::move(a), std::move(b)});
}

Predicate Predicate::disjoin(Predicate a, Predicate b) {
  return make_gate(Kind::Or, {std::move(a), std::move(b)});
}

Predicate Predicate::negate(Predicate a) {
  return make_gate(Kind::Not, {std::move(a)});
}

bool Predicate::eval(PointSpan x, const EvalContext* ctx) const {
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::ConstTrue: return true;
    case Kind::ConstFalse: return false;
    case Kind::CoordCompare:
      return cmp_apply(x[static_cast<std::size_t>(n.axis)], n.op, n.threshold);
    case Kind::SqDistCompare:
      return cmp_apply(squared_distance(x, n.point), n.op, n.threshold);
    case Kind::WeightCompare: return cmp_apply(n.weight(x, ctx), n.op, n.threshold);
    case Kind::NotEqualPoint: {
      PointSpan p = n.point;
      if (p.size() != x.size()) return true;
      for (std::size_t j = 0; j < p.size(); ++j)
        if (p[j] != x[j]) return true;
      return false;
    }
    case Kind::InCellSet: {
      std::int64_t id = n.grid.linear_of_point(x);
      return std::binary_search(n.cells.begin(), n.cells.end(), id);
    }
    case Kind::NeighborOfCellSet: return neighbor_eval(n, x);
    case Kind::PseudoRandomMember: return prm_eval(n, x, ctx);
    case Kind::And:
      for (std::size_t i : n.eval_order)
        if (!n.children[i].eval(x, ctx)) return false;
      return true;
    case Kind::Or:
      for (std::size_t i : n.eval_order)
        if (n.children[i].eval(x, ctx)) return true;
      return false;
    case Kind::Not: return !n.children[0].eval(x, ctx);
  }
  throw std::logic_error("Predicate: bad node");
}

std::int64_t Predicate::size() const { return node_->cached_size; }
Predicate::Kind Predicate::kind() const { return node_->kind; }

std::optional<Predicate::Ball> Predicate::ball_bound() const {
  const Node* n = node_.get();
  std::optional<Ball> best;
  auto consider = [&](const Node& m) {
    if (m.kind != Kind::SqDistCompare) return;
    if (m.op != CmpOp::LE && m.op != CmpOp::LT) return;
    std::int64_t r2 = m.op == CmpOp::LE ? m.threshold : m.threshold - 1;
    if (r2 < 0) r2 = -1;
    if (!best || r2 < best->r2) best = Ball{m.point, r2};
  };
  consider(*n);
  if (n->kind == Kind::And)
    for (const Predicate& c : n->children) consider(*c.node_);
  return best;
}

void Predicate::collect_weights(std::vector<const WeightFn*>& out) const {
  const Node& n = *node_;
  if (n.kind == Kind::WeightCompare) out.push_back(&n.weight);
  if (n.kind == Kind::PseudoRandomMember) {
    if (!n.prm.addr_fn.empty()) out.push_back(&n.prm.addr_fn);
    if (!n.prm.scale_fn.empty()) out.push_back(&n.prm.scale_fn);
  }
  for (const Predicate& c : n.children) c.collect_weights(out);
}

nlohmann::json Predicate::debug_json() const {
  const Node& n = *node_;
  nlohmann::json j;
  switch (n.kind) {
    case Kind::ConstTrue: j["kind"] = "const_true"; break;
    case Kind::ConstFalse: j["kind"] = "const_false"; break;
    case Kind::CoordCompare:
      j["kind"] = "coord_compare";
      j["axis"] = n.axis;
      j["op"] = cmp_name(n.op);
      j["threshold"] = n.threshold;
      break;
    case Kind::SqDistCompare:
      j["kind"] = "sqdist_compare";
      j["center"] = n.point.coords;
      j["op"] = cmp_name(n.op);
      j["threshold"] = n.threshold;
      break;
    case Kind::WeightCompare:
      j["kind"] = "weight_compare";
      j["op"] = cmp_name(n.op);
      j["threshold"] = n.threshold;
      j["weight_size"] = n.weight.expr().size();
      break;
    case Kind::NotEqualPoint:
      j["kind"] = "not_equal_point";
      j["point"] = n.point.coords;
      break;
    case Kind::InCellSet:
      j["kind"] = "in_cell_set";
      j["cells"] = n.cells.size();
      break;
    case Kind::NeighborOfCellSet:
      j["kind"] = "neighbor_of_cells";
      j["cells"] = n.cells.size();
      j["sq_threshold"] = n.cell_sq_threshold;
      break;
    case Kind::PseudoRandomMember:
      j["kind"] = "pseudo_random_member";
      j["k_bits"] = n.prm.k_bits;
      j["seed_bits"] = n.prm.gen->seed_bits();
      break;
    case Kind::And: j["kind"] = "and"; break;
    case Kind::Or: j["kind"] = "or"; break;
    case Kind::Not: j["kind"] = "not"; break;
  }
  if (!n.children.empty()) {
    nlohmann::json ch = nlohmann::json::array();
    for (const Predicate& c : n.children) ch.push_back(c.debug_json());
    j["children"] = ch;
  }
  j["size"] = size();
  return j;
}

Predicate Predicate::make_gate(Kind k, std::vector<Predicate> children) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->children = std::move(children);
  std::int64_t sz = 1;
  int rank = 0;
  for (const Predicate& c : n->children) {
    sz += c.size();
    rank = std::max(rank, c.node_->cost_rank);
  }
  n->cached_size = sz;
  n->cost_rank = rank;
  n->eval_order.resize(n->children.size());
  for (std::size_t i = 0; i < n->eval_order.size(); ++i) n->eval_order[i] = i;
  std::stable_sort(n->eval_order.begin(), n->eval_order.end(), [&](std::size_t a, std::size_t b) {
    return n->children[a].node_->cost_rank < n->children[b].node_->cost_rank;
  });
  return Predicate(std::move(n));
}

}  // namespace condsub
