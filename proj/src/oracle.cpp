// SPDX-License-Identifier: Apache-2.0
#include "condsub/oracle.hpp"

#include <algorithm>
#include <stdexcept>

namespace condsub {

nlohmann::json QueryLedger::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [label, e] : by_label_)
    arr.push_back({{"label", label}, {"queries", e.queries}, {"description_cost", e.desc_cost}});
  arr.push_back({{"label", "total"}, {"queries", total_.queries}, {"description_cost", total_.desc_cost}});
  return arr;
}

// Static kd-tree over the dataset, used only by the accelerated match path.
struct CondOracle::KdTree {
  struct Node {
    std::int64_t split = 0;
    int axis = -1;               // -1 marks a leaf
    std::size_t begin = 0, end = 0;
    int left = -1, right = -1;
  };
  const Dataset* ds = nullptr;
  std::vector<std::size_t> order;  // dataset indices, partitioned by the tree
  std::vector<Node> nodes;

  int build(std::size_t b, std::size_t e, int depth) {
    Node n;
    n.begin = b;
    n.end = e;
    int id = static_cast<int>(nodes.size());
    nodes.push_back(n);
    if (e - b <= 16) {
      nodes[static_cast<std::size_t>(id)].axis = -1;
      return id;
    }
    int axis = depth % ds->dim();
    std::size_t mid = (b + e) / 2;
    std::nth_element(order.begin() + static_cast<std::ptrdiff_t>(b),
                     order.begin() + static_cast<std::ptrdiff_t>(mid),
                     order.begin() + static_cast<std::ptrdiff_t>(e),
                     [&](std::size_t i, std::size_t j) {
                       return ds->point(i)[static_cast<std::size_t>(axis)] <
                              ds->point(j)[static_cast<std::size_t>(axis)];
                     });
    std::int64_t split = ds->point(order[mid])[static_cast<std::size_t>(axis)];
    int l = build(b, mid, depth + 1);
    int r = build(mid, e, depth + 1);
    Node& nn = nodes[static_cast<std::size_t>(id)];
    nn.axis = axis;
    nn.split = split;
    nn.left = l;
    nn.right = r;
    return id;
  }

  void collect_ball(int id, PointSpan center, std::int64_t r2,
                    std::vector<std::size_t>& out) const {
    const Node& n = nodes[static_cast<std::size_t>(id)];
    if (n.axis < 0) {
      for (std::size_t k = n.begin; k < n.end; ++k) {
        std::size_t i = order[k];
        if (squared_distance(ds->point(i), center) <= r2) out.push_back(i);
      }
      return;
    }
    std::int64_t c = center[static_cast<std::size_t>(n.axis)];
    std::int64_t d = c - n.split;
    // Left subtree holds coords <= split, right holds >= split.
    if (c <= n.split || d * d <= r2) collect_ball(n.left, center, r2, out);
    if (c >= n.split || d * d <= r2) collect_ball(n.right, center, r2, out);
  }
};

CondOracle::CondOracle(const Dataset& ds, std::uint64_t seed, OracleOptions opt)
    : ds_(&ds), base_(StreamRng(seed).fork(0x0c0d)), opt_(opt) {}

const CondOracle::KdTree& CondOracle::kd() const {
  if (!kd_) {
    auto t = std::make_shared<KdTree>();
    t->ds = ds_;
    t->order.resize(ds_->size());
    for (std::size_t i = 0; i < t->order.size(); ++i) t->order[i] = i;
    t->build(0, t->order.size(), 0);
    kd_ = t;
  }
  return *kd_;
}

std::optional<std::size_t> CondOracle::scan_pick(const Predicate& c, StreamRng& rng) const {
  EvalContext ctx{ds_, -1, &wcache_};
  std::optional<std::size_t> selected;
  std::uint64_t matched = 0;
  const std::size_t n = ds_->size();
  for (std::size_t i = 0; i < n; ++i) {
    ctx.point_index = static_cast<std::ptrdiff_t>(i);
    if (!c.eval(ds_->point(i), &ctx)) continue;
    ++matched;
    if (rng.bounded(matched) == 0) selected = i;
  }
  return selected;
}

std::optional<std::size_t> CondOracle::accel_pick(const Predicate& c,
                                                  const Predicate::Ball& ball,
                                                  StreamRng& rng) const {
  if (ball.r2 < 0) return std::nullopt;  // empty ball
  std::vector<std::size_t> cand;
  kd().collect_ball(0, ball.center, ball.r2, cand);
  std::sort(cand.begin(), cand.end());
  EvalContext ctx{ds_, -1, &wcache_};
  std::vector<std::size_t> matches;
  for (std::size_t i : cand) {
    ctx.point_index = static_cast<std::ptrdiff_t>(i);
    if (c.eval(ds_->point(i), &ctx)) matches.push_back(i);
  }
  if (matches.empty()) return std::nullopt;
  return matches[rng.bounded(matches.size())];
}

std::optional<CondResult> CondOracle::cond(const Predicate& c, std::string_view label) {
  ledger_.charge(label, c.size());
  // Per-point values of any weight appearing in the predicate are scan
  // invariants; precompute them once so repeated queries stay cheap.
  std::vector<const WeightFn*> roots;
  c.collect_weights(roots);
  for (const WeightFn* f : roots) cache_weight(*f);
  StreamRng rng = base_.fork(++calls_);
  std::optional<std::size_t> pick;
  if (opt_.accelerate) {
    if (auto ball = c.ball_bound()) pick = accel_pick(c, *ball, rng);
    else pick = scan_pick(c, rng);
  } else {
    pick = scan_pick(c, rng);
  }
  if (!pick) return std::nullopt;
  if (opt_.check_answers) {
    EvalContext ctx{ds_, static_cast<std::ptrdiff_t>(*pick), &wcache_};
    if (!c.eval(ds_->point(*pick), &ctx))
      throw std::logic_error("CondOracle: selected point fails its own predicate");
  }
  return CondResult{*pick, ds_->point_copy(*pick)};
}

std::vector<std::size_t> CondOracle::exact_match_set(const Predicate& c) const {
  EvalContext ctx{ds_, -1, &wcache_};
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ds_->size(); ++i) {
    ctx.point_index = static_cast<std::ptrdiff_t>(i);
    if (c.eval(ds_->point(i), &ctx)) out.push_back(i);
  }
  return out;
}

void CondOracle::cache_weight(const WeightFn& f) {
  if (f.empty()) return;
  if (wcache_.has(f.expr().id())) return;
  std::vector<std::int64_t> vals(ds_->size());
  for (std::size_t i = 0; i < ds_->size(); ++i) vals[i] = f.expr().eval(ds_->point(i));
  wcache_.put(f.expr().id(), std::move(vals));
}

}  // namespace condsub
