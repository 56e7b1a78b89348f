// SPDX-License-Identifier: Apache-2.0
#include "condsub/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace condsub {

namespace {

std::int64_t sqdist_bound(int dim, Coord side) {
  std::int64_t span = side - 1;
  return static_cast<std::int64_t>(dim) * span * span;
}

WeightFn min_sqdist_fn(const std::vector<Point>& centers, int dim, Coord side) {
  return WeightFn::make(WeightExpr::min_sqdist(centers), sqdist_bound(dim, side), dim, side);
}

/// Indicator that candidate `which` is the closest of `centers`, ties
/// resolved toward the lowest index so the indicators partition the domain.
WeightFn voronoi_indicator(const std::vector<Point>& centers, std::size_t which,
                           int dim, Coord side) {
  WeightExpr own = WeightExpr::sqdist_to(centers[which]);
  std::vector<WeightExpr> earlier, later;
  for (std::size_t q = 0; q < centers.size(); ++q) {
    if (q < which) earlier.push_back(WeightExpr::sqdist_to(centers[q]));
    if (q > which) later.push_back(WeightExpr::sqdist_to(centers[q]));
  }
  std::vector<WeightExpr> factors;
  if (!earlier.empty()) factors.push_back(WeightExpr::ind_lt(own, WeightExpr::min_of(earlier)));
  if (!later.empty()) factors.push_back(WeightExpr::ind_le(own, WeightExpr::min_of(later)));
  WeightExpr e = factors.empty() ? WeightExpr::constant(1)
               : factors.size() == 1 ? factors[0]
                                     : WeightExpr::mul(factors);
  return WeightFn::make(e, 1, dim, side);
}

double weighted_cost(const CenterSet& p, const std::vector<std::vector<double>>& centers) {
  double acc = 0;
  for (std::size_t i = 0; i < p.centers.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : centers) {
      double d2 = 0;
      for (std::size_t j = 0; j < c.size(); ++j) {
        double dd = static_cast<double>(p.centers[i][static_cast<int>(j)]) - c[j];
        d2 += dd * dd;
      }
      best = std::min(best, d2);
    }
    acc += p.weights[i] * best;
  }
  return acc;
}

Point round_center(const std::vector<double>& c, Coord side) {
  Point out;
  for (double v : c) {
    auto r = static_cast<Coord>(std::llround(v));
    out.coords.push_back(std::clamp<Coord>(r, 1, side));
  }
  return out;
}

// Merge duplicate-location candidates, summing weights.
CenterSet merge_duplicates(const CenterSet& p) {
  CenterSet out;
  for (std::size_t i = 0; i < p.centers.size(); ++i) {
    bool merged = false;
    for (std::size_t j = 0; j < out.centers.size(); ++j)
      if (out.centers[j] == p.centers[i]) {
        out.weights[j] += p.weights[i];
        merged = true;
        break;
      }
    if (!merged) {
      out.centers.push_back(p.centers[i]);
      out.weights.push_back(p.weights[i]);
    }
  }
  return out;
}

void enumerate_partitions(const CenterSet& p, int k, std::size_t next, int used,
                          std::vector<int>& label, double& best,
                          std::vector<int>& best_label) {
  if (next == p.centers.size()) {
    // Weighted centroid cost per group.
    int d = p.centers.front().dim();
    std::vector<std::vector<double>> sums(static_cast<std::size_t>(used),
                                          std::vector<double>(static_cast<std::size_t>(d), 0.0));
    std::vector<double> wsum(static_cast<std::size_t>(used), 0.0);
    for (std::size_t i = 0; i < label.size(); ++i) {
      wsum[static_cast<std::size_t>(label[i])] += p.weights[i];
      for (int j = 0; j < d; ++j)
        sums[static_cast<std::size_t>(label[i])][static_cast<std::size_t>(j)] +=
            p.weights[i] * static_cast<double>(p.centers[i][j]);
    }
    double cost = 0;
    for (std::size_t i = 0; i < label.size(); ++i) {
      auto g = static_cast<std::size_t>(label[i]);
      for (int j = 0; j < d; ++j) {
        double c = sums[g][static_cast<std::size_t>(j)] / wsum[g];
        double dd = static_cast<double>(p.centers[i][j]) - c;
        cost += p.weights[i] * dd * dd;
      }
    }
    if (cost < best) {
      best = cost;
      best_label = label;
    }
    return;
  }
  for (int g = 0; g < std::min(used + 1, k); ++g) {
    label[next] = g;
    enumerate_partitions(p, k, next + 1, std::max(used, g + 1), label, best, best_label);
  }
}

}  // namespace

CenterSet d2_sample_centers(CondOracle& o, int k, const Params& params, StreamRng& rng,
                            const KmeansOptions& opt, const Tunables& t) {
  const Dataset& ds = o.dataset();
  if (k < 1) throw std::invalid_argument("d2_sample_centers: k must be positive");
  if (ds.size() < static_cast<std::size_t>(k))
    throw std::invalid_argument("d2_sample_centers: fewer points than k");
  auto target = static_cast<std::size_t>(std::ceil(opt.beta * k));
  target = std::min(target, ds.size());

  CenterSet out;
  auto first = o.cond(Predicate::const_true(), "kmeans.d2");
  if (!first) throw std::logic_error("d2_sample_centers: empty dataset");
  out.centers.push_back(first->point);

  double per_draw_delta = params.delta / (2.0 * static_cast<double>(target));
  per_draw_delta = std::clamp(per_draw_delta, 1e-6, 0.4);
  while (out.centers.size() < target) {
    WeightFn f = min_sqdist_fn(out.centers, ds.dim(), ds.side());
    Predicate support = Predicate::weight_compare(f, CmpOp::GT, 0);
    std::optional<CondResult> draw;
    for (int attempt = 0; attempt < 4 && !draw; ++attempt)
      draw = wcond(o, support, f, opt.draw_tv, per_draw_delta, rng, t, "kmeans.d2");
    if (!draw) break;  // remaining mass is zero or sampling kept failing
    out.centers.push_back(draw->point);
  }
  return out;
}

CenterSet voronoi_weights(CondOracle& o, const CenterSet& p, double delta,
                          StreamRng& rng, const KmeansOptions& opt, const Tunables& t) {
  if (p.centers.empty()) throw std::invalid_argument("voronoi_weights: empty candidate set");
  const Dataset& ds = o.dataset();
  double per_delta = std::clamp(delta / static_cast<double>(p.centers.size()), 1e-6, 0.4);
  CenterSet out;
  for (std::size_t i = 0; i < p.centers.size(); ++i) {
    WeightFn ind = voronoi_indicator(p.centers, i, ds.dim(), ds.side());
    EstimateResult w = sum_weights(o, Predicate::const_true(), ind, opt.voronoi_eps,
                                   per_delta, rng, t, "kmeans.voronoi");
    if (w.value <= 0.5) continue;  // candidate represents nothing
    out.centers.push_back(p.centers[i]);
    out.weights.push_back(w.value);
  }
  if (out.centers.empty()) {
    // Every estimate came back empty; keep the first candidate with weight 1.
    out.centers.push_back(p.centers.front());
    out.weights.push_back(1.0);
  }
  return out;
}

double exhaustive_weighted_cost(const CenterSet& p, int k) {
  if (p.centers.size() > 14)
    throw std::invalid_argument("exhaustive_weighted_cost: too many points");
  CenterSet m = merge_duplicates(p);
  if (m.centers.size() <= static_cast<std::size_t>(k)) return 0.0;
  std::vector<int> label(m.centers.size(), 0), best_label;
  double best = std::numeric_limits<double>::infinity();
  enumerate_partitions(m, k, 0, 0, label, best, best_label);
  return best;
}

Clustering solve_weighted(const CenterSet& raw, int k, Coord side, StreamRng& rng,
                          const KmeansOptions& opt) {
  if (k < 1) throw std::invalid_argument("solve_weighted: bad k");
  CenterSet p = merge_duplicates(raw);
  Clustering out;
  const auto np = p.centers.size();
  if (np <= static_cast<std::size_t>(k)) {
    out.centers = p.centers;
    out.padded = np < static_cast<std::size_t>(k);
    while (out.centers.size() < static_cast<std::size_t>(k))
      out.centers.push_back(p.centers[out.centers.size() % np]);
    out.estimated_cost = 0;
    return out;
  }
  int d = p.centers.front().dim();

  if (np <= static_cast<std::size_t>(opt.exhaustive_limit)) {
    std::vector<int> label(np, 0), best_label;
    double best = std::numeric_limits<double>::infinity();
    enumerate_partitions(p, k, 0, 0, label, best, best_label);
    std::vector<std::vector<double>> sums(static_cast<std::size_t>(k),
                                          std::vector<double>(static_cast<std::size_t>(d), 0.0));
    std::vector<double> wsum(static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < np; ++i) {
      auto g = static_cast<std::size_t>(best_label[i]);
      wsum[g] += p.weights[i];
      for (int j = 0; j < d; ++j)
        sums[g][static_cast<std::size_t>(j)] += p.weights[i] * static_cast<double>(p.centers[i][j]);
    }
    for (int g = 0; g < k; ++g) {
      if (wsum[static_cast<std::size_t>(g)] <= 0) continue;
      std::vector<double> c(static_cast<std::size_t>(d));
      for (int j = 0; j < d; ++j)
        c[static_cast<std::size_t>(j)] =
            sums[static_cast<std::size_t>(g)][static_cast<std::size_t>(j)] / wsum[static_cast<std::size_t>(g)];
      out.centers.push_back(round_center(c, side));
    }
    while (out.centers.size() < static_cast<std::size_t>(k))
      out.centers.push_back(p.centers[out.centers.size() % np]);
    out.estimated_cost = best;
    return out;
  }

  // Weighted seeding plus weighted Lloyd, best of restarts.
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_centers;
  for (int r = 0; r < opt.lloyd_restarts; ++r) {
    std::vector<std::vector<double>> centers;
    // Seed proportional to weight, then weight * distance^2.
    {
      double tot = 0;
      for (double w : p.weights) tot += w;
      double pick = rng.unit() * tot;
      std::size_t c0 = np - 1;
      for (std::size_t i = 0; i < np; ++i) {
        pick -= p.weights[i];
        if (pick <= 0) { c0 = i; break; }
      }
      centers.push_back(std::vector<double>(p.centers[c0].coords.begin(), p.centers[c0].coords.end()));
    }
    while (centers.size() < static_cast<std::size_t>(k)) {
      double tot = 0;
      std::vector<double> mass(np);
      for (std::size_t i = 0; i < np; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : centers) {
          double acc = 0;
          for (int j = 0; j < d; ++j) {
            double dd = static_cast<double>(p.centers[i][j]) - c[static_cast<std::size_t>(j)];
            acc += dd * dd;
          }
          best = std::min(best, acc);
        }
        mass[i] = p.weights[i] * best;
        tot += mass[i];
      }
      if (tot <= 0) break;
      double pick = rng.unit() * tot;
      std::size_t chosen = np - 1;
      for (std::size_t i = 0; i < np; ++i) {
        pick -= mass[i];
        if (pick <= 0) { chosen = i; break; }
      }
      centers.push_back(std::vector<double>(p.centers[chosen].coords.begin(), p.centers[chosen].coords.end()));
    }
    // Lloyd to convergence.
    std::vector<int> assign(np, -1);
    for (int iter = 0; iter < 200; ++iter) {
      bool moved = false;
      for (std::size_t i = 0; i < np; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int bi = 0;
        for (std::size_t c = 0; c < centers.size(); ++c) {
          double acc = 0;
          for (int j = 0; j < d; ++j) {
            double dd = static_cast<double>(p.centers[i][j]) - centers[c][static_cast<std::size_t>(j)];
            acc += dd * dd;
          }
          if (acc < best) { best = acc; bi = static_cast<int>(c); }
        }
        if (assign[i] != bi) { assign[i] = bi; moved = true; }
      }
      if (!moved) break;
      std::vector<std::vector<double>> sums(centers.size(), std::vector<double>(static_cast<std::size_t>(d), 0.0));
      std::vector<double> wsum(centers.size(), 0.0);
      for (std::size_t i = 0; i < np; ++i) {
        auto g = static_cast<std::size_t>(assign[i]);
        wsum[g] += p.weights[i];
        for (int j = 0; j < d; ++j)
          sums[g][static_cast<std::size_t>(j)] += p.weights[i] * static_cast<double>(p.centers[i][j]);
      }
      for (std::size_t c = 0; c < centers.size(); ++c)
        if (wsum[c] > 0)
          for (int j = 0; j < d; ++j)
            centers[c][static_cast<std::size_t>(j)] = sums[c][static_cast<std::size_t>(j)] / wsum[c];
    }
    double cost = weighted_cost(p, centers);
    if (cost < best_cost) {
      best_cost = cost;
      best_centers = centers;
    }
  }
  for (const auto& c : best_centers) out.centers.push_back(round_center(c, side));
  while (out.centers.size() < static_cast<std::size_t>(k))
    out.centers.push_back(out.centers.front());
  out.estimated_cost = best_cost;
  return out;
}

KmeansRun kmeans_pipeline(CondOracle& o, int k, const Params& params,
                          const KmeansOptions& opt, const Tunables& t) {
  const Dataset& ds = o.dataset();
  std::uint64_t q0 = o.ledger().queries(), d0 = o.ledger().desc_cost();
  StreamRng rng = StreamRng(params.seed).fork(0x6b6d);

  KmeansRun run;
  CenterSet candidates = d2_sample_centers(o, k, params, rng, opt, t);
  CenterSet weighted = voronoi_weights(o, candidates, params.delta / 3.0, rng, opt, t);
  run.clustering = solve_weighted(weighted, k, ds.side(), rng, opt);
  run.coreset = std::move(weighted);

  // Cost report through the sampling model itself.
  WeightFn cost_fn = min_sqdist_fn(run.clustering.centers, ds.dim(), ds.side());
  Predicate positive = Predicate::weight_compare(cost_fn, CmpOp::GT, 0);
  EstimateResult cost = sum_weights(o, positive, cost_fn, std::min(params.eps, 0.25),
                                    params.delta / 3.0, rng, t, "kmeans.cost");
  run.clustering.estimated_cost = cost.value;
  run.queries = o.ledger().queries() - q0;
  run.desc_cost = o.ledger().desc_cost() - d0;
  return run;
}

}  // namespace condsub
