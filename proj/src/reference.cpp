// SPDX-License-Identifier: Apache-2.0
#include "condsub/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace condsub {
namespace reference {

namespace {

void check_guard(const Dataset& ds, std::size_t guard) {
  if (ds.size() > guard)
    throw std::invalid_argument("reference: dataset above the brute-force guard");
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  }
  bool merge(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[static_cast<std::size_t>(a)] = b;
    return true;
  }
};

}  // namespace

std::int64_t exact_set_size(const Dataset& ds, const Predicate& c) {
  check_guard(ds, kScanGuard);
  std::int64_t n = 0;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (c.eval(ds.point(i))) ++n;
  return n;
}

std::int64_t exact_distinct(const Dataset& ds, const Predicate& c, const WeightFn& f) {
  check_guard(ds, kScanGuard);
  std::vector<std::int64_t> vals;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (c.eval(ds.point(i))) vals.push_back(f(ds.point(i)));
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  return static_cast<std::int64_t>(vals.size());
}

std::int64_t exact_max(const Dataset& ds, const Predicate& c, const WeightFn& f) {
  check_guard(ds, kScanGuard);
  std::int64_t best = -1;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (c.eval(ds.point(i))) best = std::max(best, f(ds.point(i)));
  return best;
}

double exact_sum(const Dataset& ds, const Predicate& c, const WeightFn& f) {
  check_guard(ds, kScanGuard);
  double acc = 0;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (c.eval(ds.point(i))) acc += static_cast<double>(f(ds.point(i)));
  return acc;
}

CellComponents exact_components(const Dataset& ds, const GridSpec& grid,
                                std::int64_t cell_sqdist_threshold) {
  check_guard(ds, kScanGuard);
  const int d = grid.dim;
  std::map<std::int64_t, std::vector<std::int64_t>> cell_coords;  // id -> coords
  std::int64_t buf[8];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    grid.cell_of(ds.point(i), buf);
    cell_coords.emplace(grid.linear_id(buf), std::vector<std::int64_t>(buf, buf + d));
  }
  CellComponents out;
  for (auto& [id, coords] : cell_coords) out.cells.push_back(id);
  UnionFind uf(out.cells.size());
  std::vector<const std::vector<std::int64_t>*> coords;
  for (auto& [id, cc] : cell_coords) coords.push_back(&cc);
  for (std::size_t a = 0; a < coords.size(); ++a)
    for (std::size_t b = a + 1; b < coords.size(); ++b) {
      std::int64_t acc = 0;
      for (int j = 0; j < d; ++j) {
        std::int64_t dd = (*coords[a])[static_cast<std::size_t>(j)] -
                          (*coords[b])[static_cast<std::size_t>(j)];
        acc += dd * dd;
      }
      if (acc <= cell_sqdist_threshold) uf.merge(static_cast<int>(a), static_cast<int>(b));
    }
  std::map<int, int> roots;
  out.component_of.resize(out.cells.size());
  for (std::size_t a = 0; a < out.cells.size(); ++a) {
    int r = uf.find(static_cast<int>(a));
    auto [it, fresh] = roots.emplace(r, static_cast<int>(roots.size()));
    out.component_of[a] = it->second;
    if (fresh) out.component_cells.push_back(0);
    out.component_cells[static_cast<std::size_t>(it->second)] += 1;
  }
  out.count = static_cast<int>(roots.size());
  return out;
}

int exact_point_components(const Dataset& ds, std::int64_t r2) {
  check_guard(ds, kScanGuard);
  UnionFind uf(ds.size());
  int comps = static_cast<int>(ds.size());
  for (std::size_t a = 0; a < ds.size(); ++a)
    for (std::size_t b = a + 1; b < ds.size(); ++b)
      if (squared_distance(ds.point(a), ds.point(b)) <= r2)
        if (uf.merge(static_cast<int>(a), static_cast<int>(b))) --comps;
  return comps;
}

double exact_mst_weight(const Dataset& ds) {
  check_guard(ds, kScanGuard);
  if (ds.size() < 2) throw std::invalid_argument("exact_mst_weight: need two points");
  const std::size_t n = ds.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<bool> used(n, false);
  double total = 0;
  std::size_t current = 0;
  used[0] = true;
  for (std::size_t added = 1; added < n; ++added) {
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      double d = std::sqrt(static_cast<double>(squared_distance(ds.point(current), ds.point(j))));
      dist[j] = std::min(dist[j], d);
    }
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
      if (!used[j] && dist[j] < bd) { bd = dist[j]; best = j; }
    used[best] = true;
    total += bd;
    current = best;
  }
  return total;
}

double exact_mst_weight_kruskal(const Dataset& ds) {
  check_guard(ds, 2'000);  // quadratic edge list
  const std::size_t n = ds.size();
  struct Edge { std::int64_t w2; int a, b; };
  std::vector<Edge> edges;
  edges.reserve(n * (n - 1) / 2);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      edges.push_back({squared_distance(ds.point(a), ds.point(b)),
                       static_cast<int>(a), static_cast<int>(b)});
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return x.w2 < y.w2; });
  UnionFind uf(n);
  double total = 0;
  for (const Edge& e : edges)
    if (uf.merge(e.a, e.b)) total += std::sqrt(static_cast<double>(e.w2));
  return total;
}

double kmeans_cost(const Dataset& ds, const std::vector<Point>& centers) {
  if (centers.empty()) throw std::invalid_argument("kmeans_cost: no centers");
  double acc = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (const Point& c : centers) best = std::min(best, squared_distance(ds.point(i), c));
    acc += static_cast<double>(best);
  }
  return acc;
}

KmeansBaseline exact_kmeans_baseline(const Dataset& ds, int k, int restarts,
                                     std::uint64_t seed) {
  check_guard(ds, kKmeansGuard);
  if (k < 1 || static_cast<std::size_t>(k) > ds.size())
    throw std::invalid_argument("exact_kmeans_baseline: bad k");
  const std::size_t n = ds.size();
  const int d = ds.dim();
  StreamRng rng(seed);
  KmeansBaseline out;
  out.cost = std::numeric_limits<double>::infinity();

  std::vector<double> mind2(n);
  std::vector<int> assign(n);
  for (int r = 0; r < restarts; ++r) {
    // d^2-weighted seeding.
    std::vector<std::vector<double>> centers;
    std::size_t first = rng.bounded(n);
    centers.push_back(std::vector<double>(ds.point(first).begin(), ds.point(first).end()));
    while (static_cast<int>(centers.size()) < k) {
      double total = 0;
      for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : centers) {
          double acc = 0;
          for (int j = 0; j < d; ++j) {
            double dd = static_cast<double>(ds.point(i)[static_cast<std::size_t>(j)]) - c[static_cast<std::size_t>(j)];
            acc += dd * dd;
          }
          best = std::min(best, acc);
        }
        mind2[i] = best;
        total += best;
      }
      double pick = rng.unit() * total;
      std::size_t chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        pick -= mind2[i];
        if (pick <= 0) { chosen = i; break; }
      }
      centers.push_back(std::vector<double>(ds.point(chosen).begin(), ds.point(chosen).end()));
    }
    // Lloyd iterations.
    for (int iter = 0; iter < 100; ++iter) {
      bool moved = false;
      for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int bi = 0;
        for (int c = 0; c < k; ++c) {
          double acc = 0;
          for (int j = 0; j < d; ++j) {
            double dd = static_cast<double>(ds.point(i)[static_cast<std::size_t>(j)]) -
                        centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
            acc += dd * dd;
          }
          if (acc < best) { best = acc; bi = c; }
        }
        if (assign[i] != bi) { assign[i] = bi; moved = true; }
      }
      if (!moved && iter > 0) break;
      std::vector<std::vector<double>> sums(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(d), 0.0));
      std::vector<std::int64_t> cnt(static_cast<std::size_t>(k), 0);
      for (std::size_t i = 0; i < n; ++i) {
        cnt[static_cast<std::size_t>(assign[i])] += 1;
        for (int j = 0; j < d; ++j)
          sums[static_cast<std::size_t>(assign[i])][static_cast<std::size_t>(j)] += static_cast<double>(ds.point(i)[static_cast<std::size_t>(j)]);
      }
      for (int c = 0; c < k; ++c)
        if (cnt[static_cast<std::size_t>(c)] > 0)
          for (int j = 0; j < d; ++j)
            centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] =
                sums[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] / static_cast<double>(cnt[static_cast<std::size_t>(c)]);
    }
    double cost = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double acc = 0;
        for (int j = 0; j < d; ++j) {
          double dd = static_cast<double>(ds.point(i)[static_cast<std::size_t>(j)]) -
                      centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
          acc += dd * dd;
        }
        best = std::min(best, acc);
      }
      cost += best;
    }
    if (cost < out.cost) {
      out.cost = cost;
      out.centers = centers;
    }
  }
  return out;
}

}  // namespace reference
}  // namespace condsub
