// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <map>
#include <set>

#include "condsub/kmeans.hpp"
#include "condsub/reference.hpp"

using namespace condsub;

namespace {

Dataset clustered_dataset(std::size_t n, Coord side, int clusters, double sigma,
                          std::uint64_t seed) {
  StreamRng rng(seed);
  std::vector<Point> centers;
  for (int c = 0; c < clusters; ++c)
    centers.push_back(Point{static_cast<Coord>(side / 4 + (c % 2) * side / 2),
                            static_cast<Coord>(side / 4 + (c / 2) * side / 2)});
  std::set<std::vector<Coord>> seen;
  std::vector<Point> pts;
  while (pts.size() < n) {
    const Point& c = centers[pts.size() % static_cast<std::size_t>(clusters)];
    std::vector<Coord> p(2);
    for (int j = 0; j < 2; ++j) {
      double g = 0;
      for (int it = 0; it < 12; ++it) g += rng.unit();
      g = (g - 6.0) * sigma;  // approximately normal
      p[static_cast<std::size_t>(j)] = std::clamp<Coord>(
          c[j] + static_cast<Coord>(std::llround(g)), 1, side);
    }
    if (seen.insert(p).second) pts.push_back(Point(p));
  }
  return Dataset(pts, side);
}

}  // namespace

TEST_CASE("d2 sampling: first draw uniform for k=1, zero-mass points never repeat") {
  Dataset ds = clustered_dataset(200, 256, 4, 6.0, 3);
  Params params(0.25, 0.1, 99);
  CondOracle o(ds, params.seed);
  StreamRng rng(7);
  KmeansOptions opt;
  opt.beta = 1.0;
  CenterSet one = d2_sample_centers(o, 1, params, rng, opt);
  CHECK(one.centers.size() == 1);

  opt.beta = 4.0;
  CenterSet many = d2_sample_centers(o, 3, params, rng, opt);
  CHECK(many.centers.size() == static_cast<std::size_t>(std::ceil(4.0 * 3)));
  std::set<std::vector<Coord>> uniq;
  for (const Point& p : many.centers) uniq.insert(p.coords);
  CHECK(uniq.size() == many.centers.size());
}

TEST_CASE("d2 sampling hits both far clusters") {
  // Two tight clusters far apart; a center set of 8 should touch both.
  int hits = 0;
  const int trials = 20;
  for (int s = 0; s < trials; ++s) {
    Dataset ds = clustered_dataset(120, 1024, 2, 3.0, 100 + static_cast<std::uint64_t>(s));
    Params params(0.25, 0.1, 500 + static_cast<std::uint64_t>(s));
    CondOracle o(ds, params.seed);
    StreamRng rng(params.seed);
    KmeansOptions opt;
    opt.beta = 4.0;
    CenterSet cs = d2_sample_centers(o, 2, params, rng, opt);
    bool low = false, high = false;
    for (const Point& p : cs.centers) {
      if (p[0] < 512) low = true;  // two clusters sit apart on axis 0
      else high = true;
    }
    if (low && high) ++hits;
  }
  CHECK(hits >= trials - 1);
}

TEST_CASE("d2 draw distribution tracks exact squared-distance weights") {
  // One fixed center; next-draw distribution vs the exact d^2 law.
  std::vector<Point> pts;
  StreamRng gen(17);
  std::set<std::vector<Coord>> seen;
  while (pts.size() < 20) {
    std::vector<Coord> c = {static_cast<Coord>(1 + gen.bounded(64)),
                            static_cast<Coord>(1 + gen.bounded(64))};
    if (seen.insert(c).second) pts.push_back(Point(c));
  }
  Dataset ds(pts, 64);
  std::vector<Point> chosen = {ds.point_copy(0)};
  WeightFn f = WeightFn::make(WeightExpr::min_sqdist(chosen), 2 * 63 * 63, 2, 64);
  Predicate support = Predicate::weight_compare(f, CmpOp::GT, 0);

  std::map<std::size_t, double> expected;
  double total = 0;
  for (std::size_t i = 1; i < ds.size(); ++i) {
    expected[i] = static_cast<double>(f(ds.point(i)));
    total += expected[i];
  }
  CondOracle o(ds, 31);
  StreamRng rng(41);
  std::map<std::size_t, int> freq;
  int draws = 0;
  for (int i = 0; i < 6000; ++i) {
    auto r = wcond(o, support, f, 0.02, 0.1, rng);
    if (!r) continue;
    freq[r->index] += 1;
    ++draws;
  }
  REQUIRE(draws > 5000);
  double tv = 0;
  for (auto& [idx, w] : expected)
    tv += std::abs(static_cast<double>(freq[idx]) / draws - w / total);
  CHECK(tv / 2.0 <= 0.05);
}

TEST_CASE("voronoi weights: single candidate covers everything; partitions track scans") {
  Dataset ds = clustered_dataset(300, 256, 4, 8.0, 5);
  Params params(0.25, 0.1, 77);
  CondOracle o(ds, params.seed);
  StreamRng rng(params.seed + 1);
  CenterSet single;
  single.centers.push_back(ds.point_copy(0));
  CenterSet w1 = voronoi_weights(o, single, 0.1, rng);
  REQUIRE(w1.weights.size() == 1);
  CHECK(w1.weights[0] == doctest::Approx(static_cast<double>(ds.size())).epsilon(0.25));

  // Two centers, symmetric data: weights near the exact Voronoi counts.
  CenterSet two;
  two.centers.push_back(Point{64, 64});
  two.centers.push_back(Point{192, 192});
  CenterSet w2 = voronoi_weights(o, two, 0.1, rng);
  REQUIRE(w2.weights.size() == 2);
  std::int64_t exact0 = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::int64_t d0 = squared_distance(ds.point(i), two.centers[0]);
    std::int64_t d1 = squared_distance(ds.point(i), two.centers[1]);
    if (d0 <= d1) ++exact0;
  }
  CHECK(w2.weights[0] == doctest::Approx(static_cast<double>(exact0)).epsilon(0.3));
  double sum = w2.weights[0] + w2.weights[1];
  CHECK(sum == doctest::Approx(static_cast<double>(ds.size())).epsilon(0.3));
}

TEST_CASE("solve_weighted: coreset of size k returns itself; duplicates merge") {
  CenterSet p;
  p.centers = {Point{10, 10}, Point{50, 50}, Point{90, 10}};
  p.weights = {5, 3, 2};
  StreamRng rng(3);
  Clustering c = solve_weighted(p, 3, 128, rng);
  CHECK(c.centers.size() == 3);
  CHECK(!c.padded);
  CHECK(c.estimated_cost == doctest::Approx(0.0));

  CenterSet dup;
  dup.centers = {Point{10, 10}, Point{10, 10}, Point{90, 90}};
  dup.weights = {1, 4, 2};
  Clustering c2 = solve_weighted(dup, 2, 128, rng);
  CHECK(c2.centers.size() == 2);
  CHECK(c2.estimated_cost == doctest::Approx(0.0));

  CenterSet small;
  small.centers = {Point{10, 10}};
  small.weights = {2};
  Clustering c3 = solve_weighted(small, 2, 128, rng);
  CHECK(c3.padded);
  CHECK(c3.centers.size() == 2);
}

TEST_CASE("solve_weighted: separated heavy groups get one center each") {
  CenterSet p;
  StreamRng rng(9);
  std::vector<Point> anchors = {Point{20, 20}, Point{100, 20}, Point{20, 100}, Point{100, 100}};
  for (const Point& a : anchors)
    for (int j = 0; j < 3; ++j) {
      p.centers.push_back(Point{a[0] + j, a[1]});
      p.weights.push_back(10);
    }
  Clustering c = solve_weighted(p, 4, 128, rng);
  REQUIRE(c.centers.size() == 4);
  for (const Point& a : anchors) {
    bool close = false;
    for (const Point& got : c.centers)
      if (squared_distance(a, got) < 100) close = true;
    CHECK(close);
  }
  // Heuristic stays within a constant factor of the exhaustive optimum.
  double exact = exhaustive_weighted_cost(p, 4);
  KmeansOptions opt;
  opt.exhaustive_limit = 0;  // force the Lloyd path
  Clustering lloyd = solve_weighted(p, 4, 128, rng, opt);
  CHECK(lloyd.estimated_cost <= std::max(exact * 9.0, 1e-9));
}

TEST_CASE("pipeline: k distinct points cost zero, determinism per seed") {
  std::vector<Point> pts = {Point{10, 10}, Point{40, 40}, Point{70, 10}, Point{20, 60}};
  Dataset ds(pts, 128);
  Params params(0.25, 0.2, 4242);
  KmeansOptions opt;
  opt.beta = 2.0;
  CondOracle o1(ds, params.seed);
  KmeansRun r1 = kmeans_pipeline(o1, 4, params, opt);
  CHECK(reference::kmeans_cost(ds, r1.clustering.centers) == doctest::Approx(0.0));

  CondOracle o2(ds, params.seed);
  KmeansRun r2 = kmeans_pipeline(o2, 4, params, opt);
  REQUIRE(r1.clustering.centers.size() == r2.clustering.centers.size());
  for (std::size_t i = 0; i < r1.clustering.centers.size(); ++i)
    CHECK(r1.clustering.centers[i] == r2.clustering.centers[i]);
  CHECK(r1.queries == r2.queries);
}

TEST_CASE("pipeline cost is within a constant factor of the Lloyd baseline") {
  int ok = 0;
  const int trials = 5;
  for (int s = 0; s < trials; ++s) {
    Dataset ds = clustered_dataset(800, 1024, 4, 12.0, 900 + static_cast<std::uint64_t>(s));
    Params params(0.25, 0.1, 7000 + static_cast<std::uint64_t>(s));
    CondOracle o(ds, params.seed);
    KmeansRun run = kmeans_pipeline(o, 4, params);
    double ours = reference::kmeans_cost(ds, run.clustering.centers);
    double base = reference::exact_kmeans_baseline(ds, 4, 20, 1).cost;
    if (ours <= 20.0 * base) ++ok;
  }
  CHECK(ok >= trials - 1);
}
