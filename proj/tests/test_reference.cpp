// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <set>

#include "condsub/reference.hpp"

using namespace condsub;

namespace {

Dataset random_dataset(std::size_t n, Coord side, std::uint64_t seed, int dim = 2) {
  StreamRng rng(seed);
  std::set<std::vector<Coord>> seen;
  std::vector<Point> pts;
  while (pts.size() < n) {
    std::vector<Coord> c;
    for (int j = 0; j < dim; ++j) c.push_back(1 + static_cast<Coord>(rng.bounded(static_cast<std::uint64_t>(side))));
    if (seen.insert(c).second) pts.push_back(Point(c));
  }
  return Dataset(pts, side);
}

}  // namespace

TEST_CASE("exact scans: trivial identities") {
  Dataset ds = random_dataset(300, 128, 1);
  CHECK(reference::exact_set_size(ds, Predicate::const_true()) == 300);
  CHECK(reference::exact_set_size(ds, Predicate::const_false()) == 0);
  WeightFn one = WeightFn::make(WeightExpr::constant(1), 1, 2, 128);
  CHECK(reference::exact_sum(ds, Predicate::const_true(), one) == doctest::Approx(300.0));
  CHECK(reference::exact_distinct(ds, Predicate::const_true(), one) == 1);
  CHECK(reference::exact_max(ds, Predicate::const_false(), one) == -1);
}

TEST_CASE("mst weight: two points, unit square, cross-check") {
  Dataset two(std::vector<Point>{Point{1, 1}, Point{4, 5}}, 8);
  CHECK(reference::exact_mst_weight(two) == doctest::Approx(5.0));
  Dataset square(std::vector<Point>{Point{1, 1}, Point{1, 2}, Point{2, 1}, Point{2, 2}}, 4);
  CHECK(reference::exact_mst_weight(square) == doctest::Approx(3.0));
  for (int s = 0; s < 20; ++s) {
    Dataset ds = random_dataset(100, 64, 10 + static_cast<std::uint64_t>(s));
    CHECK(reference::exact_mst_weight(ds) ==
          doctest::Approx(reference::exact_mst_weight_kruskal(ds)).epsilon(1e-9));
  }
}

TEST_CASE("mst weight guard") {
  Dataset one(std::vector<Point>{Point{1, 1}}, 4);
  CHECK_THROWS(reference::exact_mst_weight(one));
}

TEST_CASE("cell components at zero radius count occupied cells") {
  Dataset ds = random_dataset(200, 256, 3);
  GridSpec g(2, 256, 5 * GridSpec::kFpDen, {0, 0});
  auto comp = reference::exact_components(ds, g, 0);
  std::set<std::int64_t> cells;
  for (std::size_t i = 0; i < ds.size(); ++i) cells.insert(g.linear_of_point(ds.point(i)));
  CHECK(comp.cells.size() == cells.size());
  CHECK(comp.count == static_cast<int>(cells.size()));
}

TEST_CASE("point components match a pairwise check and fall with radius") {
  Dataset ds = random_dataset(80, 64, 5);
  int prev = static_cast<int>(ds.size());
  for (std::int64_t r2 : {0, 4, 16, 64, 256, 1024}) {
    int c = reference::exact_point_components(ds, r2);
    CHECK(c <= prev);
    prev = c;
  }
  CHECK(reference::exact_point_components(ds, 2 * 63 * 63) == 1);
}

TEST_CASE("distinct values cross-check: scan vs sort-unique") {
  Dataset ds = random_dataset(500, 512, 7);
  WeightFn f = WeightFn::make(WeightExpr::coord(0), 512, 2, 512);
  std::set<std::int64_t> vals;
  for (std::size_t i = 0; i < ds.size(); ++i) vals.insert(f(ds.point(i)));
  CHECK(reference::exact_distinct(ds, Predicate::const_true(), f) ==
        static_cast<std::int64_t>(vals.size()));
}

TEST_CASE("kmeans baseline improves with restarts and reports its own cost") {
  Dataset ds = random_dataset(400, 256, 11);
  auto one = reference::exact_kmeans_baseline(ds, 3, 1, 5);
  auto many = reference::exact_kmeans_baseline(ds, 3, 10, 5);
  CHECK(many.cost <= one.cost * (1.0 + 1e-9));
  std::vector<Point> centers;
  for (const auto& c : many.centers) {
    Point p;
    for (double v : c) p.coords.push_back(static_cast<Coord>(std::llround(v)));
    centers.push_back(p);
  }
  // Rounded-center cost should be in the same ballpark as the baseline's own.
  CHECK(reference::kmeans_cost(ds, centers) <= many.cost * 1.2 + 100.0);
}
