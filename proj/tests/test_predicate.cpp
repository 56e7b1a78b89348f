// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <functional>

#include "condsub/predicate.hpp"
#include "condsub/prg.hpp"
#include "condsub/rng.hpp"

using namespace condsub;

TEST_CASE("leaf predicates") {
  Point x{3, 4};
  CHECK(Predicate::const_true().eval(x));
  CHECK(!Predicate::const_false().eval(x));
  CHECK(Predicate::coord_compare(0, CmpOp::LE, 3).eval(x));
  CHECK(!Predicate::coord_compare(1, CmpOp::LT, 4).eval(x));
  CHECK(Predicate::not_equal_point(Point{3, 5}).eval(x));
  CHECK(!Predicate::not_equal_point(Point{3, 4}).eval(x));
  // Boundary-inclusive squared distance.
  Predicate ball = Predicate::sqdist_compare(Point{1, 1}, CmpOp::LE, 25);
  CHECK(ball.eval(Point{4, 5}));
  CHECK(!ball.eval(Point{5, 5}));
}

TEST_CASE("size metric is node count with gate overhead") {
  Predicate t = Predicate::const_true();
  Predicate f = Predicate::const_false();
  CHECK(t.size() == 1);
  CHECK(Predicate::conjoin(t, f).size() == 3);
  CHECK(Predicate::negate(t).size() == 2);
  Predicate a = Predicate::coord_compare(0, CmpOp::GT, 2);
  CHECK(Predicate::conjoin(a, t).size() > a.size());
}

TEST_CASE("size matches an independent recount on random trees") {
  StreamRng rng(5);
  std::function<Predicate(int)> make = [&](int depth) -> Predicate {
    if (depth == 0 || rng.bounded(4) == 0) {
      switch (rng.bounded(3)) {
        case 0: return Predicate::const_true();
        case 1: return Predicate::coord_compare(0, CmpOp::GE, static_cast<Coord>(1 + rng.bounded(8)));
        default: return Predicate::sqdist_compare(Point{2, 2}, CmpOp::LE, 9);
      }
    }
    switch (rng.bounded(3)) {
      case 0: return Predicate::conjoin(make(depth - 1), make(depth - 1));
      case 1: return Predicate::disjoin(make(depth - 1), make(depth - 1));
      default: return Predicate::negate(make(depth - 1));
    }
  };
  // Recount via the JSON dump: every node carries one "kind".
  std::function<std::int64_t(const nlohmann::json&)> walk = [&](const nlohmann::json& j) {
    std::int64_t s = 1;
    if (j.contains("children"))
      for (const auto& c : j["children"]) s += walk(c);
    return s;
  };
  for (int rep = 0; rep < 100; ++rep) {
    Predicate p = make(4);
    CHECK(p.size() == walk(p.debug_json()));
  }
}

TEST_CASE("boolean semantics agree with a direct evaluator on the full 8x8 grid") {
  StreamRng rng(11);
  struct Mirror {
    std::function<bool(PointSpan)> fn;
    Predicate pred;
  };
  std::function<Mirror(int)> make = [&](int depth) -> Mirror {
    if (depth == 0 || rng.bounded(4) == 0) {
      switch (rng.bounded(4)) {
        case 0: return {[](PointSpan) { return true; }, Predicate::const_true()};
        case 1: return {[](PointSpan) { return false; }, Predicate::const_false()};
        case 2: {
          auto th = static_cast<Coord>(1 + rng.bounded(8));
          int ax = static_cast<int>(rng.bounded(2));
          return {[ax, th](PointSpan p) { return p[static_cast<std::size_t>(ax)] >= th; },
                  Predicate::coord_compare(ax, CmpOp::GE, th)};
        }
        default: {
          Point c{static_cast<Coord>(1 + rng.bounded(8)), static_cast<Coord>(1 + rng.bounded(8))};
          auto r2 = static_cast<std::int64_t>(rng.bounded(40));
          return {[c, r2](PointSpan p) { return squared_distance(p, c) <= r2; },
                  Predicate::sqdist_compare(c, CmpOp::LE, r2)};
        }
      }
    }
    Mirror a = make(depth - 1);
    switch (rng.bounded(3)) {
      case 0: {
        Mirror b = make(depth - 1);
        auto fa = a.fn, fb = b.fn;
        return {[fa, fb](PointSpan p) { return fa(p) && fb(p); },
                Predicate::conjoin(a.pred, b.pred)};
      }
      case 1: {
        Mirror b = make(depth - 1);
        auto fa = a.fn, fb = b.fn;
        return {[fa, fb](PointSpan p) { return fa(p) || fb(p); },
                Predicate::disjoin(a.pred, b.pred)};
      }
      default: {
        auto fa = a.fn;
        return {[fa](PointSpan p) { return !fa(p); }, Predicate::negate(a.pred)};
      }
    }
  };
  for (int rep = 0; rep < 60; ++rep) {
    Mirror m = make(5);
    for (Coord x = 1; x <= 8; ++x)
      for (Coord y = 1; y <= 8; ++y) {
        Point p{x, y};
        CHECK(m.pred.eval(p) == m.fn(p));
      }
  }
}

TEST_CASE("conjoin identity, annihilator, and set intersection") {
  Predicate half = Predicate::coord_compare(0, CmpOp::LE, 8);
  Predicate ball = Predicate::sqdist_compare(Point{8, 8}, CmpOp::LE, 36);
  Predicate both = Predicate::conjoin(half, ball);
  for (Coord x = 1; x <= 16; ++x)
    for (Coord y = 1; y <= 16; ++y) {
      Point p{x, y};
      CHECK(Predicate::conjoin(half, Predicate::const_true()).eval(p) == half.eval(p));
      CHECK(!Predicate::conjoin(half, Predicate::const_false()).eval(p));
      CHECK(both.eval(p) == (half.eval(p) && ball.eval(p)));
    }
}

TEST_CASE("weight compare with interval-checked weights") {
  WeightExpr e = WeightExpr::add({WeightExpr::coord(0), WeightExpr::coord(1)});
  WeightFn f = WeightFn::make(e, 32, 2, 16);
  Predicate p = Predicate::weight_compare(f, CmpOp::GE, 20);
  CHECK(p.eval(Point{10, 10}));
  CHECK(!p.eval(Point{3, 4}));
  CHECK(p.size() == 1 + f.expr().size());
  CHECK_THROWS(WeightFn::make(e, 16, 2, 16));
}

TEST_CASE("weight expressions: interval guards, indicators, clamp") {
  CHECK_THROWS(WeightExpr::constant(-1));
  WeightExpr big = WeightExpr::mul({WeightExpr::constant(std::int64_t(1) << 40),
                                    WeightExpr::constant(std::int64_t(1) << 40)});
  CHECK_THROWS(WeightFn::make(big, std::int64_t(1) << 62, 1, 4));
  WeightExpr d0 = WeightExpr::sqdist_to(Point{1, 1});
  WeightExpr d1 = WeightExpr::sqdist_to(Point{8, 8});
  WeightFn f = WeightFn::make(WeightExpr::ind_lt(d0, d1), 1, 2, 8);
  CHECK(f(Point{2, 2}) == 1);
  CHECK(f(Point{7, 7}) == 0);
  WeightFn fc = WeightFn::make(WeightExpr::clamp(WeightExpr::coord(0), 2, 5), 5, 1, 8);
  CHECK(fc(Point{1}) == 2);
  CHECK(fc(Point{7}) == 5);
}

TEST_CASE("min tournament over centers") {
  std::vector<Point> centers = {Point{1, 1}, Point{16, 16}, Point{1, 16}};
  WeightExpr f = WeightExpr::min_sqdist(centers);
  WeightFn fn = WeightFn::make(f, 2 * 15 * 15, 2, 16);
  for (Coord x : {1, 5, 16})
    for (Coord y : {1, 9, 16}) {
      Point p{x, y};
      std::int64_t want = std::min({squared_distance(p, centers[0]),
                                    squared_distance(p, centers[1]),
                                    squared_distance(p, centers[2])});
      CHECK(fn(p) == want);
    }
}

TEST_CASE("cell predicates: membership and neighbor search") {
  GridSpec g(2, 16, 3 * GridSpec::kFpDen, {0, 0});
  std::vector<std::int64_t> cells;
  cells.push_back(g.linear_of_point(Point{1, 1}));
  cells.push_back(g.linear_of_point(Point{8, 8}));
  Predicate in = Predicate::in_cell_set(g, cells);
  CHECK(in.eval(Point{2, 2}));
  CHECK(!in.eval(Point{5, 5}));
  Predicate nb = Predicate::neighbor_of_cells(g, cells, 1);
  CHECK(nb.eval(Point{5, 2}));
  CHECK(!nb.eval(Point{5, 5}));
  CHECK(nb.eval(Point{8, 5}));
  std::vector<std::int64_t> more = cells;
  more.push_back(g.linear_of_point(Point{16, 16}));
  CHECK(Predicate::in_cell_set(g, more).size() > in.size());
}

TEST_CASE("neighbor predicate agrees with brute force over cell lists") {
  StreamRng rng(77);
  GridSpec g(2, 32, 2 * GridSpec::kFpDen, {GridSpec::kFpDen / 2, GridSpec::kFpDen / 3});
  for (int rep = 0; rep < 40; ++rep) {
    std::vector<std::int64_t> cells;
    for (int i = 0; i < 12; ++i) {
      Point p{static_cast<Coord>(1 + rng.bounded(32)), static_cast<Coord>(1 + rng.bounded(32))};
      cells.push_back(g.linear_of_point(p));
    }
    std::int64_t thr = static_cast<std::int64_t>(rng.bounded(9));
    Predicate nb = Predicate::neighbor_of_cells(g, cells, thr);
    for (int probe = 0; probe < 50; ++probe) {
      Point q{static_cast<Coord>(1 + rng.bounded(32)), static_cast<Coord>(1 + rng.bounded(32))};
      std::int64_t qc[2];
      g.cell_of(q, qc);
      bool want = false;
      for (std::int64_t id : cells) {
        std::int64_t cc[2];
        g.from_linear(id, cc);
        std::int64_t d0 = cc[0] - qc[0], d1 = cc[1] - qc[1];
        if (d0 * d0 + d1 * d1 <= thr) want = true;
      }
      CHECK(nb.eval(q) == want);
    }
  }
}

TEST_CASE("grid shift moves cell boundaries") {
  GridSpec g0(1, 16, 4 * GridSpec::kFpDen, {0});
  GridSpec gh(1, 16, 4 * GridSpec::kFpDen, {2 * GridSpec::kFpDen});
  std::int64_t c0a, c0b, cha, chb;
  g0.cell_of(Point{3}, &c0a);  // floor(3/4) = 0, floor(4/4) = 1
  g0.cell_of(Point{4}, &c0b);
  gh.cell_of(Point{5}, &cha);  // shifted: floor((5-2)/4) = 0, floor((6-2)/4) = 1
  gh.cell_of(Point{6}, &chb);
  CHECK(c0a != c0b);
  CHECK(cha != chb);
  // The unshifted grid keeps 5 and 6 together; the shift separates 5 from 6.
  std::int64_t u5, u6;
  g0.cell_of(Point{5}, &u5);
  g0.cell_of(Point{6}, &u6);
  CHECK(u5 == u6);
}

TEST_CASE("corner points floor into the expected cell with zero shift") {
  GridSpec g(2, 16, 4 * GridSpec::kFpDen, {0, 0});
  std::int64_t c[2];
  g.cell_of(Point{8, 12}, c);
  // Raw floor values are 8/4 = 2 and 12/4 = 3 before normalization.
  CHECK(c[0] + g.min_cell() == 2);
  CHECK(c[1] + g.min_cell() == 3);
}

TEST_CASE("evaluation with a fixed seed is reproducible") {
  Predicate p = pseudo_subset_domain(2, 64, SubsetInclusion::constant(1, 3), 1.0 / 4096, 99);
  StreamRng rng(4);
  for (int rep = 0; rep < 200; ++rep) {
    Point x{static_cast<Coord>(1 + rng.bounded(64)), static_cast<Coord>(1 + rng.bounded(64))};
    CHECK(p.eval(x) == p.eval(x));
  }
}

TEST_CASE("debug json names node kinds") {
  Predicate p = Predicate::conjoin(Predicate::const_true(),
                                   Predicate::coord_compare(1, CmpOp::LT, 5));
  nlohmann::json j = p.debug_json();
  CHECK(j["kind"] == "and");
  CHECK(j["children"].size() == 2);
}
