// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "condsub/harness.hpp"

using namespace condsub;

TEST_CASE("collinear generator lays points on the stated arithmetic line") {
  Dataset ds = generate_dataset("collinear:n=5,spacing=10,d=1", 7);
  REQUIRE(ds.size() == 5);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(ds.point(i)[0] == 1 + 10 * static_cast<Coord>(i));
}

TEST_CASE("clustered generator uses exactly k cluster anchors") {
  Dataset ds = generate_dataset("clustered:n=300,k=3,sigma=2,side=4096", 11);
  // With tiny sigma, points concentrate around three anchors: count the
  // distinct coarse cells occupied.
  std::set<std::pair<Coord, Coord>> coarse;
  for (std::size_t i = 0; i < ds.size(); ++i)
    coarse.insert({ds.point(i)[0] / 256, ds.point(i)[1] / 256});
  CHECK(coarse.size() <= 6);  // 3 anchors, possibly straddling cell borders
  CHECK(ds.size() == 300);
}

TEST_CASE("uniform generator produces distinct points (construction invariant)") {
  Dataset ds = generate_dataset("uniform:n=10000,d=2,side=1000000", 3);
  std::set<std::pair<Coord, Coord>> seen;
  for (std::size_t i = 0; i < ds.size(); ++i)
    CHECK(seen.insert({ds.point(i)[0], ds.point(i)[1]}).second);
}

TEST_CASE("generator determinism and impossible requests") {
  Dataset a = generate_dataset("uniform:n=50,d=2,side=64", 9);
  Dataset b = generate_dataset("uniform:n=50,d=2,side=64", 9);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(std::equal(a.point(i).begin(), a.point(i).end(), b.point(i).begin()));
  CHECK_THROWS(generate_dataset("uniform:n=100,d=1,side=50", 1));
  CHECK_THROWS(generate_dataset("nonsense:n=1", 1));
}

TEST_CASE("lattice generator spaces points evenly") {
  Dataset ds = generate_dataset("lattice:n=16,d=2", 5);
  CHECK(ds.size() == 16);
  std::set<Coord> xs;
  for (std::size_t i = 0; i < ds.size(); ++i) xs.insert(ds.point(i)[0]);
  CHECK(xs.size() == 4);
}

TEST_CASE("experiment runs are reproducible: byte-identical CSV") {
  ExperimentSpec spec;
  spec.task = "se";
  spec.dataset = "gen:uniform:n=500,d=2,side=1024";
  spec.eps = 0.2;
  spec.delta = 0.1;
  spec.trials = 4;
  spec.seed = 77;
  spec.jobs = 2;
  spec.zero_wall = true;
  Report r1 = run_experiment(spec);
  Report r2 = run_experiment(spec);
  std::ostringstream a, b;
  r1.write_csv(a, spec.zero_wall);
  r2.write_csv(b, spec.zero_wall);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("trial,seed,estimate,exact,rel_error,success,queries,desc_cost,wall_ms\n", 0) == 0);
}

TEST_CASE("trivial single-trial run: empty support") {
  // A dataset whose halfspace predicate can be anything; use the se task on
  // a singleton so the small-case path answers exactly.
  ExperimentSpec spec;
  spec.task = "se";
  spec.dataset = "gen:uniform:n=1,d=2,side=16";
  spec.trials = 1;
  spec.seed = 3;
  Report r = run_experiment(spec);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].rel_error <= spec.eps);
  CHECK(r.rows[0].success);
  CHECK(r.failure_rate == 0.0);
}

TEST_CASE("slope fit matches a hand computation on four points") {
  // y = 3 * n^0.5 exactly: slope 0.5.
  std::vector<double> n = {1e3, 1e4, 1e5, 1e6};
  std::vector<double> q;
  for (double v : n) q.push_back(3.0 * std::sqrt(v));
  CHECK(loglog_slope(n, q) == doctest::Approx(0.5).epsilon(1e-9));
  // Hand-computed least squares on an asymmetric set.
  std::vector<double> n2 = {10, 100, 1000, 10000};
  std::vector<double> q2 = {5, 6, 9, 10};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    double x = std::log(n2[i]), y = std::log(q2[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  double want = (4 * sxy - sx * sy) / (4 * sxx - sx * sx);
  CHECK(loglog_slope(n2, q2) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("spec json round trip") {
  ExperimentSpec spec;
  spec.task = "mst";
  spec.dataset = "gen:uniform:n=100,d=3,side=64";
  spec.eps = 0.25;
  spec.trials = 9;
  spec.max_failure_rate = 0.2;
  nlohmann::json j = spec.to_json();
  ExperimentSpec back = ExperimentSpec::from_json(j);
  CHECK(back.task == spec.task);
  CHECK(back.dataset == spec.dataset);
  CHECK(back.eps == spec.eps);
  CHECK(back.trials == spec.trials);
  CHECK(back.max_failure_rate == spec.max_failure_rate);
}

TEST_CASE("failure gate drives gate_passed") {
  ExperimentSpec spec;
  spec.task = "max";
  spec.dataset = "gen:uniform:n=200,d=2,side=512";
  spec.trials = 3;
  spec.seed = 21;
  spec.max_failure_rate = 1.0;
  Report ok = run_experiment(spec);
  CHECK(ok.gate_passed);
  // max task is exact, so rel_error is zero and any positive gate passes.
  for (const TrialRow& row : ok.rows) CHECK(row.rel_error == 0.0);
}

TEST_CASE("distribution task reports total variation against the target") {
  ExperimentSpec spec;
  spec.task = "wcond";
  spec.dataset = "gen:lattice:n=16,d=2,side=64";
  spec.eps = 0.05;
  spec.delta = 0.05;
  spec.draws = 3000;
  spec.trials = 1;
  spec.seed = 13;
  Report r = run_experiment(spec);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].estimate >= 0.0);
  CHECK(r.rows[0].estimate <= 0.08);  // weights 1..16 over axis 0 values
}
