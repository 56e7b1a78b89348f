// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "condsub/primitives.hpp"

namespace condsub {

struct CenterSet {
  std::vector<Point> centers;
  std::vector<double> weights;  // empty until weighted
};

struct Clustering {
  std::vector<Point> centers;
  double estimated_cost = 0;
  bool padded = false;  // fewer coreset points than k
};

struct KmeansOptions {
  double beta = 8.0;        // oversampling: |coreset| = ceil(beta * k)
  double voronoi_eps = 0.25;
  double draw_tv = 0.0625;  // per-draw total variation target
  int lloyd_restarts = 10;
  int exhaustive_limit = 12;
};

/// Adaptive sampling of ceil(beta*k) candidate centers: the first uniform,
/// each next drawn proportionally to the squared distance from the set so
/// far. Already-chosen points carry zero weight and cannot repeat.
CenterSet d2_sample_centers(CondOracle& o, int k, const Params& params, StreamRng& rng,
                            const KmeansOptions& opt = {},
                            const Tunables& t = default_tunables());

/// Attach a count estimate to every candidate: the number of points whose
/// nearest candidate it is (ties to the lowest index). Zero-count
/// candidates are dropped.
CenterSet voronoi_weights(CondOracle& o, const CenterSet& p, double delta,
                          StreamRng& rng, const KmeansOptions& opt = {},
                          const Tunables& t = default_tunables());

/// Weighted k-means on the candidate set only: exhaustive partition search
/// up to opt.exhaustive_limit points, otherwise seeded Lloyd over restarts.
Clustering solve_weighted(const CenterSet& p, int k, Coord side, StreamRng& rng,
                          const KmeansOptions& opt = {});

/// Test support: globally optimal weighted clustering by enumerating
/// set partitions (small inputs only).
double exhaustive_weighted_cost(const CenterSet& p, int k);

struct KmeansRun {
  Clustering clustering;
  CenterSet coreset;
  std::uint64_t queries = 0;
  std::uint64_t desc_cost = 0;
};

KmeansRun kmeans_pipeline(CondOracle& o, int k, const Params& params,
                          const KmeansOptions& opt = {},
                          const Tunables& t = default_tunables());

}  // namespace condsub
