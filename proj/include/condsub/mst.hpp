// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "condsub/grid.hpp"
#include "condsub/primitives.hpp"

namespace condsub {

struct MstOptions {
  double shift_rep_const = 4.0;  // shift candidates = ceil(c * log2(1/delta))
  double shift_eps = 0.5;        // coarse occupancy precision used for ranking
  double shift_delta = 0.25;
  double occupancy_eps_frac = 0.4;  // occupied-cell estimate precision = eps * frac
  double occupancy_z = 1.6;         // deviation score for the occupancy refinement
  double hoeffding_const = 2.0;     // sample cap = ceil(c * t^2 * ln(2/delta_level))
  double sample_z = 2.5;            // deviation score for the mean stop rule
  double level_rel_tol = 0.08;      // per-level relative tolerance on mu
  double budget_rel_tol = 0.03;     // share of the running total a level may miss
  int sample_min = 24;
  int sample_batch = 8;
  int sample_max = 1200;  // practical ceiling below the cap; confidence-based stop
  int level_skip_run = 3;
  int max_level_override = -1;  // testing: stop after this many levels
};

/// Grid for one scale level: cell side eps*(1+eps)^i/sqrt(d) in fixed point.
GridSpec make_level_grid(int dim, Coord side, double eps, int level,
                         std::vector<std::int64_t> shift_fp);

/// Cells are adjacent when their centers lie within (1+eps)^level: exact
/// integer bound on the squared cell-coordinate distance.
std::int64_t cell_adjacency_threshold(const GridSpec& grid, const Ratio& eps, int level);

/// 1-based linear cell id of a point, as a weight usable by the counting
/// and sampling primitives.
WeightFn cell_id_weight(const GridSpec& grid);

struct ShiftChoice {
  GridSpec grid;
  double occupied_estimate = 0;
  int candidates_tried = 0;
};

/// Among random shifts, keep the one whose estimated occupied-cell count is
/// smallest. Degenerate regimes (every point its own cell) return the first
/// candidate: all shifts are equivalent there.
ShiftChoice choose_shift(CondOracle& o, double eps, int level, double delta,
                         StreamRng& rng, const MstOptions& opt = {},
                         const Tunables& t = default_tunables());

struct ComponentSample {
  std::int64_t cells = 0;
  bool big = false;
};

/// Exact occupied-cell count of the component containing an l0-sampled
/// cell, cut off at cell_budget ("big").
ComponentSample estimate_component(CondOracle& o, const GridSpec& grid,
                                   std::int64_t adjacency, std::int64_t cell_budget,
                                   StreamRng& rng,
                                   const Tunables& t = default_tunables());

struct LevelEstimate {
  int level = 0;
  double mu_hat = 1.0;
  double occupied = 1.0;
  int samples = 0;
  int big = 0;
  bool skipped = false;
};

/// abs_allowance: extra absolute slack on mu_hat this level may use, derived
/// from the level's share of the final sum (0 disables it).
LevelEstimate estimate_ci(CondOracle& o, double eps, int level, double delta_level,
                          std::int64_t component_budget, StreamRng& rng,
                          const MstOptions& opt = {},
                          const Tunables& t = default_tunables(),
                          double shift_delta_top = 0.1, double abs_allowance = 0.0);

struct MstRun {
  double estimate = 0;
  double domain_diam = 0;
  std::int64_t component_budget = 0;
  std::vector<LevelEstimate> levels;
  std::uint64_t queries = 0;
  std::uint64_t desc_cost = 0;
};

MstRun estimate_mst_weight(CondOracle& o, const Params& params,
                           const MstOptions& opt = {},
                           const Tunables& t = default_tunables());

}  // namespace condsub
