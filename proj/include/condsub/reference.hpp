// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "condsub/domain.hpp"
#include "condsub/grid.hpp"
#include "condsub/predicate.hpp"
#include "condsub/rng.hpp"

namespace condsub {
namespace reference {

// Brute-force ground truth, deliberately sharing no code with the
// estimators. Guards keep accidental use off large inputs.

constexpr std::size_t kScanGuard = 50'000;
constexpr std::size_t kKmeansGuard = 10'000;

std::int64_t exact_set_size(const Dataset& ds, const Predicate& c);
std::int64_t exact_distinct(const Dataset& ds, const Predicate& c, const WeightFn& f);
std::int64_t exact_max(const Dataset& ds, const Predicate& c, const WeightFn& f);  // -1 if empty
double exact_sum(const Dataset& ds, const Predicate& c, const WeightFn& f);

/// Component count and per-cell component labels of the occupied-cell graph:
/// two occupied cells are adjacent when the squared distance of their cell
/// coordinates is at most cell_sqdist_threshold.
struct CellComponents {
  std::vector<std::int64_t> cells;       // occupied cell ids, sorted
  std::vector<int> component_of;         // parallel to cells
  std::vector<std::int64_t> component_cells;  // cells per component
  int count = 0;
};
CellComponents exact_components(const Dataset& ds, const GridSpec& grid,
                                std::int64_t cell_sqdist_threshold);

/// Component count of the point graph with edges at squared distance <= r2.
int exact_point_components(const Dataset& ds, std::int64_t r2);

double exact_mst_weight(const Dataset& ds);          // dense Prim
double exact_mst_weight_kruskal(const Dataset& ds);  // cross-check

/// Best-of-R Lloyd with d^2-seeding; returns total squared cost.
struct KmeansBaseline {
  std::vector<std::vector<double>> centers;
  double cost = 0;
};
KmeansBaseline exact_kmeans_baseline(const Dataset& ds, int k, int restarts,
                                     std::uint64_t seed);

/// Squared cost of a concrete center set against the whole dataset.
double kmeans_cost(const Dataset& ds, const std::vector<Point>& centers);

}  // namespace reference
}  // namespace condsub
