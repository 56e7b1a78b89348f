// SPDX-License-Identifier: Apache-2.0
#include "condsub/mst.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <stdexcept>

namespace condsub {

namespace {

constexpr std::int64_t kFp = GridSpec::kFpDen;

}  // namespace

GridSpec make_level_grid(int dim, Coord side, double eps, int level,
                         std::vector<std::int64_t> shift_fp) {
  long double r = static_cast<long double>(eps) *
                  std::pow(1.0L + static_cast<long double>(eps), level) /
                  std::sqrt(static_cast<long double>(dim));
  long double fp = r * static_cast<long double>(kFp);
  long double cap = static_cast<long double>(side) * 4.0L * static_cast<long double>(kFp);
  if (fp > cap) fp = cap;  // one cell spans the whole domain beyond this
  auto cell = static_cast<std::int64_t>(std::llroundl(fp));
  if (cell < 1) cell = 1;
  for (auto& s : shift_fp) s %= cell;
  return GridSpec(dim, side, cell, std::move(shift_fp), level);
}

std::int64_t cell_adjacency_threshold(const GridSpec& grid, const Ratio& eps, int level) {
  // (1+eps)^(2*level) * 2^40 / cell_fp^2, floored, exact.
  BigInt num = ipow(BigInt(eps.den) + eps.num, static_cast<unsigned>(2 * level));
  BigInt den = ipow(BigInt(eps.den), static_cast<unsigned>(2 * level));
  BigInt v = num * BigInt(kFp) * BigInt(kFp) / (den * BigInt(grid.cell_fp) * BigInt(grid.cell_fp));
  if (v > (BigInt(1) << 62)) return std::int64_t(1) << 62;
  return static_cast<std::int64_t>(v);
}

WeightFn cell_id_weight(const GridSpec& grid) {
  return WeightFn::make(WeightExpr::grid_cell(grid), grid.linear_cell_count(),
                        grid.dim, grid.side);
}

ShiftChoice choose_shift(CondOracle& o, double eps, int level, double delta,
                         StreamRng& rng, const MstOptions& opt, const Tunables& t) {
  const Dataset& ds = o.dataset();
  auto candidates = static_cast<int>(std::ceil(
      opt.shift_rep_const * std::log2(1.0 / std::clamp(delta, 1e-9, 0.5))));
  candidates = std::max(candidates, 1);
  ShiftChoice best;
  bool have = false;
  for (int cand = 0; cand < candidates; ++cand) {
    std::vector<std::int64_t> shift(static_cast<std::size_t>(ds.dim()));
    GridSpec probe_grid = make_level_grid(ds.dim(), ds.side(), eps, level, shift);
    for (auto& s : shift) s = static_cast<std::int64_t>(rng.bounded(
        static_cast<std::uint64_t>(probe_grid.cell_fp)));
    GridSpec grid = make_level_grid(ds.dim(), ds.side(), eps, level, shift);
    ++best.candidates_tried;
    if (grid.cells_are_points()) {
      // Each point sits alone in a cell; every shift gives the same count.
      best.grid = grid;
      best.occupied_estimate = static_cast<double>(ds.size());
      return best;
    }
    WeightFn cells = cell_id_weight(grid);
    CountCore core(o, Predicate::const_true(), cells, grid.linear_cell_count(), "mst.shift");
    double est;
    auto small = core.small_count(3);
    if (small) est = static_cast<double>(*small);
    else est = core.bisect(opt.shift_eps, opt.shift_delta, rng, t).value;
    if (!have || est < best.occupied_estimate) {
      best.grid = grid;
      best.occupied_estimate = est;
      have = true;
    }
    if (cand == 0 && est >= 0.8 * static_cast<double>(ds.size()))
      return best;  // occupancy saturated: selection cannot help
  }
  return best;
}

namespace {

// Component verdicts are a pure function of the sampled cell's component on
// a fixed grid, so repeated draws reuse everything earlier walks learned.
struct ComponentMemo {
  std::unordered_map<std::int64_t, std::int64_t> size_of;  // cell -> exact size
  std::unordered_map<std::int64_t, char> big_zone;         // cells of oversized comps
};

std::optional<CondResult> draw_l0_cell(CondOracle& o, const GridSpec& grid,
                                       StreamRng& rng, const Tunables& t) {
  if (grid.cells_are_points()) return o.cond(Predicate::const_true(), "mst.l0");
  WeightFn cells = cell_id_weight(grid);
  double eps_tv = 1.0 / static_cast<double>(std::min<std::int64_t>(
                            grid.linear_cell_count(), std::int64_t(1) << 40));
  auto seed = des(o, Predicate::const_true(), cells, eps_tv, 0.05, rng, t, "mst.l0");
  if (!seed) seed = o.cond(Predicate::const_true(), "mst.l0");
  return seed;
}

ComponentSample walk_component(CondOracle& o, const GridSpec& grid,
                               std::int64_t adjacency, std::int64_t cell_budget,
                               std::int64_t start_cell, ComponentMemo* memo) {
  if (memo) {
    auto it = memo->size_of.find(start_cell);
    if (it != memo->size_of.end()) return {it->second, false};
    if (memo->big_zone.count(start_cell)) return {cell_budget, true};
  }
  std::vector<std::int64_t> visited = {start_cell};
  bool big = false;
  while (static_cast<std::int64_t>(visited.size()) < cell_budget) {
    Predicate frontier = Predicate::conjoin(
        Predicate::neighbor_of_cells(grid, visited, adjacency),
        Predicate::negate(Predicate::in_cell_set(grid, visited)));
    auto next = o.cond(frontier, "mst.bfs");
    if (!next) break;
    visited.push_back(grid.linear_of_point(next->point));
  }
  if (static_cast<std::int64_t>(visited.size()) >= cell_budget) big = true;
  if (memo) {
    if (big)
      for (std::int64_t c : visited) memo->big_zone.emplace(c, 1);
    else
      for (std::int64_t c : visited)
        memo->size_of.emplace(c, static_cast<std::int64_t>(visited.size()));
  }
  return big ? ComponentSample{cell_budget, true}
             : ComponentSample{static_cast<std::int64_t>(visited.size()), false};
}

}  // namespace

ComponentSample estimate_component(CondOracle& o, const GridSpec& grid,
                                   std::int64_t adjacency, std::int64_t cell_budget,
                                   StreamRng& rng, const Tunables& t) {
  auto seed = draw_l0_cell(o, grid, rng, t);
  if (!seed) throw std::logic_error("estimate_component: empty dataset");
  return walk_component(o, grid, adjacency, cell_budget,
                        grid.linear_of_point(seed->point), nullptr);
}

LevelEstimate estimate_ci(CondOracle& o, double eps, int level, double delta_level,
                          std::int64_t component_budget, StreamRng& rng,
                          const MstOptions& opt, const Tunables& t,
                          double shift_delta_top, double abs_allowance) {
  const Dataset& ds = o.dataset();
  LevelEstimate out;
  out.level = level;

  ShiftChoice shift = choose_shift(o, eps, level, shift_delta_top, rng, opt, t);
  const GridSpec& grid = shift.grid;
  Ratio er = Ratio::snap(eps);
  std::int64_t adjacency = cell_adjacency_threshold(grid, er, level);

  // Occupied-cell count.
  double occupied;
  if (grid.cells_are_points()) {
    occupied = static_cast<double>(ds.size());
  } else {
    WeightFn cells = cell_id_weight(grid);
    CountCore core(o, Predicate::const_true(), cells, grid.linear_cell_count(), "mst.occupied");
    auto small = core.small_count(3);
    if (small) {
      occupied = static_cast<double>(*small);
    } else {
      double eps_se = std::max(0.02, eps * opt.occupancy_eps_frac);
      double coarse = core.bisect(0.5, 0.2, rng, t).value;
      int m2 = static_cast<int>(std::ceil(std::pow(1.3 * opt.occupancy_z / eps_se, 2)));
      occupied = core.invert(static_cast<std::int64_t>(std::llround(coarse)), m2, rng);
    }
  }
  out.occupied = std::max(occupied, 1.0);

  // Component samples with a confidence-based early stop under the cap.
  // Verdicts reuse cells walked by earlier samples of this level.
  double cap_d = opt.hoeffding_const * static_cast<double>(component_budget) *
                 static_cast<double>(component_budget) *
                 std::log(2.0 / std::clamp(delta_level, 1e-9, 0.5));
  auto cap = static_cast<std::int64_t>(std::min<double>(cap_d, opt.sample_max));
  cap = std::max<std::int64_t>(cap, opt.sample_min);
  ComponentMemo memo;
  double sum = 0, sumsq = 0;
  std::int64_t m = 0;
  while (m < cap) {
    for (int b = 0; b < opt.sample_batch && m < cap; ++b) {
      auto seed = draw_l0_cell(o, grid, rng, t);
      if (!seed) throw std::logic_error("estimate_ci: empty dataset");
      ComponentSample s = walk_component(o, grid, adjacency, component_budget,
                                         grid.linear_of_point(seed->point), &memo);
      double chat = s.big ? 1.0 : out.occupied / static_cast<double>(std::max<std::int64_t>(s.cells, 1));
      if (s.big) out.big += 1;
      sum += chat;
      sumsq += chat * chat;
      ++m;
    }
    if (m >= opt.sample_min) {
      double mean = sum / static_cast<double>(m);
      double var = std::max(0.0, sumsq / static_cast<double>(m) - mean * mean);
      double hw = opt.sample_z * std::sqrt(var / static_cast<double>(m));
      double tol = std::max({out.occupied / static_cast<double>(component_budget),
                             opt.level_rel_tol * mean, 0.02, abs_allowance});
      if (hw <= tol) break;
    }
  }
  out.samples = static_cast<int>(m);
  out.mu_hat = std::max(sum / static_cast<double>(std::max<std::int64_t>(m, 1)), 1.0);
  return out;
}

MstRun estimate_mst_weight(CondOracle& o, const Params& params, const MstOptions& opt,
                           const Tunables& t) {
  const Dataset& ds = o.dataset();
  if (ds.size() < 2) throw std::invalid_argument("estimate_mst_weight: need n >= 2");
  std::uint64_t q0 = o.ledger().queries(), d0 = o.ledger().desc_cost();

  const double eps = params.eps;
  MstRun run;
  run.domain_diam = domain_diameter(ds.dim(), ds.side());
  double log_w = std::log(run.domain_diam) / std::log1p(eps);
  int level_count = std::max(1, static_cast<int>(std::ceil(log_w)));
  if (opt.max_level_override > 0) level_count = std::min(level_count, opt.max_level_override);
  run.component_budget = static_cast<std::int64_t>(
      std::ceil(static_cast<double>(ds.dim()) * log_w / eps));
  double delta_level = params.delta / level_count;

  StreamRng rng = StreamRng(params.seed).fork(0x6d7374);
  int flat_run = 0;
  bool skipping = false;
  double acc_before = 0;  // sum over processed levels of (1+eps)^j * mu_j
  for (int i = 0; i < level_count; ++i) {
    LevelEstimate lv;
    if (skipping) {
      lv.level = i;
      lv.mu_hat = 1.0;
      lv.skipped = true;
    } else {
      // Guaranteed floor of the final estimate: remaining levels contribute
      // at least one component each. A level only needs precision in
      // proportion to its share of that floor.
      double rest = 0;
      for (int j = i; j < level_count; ++j) rest += std::pow(1.0 + eps, j);
      double floor_est = static_cast<double>(ds.size()) - run.domain_diam +
                         eps * (acc_before + rest);
      double allowance = opt.budget_rel_tol * std::max(floor_est, 1.0) /
                         (eps * std::pow(1.0 + eps, i) *
                          std::sqrt(static_cast<double>(level_count)));
      lv = estimate_ci(o, eps, i, delta_level, run.component_budget, rng, opt, t,
                       params.delta, allowance);
      // Once several consecutive levels sit at one component, the rest stay
      // there: component counts only fall as the radius grows.
      if (lv.mu_hat <= 1.0 + std::max(0.05, 2.0 / std::sqrt(static_cast<double>(
                                                std::max(lv.samples, 1))))) {
        if (++flat_run >= opt.level_skip_run) skipping = true;
      } else {
        flat_run = 0;
      }
      acc_before += std::pow(1.0 + eps, lv.level) * lv.mu_hat;
    }
    run.levels.push_back(lv);
  }

  double acc = 0;
  for (const LevelEstimate& lv : run.levels)
    acc += std::pow(1.0 + eps, lv.level) * lv.mu_hat;
  run.estimate = static_cast<double>(ds.size()) - run.domain_diam + eps * acc;
  run.queries = o.ledger().queries() - q0;
  run.desc_cost = o.ledger().desc_cost() - d0;
  return run;
}

}  // namespace condsub
