// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "condsub/domain.hpp"

namespace condsub {

/// Axis-aligned grid over the point domain with a fixed-point side length
/// and shift (denominator 2^20), so cell ids are exact integer arithmetic.
/// Cell ids are normalized to be nonnegative and packed row-major into a
/// 1-based linear id.
struct GridSpec {
  static constexpr std::int64_t kFpDen = std::int64_t(1) << 20;

  int dim = 1;
  Coord side = 2;
  std::int64_t cell_fp = kFpDen;          // cell side length * 2^20
  std::vector<std::int64_t> shift_fp;     // per axis, in [0, cell_fp)
  int level = 0;                          // caller bookkeeping only

  GridSpec() = default;
  GridSpec(int d, Coord domain_side, std::int64_t cell_len_fp,
           std::vector<std::int64_t> shift, int lvl = 0);

  std::int64_t min_cell() const { return min_cell_; }
  std::int64_t cells_per_axis() const { return per_axis_; }
  std::int64_t linear_cell_count() const { return linear_count_; }  // == M

  /// Normalized per-axis cell coordinates of a point, each in
  /// [0, cells_per_axis).
  void cell_of(PointSpan x, std::int64_t* out) const;

  std::int64_t linear_id(const std::int64_t* cell) const;  // 1-based
  void from_linear(std::int64_t id, std::int64_t* out) const;

  std::int64_t linear_of_point(PointSpan x) const;

  /// True when the cell side is below one grid unit, i.e. distinct points
  /// always land in distinct cells.
  bool cells_are_points() const { return cell_fp < kFpDen; }

 private:
  std::int64_t min_cell_ = 0;
  std::int64_t per_axis_ = 1;
  std::int64_t linear_count_ = 1;
};

std::int64_t floor_div(std::int64_t a, std::int64_t b);

}  // namespace condsub
