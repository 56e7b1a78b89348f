// SPDX-License-Identifier: Apache-2.0
#include "condsub/grid.hpp"

#include <stdexcept>

namespace condsub {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

GridSpec::GridSpec(int d, Coord domain_side, std::int64_t cell_len_fp,
                   std::vector<std::int64_t> shift, int lvl)
    : dim(d), side(domain_side), cell_fp(cell_len_fp), shift_fp(std::move(shift)), level(lvl) {
  if (dim < 1) throw std::invalid_argument("GridSpec: bad dimension");
  if (cell_fp < 1) throw std::invalid_argument("GridSpec: bad cell length");
  if (static_cast<int>(shift_fp.size()) != dim)
    throw std::invalid_argument("GridSpec: shift dimension mismatch");
  for (std::int64_t s : shift_fp)
    if (s < 0 || s >= cell_fp) throw std::invalid_argument("GridSpec: shift outside [0, cell)");
  // Coordinates span [1, side]; normalize so every cell coordinate is >= 0.
  min_cell_ = floor_div(kFpDen - (cell_fp - 1), cell_fp);
  std::int64_t max_cell = floor_div(side * kFpDen, cell_fp);
  per_axis_ = max_cell - min_cell_ + 1;
  std::int64_t m = 1;
  for (int j = 0; j < dim; ++j) {
    if (per_axis_ != 0 && m > (std::int64_t(1) << 62) / per_axis_)
      throw std::overflow_error("GridSpec: cell universe too large");
    m *= per_axis_;
  }
  linear_count_ = m;
}

void GridSpec::cell_of(PointSpan x, std::int64_t* out) const {
  for (int j = 0; j < dim; ++j) {
    std::int64_t num = x[static_cast<std::size_t>(j)] * kFpDen - shift_fp[static_cast<std::size_t>(j)];
    out[j] = floor_div(num, cell_fp) - min_cell_;
  }
}

std::int64_t GridSpec::linear_id(const std::int64_t* cell) const {
  std::int64_t acc = 0;
  for (int j = dim - 1; j >= 0; --j) acc = acc * per_axis_ + cell[j];
  return acc + 1;
}

void GridSpec::from_linear(std::int64_t id, std::int64_t* out) const {
  std::int64_t v = id - 1;
  for (int j = 0; j < dim; ++j) {
    out[j] = v % per_axis_;
    v /= per_axis_;
  }
}

std::int64_t GridSpec::linear_of_point(PointSpan x) const {
  std::int64_t cell[8];
  if (dim > 8) throw std::invalid_argument("GridSpec: dimension above 8 unsupported");
  cell_of(x, cell);
  return linear_id(cell);
}

}  // namespace condsub
