// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "condsub/rational.hpp"

namespace condsub {

using Coord = std::int64_t;
using PointSpan = std::span<const Coord>;
using DomainIndex = unsigned __int128;

/// A grid point with coordinates in [1, side]^dim.
struct Point {
  std::vector<Coord> coords;

  Point() = default;
  Point(std::initializer_list<Coord> c) : coords(c) {}
  explicit Point(std::vector<Coord> c) : coords(std::move(c)) {}

  int dim() const { return static_cast<int>(coords.size()); }
  Coord operator[](int i) const { return coords[static_cast<std::size_t>(i)]; }
  operator PointSpan() const { return PointSpan(coords); }
  bool operator==(const Point& o) const { return coords == o.coords; }
};

/// Exact squared Euclidean distance, integer arithmetic only.
std::int64_t squared_distance(PointSpan a, PointSpan b);

/// Largest distance between any two domain points: sqrt(dim) * (side - 1).
double domain_diameter(int dim, Coord side);

/// Smallest power of two >= v (and >= 2).
Coord pow2_side(Coord v);

/// Immutable ordered collection of distinct points sharing one domain.
/// Storage is flat so per-point scans stay cache friendly.
class Dataset {
 public:
  Dataset(std::vector<Point> points, Coord side);
  Dataset(std::vector<Coord> flat, int dim, Coord side);

  std::size_t size() const { return n_; }
  int dim() const { return dim_; }
  Coord side() const { return side_; }

  PointSpan point(std::size_t i) const {
    return PointSpan(flat_.data() + i * static_cast<std::size_t>(dim_),
                     static_cast<std::size_t>(dim_));
  }
  Point point_copy(std::size_t i) const;

  /// Mixed-radix index of a domain point: sum (x_j - 1) * side^(j-1).
  DomainIndex domain_index(PointSpan x) const;
  const std::vector<DomainIndex>& domain_indices() const { return idx_; }

  BigInt domain_size() const;
  int domain_bits() const;  // ceil(log2 |domain|), at least 1

  /// Parses the text format: one point per line, comma separated integers,
  /// '#' comments, optional "dims=<d> side=<D>" header. Duplicate points are
  /// an error naming both line positions unless dedupe is set.
  static Dataset load(std::istream& in, bool dedupe = false);
  static Dataset load_file(const std::string& path, bool dedupe = false);
  void save(std::ostream& out) const;

 private:
  void validate();
  std::vector<Coord> flat_;
  std::vector<DomainIndex> idx_;
  std::size_t n_ = 0;
  int dim_ = 0;
  Coord side_ = 2;
};

/// Global approximation parameters. eps and delta keep an exact rational
/// alongside the double so threshold math never depends on rounding.
struct Params {
  double eps = 0.1;
  double delta = 0.05;
  std::uint64_t seed = 0;
  Ratio eps_ratio{1, 10};
  Ratio delta_ratio{1, 20};

  Params() = default;
  Params(double e, double d, std::uint64_t s);
};

}  // namespace condsub
