// SPDX-License-Identifier: Apache-2.0
#include "condsub/domain.hpp"

#include "condsub/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace condsub {

namespace {

// Coordinates above this would overflow int64 squared distances.
constexpr Coord kMaxSide = Coord(1) << 25;

struct IndexHash {
  std::size_t operator()(const DomainIndex& v) const {
    return static_cast<std::size_t>(StreamRng::mix(
        static_cast<std::uint64_t>(v) ^ static_cast<std::uint64_t>(v >> 64)));
  }
};

}  // namespace

std::int64_t squared_distance(PointSpan a, PointSpan b) {
  if (a.size() != b.size())
    throw std::invalid_argument("squared_distance: dimension mismatch");
  std::int64_t acc = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    std::int64_t d = a[j] - b[j];
    acc += d * d;
  }
  return acc;
}

double domain_diameter(int dim, Coord side) {
  if (dim < 1 || side < 2)
    throw std::invalid_argument("domain_diameter: need dim >= 1, side >= 2");
  return std::sqrt(static_cast<double>(dim)) * static_cast<double>(side - 1);
}

Coord pow2_side(Coord v) {
  Coord s = 2;
  while (s < v) s <<= 1;
  return s;
}

Dataset::Dataset(std::vector<Point> points, Coord side) {
  if (points.empty()) throw std::invalid_argument("Dataset: empty point list");
  dim_ = points.front().dim();
  n_ = points.size();
  side_ = side;
  flat_.reserve(n_ * static_cast<std::size_t>(dim_));
  for (const Point& p : points) {
    if (p.dim() != dim_) throw std::invalid_argument("Dataset: ragged dimensions");
    flat_.insert(flat_.end(), p.coords.begin(), p.coords.end());
  }
  validate();
}

Dataset::Dataset(std::vector<Coord> flat, int dim, Coord side)
    : flat_(std::move(flat)), dim_(dim), side_(side) {
  if (dim_ < 1 || flat_.size() % static_cast<std::size_t>(dim_) != 0)
    throw std::invalid_argument("Dataset: flat size not a multiple of dim");
  n_ = flat_.size() / static_cast<std::size_t>(dim_);
  if (n_ == 0) throw std::invalid_argument("Dataset: empty");
  validate();
}

void Dataset::validate() {
  if (side_ < 2) throw std::invalid_argument("Dataset: side must be >= 2");
  if (side_ > kMaxSide) throw std::invalid_argument("Dataset: side too large");
  for (std::size_t i = 0; i < flat_.size(); ++i) {
    if (flat_[i] < 1 || flat_[i] > side_) {
      std::ostringstream os;
      os << "Dataset: coordinate " << flat_[i] << " at point "
         << i / static_cast<std::size_t>(dim_) << " outside [1, " << side_ << "]";
      throw std::invalid_argument(os.str());
    }
  }
  idx_.resize(n_);
  std::unordered_map<DomainIndex, std::size_t, IndexHash> seen;
  seen.reserve(n_ * 2);
  for (std::size_t i = 0; i < n_; ++i) {
    DomainIndex id = domain_index(point(i));
    idx_[i] = id;
    auto [it, inserted] = seen.emplace(id, i);
    if (!inserted) {
      std::ostringstream os;
      os << "Dataset: duplicate point at index " << i << " (first seen at "
         << it->second << ")";
      throw std::invalid_argument(os.str());
    }
  }
}

Point Dataset::point_copy(std::size_t i) const {
  PointSpan s = point(i);
  return Point(std::vector<Coord>(s.begin(), s.end()));
}

DomainIndex Dataset::domain_index(PointSpan x) const {
  DomainIndex acc = 0;
  DomainIndex stride = 1;
  for (std::size_t j = 0; j < x.size(); ++j) {
    acc += static_cast<DomainIndex>(x[j] - 1) * stride;
    stride *= static_cast<DomainIndex>(side_);
  }
  return acc;
}

BigInt Dataset::domain_size() const { return ipow(BigInt(side_), static_cast<unsigned>(dim_)); }

int Dataset::domain_bits() const {
  BigInt sz = domain_size();
  int bits = 0;
  while (sz > 1) { sz = (sz + 1) / 2; ++bits; }
  return std::max(bits, 1);
}

Dataset Dataset::load(std::istream& in, bool dedupe) {
  std::string line;
  std::vector<Point> pts;
  long declared_dim = -1;
  Coord declared_side = -1;
  Coord max_coord = 1;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (line.compare(first, 5, "dims=") == 0) {
      std::istringstream hs(line.substr(first));
      std::string tok;
      while (hs >> tok) {
        if (tok.rfind("dims=", 0) == 0) declared_dim = std::stol(tok.substr(5));
        else if (tok.rfind("side=", 0) == 0) declared_side = std::stoll(tok.substr(5));
      }
      continue;
    }
    Point p;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        p.coords.push_back(std::stoll(cell));
      } catch (const std::exception&) {
        throw std::invalid_argument("Dataset: bad number on line " + std::to_string(lineno));
      }
    }
    if (p.coords.empty())
      throw std::invalid_argument("Dataset: empty point on line " + std::to_string(lineno));
    if (declared_dim > 0 && p.dim() != declared_dim)
      throw std::invalid_argument("Dataset: wrong dimension on line " + std::to_string(lineno));
    for (Coord c : p.coords) max_coord = std::max(max_coord, c);
    pts.push_back(std::move(p));
  }
  if (pts.empty()) throw std::invalid_argument("Dataset: no points in input");
  if (dedupe) {
    std::vector<Point> uniq;
    for (auto& p : pts)
      if (std::find(uniq.begin(), uniq.end(), p) == uniq.end()) uniq.push_back(p);
    pts = std::move(uniq);
  }
  Coord side = declared_side > 0 ? declared_side : pow2_side(max_coord);
  return Dataset(std::move(pts), side);
}

Dataset Dataset::load_file(const std::string& path, bool dedupe) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("Dataset: cannot open " + path);
  return load(in, dedupe);
}

void Dataset::save(std::ostream& out) const {
  out << "dims=" << dim_ << " side=" << side_ << "\n";
  for (std::size_t i = 0; i < n_; ++i) {
    PointSpan p = point(i);
    for (std::size_t j = 0; j < p.size(); ++j) out << (j ? "," : "") << p[j];
    out << "\n";
  }
}

Params::Params(double e, double d, std::uint64_t s)
    : eps(e), delta(d), seed(s), eps_ratio(Ratio::snap(e)), delta_ratio(Ratio::snap(d)) {
  if (!(e > 0.0 && e < 1.0)) throw std::invalid_argument("Params: eps outside (0,1)");
  if (!(d > 0.0 && d < 1.0)) throw std::invalid_argument("Params: delta outside (0,1)");
}

}  // namespace condsub
