#pragma once

// Uniform 2D grids: scalar/vector fields, difference stencils, disk geometry, ball
// averages, medians and measure-mass queries.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "olab/error.hpp"
#include "olab/geometry.hpp"

namespace olab {

/// Square domain [x0, x0+side] x [y0, y0+side] split into n x n square cells; one node at
/// the center of each cell. The outermost node ring carries Dirichlet data.
class Grid2D {
 public:
  Grid2D(Vec2 origin, double side, int n) : origin_(origin), side_(side), n_(n) {
    if (!(side > 0.0) || !std::isfinite(side)) throw DomainError("grid side must be positive");
    if (n < 16) throw DomainError("grid needs at least 16 cells per axis");
    h_ = side / n;
  }

  /// Unit square with n cells per axis.
  static Grid2D unit(int n) { return Grid2D({0.0, 0.0}, 1.0, n); }

  int n() const { return n_; }
  double h() const { return h_; }
  double side() const { return side_; }
  Vec2 origin() const { return origin_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_); }
  double cell_area() const { return h_ * h_; }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
  }
  int col(std::size_t k) const { return static_cast<int>(k % static_cast<std::size_t>(n_)); }
  int row(std::size_t k) const { return static_cast<int>(k / static_cast<std::size_t>(n_)); }

  Vec2 node(int i, int j) const { return {origin_.x + (i + 0.5) * h_, origin_.y + (j + 0.5) * h_}; }
  Vec2 node(std::size_t k) const { return node(col(k), row(k)); }

  bool is_boundary(int i, int j) const { return i == 0 || j == 0 || i == n_ - 1 || j == n_ - 1; }
  bool is_boundary(std::size_t k) const { return is_boundary(col(k), row(k)); }

  bool contains(Vec2 x) const {
    return x.x >= origin_.x && x.y >= origin_.y && x.x <= origin_.x + side_ && x.y <= origin_.y + side_;
  }

  /// Distance from x to the boundary of the square domain (negative outside).
  double distance_to_boundary(Vec2 x) const {
    return std::min({x.x - origin_.x, x.y - origin_.y, origin_.x + side_ - x.x, origin_.y + side_ - x.y});
  }

  bool contains_ball(Vec2 center, double radius) const {
    return distance_to_boundary(center) >= radius * (1.0 - 1e-12) - 1e-14;
  }

  std::pair<int, int> nearest_node(Vec2 x) const {
    auto clamp = [this](double v) {
      return std::clamp(static_cast<int>(std::floor(v / h_)), 0, n_ - 1);
    };
    return {clamp(x.x - origin_.x), clamp(x.y - origin_.y)};
  }

  friend bool operator==(const Grid2D& a, const Grid2D& b) {
    return a.n_ == b.n_ && a.side_ == b.side_ && a.origin_ == b.origin_;
  }

 private:
  Vec2 origin_;
  double side_;
  int n_;
  double h_;
};

/// Values of type T attached to the nodes of a grid, row-major (x fastest).
template <typename T>
struct GridField {
  Grid2D grid;
  std::vector<T> values;

  explicit GridField(const Grid2D& g, T fill = T{}) : grid(g), values(g.size(), fill) {}
  GridField(const Grid2D& g, std::vector<T> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw ShapeError("grid field: value count does not match grid");
  }

  template <typename F>
  static GridField sample(const Grid2D& g, F&& f) {
    GridField out(g);
    for (std::size_t k = 0; k < g.size(); ++k) out.values[k] = f(g.node(k));
    return out;
  }

  T& at(int i, int j) { return values[grid.index(i, j)]; }
  const T& at(int i, int j) const { return values[grid.index(i, j)]; }
  T& operator[](std::size_t k) { return values[k]; }
  const T& operator[](std::size_t k) const { return values[k]; }
};

using GridFunction = GridField<double>;
using GradientField = GridField<Vec2>;
using HessianField = GridField<Mat2>;

inline void require_same_grid(const Grid2D& a, const Grid2D& b) {
  if (!(a == b)) throw ShapeError("grid functions live on different grids");
}

inline GridFunction magnitude(const GradientField& v) {
  GridFunction out(v.grid);
  for (std::size_t k = 0; k < v.values.size(); ++k) out.values[k] = norm(v.values[k]);
  return out;
}

struct Atom {
  Vec2 position;
  double mass = 0.0;
};

/// A signed Radon measure: Dirac atoms plus an optional nodal density.
struct MeasureData {
  std::vector<Atom> atoms;
  std::optional<GridFunction> density;

  double total_variation() const {
    double tv = 0.0;
    for (const auto& a : atoms) tv += std::abs(a.mass);
    if (density) {
      for (double v : density->values) tv += std::abs(v) * density->grid.cell_area();
    }
    return tv;
  }

  bool empty() const { return atoms.empty() && !density; }

  MeasureData scaled(double lambda) const {
    MeasureData out = *this;
    for (auto& a : out.atoms) a.mass *= lambda;
    if (out.density) {
      for (double& v : out.density->values) v *= lambda;
    }
    return out;
  }
};

/// Node indices of the closed disk B_radius(center), sorted by distance to the center.
/// Prefixes of the list are the nodes of every smaller concentric disk.
class BallScan {
 public:
  BallScan(const Grid2D& grid, Vec2 center, double r_max) : center_(center) {
    const double h = grid.h();
    const Vec2 o = grid.origin();
    const int i0 = std::max(0, static_cast<int>(std::ceil((center.x - r_max - o.x) / h - 0.5)) - 1);
    const int i1 = std::min(grid.n() - 1, static_cast<int>(std::floor((center.x + r_max - o.x) / h - 0.5)) + 1);
    const int j0 = std::max(0, static_cast<int>(std::ceil((center.y - r_max - o.y) / h - 0.5)) - 1);
    const int j1 = std::min(grid.n() - 1, static_cast<int>(std::floor((center.y + r_max - o.y) / h - 0.5)) + 1);
    const double r2 = r_max * r_max * (1.0 + 1e-12);
    std::vector<std::pair<double, std::size_t>> found;
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        const Vec2 d = grid.node(i, j) - center;
        const double d2 = dot(d, d);
        if (d2 <= r2) found.emplace_back(d2, grid.index(i, j));
      }
    }
    std::sort(found.begin(), found.end());
    dist2_.reserve(found.size());
    nodes_.reserve(found.size());
    for (const auto& [d2, k] : found) {
      dist2_.push_back(d2);
      nodes_.push_back(k);
    }
  }

  Vec2 center() const { return center_; }

  /// Number of nodes within distance `radius` of the center.
  std::size_t count(double radius) const {
    const double r2 = radius * radius * (1.0 + 1e-12);
    return static_cast<std::size_t>(std::upper_bound(dist2_.begin(), dist2_.end(), r2) - dist2_.begin());
  }

  std::span<const std::size_t> nodes(double radius) const { return {nodes_.data(), count(radius)}; }
  std::span<const std::size_t> all_nodes() const { return nodes_; }

  /// Running sums of values over the sorted node list; entry m is the sum of the first m.
  template <typename T, typename F>
  std::vector<T> prefix_sums(F&& value_of) const {
    std::vector<T> sums(nodes_.size() + 1, T{});
    for (std::size_t m = 0; m < nodes_.size(); ++m) sums[m + 1] = sums[m] + value_of(nodes_[m]);
    return sums;
  }

 private:
  Vec2 center_;
  std::vector<double> dist2_;
  std::vector<std::size_t> nodes_;
};

/// Offsets (di, dj) of the disk of radius r_max around a node, sorted by distance, shared
/// by every node-centered ball query; radii follow a log-spaced ladder.
class BallIndex {
 public:
  BallIndex(const Grid2D& grid, double r_min, double r_max, int per_decade = 24) : grid_(grid) {
    const double h = grid.h();
    const int reach = static_cast<int>(std::ceil(r_max / h)) + 1;
    std::vector<std::pair<long, std::pair<int, int>>> found;
    const double limit = (r_max / h) * (r_max / h) * (1.0 + 1e-12);
    for (int dj = -reach; dj <= reach; ++dj) {
      for (int di = -reach; di <= reach; ++di) {
        const long d2 = static_cast<long>(di) * di + static_cast<long>(dj) * dj;
        if (static_cast<double>(d2) <= limit) found.push_back({d2, {di, dj}});
      }
    }
    std::sort(found.begin(), found.end());
    for (const auto& [d2, off] : found) {
      dist2_.push_back(static_cast<double>(d2) * h * h);
      offsets_.push_back(off);
    }
    const double lo = std::max(r_min, 2.0 * h);
    if (lo <= r_max) {
      const double decades = std::log10(r_max / lo);
      const int steps = std::max(1, static_cast<int>(std::ceil(decades * per_decade)));
      for (int k = 0; k <= steps; ++k) radii_.push_back(lo * std::pow(r_max / lo, static_cast<double>(k) / steps));
    }
  }

  const std::vector<double>& radii() const { return radii_; }

  std::size_t count(double radius) const {
    const double r2 = radius * radius * (1.0 + 1e-12);
    return static_cast<std::size_t>(std::upper_bound(dist2_.begin(), dist2_.end(), r2) - dist2_.begin());
  }

  /// Node indices of B_radius(node(i, j)); the ball must lie within the node range.
  std::vector<std::size_t> nodes(int i, int j, double radius) const {
    const std::size_t m = count(radius);
    std::vector<std::size_t> out;
    out.reserve(m);
    for (std::size_t q = 0; q < m; ++q) {
      const int ii = i + offsets_[q].first;
      const int jj = j + offsets_[q].second;
      if (ii < 0 || jj < 0 || ii >= grid_.n() || jj >= grid_.n()) throw DomainError("ball index: ball leaves the grid");
      out.push_back(grid_.index(ii, jj));
    }
    return out;
  }

 private:
  Grid2D grid_;
  std::vector<double> dist2_;
  std::vector<std::pair<int, int>> offsets_;
  std::vector<double> radii_;
};

namespace detail {

inline void check_ball(const Grid2D& grid, Vec2 center, double radius) {
  if (!std::isfinite(radius) || !(radius > 0.0)) throw DomainError("ball radius must be positive");
  if (radius < 2.0 * grid.h() * (1.0 - 1e-12)) throw ResolutionError("ball radius below 2h");
  if (!grid.contains_ball(center, radius)) throw DomainError("ball leaves the domain");
}

// Second-order derivative along one axis at position i of a line of n values.
template <typename At>
double d1(At&& at, int i, int n, double h) {
  if (i == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  if (i == n - 1) return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
  return (at(i + 1) - at(i - 1)) / (2.0 * h);
}

template <typename At>
double d2(At&& at, int i, int n, double h) {
  if (i == 0) return (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / (h * h);
  if (i == n - 1) return (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) / (h * h);
  return (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (h * h);
}

}  // namespace detail

/// Centered differences inside, second-order one-sided differences on the boundary ring.
inline GradientField gradient(const GridFunction& f) {
  const Grid2D& g = f.grid;
  const int n = g.n();
  const double h = g.h();
  GradientField out(g);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double fx = detail::d1([&](int ii) { return f.at(ii, j); }, i, n, h);
      const double fy = detail::d1([&](int jj) { return f.at(i, jj); }, j, n, h);
      out.at(i, j) = {fx, fy};
    }
  }
  return out;
}

/// Second derivatives: three-point centered stencils inside (four-point one-sided on the
/// ring); the mixed derivative is the product of the two first-derivative operators, so
/// the output is symmetric.
inline HessianField hessian(const GridFunction& f) {
  const Grid2D& g = f.grid;
  const int n = g.n();
  const double h = g.h();
  GridFunction fy(g);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) fy.at(i, j) = detail::d1([&](int jj) { return f.at(i, jj); }, j, n, h);
  }
  HessianField out(g);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double fxx = detail::d2([&](int ii) { return f.at(ii, j); }, i, n, h);
      const double fyy = detail::d2([&](int jj) { return f.at(i, jj); }, j, n, h);
      const double fxy = detail::d1([&](int ii) { return fy.at(ii, j); }, i, n, h);
      out.at(i, j) = {fxx, fxy, fxy, fyy};
    }
  }
  return out;
}

/// Mean of f over the nodes of B_radius(center).
inline double ball_average(const GridFunction& f, Vec2 center, double radius) {
  detail::check_ball(f.grid, center, radius);
  const BallScan scan(f.grid, center, radius);
  const auto nodes = scan.all_nodes();
  if (nodes.empty()) throw ResolutionError("ball contains no grid nodes");
  double sum = 0.0;
  for (std::size_t k : nodes) sum += f.values[k];
  return sum / static_cast<double>(nodes.size());
}

/// |μ|(B̄_radius(center)): atoms on the closed disk plus |density| over cells whose node lies
/// in the disk. Mass outside the grid is zero.
inline double ball_mass(const MeasureData& mu, Vec2 center, double radius) {
  if (!(radius > 0.0)) throw DomainError("ball_mass: radius must be positive");
  double mass = 0.0;
  const double r2 = radius * radius * (1.0 + 1e-12);
  for (const auto& a : mu.atoms) {
    const Vec2 d = a.position - center;
    if (dot(d, d) <= r2) mass += std::abs(a.mass);
  }
  if (mu.density) {
    const BallScan scan(mu.density->grid, center, radius);
    double dens = 0.0;
    for (std::size_t k : scan.all_nodes()) dens += std::abs(mu.density->values[k]);
    mass += dens * mu.density->grid.cell_area();
  }
  return mass;
}

/// sup{t : #{v > t} > N/2}, i.e. the ceil(N/2)-th smallest value.
inline double largest_median(std::vector<double> values) {
  if (values.empty()) throw StateError("median of an empty set");
  const std::size_t k = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

inline double median(const GridFunction& f, Vec2 center, double radius) {
  detail::check_ball(f.grid, center, radius);
  const BallScan scan(f.grid, center, radius);
  std::vector<double> vals;
  vals.reserve(scan.all_nodes().size());
  for (std::size_t k : scan.all_nodes()) vals.push_back(f.values[k]);
  return largest_median(std::move(vals));
}

/// T_k: pointwise clamp to [-k, k].
inline GridFunction truncate(const GridFunction& f, double k) {
  if (!(k > 0.0)) throw DomainError("truncate: level must be positive");
  GridFunction out = f;
  for (double& v : out.values) v = std::clamp(v, -k, k);
  return out;
}

/// ∫|f - g| + ∫|Df - Dg| by the nodal midpoint rule.
inline double w11_distance(const GridFunction& f, const GridFunction& g) {
  require_same_grid(f.grid, g.grid);
  GridFunction diff(f.grid);
  for (std::size_t k = 0; k < diff.values.size(); ++k) diff.values[k] = f.values[k] - g.values[k];
  const GradientField dd = gradient(diff);
  double sum = 0.0;
  for (std::size_t k = 0; k < diff.values.size(); ++k) sum += std::abs(diff.values[k]) + norm(dd.values[k]);
  return sum * f.grid.cell_area();
}

// Raster text format: header "nx ny x0 y0 side", then ny rows of nx values.

inline void write_raster(std::ostream& os, const GridFunction& f) {
  const Grid2D& g = f.grid;
  os << g.n() << ' ' << g.n() << ' ' << std::setprecision(17) << g.origin().x << ' ' << g.origin().y << ' '
     << g.side() << '\n';
  for (int j = 0; j < g.n(); ++j) {
    for (int i = 0; i < g.n(); ++i) {
      if (i) os << ' ';
      os << f.at(i, j);
    }
    os << '\n';
  }
}

inline GridFunction read_raster(std::istream& is) {
  int nx = 0;
  int ny = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double side = 0.0;
  if (!(is >> nx >> ny >> x0 >> y0 >> side)) throw DataError("raster: malformed header");
  if (nx != ny) throw ShapeError("raster: only square grids are supported");
  GridFunction f(Grid2D({x0, y0}, side, nx));
  for (double& v : f.values) {
    if (!(is >> v)) throw DataError("raster: too few values");
    if (!std::isfinite(v)) throw DataError("raster: non-finite value");
  }
  return f;
}

inline GridFunction read_raster(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open raster " + path.string());
  return read_raster(in);
}

/// Measure file: lines "atom x y mass" and at most one "density <raster path>"; paths are
/// resolved relative to `base`. '#' starts a comment.
inline MeasureData read_measure(std::istream& is, const std::filesystem::path& base = {}) {
  MeasureData mu;
  std::string line;
  while (std::getline(is, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "atom") {
      Atom a;
      if (!(ls >> a.position.x >> a.position.y >> a.mass)) throw DataError("measure: malformed atom line");
      mu.atoms.push_back(a);
    } else if (tag == "density") {
      std::string file;
      if (!(ls >> file)) throw DataError("measure: density line needs a raster path");
      mu.density = read_raster(base / file);
    } else {
      throw DataError("measure: unknown record '" + tag + "'");
    }
  }
  return mu;
}

}  // namespace olab
