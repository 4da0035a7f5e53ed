#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <vector>

#include "olab/error.hpp"
#include "olab/geometry.hpp"
#include "olab/grid.hpp"
#include "olab/numeric.hpp"
#include "olab/orlicz.hpp"

namespace olab {

inline constexpr double kDimension = 2.0;

struct WolffParams {
  double beta = 1.0;
  double p = 2.0;
  double R = 0.25;
  int per_decade = 24;
  /// Inner cutoff; 2h of the evaluation grid when unset.
  std::optional<double> r_min;
};

struct WolffValue {
  double value = 0.0;
  /// Set when mass sits inside B_{r_min}(x), so the omitted piece (0, r_min) is nonzero.
  bool truncated = false;
  double r_min = 0.0;
};

/// The obstacle density g(|Dψ|)/|Dψ| |D²ψ| + 1 with |D²ψ| the Frobenius norm.
class ObstacleDensity {
 public:
  ObstacleDensity(GridFunction psi, const GrowthFunction& growth) : psi_(std::move(psi)), kernel_(psi_.grid) {
    const GradientField dpsi = gradient(psi_);
    const HessianField d2psi = hessian(psi_);
    for (std::size_t k = 0; k < kernel_.values.size(); ++k) {
      kernel_.values[k] = growth.kernel(norm(dpsi.values[k])) * frobenius_norm(d2psi.values[k]) + 1.0;
    }
  }

  const GridFunction& psi() const { return psi_; }
  const GridFunction& kernel() const { return kernel_; }
  const Grid2D& grid() const { return psi_.grid; }

 private:
  GridFunction psi_;
  GridFunction kernel_;
};

namespace detail {

inline double resolve_r_min(const WolffParams& wp, const Grid2D& grid) {
  const double r_min = wp.r_min.value_or(2.0 * grid.h());
  if (!(r_min >= 2.0 * grid.h() * (1.0 - 1e-12))) throw ResolutionError("wolff: r_min below 2h");
  if (!(wp.R > r_min)) throw RangeError("wolff: R must exceed r_min");
  if (!(wp.p > 1.0)) throw RangeError("wolff: p must exceed 1");
  if (!(wp.beta > 0.0) || wp.beta > kDimension) throw RangeError("wolff: beta must lie in (0, n]");
  return r_min;
}

inline std::vector<double> maximal_ladder(const Grid2D& grid, double R, int per_decade = 24) {
  const double lo = 2.0 * grid.h();
  if (!(R >= lo * (1.0 - 1e-12))) throw RangeError("maximal operator: R below 2h");
  return numeric::radius_ladder(lo, std::max(R, lo), per_decade);
}

// ∫ (m(ρ)/ρ^{n-βp})^{1/(p-1)} dρ/ρ over the given breakpoints. A step mass (atoms) is read at
// each segment's geometric midpoint; a continuous one at the endpoints, with the integrand
// interpolated as a power law in between.
template <typename Mass>
double wolff_quadrature(Mass&& mass, std::vector<double> nodes, double beta, double p, bool continuous = false) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  const double q = 1.0 / (p - 1.0);
  const double e = kDimension - beta * p;
  double sum = 0.0;
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const double a = nodes[k - 1];
    const double b = nodes[k];
    const double ma = continuous ? mass(a) : mass(std::sqrt(a * b));
    const double mb = continuous ? mass(b) : ma;
    if (ma <= 0.0 && mb <= 0.0) continue;
    const double fa = std::pow(ma * std::pow(a, -e), q);
    const double fb = std::pow(mb * std::pow(b, -e), q);
    sum += numeric::loglog_segment(a, fa, b, fb);
  }
  return sum;
}

}  // namespace detail

/// W^μ_{β,p}(x, R) integrated from r_min. Atom distances are breakpoints of the quadrature,
/// so pure-atom measures are integrated exactly.
inline WolffValue wolff(const MeasureData& mu, Vec2 x, const WolffParams& wp, const Grid2D& grid) {
  WolffValue out;
  out.r_min = detail::resolve_r_min(wp, grid);
  std::vector<double> nodes = numeric::radius_ladder(out.r_min, wp.R, wp.per_decade);
  for (const auto& a : mu.atoms) {
    const double d = distance(a.position, x);
    if (d > out.r_min && d < wp.R) nodes.push_back(d);
  }
  std::optional<BallScan> scan;
  std::vector<double> prefix;
  if (mu.density) {
    scan.emplace(mu.density->grid, x, wp.R);
    prefix = scan->prefix_sums<double>([&](std::size_t k) { return std::abs(mu.density->values[k]); });
  }
  auto mass = [&](double rho) {
    double m = 0.0;
    const double r2 = rho * rho * (1.0 + 1e-12);
    for (const auto& a : mu.atoms) {
      const Vec2 d = a.position - x;
      if (dot(d, d) <= r2) m += std::abs(a.mass);
    }
    if (scan) m += prefix[scan->count(rho)] * mu.density->grid.cell_area();
    return m;
  };
  out.value = detail::wolff_quadrature(mass, std::move(nodes), wp.beta, wp.p);
  out.truncated = mass(out.r_min) > 0.0;
  return out;
}

/// W^{[ψ]}_{β,p}(x, R) with DΨ(B_ρ) = |B_ρ| times the node average of the density kernel
/// over B_ρ(x) ∩ grid.
inline WolffValue wolff_psi(const ObstacleDensity& od, Vec2 x, const WolffParams& wp) {
  const Grid2D& grid = od.grid();
  WolffValue out;
  out.r_min = detail::resolve_r_min(wp, grid);
  if (!grid.contains(x)) throw DomainError("wolff_psi: x outside the grid");
  const BallScan scan(grid, x, wp.R);
  const auto prefix = scan.prefix_sums<double>([&](std::size_t k) { return od.kernel().values[k]; });
  auto mass = [&](double rho) {
    const std::size_t m = scan.count(rho);
    if (m == 0) throw ResolutionError("wolff_psi: ball contains no grid nodes");
    return kPi * rho * rho * prefix[m] / static_cast<double>(m);
  };
  out.value =
      detail::wolff_quadrature(mass, numeric::radius_ladder(out.r_min, wp.R, wp.per_decade), wp.beta, wp.p, true);
  out.truncated = true;
  return out;
}

/// M_{β,R}(μ)(x): max over the ladder 2h..R of ρ^β |μ|(B̄_ρ(x)) / |B_ρ|.
inline double frac_maximal(const MeasureData& mu, Vec2 x, double beta, double R, const Grid2D& grid) {
  if (beta < 0.0 || beta > kDimension) throw RangeError("frac_maximal: beta must lie in [0, n]");
  double best = 0.0;
  for (double rho : detail::maximal_ladder(grid, R)) {
    best = std::max(best, std::pow(rho, beta) * ball_mass(mu, x, rho) / (kPi * rho * rho));
  }
  return best;
}

/// M_{β,R}(f)(x): max over the ladder 2h..R of ρ^β avg_{B_ρ(x)} |f|.
inline double frac_maximal(const GridFunction& f, Vec2 x, double beta, double R) {
  if (beta < 0.0 || beta > kDimension) throw RangeError("frac_maximal: beta must lie in [0, n]");
  const auto radii = detail::maximal_ladder(f.grid, R);
  detail::check_ball(f.grid, x, R);
  const BallScan scan(f.grid, x, R);
  const auto prefix = scan.prefix_sums<double>([&](std::size_t k) { return std::abs(f.values[k]); });
  double best = 0.0;
  for (double rho : radii) {
    const std::size_t m = scan.count(rho);
    best = std::max(best, std::pow(rho, beta) * prefix[m] / static_cast<double>(m));
  }
  return best;
}

/// M^#_{α,R}(f)(x): max over the ladder of ρ^{-α} avg_{B_ρ}|f - (f)_{B_ρ}|.
inline double sharp_maximal(const GridFunction& f, Vec2 x, double alpha, double R) {
  if (alpha < 0.0 || alpha > kDimension) throw RangeError("sharp_maximal: alpha must lie in [0, n]");
  const auto radii = detail::maximal_ladder(f.grid, R);
  detail::check_ball(f.grid, x, R);
  const BallScan scan(f.grid, x, R);
  double best = 0.0;
  for (double rho : radii) {
    const auto nodes = scan.nodes(rho);
    double mean = 0.0;
    for (std::size_t k : nodes) mean += f.values[k];
    mean /= static_cast<double>(nodes.size());
    double osc = 0.0;
    for (std::size_t k : nodes) osc += std::abs(f.values[k] - mean);
    best = std::max(best, std::pow(rho, -alpha) * osc / static_cast<double>(nodes.size()));
  }
  return best;
}

/// Vector version for Du, oscillation measured in the Euclidean norm.
inline double sharp_maximal(const GradientField& f, Vec2 x, double alpha, double R) {
  if (alpha < 0.0 || alpha > kDimension) throw RangeError("sharp_maximal: alpha must lie in [0, n]");
  const auto radii = detail::maximal_ladder(f.grid, R);
  detail::check_ball(f.grid, x, R);
  const BallScan scan(f.grid, x, R);
  double best = 0.0;
  for (double rho : radii) {
    const auto nodes = scan.nodes(rho);
    Vec2 mean{0.0, 0.0};
    for (std::size_t k : nodes) mean = mean + f.values[k];
    mean = (1.0 / static_cast<double>(nodes.size())) * mean;
    double osc = 0.0;
    for (std::size_t k : nodes) osc += norm(f.values[k] - mean);
    best = std::max(best, std::pow(rho, -alpha) * osc / static_cast<double>(nodes.size()));
  }
  return best;
}

/// M̄_{β,R}(ψ)(x): max over the ladder of ρ^β avg_{B_ρ} of the obstacle density.
inline double obstacle_maximal(const ObstacleDensity& od, Vec2 x, double beta, double R) {
  return frac_maximal(od.kernel(), x, beta, R);
}

/// Batch output: one CSV row "x,y,value,truncation_flag" per point.
inline void write_potential_csv(std::ostream& os, const std::vector<Vec2>& points,
                                const std::vector<WolffValue>& values) {
  if (points.size() != values.size()) throw ShapeError("potential csv: point/value count mismatch");
  os << "x,y,value,truncation_flag\n";
  os.precision(17);
  for (std::size_t k = 0; k < points.size(); ++k) {
    os << points[k].x << ',' << points[k].y << ',' << values[k].value << ',' << (values[k].truncated ? 1 : 0)
       << '\n';
  }
}

}  // namespace olab
