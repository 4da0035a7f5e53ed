#pragma once

// Small numerical kernels shared by the modules: Gauss-Legendre panels, safeguarded
// monotone root finding and geometric radius ladders.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "olab/error.hpp"

namespace olab::numeric {

namespace detail {
inline constexpr std::array<double, 8> kGaussNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGaussWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
}  // namespace detail

/// 8-point Gauss-Legendre rule on [a, b].
template <typename F>
double gauss_legendre(F&& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (std::size_t k = 0; k < detail::kGaussNodes.size(); ++k) {
    sum += detail::kGaussWeights[k] * f(mid + half * detail::kGaussNodes[k]);
  }
  return half * sum;
}

/// Adaptive Gauss-Legendre: bisects panels until two-level agreement within rel_tol.
template <typename F>
double adaptive_gauss(F&& f, double a, double b, double rel_tol = 1e-12, int depth = 0) {
  const double whole = gauss_legendre(f, a, b);
  const double mid = 0.5 * (a + b);
  const double left = gauss_legendre(f, a, mid);
  const double right = gauss_legendre(f, mid, b);
  const double refined = left + right;
  if (depth >= 40 || std::abs(refined - whole) <= rel_tol * std::abs(refined)) return refined;
  return adaptive_gauss(f, a, mid, rel_tol, depth + 1) + adaptive_gauss(f, mid, b, rel_tol, depth + 1);
}

/// Solves f(x) = y for nondecreasing f on [lo, hi] with f(lo) <= y <= f(hi).
/// Newton steps using df are taken when they stay inside the bracket, bisection otherwise.
template <typename F, typename DF>
double monotone_solve(F&& f, DF&& df, double y, double lo, double hi, double rel_tol = 1e-15) {
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = f(x);
    if (fx == y) return x;
    if (fx < y) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= rel_tol * std::abs(hi)) break;
    const double slope = df(x);
    double next = (slope > 0.0 && std::isfinite(slope)) ? x - (fx - y) / slope : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= rel_tol * std::abs(x)) return next;
    x = next;
  }
  return 0.5 * (lo + hi);
}

/// Expands [lo, hi] geometrically (lo toward 0, hi upward) until it brackets y.
template <typename F>
std::pair<double, double> bracket_increasing(F&& f, double y, double guess) {
  double lo = guess > 0.0 ? guess : 1.0;
  double hi = lo;
  for (int it = 0; it < 2200 && f(lo) > y; ++it) lo *= 0.5;
  for (int it = 0; it < 2200 && f(hi) < y; ++it) hi *= 2.0;
  if (f(lo) > y || f(hi) < y) throw RangeError("monotone inverse: target outside representable range");
  return {lo, hi};
}

/// Geometric radii from r_min to r_max inclusive, `per_decade` points per factor of ten.
inline std::vector<double> radius_ladder(double r_min, double r_max, int per_decade) {
  if (!(r_min > 0.0) || !(r_max >= r_min)) throw RangeError("radius ladder needs 0 < r_min <= r_max");
  if (per_decade < 1) throw RangeError("radius ladder needs at least one point per decade");
  const double decades = std::log10(r_max / r_min);
  const int steps = std::max(1, static_cast<int>(std::ceil(decades * per_decade - 1e-9)));
  std::vector<double> radii(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) {
    radii[static_cast<std::size_t>(k)] = r_min * std::pow(r_max / r_min, static_cast<double>(k) / steps);
  }
  radii.front() = r_min;
  radii.back() = r_max;
  if (r_max == r_min) radii.resize(1);
  return radii;
}

/// ∫ F dρ/ρ over [a, b] when F is interpolated as a power law between F(a) and F(b).
/// Exact for F(ρ) = c ρ^k; falls back to the trapezoid in log ρ when an endpoint vanishes.
inline double loglog_segment(double a, double fa, double b, double fb) {
  const double span = std::log(b / a);
  if (span <= 0.0) return 0.0;
  if (fa > 0.0 && fb > 0.0) {
    const double k = std::log(fb / fa) / span;
    const double ks = k * span;
    if (std::abs(ks) < 1e-8) return fa * span * (1.0 + 0.5 * ks);
    return fa * std::expm1(ks) / k;
  }
  return 0.5 * (fa + fb) * span;
}

}  // namespace olab::numeric
