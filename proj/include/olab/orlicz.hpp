#pragma once

// Growth function g, its antiderivative G, inverses and Young conjugate.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "olab/error.hpp"
#include "olab/numeric.hpp"

namespace olab {

namespace detail {

inline void require_nonneg_finite(double t, const char* what) {
  if (!std::isfinite(t)) throw DomainError(std::string(what) + ": argument is not finite");
  if (t < 0.0) throw DomainError(std::string(what) + ": argument is negative");
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
class Pchip {
 public:
  Pchip() = default;
  Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    std::vector<double> h(n - 1);
    std::vector<double> delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      h[k] = x_[k + 1] - x_[k];
      delta[k] = (y_[k + 1] - y_[k]) / h[k];
    }
    d_.assign(n, 0.0);
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (delta[k - 1] * delta[k] > 0.0) {
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        d_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
      }
    }
    d_[0] = end_slope(h[0], h.size() > 1 ? h[1] : h[0], delta[0], delta.size() > 1 ? delta[1] : delta[0]);
    d_[n - 1] = end_slope(h[n - 2], n > 2 ? h[n - 3] : h[n - 2], delta[n - 2],
                          n > 2 ? delta[n - 3] : delta[n - 2]);
  }

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }
  double front_slope() const { return d_.front(); }
  double back_slope() const { return d_.back(); }
  double value_at_front() const { return y_.front(); }
  double value_at_back() const { return y_.back(); }
  const std::vector<double>& knots() const { return x_; }

  /// Value and derivative; linear extrapolation with the end slopes outside the knots.
  std::pair<double, double> eval(double x) const {
    if (x <= x_.front()) return {y_.front() + d_.front() * (x - x_.front()), d_.front()};
    if (x >= x_.back()) return {y_.back() + d_.back() * (x - x_.back()), d_.back()};
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double h = x_[k + 1] - x_[k];
    const double s = (x - x_[k]) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double value = (2 * s3 - 3 * s2 + 1) * y_[k] + (s3 - 2 * s2 + s) * h * d_[k] +
                         (-2 * s3 + 3 * s2) * y_[k + 1] + (s3 - s2) * h * d_[k + 1];
    const double deriv = ((6 * s2 - 6 * s) * y_[k] + (3 * s2 - 4 * s + 1) * h * d_[k] +
                          (-6 * s2 + 6 * s) * y_[k + 1] + (3 * s2 - 2 * s) * h * d_[k + 1]) /
                         h;
    return {value, deriv};
  }

 private:
  static double end_slope(double h0, double h1, double d0, double d1) {
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0) {
      d = 0.0;
    } else if (d0 * d1 <= 0.0 && std::abs(d) > 3.0 * std::abs(d0)) {
      d = 3.0 * d0;
    }
    return d;
  }

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> d_;
};

}  // namespace detail

/// What to do with a tabulated g whose sampled lower index falls below 1.
enum class LowIndexPolicy { reject, warn };

/// The scalar nonlinearity g: strictly increasing, g(0) = 0, with growth indices
/// ig <= t g'(t)/g(t) <= sg.
class GrowthFunction {
 public:
  enum class Kind { power, regularized_power, tabulated };

  static GrowthFunction power(double p) {
    if (!std::isfinite(p) || p < 2.0) throw DataError("power growth needs finite p >= 2");
    GrowthFunction gf;
    gf.kind_ = Kind::power;
    gf.p_ = p;
    gf.ig_ = gf.sg_ = p - 1.0;
    return gf;
  }

  static GrowthFunction regularized_power(double p, double mu) {
    if (!std::isfinite(p) || p < 2.0) throw DataError("regularized power growth needs finite p >= 2");
    if (!std::isfinite(mu) || mu < 0.0) throw DataError("regularized power growth needs mu >= 0");
    GrowthFunction gf;
    gf.kind_ = Kind::regularized_power;
    gf.p_ = p;
    gf.mu_ = mu;
    gf.sg_ = p - 1.0;
    gf.ig_ = (mu > 0.0) ? std::min(1.0, p - 1.0) : p - 1.0;
    return gf;
  }

  /// g given at strictly increasing positive nodes; interpolated monotonically in log-log
  /// coordinates and extrapolated as power laws with the end slopes.
  static GrowthFunction tabulated(const std::vector<double>& t, const std::vector<double>& g,
                                  LowIndexPolicy policy = LowIndexPolicy::reject) {
    if (t.size() != g.size()) throw DataError("tabulated growth: node/value count mismatch");
    if (t.size() < 3) throw InsufficientDataError("tabulated growth needs at least 3 nodes");
    std::vector<double> lx(t.size());
    std::vector<double> ly(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (!(t[k] > 0.0) || !(g[k] > 0.0) || !std::isfinite(t[k]) || !std::isfinite(g[k])) {
        throw DataError("tabulated growth: nodes and values must be positive and finite");
      }
      if (k > 0 && !(t[k] > t[k - 1])) throw DataError("tabulated growth: nodes must be strictly increasing");
      if (k > 0 && !(g[k] > g[k - 1])) throw DataError("tabulated growth: g must be strictly increasing");
      lx[k] = std::log(t[k]);
      ly[k] = std::log(g[k]);
    }
    GrowthFunction gf;
    gf.kind_ = Kind::tabulated;
    gf.table_ = detail::Pchip(std::move(lx), std::move(ly));
    const double lo = std::min(1e-8, t.front() * 0.1);
    const double hi = std::max(1e8, t.back() * 10.0);
    double ig = 1e300;
    double sg = -1e300;
    auto visit = [&](double tt) {
      const double idx = gf.index(tt);
      ig = std::min(ig, idx);
      sg = std::max(sg, idx);
    };
    for (int k = 0; k < 4096; ++k) visit(lo * std::pow(hi / lo, k / 4095.0));
    for (double node : t) visit(node);
    gf.ig_ = ig;
    gf.sg_ = sg;
    if (ig < 1.0 && policy == LowIndexPolicy::reject) {
      throw DataError("tabulated growth: sampled lower index " + std::to_string(ig) + " is below 1");
    }
    return gf;
  }

  Kind kind() const { return kind_; }
  double p() const { return p_; }
  double mu() const { return mu_; }
  double ig() const { return ig_; }
  double sg() const { return sg_; }

  double g(double t) const {
    detail::require_nonneg_finite(t, "g");
    if (t == 0.0) return 0.0;
    switch (kind_) {
      case Kind::power:
        return std::pow(t, p_ - 1.0);
      case Kind::regularized_power:
        return std::pow(mu_ + t * t, 0.5 * (p_ - 2.0)) * t;
      case Kind::tabulated:
        return std::exp(table_.eval(std::log(t)).first);
    }
    return 0.0;
  }

  /// g'(t) for t > 0.
  double dg(double t) const {
    detail::require_nonneg_finite(t, "g'");
    switch (kind_) {
      case Kind::power:
        if (t == 0.0) return p_ == 2.0 ? 1.0 : 0.0;
        return (p_ - 1.0) * std::pow(t, p_ - 2.0);
      case Kind::regularized_power: {
        const double q = mu_ + t * t;
        if (q == 0.0) return p_ == 2.0 ? 1.0 : 0.0;
        return std::pow(q, 0.5 * (p_ - 4.0)) * (mu_ + (p_ - 1.0) * t * t);
      }
      case Kind::tabulated: {
        if (t == 0.0) return kernel(0.0);
        const auto [ly, slope] = table_.eval(std::log(t));
        return std::exp(ly) * slope / t;
      }
    }
    return 0.0;
  }

  /// g(t)/t, continuously extended to t = 0.
  double kernel(double t) const {
    detail::require_nonneg_finite(t, "kernel");
    switch (kind_) {
      case Kind::power:
        if (p_ == 2.0) return 1.0;
        return t == 0.0 ? 0.0 : std::pow(t, p_ - 2.0);
      case Kind::regularized_power: {
        if (p_ == 2.0) return 1.0;
        const double q = mu_ + t * t;
        return q == 0.0 ? 0.0 : std::pow(q, 0.5 * (p_ - 2.0));
      }
      case Kind::tabulated: {
        if (t > 0.0) return g(t) / t;
        const double slope = table_.front_slope();
        if (slope > 1.0) return 0.0;
        return std::exp(table_.value_at_front() - table_.front());
      }
    }
    return 0.0;
  }

  /// t g'(t) / g(t) for t > 0.
  double index(double t) const {
    if (!(t > 0.0)) throw DomainError("index: t must be positive");
    switch (kind_) {
      case Kind::power:
        return t * dg(t) / g(t);
      case Kind::regularized_power:
        return (mu_ + (p_ - 1.0) * t * t) / (mu_ + t * t);
      case Kind::tabulated:
        return table_.eval(std::log(t)).second;
    }
    return 0.0;
  }

  /// g^{-1}(s), s >= 0.
  double inverse_g(double s) const {
    detail::require_nonneg_finite(s, "g^-1");
    if (s == 0.0) return 0.0;
    if (kind_ == Kind::power) return std::pow(s, 1.0 / (p_ - 1.0));
    const double guess = std::pow(s, 1.0 / std::max(1.0, sg_));
    auto f = [this](double t) { return g(t); };
    const auto [lo, hi] = numeric::bracket_increasing(f, s, guess);
    return numeric::monotone_solve(f, [this](double t) { return dg(t); }, s, lo, hi);
  }

  const detail::Pchip& table() const { return table_; }

 private:
  GrowthFunction() = default;

  Kind kind_ = Kind::power;
  double p_ = 2.0;
  double mu_ = 0.0;
  double ig_ = 1.0;
  double sg_ = 1.0;
  detail::Pchip table_;
};

struct IndexEstimate {
  double ig_hat = 0.0;
  double sg_hat = 0.0;
};

/// Infimum and supremum of t g'(t)/g(t) over `samples` log-spaced points in [1e-8, 1e8].
inline IndexEstimate estimate_indices(const GrowthFunction& gf, int samples = 4096) {
  if (samples < 16) throw InsufficientDataError("estimate_indices needs at least 16 samples");
  IndexEstimate est{1e300, -1e300};
  for (int k = 0; k < samples; ++k) {
    const double t = 1e-8 * std::pow(1e16, static_cast<double>(k) / (samples - 1));
    const double idx = gf.index(t);
    est.ig_hat = std::min(est.ig_hat, idx);
    est.sg_hat = std::max(est.sg_hat, idx);
  }
  return est;
}

struct CacheOptions {
  int nodes = 2048;
  double t_min = 1e-12;
  double t_max = 1e12;
};

/// G(t) = ∫_0^t g together with G^{-1}, the Young conjugate G* and the Sobolev companion S.
/// Closed forms are used for the power kinds; tabulated kinds integrate the interpolant
/// against a cumulative cache built at construction.
class OrliczG {
 public:
  explicit OrliczG(GrowthFunction gf, CacheOptions opts = {}) : gf_(std::move(gf)), opts_(opts) {
    if (gf_.kind() == GrowthFunction::Kind::tabulated) build_cache();
  }

  const GrowthFunction& growth() const { return gf_; }
  double g(double t) const { return gf_.g(t); }

  double G(double t) const {
    detail::require_nonneg_finite(t, "G");
    if (t == 0.0) return 0.0;
    const double p = gf_.p();
    switch (gf_.kind()) {
      case GrowthFunction::Kind::power:
        return std::pow(t, p) / p;
      case GrowthFunction::Kind::regularized_power: {
        const double mu = gf_.mu();
        if (mu == 0.0) return std::pow(t, p) / p;
        return std::pow(mu, 0.5 * p) * std::expm1(0.5 * p * std::log1p(t * t / mu)) / p;
      }
      case GrowthFunction::Kind::tabulated:
        return tabulated_G(t);
    }
    return 0.0;
  }

  /// The unique t >= 0 with G(t) = s.
  double inverse(double s) const {
    detail::require_nonneg_finite(s, "G^-1");
    if (s == 0.0) return 0.0;
    const double p = gf_.p();
    switch (gf_.kind()) {
      case GrowthFunction::Kind::power:
        return std::pow(p * s, 1.0 / p);
      case GrowthFunction::Kind::regularized_power: {
        const double mu = gf_.mu();
        if (mu == 0.0) return std::pow(p * s, 1.0 / p);
        const double base = std::pow(mu, 0.5 * p);
        return std::sqrt(mu * std::expm1((2.0 / p) * std::log1p(p * s / base)));
      }
      case GrowthFunction::Kind::tabulated:
        return tabulated_inverse(s);
    }
    return 0.0;
  }

  /// G*(s) = sup_t {s t - G(t)}, attained at t = g^{-1}(s).
  double conjugate(double s) const {
    detail::require_nonneg_finite(s, "G*");
    if (s == 0.0) return 0.0;
    const double t = gf_.inverse_g(s);
    return s * t - G(t);
  }

  /// G(t1) - G(t0) for t_k = sqrt(q_k), q1 = q0 + dq, without cancellation when dq is small.
  double increment_sq(double q0, double dq) const {
    if (dq == 0.0) return 0.0;
    const double q1 = q0 + dq;
    const double p = gf_.p();
    switch (gf_.kind()) {
      case GrowthFunction::Kind::power:
        if (q0 == 0.0) return std::pow(q1, 0.5 * p) / p;
        if (p == 2.0) return 0.5 * dq;
        return std::pow(q0, 0.5 * p) * std::expm1(0.5 * p * std::log1p(dq / q0)) / p;
      case GrowthFunction::Kind::regularized_power: {
        const double b0 = gf_.mu() + q0;
        if (b0 == 0.0) return std::pow(q1, 0.5 * p) / p;
        if (p == 2.0) return 0.5 * dq;
        return std::pow(b0, 0.5 * p) * std::expm1(0.5 * p * std::log1p(dq / b0)) / p;
      }
      case GrowthFunction::Kind::tabulated: {
        const double t0 = std::sqrt(q0);
        const double t1 = std::sqrt(q1);
        if (std::abs(t1 - t0) > 1e-3 * std::max(t0, t1)) return G(t1) - G(t0);
        // t1 - t0 = dq / (t0 + t1) keeps the interval length accurate.
        const double len = dq / (t0 + t1);
        return numeric::gauss_legendre([this](double s) { return gf_.g(s); }, t0, t0 + len);
      }
    }
    return 0.0;
  }

  /// S(t) = G(t) (G(t)/t)^{-1/n}.
  double sobolev_S(double t, int n) const {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("S: t must be positive and finite");
    if (n < 2) throw DomainError("S: dimension must be at least 2");
    const double Gt = G(t);
    return Gt * std::pow(Gt / t, -1.0 / n);
  }

  double sobolev_S_inverse(double s, int n) const {
    detail::require_nonneg_finite(s, "S^-1");
    if (s == 0.0) return 0.0;
    auto f = [this, n](double t) { return sobolev_S(t, n); };
    auto df = [this, n](double t) {
      const double Gt = G(t);
      const double inv_n = 1.0 / n;
      return (1.0 - inv_n) * std::pow(Gt, -inv_n) * gf_.g(t) * std::pow(t, inv_n) +
             inv_n * std::pow(Gt, 1.0 - inv_n) * std::pow(t, inv_n - 1.0);
    };
    const auto [lo, hi] = numeric::bracket_increasing(f, s, inverse(s));
    return numeric::monotone_solve(f, df, s, lo, hi);
  }

  const CacheOptions& cache_options() const { return opts_; }

 private:
  void build_cache() {
    const auto& table = gf_.table();
    const double t_first = std::exp(table.front());
    const double t_last = std::exp(table.back());
    lo_ = std::min(opts_.t_min, t_first);
    hi_ = std::max(opts_.t_max, t_last);
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(opts_.nodes) + table.knots().size());
    for (int k = 0; k < opts_.nodes; ++k) {
      const double t = lo_ * std::pow(hi_ / lo_, static_cast<double>(k) / (opts_.nodes - 1));
      if (t > t_first && t < t_last) grid.push_back(t);
    }
    for (double x : table.knots()) grid.push_back(std::exp(x));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    cache_t_ = grid;
    cache_G_.assign(grid.size(), 0.0);
    cache_G_[0] = below_first(grid[0]);
    auto gfun = [this](double s) { return gf_.g(s); };
    for (std::size_t k = 1; k < grid.size(); ++k) {
      cache_G_[k] = cache_G_[k - 1] + numeric::gauss_legendre(gfun, grid[k - 1], grid[k]);
    }
  }

  // Power-law extrapolation g(t) = g(t0)(t/t0)^d below the first node integrates exactly.
  double below_first(double t) const { return t * gf_.g(t) / (1.0 + gf_.table().front_slope()); }

  double tabulated_G(double t) const {
    if (t <= cache_t_.front()) return below_first(t);
    if (t >= cache_t_.back()) {
      const double tb = cache_t_.back();
      return cache_G_.back() + (t * gf_.g(t) - tb * gf_.g(tb)) / (1.0 + gf_.table().back_slope());
    }
    const auto it = std::upper_bound(cache_t_.begin(), cache_t_.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - cache_t_.begin()) - 1;
    return cache_G_[k] + numeric::gauss_legendre([this](double s) { return gf_.g(s); }, cache_t_[k], t);
  }

  double tabulated_inverse(double s) const {
    const double s_lo = tabulated_G(lo_);
    const double s_hi = tabulated_G(hi_);
    if (s < s_lo || s > s_hi) throw RangeError("G^-1: value outside the tabulated cache range");
    std::size_t k = 0;
    if (s >= cache_G_.front()) {
      const auto it = std::upper_bound(cache_G_.begin(), cache_G_.end(), s);
      k = std::min(static_cast<std::size_t>(it - cache_G_.begin()), cache_G_.size() - 1);
    }
    double lo = (k == 0) ? lo_ : cache_t_[k - 1];
    double hi = (s >= cache_G_.back()) ? hi_ : cache_t_[k];
    if (k == 0) hi = cache_t_.front();
    return numeric::monotone_solve([this](double t) { return G(t); }, [this](double t) { return gf_.g(t); }, s,
                                   lo, hi);
  }

  GrowthFunction gf_;
  CacheOptions opts_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  std::vector<double> cache_t_;
  std::vector<double> cache_G_;
};

}  // namespace olab
