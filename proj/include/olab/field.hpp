#pragma once

// The model vector field a(x, η) = ω(x) g(|η|)/|η| η, its Jacobian, the coefficient
// oscillation θ and the mean-oscillation modulus ω(R).

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "olab/error.hpp"
#include "olab/geometry.hpp"
#include "olab/grid.hpp"
#include "olab/numeric.hpp"
#include "olab/orlicz.hpp"

namespace olab {

/// Scalar coefficient ω(x): closed-form presets or a nearest-node raster sample, clamped to
/// [c_low, c_high].
class CoefficientField {
 public:
  static CoefficientField constant(double c) {
    CoefficientField f([c](Vec2) { return c; }, "constant");
    f.constant_ = c;
    return f;
  }

  /// c0 + ax x + ay y.
  static CoefficientField affine(double c0, double ax, double ay) {
    if (ax == 0.0 && ay == 0.0) return constant(c0);
    return CoefficientField([=](Vec2 x) { return c0 + ax * x.x + ay * x.y; }, "affine");
  }

  /// base + amplitude sign(x - position).
  static CoefficientField jump(double base, double amplitude, double position) {
    if (amplitude == 0.0) return constant(base);
    return CoefficientField(
        [=](Vec2 x) {
          const double s = x.x - position;
          return base + amplitude * static_cast<double>((s > 0.0) - (s < 0.0));
        },
        "jump");
  }

  /// base + amplitude sign(sin(2πx/period) sin(2πy/period)).
  static CoefficientField checkerboard(double base, double amplitude, double period) {
    if (!(period > 0.0)) throw DataError("checkerboard coefficient needs a positive period");
    if (amplitude == 0.0) return constant(base);
    return CoefficientField(
        [=](Vec2 x) {
          const double s = std::sin(2.0 * kPi * x.x / period) * std::sin(2.0 * kPi * x.y / period);
          return base + amplitude * static_cast<double>((s > 0.0) - (s < 0.0));
        },
        "checkerboard");
  }

  static CoefficientField sampled(GridFunction raster) {
    auto shared = std::make_shared<const GridFunction>(std::move(raster));
    return CoefficientField(
        [shared](Vec2 x) {
          const auto [i, j] = shared->grid.nearest_node(x);
          return shared->at(i, j);
        },
        "raster");
  }

  CoefficientField clamped(double lo, double hi) const {
    if (!(lo > 0.0) || !(hi >= lo)) throw DataError("coefficient bounds need 0 < c_low <= c_high");
    CoefficientField out = *this;
    auto inner = eval_;
    out.eval_ = [inner, lo, hi](Vec2 x) { return std::clamp(inner(x), lo, hi); };
    if (constant_) out.constant_ = std::clamp(*constant_, lo, hi);
    return out;
  }

  CoefficientField shifted(double c) const {
    CoefficientField out = *this;
    auto inner = eval_;
    out.eval_ = [inner, c](Vec2 x) { return inner(x) + c; };
    if (constant_) out.constant_ = *constant_ + c;
    return out;
  }

  CoefficientField scaled(double c) const {
    CoefficientField out = *this;
    auto inner = eval_;
    out.eval_ = [inner, c](Vec2 x) { return inner(x) * c; };
    if (constant_) out.constant_ = *constant_ * c;
    return out;
  }

  double operator()(Vec2 x) const { return eval_(x); }
  bool is_constant() const { return constant_.has_value(); }
  std::optional<double> constant_value() const { return constant_; }
  const std::string& name() const { return name_; }

 private:
  CoefficientField(std::function<double(Vec2)> f, std::string name) : eval_(std::move(f)), name_(std::move(name)) {}

  std::function<double(Vec2)> eval_;
  std::optional<double> constant_;
  std::string name_;
};

/// a(x, η) = ω(x) (g(|η|)/|η|) η on the square domain of `domain`, which also serves as the
/// quadrature grid for ball averages of ω.
class VectorField {
 public:
  VectorField(GrowthFunction growth, CoefficientField coefficient, Grid2D domain)
      : growth_(std::move(growth)), coefficient_(std::move(coefficient)), domain_(domain) {
    c_low_ = 1e300;
    c_high_ = -1e300;
    for (std::size_t k = 0; k < domain_.size(); ++k) {
      const double c = coefficient_(domain_.node(k));
      if (!(c > 0.0) || !std::isfinite(c)) throw DataError("coefficient must be positive and finite");
      c_low_ = std::min(c_low_, c);
      c_high_ = std::max(c_high_, c);
    }
    // D_η a λ·λ >= ω min(g/t, g') |λ|^2 >= ω (g/t)|λ|^2 since ig >= 1, and
    // |a| + |η||D_η a| <= ω (1 + sg) g.
    ellipticity_ = std::min(1.0, c_low_ * std::min(1.0, growth_.ig()));
    bound_ = std::max(1.0, c_high_ * (1.0 + growth_.sg()));
  }

  const GrowthFunction& growth() const { return growth_; }
  const CoefficientField& coefficient() const { return coefficient_; }
  const Grid2D& domain() const { return domain_; }
  double c_low() const { return c_low_; }
  double c_high() const { return c_high_; }
  /// Ellipticity constant v in (0, 1].
  double ellipticity() const { return ellipticity_; }
  /// Growth constant L >= 1.
  double bound() const { return bound_; }
  bool has_constant_coefficient() const { return coefficient_.is_constant(); }

  double coeff(Vec2 x) const {
    if (!domain_.contains(x)) throw DomainError("vector field evaluated outside its domain");
    return coefficient_(x);
  }

  Vec2 a(Vec2 x, Vec2 eta) const {
    if (!std::isfinite(eta.x) || !std::isfinite(eta.y)) throw DomainError("a(x, eta): eta is not finite");
    const double w = coeff(x);
    return (w * growth_.kernel(norm(eta))) * eta;
  }

  /// ω [ (g/t) I + (g' - g/t) η⊗η / t² ], t = |η| > 0.
  Mat2 Da(Vec2 x, Vec2 eta) const {
    const double t = norm(eta);
    if (!(t > 0.0)) throw DomainError("Da: the Jacobian is singular at eta = 0");
    const double w = coeff(x);
    const double k = growth_.kernel(t);
    const double c = (growth_.dg(t) - k) / (t * t);
    return {w * (k + c * eta.x * eta.x), w * c * eta.x * eta.y, w * c * eta.x * eta.y, w * (k + c * eta.y * eta.y)};
  }

  /// Same growth, coefficient replaced by a constant (the frozen field ā_B).
  VectorField frozen(double value) const { return VectorField(growth_, CoefficientField::constant(value), domain_); }

 private:
  GrowthFunction growth_;
  CoefficientField coefficient_;
  Grid2D domain_;
  double c_low_ = 1.0;
  double c_high_ = 1.0;
  double ellipticity_ = 1.0;
  double bound_ = 1.0;
};

/// Mean of ω over the domain-grid nodes of the ball.
inline double coefficient_average(const VectorField& vf, const Ball& ball) {
  detail::check_ball(vf.domain(), ball.center, ball.radius);
  if (auto c = vf.coefficient().constant_value()) return *c;
  const BallScan scan(vf.domain(), ball.center, ball.radius);
  double sum = 0.0;
  for (std::size_t k : scan.all_nodes()) sum += vf.coefficient()(vf.domain().node(k));
  return sum / static_cast<double>(scan.all_nodes().size());
}

/// θ(a, B)(x) = sup_η |a(x, η) - ā_B(η)| / g(|η|). For the model field the kernel cancels
/// and the supremum is |ω(x) - ω̄_B|.
inline double theta(const VectorField& vf, const Ball& ball, Vec2 x) {
  if (distance(x, ball.center) > ball.radius * (1.0 + 1e-12)) throw DomainError("theta: x is outside the ball");
  return std::abs(vf.coeff(x) - coefficient_average(vf, ball));
}

/// θ by direct sampling of η: `directions` unit directions times `magnitudes` log-spaced
/// lengths in [1e-3, 1e3], with ā_B(η) averaged node by node.
inline double theta_sampled(const VectorField& vf, const Ball& ball, Vec2 x, int directions = 32,
                            int magnitudes = 24) {
  if (distance(x, ball.center) > ball.radius * (1.0 + 1e-12)) throw DomainError("theta: x is outside the ball");
  detail::check_ball(vf.domain(), ball.center, ball.radius);
  const BallScan scan(vf.domain(), ball.center, ball.radius);
  double sup = 0.0;
  for (int m = 0; m < magnitudes; ++m) {
    const double t = 1e-3 * std::pow(1e6, magnitudes > 1 ? static_cast<double>(m) / (magnitudes - 1) : 0.0);
    for (int d = 0; d < directions; ++d) {
      const double phi = 2.0 * kPi * d / directions;
      const Vec2 eta{t * std::cos(phi), t * std::sin(phi)};
      Vec2 mean{};
      for (std::size_t k : scan.all_nodes()) mean += vf.a(vf.domain().node(k), eta);
      mean *= 1.0 / static_cast<double>(scan.all_nodes().size());
      sup = std::max(sup, norm(vf.a(x, eta) - mean) / vf.growth().g(t));
    }
  }
  return sup;
}

/// Sampled ω(r) together with the exponents that consume it.
class OscillationModulus {
 public:
  OscillationModulus(double gamma_prime, double dini_exponent, std::vector<std::pair<double, double>> samples)
      : gamma_prime_(gamma_prime), dini_exponent_(dini_exponent), samples_(std::move(samples)) {
    std::sort(samples_.begin(), samples_.end());
  }

  double gamma_prime() const { return gamma_prime_; }
  double dini_exponent() const { return dini_exponent_; }
  const std::vector<std::pair<double, double>>& samples() const { return samples_; }
  bool empty() const { return samples_.empty(); }
  double r_min() const { return samples_.front().first; }
  double r_max() const { return samples_.back().first; }

  /// ω(r) interpolated linearly in (log r, log ω); zero values interpolate linearly in log r.
  /// Below the smallest radius the first sample is used (ω is nondecreasing).
  double at(double r) const {
    if (samples_.empty()) throw StateError("oscillation modulus has no samples");
    if (r <= samples_.front().first) return samples_.front().second;
    if (r >= samples_.back().first) {
      if (r > samples_.back().first * (1.0 + 1e-9)) throw RangeError("oscillation modulus: radius beyond samples");
      return samples_.back().second;
    }
    const auto it = std::lower_bound(samples_.begin(), samples_.end(), std::pair{r, -1e300});
    const auto& [rb, wb] = *it;
    const auto& [ra, wa] = *(it - 1);
    const double s = std::log(r / ra) / std::log(rb / ra);
    if (wa > 0.0 && wb > 0.0) return wa * std::pow(wb / wa, s);
    return wa + s * (wb - wa);
  }

 private:
  double gamma_prime_;
  double dini_exponent_;
  std::vector<std::pair<double, double>> samples_;
};

struct ModulusOptions {
  double gamma_prime = 2.0;
  int levels = 16;
  /// Centers are taken every `center_stride` nodes; 0 picks about 32 centers per axis.
  int center_stride = 0;
};

namespace detail {

// sup over strided centers of (avg_{B_ρ} |ω - ω̄_{B_ρ}|^γ')^{1/γ'} for every radius in `radii`.
inline std::vector<double> oscillation_per_radius(const VectorField& vf, const Grid2D& grid,
                                                  const std::vector<double>& radii, const ModulusOptions& opts) {
  std::vector<double> sup(radii.size(), 0.0);
  if (vf.has_constant_coefficient()) return sup;
  const int stride = opts.center_stride > 0 ? opts.center_stride : std::max(1, grid.n() / 32);
  const double gp = opts.gamma_prime;
  GridFunction omega = GridFunction::sample(grid, [&](Vec2 x) { return vf.coefficient()(x); });
  for (int j = 0; j < grid.n(); j += stride) {
    for (int i = 0; i < grid.n(); i += stride) {
      const Vec2 c = grid.node(i, j);
      const double reach = grid.distance_to_boundary(c);
      if (reach < radii.front()) continue;
      const BallScan scan(grid, c, std::min(reach, radii.back()));
      const auto sums = scan.prefix_sums<double>([&](std::size_t k) { return omega.values[k]; });
      for (std::size_t r = 0; r < radii.size(); ++r) {
        if (radii[r] > reach * (1.0 + 1e-12)) break;
        const std::size_t m = scan.count(radii[r]);
        if (m == 0) continue;
        const double mean = sums[m] / static_cast<double>(m);
        double acc = 0.0;
        const auto nodes = scan.nodes(radii[r]);
        for (std::size_t k : nodes) acc += std::pow(std::abs(omega.values[k] - mean), gp);
        sup[r] = std::max(sup[r], std::pow(acc / static_cast<double>(m), 1.0 / gp));
      }
    }
  }
  return sup;
}

inline std::vector<double> modulus_radii(const Grid2D& grid, double r, int levels) {
  if (!(r > 0.0)) throw DomainError("omega modulus: radius must be positive");
  if (r > 0.5 * grid.side() * (1.0 + 1e-12)) throw DomainError("omega modulus: radius exceeds half the domain width");
  const double lo = 2.0 * grid.h();
  if (r < lo * (1.0 - 1e-12)) throw ResolutionError("omega modulus: radius below 2h");
  std::vector<double> radii;
  const int count = std::max(1, levels);
  for (int k = 0; k < count; ++k) {
    radii.push_back(count == 1 ? r : lo * std::pow(r / lo, static_cast<double>(k) / (count - 1)));
  }
  radii.back() = r;
  return radii;
}

}  // namespace detail

/// ω(r) = sup over sampled centers x0 and ladder radii ρ <= r of
/// (avg_{B_ρ(x0)} θ(a, B_ρ(x0))^γ')^{1/γ'}, with balls kept inside the domain.
inline double omega_modulus(const VectorField& vf, double r, const Grid2D& grid, const ModulusOptions& opts = {}) {
  const auto radii = detail::modulus_radii(grid, r, opts.levels);
  const auto sup = detail::oscillation_per_radius(vf, grid, radii, opts);
  return *std::max_element(sup.begin(), sup.end());
}

/// Samples ω on the ladder 2h .. r_max as a running supremum, ready for Dini integrals.
inline OscillationModulus build_oscillation_modulus(const VectorField& vf, const Grid2D& grid, double r_max,
                                                    const ModulusOptions& opts = {}) {
  const auto radii = detail::modulus_radii(grid, r_max, opts.levels);
  const auto sup = detail::oscillation_per_radius(vf, grid, radii, opts);
  std::vector<std::pair<double, double>> samples;
  double running = 0.0;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    running = std::max(running, sup[k]);
    samples.emplace_back(radii[k], running);
  }
  return OscillationModulus(opts.gamma_prime, 1.0 / (1.0 + vf.growth().sg()), std::move(samples));
}

struct DiniValue {
  double value = 0.0;
  /// Lower limit actually used; the interval (0, r_min) is not integrated.
  double r_min = 0.0;
  bool truncated = false;
};

/// ∫_{r_min}^{r} ω(ρ)^{dini_exponent} ρ^{-alpha_hat} weight(ρ) dρ/ρ with power-law
/// interpolation between the stored radii.
inline DiniValue dini_integral(const OscillationModulus& om, double r, double alpha_hat,
                               const std::function<double(double)>& weight = {}) {
  if (om.empty()) throw StateError("dini integral: empty oscillation modulus");
  DiniValue out;
  out.r_min = om.r_min();
  out.truncated = true;
  if (r <= out.r_min) return out;
  auto integrand = [&](double rho) {
    const double w = om.at(rho);
    if (w <= 0.0) return 0.0;
    double v = std::pow(w, om.dini_exponent()) * std::pow(rho, -alpha_hat);
    if (weight) v *= weight(rho);
    return v;
  };
  std::vector<double> nodes;
  for (const auto& [rho, w] : om.samples()) {
    if (rho < r) nodes.push_back(rho);
  }
  nodes.push_back(r);
  double prev = integrand(nodes.front());
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const double cur = integrand(nodes[k]);
    out.value += numeric::loglog_segment(nodes[k - 1], prev, nodes[k], cur);
    prev = cur;
  }
  return out;
}

}  // namespace olab
