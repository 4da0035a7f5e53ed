#pragma once

// Obstacle problems and equations on the grid: projected-gradient minimization of the
// discrete Orlicz energy, measure mollification, approximating sequences and the
// comparison chain w1..w4.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "olab/error.hpp"
#include "olab/field.hpp"
#include "olab/geometry.hpp"
#include "olab/grid.hpp"
#include "olab/orlicz.hpp"

namespace olab {

struct SolverConfig {
  /// Kernel regularization: the energy uses G(sqrt(|Du|² + ε²)).
  double epsilon = 1e-8;
  /// Bound on the natural residual min(u - ψ, -div a(Du) - f): the h-scaled ℓ² norm must
  /// reach tol and the max norm 10·tol.
  double tol = 1e-8;
  int max_iter = 200000;
  double backtrack = 0.5;
  double sufficient_decrease = 1e-4;
};

struct Solution {
  GridFunction u;
  int iterations = 0;
  /// h-scaled ℓ² norm of the natural residual, one entry per iteration.
  std::vector<double> residual_history;
  /// Discrete energy after every accepted step (entry 0 is the initial iterate).
  std::vector<double> energy_history;
  /// max over free nodes of |min(u - ψ, -div_h a(Du) - f)|.
  double complementarity = 0.0;
  double energy = 0.0;
  bool converged = false;
};

class IterationLimitError : public Error {
 public:
  IterationLimitError(const std::string& what, Solution last) : Error(what), last_(std::move(last)) {}
  const Solution& last_iterate() const { return last_; }

 private:
  Solution last_;
};

class ChainError : public Error {
 public:
  ChainError(const std::string& stage, const std::string& what)
      : Error("comparison chain stage " + stage + ": " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// Data of OP(ψ; f) or OP(ψ; μ). Nodes on the outer ring (and, when `region` is set, nodes
/// outside the open ball) are pinned to `boundary`; `boundary` doubles as initial guess.
struct ObstacleProblem {
  VectorField field;
  std::optional<GridFunction> obstacle;
  GridFunction boundary;
  std::variant<GridFunction, MeasureData> rhs;
  std::optional<Ball> region;
};

namespace detail {

/// E(u) = Σ_cells ω(cell) (h²/4) Σ_corners G_ε(|D_c u|) - Σ_nodes f u h², where D_c u is
/// the forward-difference gradient of the corner triangle (both diagonal splittings).
class DiscreteEnergy {
 public:
  DiscreteEnergy(const ObstacleProblem& prob, const GridFunction& f, double epsilon)
      : grid_(prob.boundary.grid), og_(prob.field.growth()), eps2_(epsilon * epsilon), f_(f.values) {
    require_same_grid(grid_, f.grid);
    const int n = grid_.n();
    const double h = grid_.h();
    free_.assign(grid_.size(), 0);
    for (int j = 1; j < n - 1; ++j) {
      for (int i = 1; i < n - 1; ++i) {
        bool is_free = true;
        if (prob.region) {
          is_free = distance(grid_.node(i, j), prob.region->center) < prob.region->radius * (1.0 - 1e-12);
        }
        if (is_free) {
          free_[grid_.index(i, j)] = 1;
          free_list_.push_back(grid_.index(i, j));
        }
      }
    }
    for (int j = 0; j < n - 1; ++j) {
      for (int i = 0; i < n - 1; ++i) {
        const std::size_t k = grid_.index(i, j);
        if (free_[k] || free_[k + 1] || free_[k + n] || free_[k + n + 1]) {
          cells_.push_back(k);
          const Vec2 c{grid_.origin().x + (i + 1.0) * h, grid_.origin().y + (j + 1.0) * h};
          omega_.push_back(prob.field.coefficient()(c));
        }
      }
    }
    g_eps_ = og_.G(std::sqrt(eps2_));
    const auto& gf = prob.field.growth();
    kind_ = gf.kind();
    p_ = gf.p();
    mu_ = gf.mu();
    linear_ = (p_ == 2.0 && kind_ != GrowthFunction::Kind::tabulated);
    if (kind_ != GrowthFunction::Kind::tabulated && p_ == std::floor(p_) && p_ <= 12.0) int_p_ = static_cast<int>(p_);
  }

  const Grid2D& grid() const { return grid_; }
  const std::vector<std::uint8_t>& free_mask() const { return free_; }
  const std::vector<std::size_t>& free_nodes() const { return free_list_; }

  double energy(const std::vector<double>& u) const {
    const double h = grid_.h();
    const double quarter = 0.25 * h * h;
    double e = 0.0;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      const auto d = edges(u, cells_[c]);
      double cell = 0.0;
      for (const double q : corner_sq(d)) cell += density(q);
      e += omega_[c] * quarter * cell;
    }
    for (std::size_t k : free_list_) e -= f_[k] * u[k] * h * h;
    return e;
  }

  /// ∂E/∂u at every node (pinned entries are left at zero).
  void gradient(const std::vector<double>& u, std::vector<double>& grad) const {
    grad.assign(u.size(), 0.0);
    const int n = grid_.n();
    const double h = grid_.h();
    const double scale = 0.25 * h;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      const std::size_t k = cells_[c];
      const auto d = edges(u, k);
      const auto q = corner_sq(d);
      const double k00 = kernel(q[0]);
      const double k10 = kernel(q[1]);
      const double k01 = kernel(q[2]);
      const double k11 = kernel(q[3]);
      const double w = omega_[c] * scale;
      // Corners: 00 -> (ex0, ey0), 10 -> (ex0, ey1), 01 -> (ex1, ey0), 11 -> (ex1, ey1).
      const double gx0 = w * (k00 + k10) * d[0];
      const double gx1 = w * (k01 + k11) * d[1];
      const double gy0 = w * (k00 + k01) * d[2];
      const double gy1 = w * (k10 + k11) * d[3];
      grad[k] -= gx0 + gy0;
      grad[k + 1] += gx0 - gy1;
      grad[k + n] += gy0 - gx1;
      grad[k + n + 1] += gx1 + gy1;
    }
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (free_[k]) {
        grad[k] -= f_[k] * h * h;
      } else {
        grad[k] = 0.0;
      }
    }
  }

  /// E(u + du) - E(u), evaluated cell by cell from increments so that tiny steps keep
  /// their relative accuracy.
  double delta(const std::vector<double>& u, const std::vector<double>& du) const {
    const double h = grid_.h();
    const double quarter = 0.25 * h * h;
    double e = 0.0;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      const std::size_t k = cells_[c];
      const auto d = edges(u, k);
      const auto dd = edges(du, k);
      if (dd[0] == 0.0 && dd[1] == 0.0 && dd[2] == 0.0 && dd[3] == 0.0) continue;
      const auto q = corner_sq(d);
      const std::array<double, 4> dq = {
          dd[0] * (2.0 * d[0] + dd[0]) + dd[2] * (2.0 * d[2] + dd[2]),
          dd[0] * (2.0 * d[0] + dd[0]) + dd[3] * (2.0 * d[3] + dd[3]),
          dd[1] * (2.0 * d[1] + dd[1]) + dd[2] * (2.0 * d[2] + dd[2]),
          dd[1] * (2.0 * d[1] + dd[1]) + dd[3] * (2.0 * d[3] + dd[3]),
      };
      double cell = 0.0;
      for (std::size_t m = 0; m < 4; ++m) cell += increment(q[m] + eps2_, dq[m]);
      e += omega_[c] * quarter * cell;
    }
    for (std::size_t k : free_list_) e -= f_[k] * du[k] * h * h;
    return e;
  }

 private:
  // Edge differences of the cell with lower-left node k: bottom, top, left, right.
  std::array<double, 4> edges(const std::vector<double>& u, std::size_t k) const {
    const std::size_t n = static_cast<std::size_t>(grid_.n());
    const double inv_h = 1.0 / grid_.h();
    return {(u[k + 1] - u[k]) * inv_h, (u[k + n + 1] - u[k + n]) * inv_h, (u[k + n] - u[k]) * inv_h,
            (u[k + n + 1] - u[k + 1]) * inv_h};
  }

  static std::array<double, 4> corner_sq(const std::array<double, 4>& d) {
    const double bx = d[0] * d[0];
    const double tx = d[1] * d[1];
    const double ly = d[2] * d[2];
    const double ry = d[3] * d[3];
    return {bx + ly, bx + ry, tx + ly, tx + ry};
  }

  // (b + db)^{p/2} - b^{p/2} over p for integer p, factored as x^p - y^p = (x - y) Σ x^i y^{p-1-i}.
  double integer_power_increment(double b, double db) const {
    const double x = std::sqrt(b + db);
    const double y = std::sqrt(b);
    if (x + y == 0.0) return 0.0;
    double sum = 0.0;
    double xi = 1.0;
    for (int i = 0; i < int_p_; ++i) {
      double term = xi;
      for (int j = 0; j < int_p_ - 1 - i; ++j) term *= y;
      sum += term;
      xi *= x;
    }
    return db / (x + y) * sum / p_;
  }

  double increment(double qe, double dq) const {
    if (linear_) return 0.5 * dq;
    if (int_p_ > 0) return integer_power_increment(mu_ + qe, dq);
    return og_.increment_sq(qe, dq);
  }

  double kernel(double q) const {
    const double qe = q + eps2_;
    if (linear_) return 1.0;
    if (int_p_ > 0) {
      const double b = mu_ + qe;
      double v = (int_p_ % 2 == 1) ? std::sqrt(b) : 1.0;
      for (int m = 0; m < (int_p_ - 2) / 2; ++m) v *= b;
      if (int_p_ % 2 == 1) {
        v = std::sqrt(b);
        for (int m = 0; m < (int_p_ - 3) / 2; ++m) v *= b;
      }
      return v;
    }
    switch (kind_) {
      case GrowthFunction::Kind::power:
        return qe == 0.0 ? 0.0 : std::pow(qe, 0.5 * (p_ - 2.0));
      case GrowthFunction::Kind::regularized_power: {
        const double b = mu_ + qe;
        return b == 0.0 ? 0.0 : std::pow(b, 0.5 * (p_ - 2.0));
      }
      case GrowthFunction::Kind::tabulated:
        return og_.growth().kernel(std::sqrt(qe));
    }
    return 0.0;
  }

  double density(double q) const {
    if (linear_) return 0.5 * q;
    return og_.G(std::sqrt(q + eps2_)) - g_eps_;
  }

  Grid2D grid_;
  OrliczG og_;
  double eps2_;
  double g_eps_ = 0.0;
  std::vector<double> f_;
  std::vector<std::uint8_t> free_;
  std::vector<std::size_t> free_list_;
  std::vector<std::size_t> cells_;
  std::vector<double> omega_;
  GrowthFunction::Kind kind_ = GrowthFunction::Kind::power;
  double p_ = 2.0;
  double mu_ = 0.0;
  bool linear_ = false;
  int int_p_ = 0;
};

inline const GridFunction& require_density_rhs(const ObstacleProblem& prob) {
  if (const auto* f = std::get_if<GridFunction>(&prob.rhs)) return *f;
  throw DataError("solve: right-hand side must be a grid function (mollify measure data first)");
}

inline void check_feasible(const ObstacleProblem& prob, const std::vector<std::uint8_t>& free_mask) {
  require_same_grid(prob.boundary.grid, prob.field.domain());
  if (!prob.obstacle) return;
  require_same_grid(prob.boundary.grid, prob.obstacle->grid);
  for (std::size_t k = 0; k < free_mask.size(); ++k) {
    if (!std::isfinite(prob.obstacle->values[k])) throw DataError("obstacle must be finite");
    if (!free_mask[k] && prob.boundary.values[k] < prob.obstacle->values[k] - 1e-12) {
      throw DataError("infeasible boundary data: h < psi at a pinned node");
    }
  }
}

}  // namespace detail

/// Natural residual φ = min(u - ψ, r) (or r without obstacle), r = -div_h a(Du) - f, on free
/// nodes; zero elsewhere.
inline GridFunction natural_residual(const ObstacleProblem& prob, const GridFunction& u, double epsilon) {
  const GridFunction& f = detail::require_density_rhs(prob);
  const detail::DiscreteEnergy energy(prob, f, epsilon);
  std::vector<double> grad;
  energy.gradient(u.values, grad);
  const double inv_h2 = 1.0 / (u.grid.h() * u.grid.h());
  GridFunction phi(u.grid);
  for (std::size_t k : energy.free_nodes()) {
    const double r = grad[k] * inv_h2;
    phi.values[k] = prob.obstacle ? std::min(u.values[k] - prob.obstacle->values[k], r) : r;
  }
  return phi;
}

/// -div_h a(x, Du) at the free nodes of `prob` (the discrete operator in strong form).
inline GridFunction apply_operator(const ObstacleProblem& prob, const GridFunction& u, double epsilon) {
  const detail::DiscreteEnergy energy(prob, GridFunction(u.grid), epsilon);
  std::vector<double> grad;
  energy.gradient(u.values, grad);
  const double inv_h2 = 1.0 / (u.grid.h() * u.grid.h());
  GridFunction out(u.grid);
  for (std::size_t k : energy.free_nodes()) out.values[k] = grad[k] * inv_h2;
  return out;
}

/// Minimizes the discrete energy over {u >= ψ, u = boundary on pinned nodes} by projected
/// gradient steps with Barzilai-Borwein trial lengths and monotone Armijo backtracking
/// along the projection arc.
inline Solution solve_vi(const ObstacleProblem& prob, const SolverConfig& cfg = {}) {
  if (!(cfg.tol > 0.0)) throw DataError("solver tolerance must be positive");
  if (!(cfg.epsilon >= 0.0)) throw DataError("kernel regularization must be nonnegative");
  const GridFunction& f = detail::require_density_rhs(prob);
  const detail::DiscreteEnergy energy(prob, f, cfg.epsilon);
  detail::check_feasible(prob, energy.free_mask());

  const Grid2D& grid = energy.grid();
  const std::size_t size = grid.size();
  const double h = grid.h();
  const double inv_h2 = 1.0 / (h * h);
  const auto& free_nodes = energy.free_nodes();
  const std::vector<double>* psi = prob.obstacle ? &prob.obstacle->values : nullptr;

  Solution sol{prob.boundary, 0, {}, {}, 0.0, 0.0, false};
  std::vector<double>& u = sol.u.values;
  if (psi) {
    for (std::size_t k : free_nodes) u[k] = std::max(u[k], (*psi)[k]);
  }

  std::vector<double> grad;
  std::vector<double> grad_new;
  std::vector<double> du(size, 0.0);
  energy.gradient(u, grad);
  double e = energy.energy(u);
  sol.energy_history.push_back(e);

  auto residual = [&](const std::vector<double>& g, double& l2, double& linf) {
    double sum = 0.0;
    linf = 0.0;
    for (std::size_t k : free_nodes) {
      const double r = g[k] * inv_h2;
      const double phi = psi ? std::min(u[k] - (*psi)[k], r) : r;
      sum += phi * phi;
      linf = std::max(linf, std::abs(phi));
    }
    l2 = std::sqrt(sum * h * h);
  };

  double alpha = 1.0 / (4.0 * prob.field.c_high());
  const double alpha_min = 1e-14;
  const double alpha_max = 1e14;
  for (int it = 0;; ++it) {
    double l2 = 0.0;
    double linf = 0.0;
    residual(grad, l2, linf);
    sol.residual_history.push_back(l2);
    sol.complementarity = linf;
    sol.iterations = it;
    if (l2 <= cfg.tol && linf <= 10.0 * cfg.tol) {
      sol.converged = true;
      break;
    }
    if (it >= cfg.max_iter) break;

    bool accepted = false;
    double step = alpha;
    for (int bt = 0; bt < 80; ++bt) {
      double slope = 0.0;
      bool moved = false;
      for (std::size_t k : free_nodes) {
        double next = u[k] - step * grad[k];
        if (psi) next = std::max(next, (*psi)[k]);
        du[k] = next - u[k];
        slope += grad[k] * du[k];
        moved = moved || du[k] != 0.0;
      }
      if (!moved) break;
      const double de = energy.delta(u, du);
      if (de <= cfg.sufficient_decrease * slope) {
        for (std::size_t k : free_nodes) u[k] += du[k];
        e += de;
        accepted = true;
        break;
      }
      step *= cfg.backtrack;
    }
    if (!accepted) break;
    sol.energy_history.push_back(e);

    energy.gradient(u, grad_new);
    double ss = 0.0;
    double sy = 0.0;
    for (std::size_t k : free_nodes) {
      ss += du[k] * du[k];
      sy += du[k] * (grad_new[k] - grad[k]);
    }
    alpha = (sy > 0.0) ? std::clamp(ss / sy, alpha_min, alpha_max) : alpha_max;
    grad.swap(grad_new);
  }
  sol.energy = energy.energy(u);
  if (!sol.converged) {
    const std::string what = "solver stopped after " + std::to_string(sol.iterations) +
                             " iterations with residual " + std::to_string(sol.residual_history.back());
    throw IterationLimitError(what, std::move(sol));
  }
  return sol;
}

/// The equation case: same minimization without the obstacle constraint.
inline Solution solve_equation(const ObstacleProblem& prob, const SolverConfig& cfg = {}) {
  ObstacleProblem eq = prob;
  eq.obstacle.reset();
  return solve_vi(eq, cfg);
}

/// Solves on `ball` with the coefficient replaced by its ball average (the frozen field
/// ā_B); nodes outside the ball keep the values of prob.boundary.
inline Solution solve_frozen(const ObstacleProblem& prob, const Ball& ball, const SolverConfig& cfg = {}) {
  ObstacleProblem frozen = prob;
  frozen.field = prob.field.frozen(coefficient_average(prob.field, ball));
  frozen.region = ball;
  return solve_vi(frozen, cfg);
}

/// Convolution of μ with the normalized bump (1 - |x/r|²)², r = 1/(4·level). Weights are
/// normalized over the interior nodes they reach, so interior mass is preserved exactly.
inline GridFunction mollify_measure(const MeasureData& mu, const Grid2D& grid, int level) {
  if (level < 1) throw LevelError("mollification level must be at least 1");
  const double r = 1.0 / (4.0 * level);
  const double h2 = grid.cell_area();
  GridFunction out(grid);

  auto splat = [&](Vec2 at, double mass) {
    const BallScan scan(grid, at, r);
    double total = 0.0;
    std::vector<std::pair<std::size_t, double>> weights;
    for (std::size_t k : scan.all_nodes()) {
      if (grid.is_boundary(k)) continue;
      const Vec2 d = grid.node(k) - at;
      const double s = 1.0 - dot(d, d) / (r * r);
      if (s <= 0.0) continue;
      weights.emplace_back(k, s * s);
      total += s * s;
    }
    if (weights.empty()) return false;
    const double scale = mass / (total * h2);
    for (const auto& [k, w] : weights) out.values[k] += w * scale;
    return true;
  };

  for (const auto& atom : mu.atoms) {
    const double reach = grid.distance_to_boundary(atom.position);
    if (!(reach > 0.0)) throw DataError("measure atoms must lie strictly inside the domain");
    if (r > reach) throw LevelError("mollification radius exceeds the atom's distance to the boundary");
    if (!splat(atom.position, atom.mass)) throw LevelError("mollification radius below the grid resolution");
  }
  if (mu.density) {
    const GridFunction& dens = *mu.density;
    for (std::size_t k = 0; k < dens.values.size(); ++k) {
      const double v = dens.values[k];
      if (v == 0.0) continue;
      const Vec2 x = dens.grid.node(k);
      if (!grid.contains(x)) continue;
      const double mass = v * dens.grid.cell_area();
      if (!splat(x, mass)) {
        const auto [i, j] = grid.nearest_node(x);
        if (!grid.is_boundary(i, j)) out.at(i, j) += mass / h2;
      }
    }
  }
  return out;
}

struct OpSequenceResult {
  std::vector<int> levels;
  std::vector<Solution> solutions;
  /// W^{1,1} distance between consecutive levels.
  std::vector<double> distances;
  /// ∫ f_i per level.
  std::vector<double> masses;

  bool distances_decreasing() const {
    for (std::size_t k = 1; k < distances.size(); ++k) {
      if (!(distances[k] < distances[k - 1])) return false;
    }
    return true;
  }
  const Solution& finest() const { return solutions.back(); }
};

/// Approximating solutions u_i of OP(ψ; f_i) with f_i the level-i mollification of μ.
inline OpSequenceResult solve_op_sequence(const ObstacleProblem& prob, const std::vector<int>& levels,
                                          const SolverConfig& cfg = {}) {
  const auto* mu = std::get_if<MeasureData>(&prob.rhs);
  if (!mu) throw DataError("approximating sequence needs measure data");
  if (levels.empty()) throw DataError("approximating sequence needs at least one level");
  for (std::size_t k = 1; k < levels.size(); ++k) {
    if (levels[k] <= levels[k - 1]) throw DataError("mollification levels must increase");
  }
  OpSequenceResult out;
  out.levels = levels;
  const Grid2D& grid = prob.boundary.grid;
  for (int level : levels) {
    ObstacleProblem stage = prob;
    GridFunction f = mollify_measure(*mu, grid, level);
    double mass = 0.0;
    for (double v : f.values) mass += v;
    out.masses.push_back(mass * grid.cell_area());
    stage.rhs = std::move(f);
    try {
      out.solutions.push_back(solve_vi(stage, cfg));
    } catch (const IterationLimitError& err) {
      throw IterationLimitError("level " + std::to_string(level) + ": " + err.what(), err.last_iterate());
    }
    if (out.solutions.size() > 1) {
      out.distances.push_back(
          w11_distance(out.solutions[out.solutions.size() - 2].u, out.solutions.back().u));
    }
  }
  return out;
}

struct ComparisonChain {
  Solution w1;  ///< homogeneous obstacle problem on B_R, trace u
  Solution w2;  ///< frozen obstacle problem on B_{R/2}, trace w1
  Solution w3;  ///< frozen equation with data -div ā(Dψ) on B_{R/2}, trace w1
  Solution w4;  ///< frozen homogeneous equation on B_{R/2}, trace w1
  double frozen_coefficient = 0.0;
};

/// The four comparison problems between an approximating solution `outer` and the
/// homogeneous frozen equation, each solved on the grid with exterior nodes pinned.
inline ComparisonChain comparison_chain(const ObstacleProblem& prob, const GridFunction& outer, const Ball& ball,
                                        const SolverConfig& cfg = {}) {
  const Grid2D& grid = prob.boundary.grid;
  if (!grid.contains_ball(ball.center, 2.0 * ball.radius)) throw DomainError("comparison chain: B_2R leaves the domain");
  const Ball half{ball.center, 0.5 * ball.radius};

  auto run = [&](const std::string& stage, const ObstacleProblem& p) {
    try {
      return solve_vi(p, cfg);
    } catch (const Error& err) {
      throw ChainError(stage, err.what());
    }
  };

  ObstacleProblem s1 = prob;
  s1.boundary = outer;
  s1.rhs = GridFunction(grid);
  s1.region = ball;
  Solution w1 = run("w1", s1);

  const double frozen_coefficient = coefficient_average(prob.field, half);
  const VectorField frozen = prob.field.frozen(frozen_coefficient);

  ObstacleProblem s2 = s1;
  s2.field = frozen;
  s2.boundary = w1.u;
  s2.region = half;
  Solution w2 = run("w2", s2);

  ObstacleProblem s3 = s2;
  s3.obstacle.reset();
  if (prob.obstacle) {
    s3.rhs = apply_operator(s3, *prob.obstacle, cfg.epsilon);
  }
  Solution w3 = run("w3", s3);

  ObstacleProblem s4 = s2;
  s4.obstacle.reset();
  s4.rhs = GridFunction(grid);
  Solution w4 = run("w4", s4);
  return {std::move(w1), std::move(w2), std::move(w3), std::move(w4), frozen_coefficient};
}

}  // namespace olab
