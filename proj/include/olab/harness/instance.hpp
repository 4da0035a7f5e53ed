#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "olab/field.hpp"
#include "olab/grid.hpp"
#include "olab/harness/config.hpp"
#include "olab/orlicz.hpp"
#include "olab/potentials.hpp"
#include "olab/solver.hpp"

namespace olab::harness {

/// Which pieces of data a scaling factor multiplies.
enum class ScaleTarget { all, measure };

/// A fully assembled problem at one mesh and data scaling.
struct Instance {
  Grid2D grid;
  VectorField field;
  std::optional<GridFunction> obstacle;
  GridFunction boundary;
  MeasureData measure;

  ObstacleProblem problem() const { return {field, obstacle, boundary, measure, std::nullopt}; }
  /// ψ for the obstacle-dependent terms of the estimates; zero when no obstacle is set.
  GridFunction psi_or_zero() const { return obstacle ? *obstacle : GridFunction(grid); }
};

namespace detail {

inline std::filesystem::path resolve(const ExperimentConfig& cfg, const std::filesystem::path& p) {
  if (p.empty() || p.is_absolute()) return p;
  return cfg.base_dir / p;
}

inline GrowthFunction build_growth(const ExperimentConfig& cfg) {
  const auto& g = cfg.growth;
  if (g.kind == "power") return GrowthFunction::power(g.p);
  if (g.kind == "regularized_power") return GrowthFunction::regularized_power(g.p, g.mu);
  if (g.kind == "tabulated") {
    std::ifstream is(resolve(cfg, g.table));
    if (!is) throw DataError("cannot open growth table " + g.table.string());
    std::vector<double> t;
    std::vector<double> v;
    double a = 0.0;
    double b = 0.0;
    while (is >> a >> b) {
      t.push_back(a);
      v.push_back(b);
    }
    if (!is.eof()) throw DataError("growth table: expected two numeric columns");
    return GrowthFunction::tabulated(t, v, g.low_index);
  }
  throw UsageError("unknown growth kind '" + g.kind + "'");
}

inline CoefficientField build_coefficient(const ExperimentConfig& cfg) {
  const auto& c = cfg.coefficient;
  CoefficientField f = CoefficientField::constant(c.value);
  if (c.preset == "constant") {
    f = CoefficientField::constant(c.value);
  } else if (c.preset == "affine") {
    f = CoefficientField::affine(c.value, c.ax, c.ay);
  } else if (c.preset == "jump") {
    f = CoefficientField::jump(c.value, c.amplitude, c.position);
  } else if (c.preset == "checkerboard") {
    f = CoefficientField::checkerboard(c.value, c.amplitude, c.period);
  } else if (c.preset == "raster") {
    f = CoefficientField::sampled(read_raster(resolve(cfg, c.path)));
  } else {
    throw UsageError("unknown coefficient preset '" + c.preset + "'");
  }
  if (c.clamp_low || c.clamp_high) f = f.clamped(c.clamp_low.value_or(1e-300), c.clamp_high.value_or(1e300));
  return f;
}

inline std::optional<GridFunction> build_obstacle(const ExperimentConfig& cfg, const Grid2D& grid) {
  const auto& o = cfg.obstacle;
  if (o.preset == "none") return std::nullopt;
  if (o.preset == "affine") {
    return GridFunction::sample(grid, [&](Vec2 x) { return o.offset + o.ax * x.x + o.ay * x.y; });
  }
  if (o.preset == "quadratic") {
    return GridFunction::sample(grid, [&](Vec2 x) {
      const Vec2 d = x - o.center;
      return o.offset + 0.5 * o.scale * dot(d, d);
    });
  }
  if (o.preset == "bump") {
    if (!(o.radius > 0.0)) throw DataError("bump obstacle needs a positive radius");
    return GridFunction::sample(grid, [&](Vec2 x) {
      const Vec2 d = x - o.center;
      const double s = std::max(0.0, 1.0 - dot(d, d) / (o.radius * o.radius));
      return o.offset + o.height * s * s * s;
    });
  }
  throw UsageError("unknown obstacle preset '" + o.preset + "'");
}

// Radial solution of -div(g(|Du|)/|Du| Du) = m δ_c in the plane: g(|u'|) 2πr = m.
inline double fundamental_trace(const GrowthFunction& gf, double mass, double r) {
  if (gf.kind() != GrowthFunction::Kind::power) throw UsageError("fundamental boundary needs power growth");
  const double p = gf.p();
  const double flux = mass / (2.0 * kPi);
  if (p == 2.0) return -flux * std::log(r);
  return -(p - 1.0) / (p - 2.0) * std::pow(flux, 1.0 / (p - 1.0)) * std::pow(r, (p - 2.0) / (p - 1.0));
}

inline GridFunction build_boundary(const ExperimentConfig& cfg, const GrowthFunction& gf, const Grid2D& grid) {
  const auto& b = cfg.boundary;
  if (b.preset == "zero") return GridFunction(grid);
  if (b.preset == "affine") {
    return GridFunction::sample(grid, [&](Vec2 x) { return b.offset + b.ax * x.x + b.ay * x.y; });
  }
  if (b.preset == "sine") {
    return GridFunction::sample(grid, [&](Vec2 x) {
      return b.offset + b.ax * x.x + b.ay * x.y + b.amplitude * std::sin(2.0 * kPi * x.y);
    });
  }
  if (b.preset == "fundamental") {
    return GridFunction::sample(grid, [&](Vec2 x) {
      return b.offset + fundamental_trace(gf, b.mass, std::max(distance(x, b.center), 1e-300));
    });
  }
  throw UsageError("unknown boundary preset '" + b.preset + "'");
}

inline MeasureData build_measure(const ExperimentConfig& cfg, const Grid2D& grid) {
  MeasureData mu;
  if (!cfg.measure.file.empty()) {
    const auto path = resolve(cfg, cfg.measure.file);
    std::ifstream is(path);
    if (!is) throw DataError("cannot open measure file " + path.string());
    mu = read_measure(is, path.parent_path());
  }
  for (const auto& a : cfg.measure.atoms) mu.atoms.push_back(a);
  if (cfg.measure.density_value || !cfg.measure.density_raster.empty()) {
    if (mu.density) throw DataError("measure: more than one density given");
    if (!cfg.measure.density_raster.empty()) {
      mu.density = read_raster(resolve(cfg, cfg.measure.density_raster));
    } else {
      GridFunction d(grid, *cfg.measure.density_value);
      for (std::size_t k = 0; k < d.values.size(); ++k) {
        if (grid.is_boundary(k)) d.values[k] = 0.0;
      }
      mu.density = std::move(d);
    }
  }
  for (const auto& a : mu.atoms) {
    if (!(grid.distance_to_boundary(a.position) > 0.0)) throw DataError("measure atoms must lie strictly inside");
  }
  return mu;
}

}  // namespace detail

/// Builds the instance described by `cfg` on an n x n grid with the data scaled by `scale`.
inline Instance make_instance(const ExperimentConfig& cfg, int n, double scale = 1.0,
                              ScaleTarget target = ScaleTarget::all) {
  const Grid2D grid(cfg.grid.origin, cfg.grid.side, n);
  const GrowthFunction gf = detail::build_growth(cfg);
  VectorField field(gf, detail::build_coefficient(cfg), grid);
  auto obstacle = detail::build_obstacle(cfg, grid);
  GridFunction boundary = detail::build_boundary(cfg, gf, grid);
  MeasureData measure = detail::build_measure(cfg, grid);
  if (scale != 1.0) {
    measure = measure.scaled(scale);
    if (target == ScaleTarget::all) {
      for (double& v : boundary.values) v *= scale;
      if (obstacle) {
        for (double& v : obstacle->values) v *= scale;
      }
    }
  }
  return {grid, std::move(field), std::move(obstacle), std::move(boundary), std::move(measure)};
}

/// Data of OP(ψ; f) with f the mollification of the measure at `level`; a measure without
/// atoms or density gives f = 0.
inline ObstacleProblem mollified_problem(const Instance& inst, int level) {
  ObstacleProblem prob = inst.problem();
  prob.rhs = inst.measure.empty() ? GridFunction(inst.grid) : mollify_measure(inst.measure, inst.grid, level);
  return prob;
}

}  // namespace olab::harness
