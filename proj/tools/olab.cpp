// olab: solve obstacle problems, evaluate potentials and run estimate checks from a config file.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "olab/harness/checks.hpp"
#include "olab/harness/config.hpp"
#include "olab/harness/instance.hpp"
#include "olab/harness/report.hpp"
#include "olab/harness/runner.hpp"
#include "olab/potentials.hpp"
#include "olab/solver.hpp"

namespace fs = std::filesystem;
using namespace olab;
using namespace olab::harness;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct Options {
  fs::path config;
  fs::path out = "olab_out";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

ExperimentConfig load(const Options& opt) {
  ExperimentConfig cfg = load_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  return cfg;
}

int run_solve(const Options& opt) {
  const ExperimentConfig cfg = load(opt);
  const Instance inst = make_instance(cfg, cfg.grid.n);
  Solution sol = inst.measure.empty() ? solve_vi(mollified_problem(inst, cfg.level()), cfg.solver)
                                      : solve_op_sequence(inst.problem(), cfg.levels, cfg.solver).finest();
  fs::create_directories(opt.out);
  std::ofstream raster(opt.out / "solution.txt");
  write_raster(raster, sol.u);
  std::ofstream diag(opt.out / "diagnostics.txt");
  diag.precision(17);
  diag << "iterations " << sol.iterations << "\n"
       << "residual " << sol.residual_history.back() << "\n"
       << "complementarity " << sol.complementarity << "\n"
       << "energy " << sol.energy << "\n";
  std::cout << "converged in " << sol.iterations << " iterations, complementarity " << sol.complementarity << "\n";
  return kExitPass;
}

int run_potential(const Options& opt) {
  const ExperimentConfig cfg = load(opt);
  const Instance inst = make_instance(cfg, cfg.grid.n);
  const auto& ps = cfg.potential;
  const double h = inst.grid.h();
  const auto samples = harness::detail::sample_points(cfg, ps.points, ps.radius + h, 0.0, 7);
  std::vector<Vec2> points;
  std::vector<WolffValue> values;
  const ObstacleDensity od(inst.psi_or_zero(), inst.field.growth());
  GridFunction f = inst.measure.empty() ? GridFunction(inst.grid) : mollify_measure(inst.measure, inst.grid, cfg.level());
  for (Vec2 p : samples) {
    const Vec2 x = harness::detail::snap(inst.grid, p);
    const WolffParams wp{ps.beta, ps.p, ps.radius, 24, std::nullopt};
    WolffValue v;
    if (ps.kind == "wolff") {
      v = wolff(inst.measure, x, wp, inst.grid);
    } else if (ps.kind == "wolff_psi") {
      v = wolff_psi(od, x, wp);
    } else if (ps.kind == "frac_maximal") {
      v.value = frac_maximal(inst.measure, x, ps.beta, ps.radius, inst.grid);
    } else if (ps.kind == "sharp_maximal") {
      v.value = sharp_maximal(f, x, ps.beta, ps.radius);
    } else if (ps.kind == "obstacle_maximal") {
      v.value = obstacle_maximal(od, x, ps.beta, ps.radius);
    } else {
      throw UsageError("unknown potential kind '" + ps.kind + "'");
    }
    points.push_back(x);
    values.push_back(v);
  }
  fs::create_directories(opt.out);
  std::ofstream os(opt.out / "potential.csv");
  write_potential_csv(os, points, values);
  std::cout << "wrote " << points.size() << " values to " << (opt.out / "potential.csv").string() << "\n";
  return kExitPass;
}

int report(const std::vector<CheckReport>& reports, const fs::path& dir) {
  write_reports(dir, reports);
  write_summary(std::cout, reports);
  return all_passed(reports) ? kExitPass : kExitFail;
}

int run_verify(const Options& opt) {
  const ExperimentConfig cfg = load(opt);
  return report(verify(cfg, opt.jobs), opt.out);
}

int run_sweep(const Options& opt) {
  const ExperimentConfig cfg = load(opt);
  bool ok = true;
  for (const auto& cell : sweep_cells(cfg)) {
    std::cout << "== " << cell.label << "\n";
    ok = report(verify(cell.config, opt.jobs), opt.out / cell.label) == kExitPass && ok;
  }
  return ok ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Obstacle problems with Orlicz growth: solver, potentials and estimate checks"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "experiment config (INI)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--seed", opt.seed, "seed for sample points");
    sub->add_option("--jobs", opt.jobs, "parallel check workers")->check(CLI::PositiveNumber);
  };
  auto* solve = app.add_subcommand("solve", "solve the configured obstacle problem");
  auto* potential = app.add_subcommand("potential", "batch Wolff potential or maximal operator values");
  auto* verify_cmd = app.add_subcommand("verify", "run the configured checks");
  auto* sweep = app.add_subcommand("sweep", "run the checks on every cell of the sweep axes");
  for (auto* sub : {solve, potential, verify_cmd, sweep}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    if (*solve) return run_solve(opt);
    if (*potential) return run_potential(opt);
    if (*verify_cmd) return run_verify(opt);
    return run_sweep(opt);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
}
