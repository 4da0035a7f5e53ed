#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "olab/harness/checks.hpp"
#include "olab/harness/config.hpp"
#include "olab/harness/report.hpp"

namespace olab::harness {

/// Runs one named check; library errors become a failed report carrying the message.
inline CheckReport run_check(const std::string& name, const ExperimentConfig& cfg) {
  const CheckFunction& fn = find_check(name);
  try {
    return fn(cfg);
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    CheckReport rep;
    rep.name = name;
    rep.passed = false;
    rep.notes.push_back(std::string("error: ") + e.what());
    return rep;
  }
}

/// Runs the configured check list on a pool of `jobs` workers; reports come back in list order.
/// When the homogeneous excess-decay fit is part of the list it runs first and its β̂ caps α̂.
inline std::vector<CheckReport> verify(ExperimentConfig cfg, int jobs = 1) {
  std::vector<std::string> names = cfg.checks.names;
  if (names.empty()) throw UsageError("verify: the [checks] list is empty");
  for (const auto& n : names) find_check(n);
  std::vector<CheckReport> reports(names.size());
  std::vector<bool> done(names.size(), false);

  const auto fit = std::find(names.begin(), names.end(), "excess_decay_homogeneous");
  if (fit != names.end()) {
    const std::size_t k = static_cast<std::size_t>(fit - names.begin());
    reports[k] = run_check(*fit, cfg);
    done[k] = true;
    const auto beta = reports[k].metrics.find("beta_hat");
    if (beta != reports[k].metrics.end() && beta->second > 0.0 && cfg.checks.alpha_hat >= beta->second) {
      cfg.checks.alpha_hat = 0.9 * beta->second;
      reports[k].notes.push_back("alpha_hat capped at 0.9 beta_hat = " + detail::format_number(cfg.checks.alpha_hat));
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < names.size(); k = next++) {
      if (!done[k]) reports[k] = run_check(names[k], cfg);
    }
  };
  const int workers = std::clamp(jobs, 1, static_cast<int>(names.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return reports;
}

inline bool all_passed(const std::vector<CheckReport>& reports) {
  return std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.passed || r.skipped; });
}

/// Writes one CSV per report plus summary.txt into `dir`.
inline void write_reports(const std::filesystem::path& dir, const std::vector<CheckReport>& reports) {
  std::filesystem::create_directories(dir);
  for (const auto& r : reports) {
    std::ofstream os(dir / (r.name + ".csv"));
    if (!os) throw Error("cannot write report to " + dir.string());
    write_report_csv(os, r);
  }
  std::ofstream os(dir / "summary.txt");
  write_summary(os, reports);
}

struct SweepCell {
  std::string label;
  ExperimentConfig config;
};

/// Cross product of the nonempty sweep axes; each cell pins every axis to one value.
inline std::vector<SweepCell> sweep_cells(const ExperimentConfig& cfg) {
  std::vector<SweepCell> cells{{"", cfg}};
  auto expand = [&](const auto& values, const std::string& key, auto&& apply) {
    if (values.empty()) return;
    std::vector<SweepCell> next;
    for (const auto& cell : cells) {
      for (const auto& v : values) {
        SweepCell c = cell;
        apply(c.config, v);
        c.label += (c.label.empty() ? "" : "_") + key + detail::num(static_cast<double>(v));
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  };
  expand(cfg.sweep.n, "n", [](ExperimentConfig& c, int v) { c.sweep.n = {v}; });
  expand(cfg.sweep.scale, "scale", [](ExperimentConfig& c, double v) { c.sweep.scale = {v}; });
  expand(cfg.sweep.radius, "radius", [](ExperimentConfig& c, double v) { c.sweep.radius = {v}; });
  expand(cfg.sweep.level, "level", [](ExperimentConfig& c, int v) { c.levels.back() = v; });
  expand(cfg.sweep.epsilon, "epsilon", [](ExperimentConfig& c, double v) { c.solver.epsilon = v; });
  expand(cfg.sweep.gamma_prime, "gamma", [](ExperimentConfig& c, double v) { c.checks.gamma_prime = v; });
  if (cells.size() == 1 && cells.front().label.empty()) throw UsageError("sweep: no sweep axes given");
  return cells;
}

}  // namespace olab::harness
