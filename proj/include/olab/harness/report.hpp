#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "olab/geometry.hpp"

namespace olab::harness {

/// Ratios are only formed when the right-hand side exceeds this.
inline constexpr double kRhsFloor = 1e-14;

/// Maximum allowed max/min spread of the per-cell maximal ratio across a sweep.
inline constexpr double kDriftLimit = 3.0;

struct CheckRow {
  Vec2 point{};
  double radius = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = std::numeric_limits<double>::quiet_NaN();
  /// "ok", "exact", "skipped", "fail" or a check-specific tag.
  std::string flag = "ok";
  /// Sweep cell the row belongs to; drift compares the cells' maximal ratios.
  std::string cell;
};

struct CheckReport {
  std::string name;
  std::vector<CheckRow> rows;
  std::vector<std::string> notes;
  std::map<std::string, double> metrics;
  double max_ratio = std::numeric_limits<double>::quiet_NaN();
  double median_ratio = std::numeric_limits<double>::quiet_NaN();
  double drift = std::numeric_limits<double>::quiet_NaN();
  bool skipped = false;
  bool passed = false;

  /// Adds a row, forming the ratio when the right-hand side is large enough.
  CheckRow& add(Vec2 point, double radius, double lhs, double rhs, const std::string& cell) {
    CheckRow row;
    row.point = point;
    row.radius = radius;
    row.lhs = lhs;
    row.rhs = rhs;
    row.cell = cell;
    if (rhs > kRhsFloor && std::isfinite(lhs) && std::isfinite(rhs)) {
      row.ratio = lhs / rhs;
    } else {
      row.flag = "skipped";
    }
    rows.push_back(row);
    return rows.back();
  }

  /// Fills max/median ratio and the drift of per-cell maxima; returns whether the drift
  /// criterion (when defined) holds and every ratio is finite.
  bool summarize(double drift_limit = kDriftLimit) {
    std::vector<double> ratios;
    std::map<std::string, double> cell_max;
    bool finite = true;
    for (const auto& r : rows) {
      if (r.flag == "fail") finite = false;
      if (r.flag == "skipped" || r.flag == "exact") continue;
      if (!std::isfinite(r.ratio) || r.ratio < 0.0) {
        finite = false;
        continue;
      }
      ratios.push_back(r.ratio);
      auto [it, inserted] = cell_max.emplace(r.cell, r.ratio);
      if (!inserted) it->second = std::max(it->second, r.ratio);
    }
    if (!ratios.empty()) {
      std::sort(ratios.begin(), ratios.end());
      max_ratio = ratios.back();
      median_ratio = ratios[(ratios.size() - 1) / 2];
    }
    // Cells named "family|cell" are compared only within their family.
    std::map<std::string, std::pair<double, double>> family_range;
    std::map<std::string, int> family_cells;
    for (const auto& [cell, m] : cell_max) {
      const auto bar = cell.find('|');
      const std::string family = bar == std::string::npos ? std::string{} : cell.substr(0, bar);
      auto [it, inserted] = family_range.emplace(family, std::pair{m, m});
      if (!inserted) it->second = {std::min(it->second.first, m), std::max(it->second.second, m)};
      ++family_cells[family];
    }
    for (const auto& [family, range] : family_range) {
      if (family_cells[family] < 2) continue;
      const double d = (range.first > 0.0) ? range.second / range.first : std::numeric_limits<double>::infinity();
      drift = (drift == drift) ? std::max(drift, d) : d;
    }
    bool ok = finite && (!(drift == drift) || drift < drift_limit);
    return ok;
  }
};

namespace detail {

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// CSV with columns check, point_x, point_y, radius, lhs, rhs, ratio, flag.
inline void write_report_csv(std::ostream& os, const CheckReport& report) {
  using detail::format_number;
  os << "check,point_x,point_y,radius,lhs,rhs,ratio,flag\n";
  for (const auto& r : report.rows) {
    os << report.name << ',' << format_number(r.point.x) << ',' << format_number(r.point.y) << ','
       << format_number(r.radius) << ',' << format_number(r.lhs) << ',' << format_number(r.rhs) << ','
       << format_number(r.ratio) << ',' << r.flag << (r.cell.empty() ? "" : ":" + r.cell) << '\n';
  }
}

inline std::string verdict(const CheckReport& r) {
  if (r.skipped) return "SKIP";
  return r.passed ? "PASS" : "FAIL";
}

/// Fixed-width summary: one line per report plus its notes and metrics.
inline void write_summary(std::ostream& os, const std::vector<CheckReport>& reports) {
  char line[256];
  std::snprintf(line, sizeof line, "%-32s %-6s %8s %14s %14s %10s\n", "check", "result", "rows", "max_ratio",
                "median_ratio", "drift");
  os << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-32s %-6s %8zu %14.6g %14.6g %10.4g\n", r.name.c_str(), verdict(r).c_str(),
                  r.rows.size(), r.max_ratio, r.median_ratio, r.drift);
    os << line;
    for (const auto& [key, value] : r.metrics) os << "    " << key << " = " << detail::format_number(value) << '\n';
    for (const auto& note : r.notes) os << "    note: " << note << '\n';
  }
}

}  // namespace olab::harness
