#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "olab/error.hpp"
#include "olab/geometry.hpp"
#include "olab/orlicz.hpp"
#include "olab/solver.hpp"

namespace olab::harness {

struct GrowthSpec {
  std::string kind = "power";
  double p = 2.0;
  double mu = 0.0;
  std::filesystem::path table;
  LowIndexPolicy low_index = LowIndexPolicy::reject;
};

struct CoefficientSpec {
  std::string preset = "constant";
  double value = 1.0;
  double amplitude = 0.0;
  double position = 0.5;
  double period = 0.25;
  double ax = 0.0;
  double ay = 0.0;
  std::filesystem::path path;
  std::optional<double> clamp_low;
  std::optional<double> clamp_high;
};

struct ObstacleSpec {
  std::string preset = "none";
  double offset = 0.0;
  double ax = 0.0;
  double ay = 0.0;
  Vec2 center{0.5, 0.5};
  double scale = 1.0;
  double height = 1.0;
  double radius = 0.25;
};

struct BoundarySpec {
  std::string preset = "zero";
  double offset = 0.0;
  double ax = 0.0;
  double ay = 0.0;
  double amplitude = 0.0;
  Vec2 center{0.5, 0.5};
  double mass = 1.0;
};

struct MeasureSpec {
  std::vector<Atom> atoms;
  std::optional<double> density_value;
  std::filesystem::path density_raster;
  std::filesystem::path file;
};

struct GridSpec {
  int n = 64;
  double side = 1.0;
  Vec2 origin{0.0, 0.0};
};

struct CheckSpec {
  std::vector<std::string> names;
  Vec2 center{0.5, 0.5};
  double radius = 0.2;
  /// R of the pointwise estimates; sample points keep B_{2R} (B_{4R} for the oscillation bound) inside.
  double theorem_radius = 0.1;
  int points = 25;
  double alpha_hat = 0.5;
  double gamma_prime = 2.0;
  int modulus_levels = 16;
};

struct SweepSpec {
  std::vector<int> n;
  std::vector<double> scale;
  std::vector<double> radius;
  std::vector<int> level;
  std::vector<double> epsilon;
  std::vector<double> gamma_prime;
};

struct PotentialSpec {
  std::string kind = "wolff";
  double beta = 0.5;
  double p = 2.0;
  double radius = 0.25;
  int points = 25;
};

struct ExperimentConfig {
  GrowthSpec growth;
  CoefficientSpec coefficient;
  ObstacleSpec obstacle;
  BoundarySpec boundary;
  MeasureSpec measure;
  GridSpec grid;
  SolverConfig solver;
  /// Mollification levels of the approximating sequence; the last one is used by single-level checks.
  std::vector<int> levels{4};
  CheckSpec checks;
  SweepSpec sweep;
  PotentialSpec potential;
  std::uint64_t seed = 1;
  std::filesystem::path base_dir;

  std::vector<int> meshes() const { return sweep.n.empty() ? std::vector<int>{grid.n} : sweep.n; }
  std::vector<double> scales() const { return sweep.scale.empty() ? std::vector<double>{1.0} : sweep.scale; }
  std::vector<double> radii() const {
    return sweep.radius.empty() ? std::vector<double>{checks.radius} : sweep.radius;
  }
  int level() const { return levels.back(); }
};

namespace detail {

template <typename T>
std::vector<T> parse_list(const std::string& text) {
  std::string cleaned = text;
  for (char& c : cleaned) {
    if (c == ',' || c == ';') c = ' ';
  }
  std::istringstream is(cleaned);
  std::vector<T> out;
  T v{};
  while (is >> v) out.push_back(v);
  if (!is.eof()) throw UsageError("config: cannot parse list '" + text + "'");
  return out;
}

inline std::vector<Atom> parse_atoms(const std::string& text) {
  std::vector<Atom> atoms;
  std::istringstream groups(text);
  std::string group;
  while (std::getline(groups, group, ';')) {
    std::istringstream is(group);
    Atom a;
    if (!(is >> a.position.x)) continue;
    if (!(is >> a.position.y >> a.mass)) throw UsageError("config: atoms need 'x y mass' triples");
    atoms.push_back(a);
  }
  return atoms;
}

/// Like ptree::get with a default, but a present value that fails to convert throws.
template <typename T>
T value(const boost::property_tree::ptree& section, const char* key, const T& fallback) {
  if (!section.get_child_optional(key)) return fallback;
  return section.get<T>(key);
}

inline std::string value(const boost::property_tree::ptree& section, const char* key, const char* fallback) {
  return value(section, key, std::string(fallback));
}

inline std::optional<double> optional_double(const boost::property_tree::ptree& section, const char* key) {
  if (!section.get_child_optional(key)) return std::nullopt;
  return section.get<double>(key);
}

inline void check_keys(const boost::property_tree::ptree& section, const std::string& name,
                       std::initializer_list<const char*> keys) {
  for (const auto& [key, value] : section) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw UsageError("config: unknown key '" + key + "' in [" + name + "]");
  }
}

}  // namespace detail

/// Parses the INI experiment description. Unknown sections or keys are usage errors.
inline ExperimentConfig parse_config(std::istream& is, const std::filesystem::path& base_dir = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  for (const auto& [name, section] : tree) {
    try {
      if (name == "growth") {
        detail::check_keys(section, name, {"kind", "p", "mu", "table", "low_index"});
        cfg.growth.kind = detail::value(section, "kind", cfg.growth.kind);
        cfg.growth.p = detail::value(section, "p", cfg.growth.p);
        cfg.growth.mu = detail::value(section, "mu", cfg.growth.mu);
        cfg.growth.table = detail::value(section, "table", std::string{});
        const std::string policy = detail::value(section, "low_index", std::string("reject"));
        if (policy == "warn") {
          cfg.growth.low_index = LowIndexPolicy::warn;
        } else if (policy != "reject") {
          throw UsageError("config: low_index must be reject or warn");
        }
      } else if (name == "coefficient") {
        detail::check_keys(section, name,
                           {"preset", "value", "amplitude", "position", "period", "ax", "ay", "path", "clamp_low",
                            "clamp_high"});
        auto& c = cfg.coefficient;
        c.preset = detail::value(section, "preset", c.preset);
        c.value = detail::value(section, "value", c.value);
        c.amplitude = detail::value(section, "amplitude", c.amplitude);
        c.position = detail::value(section, "position", c.position);
        c.period = detail::value(section, "period", c.period);
        c.ax = detail::value(section, "ax", c.ax);
        c.ay = detail::value(section, "ay", c.ay);
        c.path = detail::value(section, "path", std::string{});
        c.clamp_low = detail::optional_double(section, "clamp_low");
        c.clamp_high = detail::optional_double(section, "clamp_high");
      } else if (name == "obstacle") {
        detail::check_keys(section, name,
                           {"preset", "offset", "ax", "ay", "cx", "cy", "scale", "height", "radius"});
        auto& o = cfg.obstacle;
        o.preset = detail::value(section, "preset", o.preset);
        o.offset = detail::value(section, "offset", o.offset);
        o.ax = detail::value(section, "ax", o.ax);
        o.ay = detail::value(section, "ay", o.ay);
        o.center = {detail::value(section, "cx", o.center.x), detail::value(section, "cy", o.center.y)};
        o.scale = detail::value(section, "scale", o.scale);
        o.height = detail::value(section, "height", o.height);
        o.radius = detail::value(section, "radius", o.radius);
      } else if (name == "boundary") {
        detail::check_keys(section, name, {"preset", "offset", "ax", "ay", "amplitude", "cx", "cy", "mass"});
        auto& b = cfg.boundary;
        b.preset = detail::value(section, "preset", b.preset);
        b.offset = detail::value(section, "offset", b.offset);
        b.ax = detail::value(section, "ax", b.ax);
        b.ay = detail::value(section, "ay", b.ay);
        b.amplitude = detail::value(section, "amplitude", b.amplitude);
        b.center = {detail::value(section, "cx", b.center.x), detail::value(section, "cy", b.center.y)};
        b.mass = detail::value(section, "mass", b.mass);
      } else if (name == "measure") {
        detail::check_keys(section, name, {"atoms", "density_value", "density", "file"});
        cfg.measure.atoms = detail::parse_atoms(detail::value(section, "atoms", std::string{}));
        cfg.measure.density_value = detail::optional_double(section, "density_value");
        cfg.measure.density_raster = detail::value(section, "density", std::string{});
        cfg.measure.file = detail::value(section, "file", std::string{});
      } else if (name == "grid") {
        detail::check_keys(section, name, {"n", "side", "x0", "y0"});
        cfg.grid.n = detail::value(section, "n", cfg.grid.n);
        cfg.grid.side = detail::value(section, "side", cfg.grid.side);
        cfg.grid.origin = {detail::value(section, "x0", 0.0), detail::value(section, "y0", 0.0)};
      } else if (name == "solver") {
        detail::check_keys(section, name,
                           {"epsilon", "tol", "max_iter", "backtrack", "sufficient_decrease", "levels"});
        cfg.solver.epsilon = detail::value(section, "epsilon", cfg.solver.epsilon);
        cfg.solver.tol = detail::value(section, "tol", cfg.solver.tol);
        cfg.solver.max_iter = detail::value(section, "max_iter", cfg.solver.max_iter);
        cfg.solver.backtrack = detail::value(section, "backtrack", cfg.solver.backtrack);
        cfg.solver.sufficient_decrease = detail::value(section, "sufficient_decrease", cfg.solver.sufficient_decrease);
        if (auto lv = section.get_optional<std::string>("levels")) cfg.levels = detail::parse_list<int>(*lv);
      } else if (name == "checks") {
        detail::check_keys(section, name,
                           {"list", "cx", "cy", "radius", "theorem_radius", "points", "alpha_hat", "gamma_prime", "modulus_levels",
                            "seed"});
        auto& c = cfg.checks;
        c.names = detail::parse_list<std::string>(detail::value(section, "list", std::string{}));
        c.center = {detail::value(section, "cx", c.center.x), detail::value(section, "cy", c.center.y)};
        c.radius = detail::value(section, "radius", c.radius);
        c.theorem_radius = detail::value(section, "theorem_radius", c.theorem_radius);
        c.points = detail::value(section, "points", c.points);
        c.alpha_hat = detail::value(section, "alpha_hat", c.alpha_hat);
        c.gamma_prime = detail::value(section, "gamma_prime", c.gamma_prime);
        c.modulus_levels = detail::value(section, "modulus_levels", c.modulus_levels);
        cfg.seed = detail::value(section, "seed", cfg.seed);
      } else if (name == "sweep") {
        detail::check_keys(section, name, {"n", "scale", "radius", "level", "epsilon", "gamma_prime"});
        auto& s = cfg.sweep;
        s.n = detail::parse_list<int>(detail::value(section, "n", std::string{}));
        s.scale = detail::parse_list<double>(detail::value(section, "scale", std::string{}));
        s.radius = detail::parse_list<double>(detail::value(section, "radius", std::string{}));
        s.level = detail::parse_list<int>(detail::value(section, "level", std::string{}));
        s.epsilon = detail::parse_list<double>(detail::value(section, "epsilon", std::string{}));
        s.gamma_prime = detail::parse_list<double>(detail::value(section, "gamma_prime", std::string{}));
      } else if (name == "potential") {
        detail::check_keys(section, name, {"kind", "beta", "p", "radius", "points"});
        auto& p = cfg.potential;
        p.kind = detail::value(section, "kind", p.kind);
        p.beta = detail::value(section, "beta", p.beta);
        p.p = detail::value(section, "p", p.p);
        p.radius = detail::value(section, "radius", p.radius);
        p.points = detail::value(section, "points", p.points);
      } else {
        throw UsageError("config: unknown section [" + name + "]");
      }
    } catch (const boost::property_tree::ptree_bad_data& e) {
      throw UsageError("config: bad value in [" + name + "]: " + e.what());
    }
  }
  if (cfg.levels.empty()) throw UsageError("config: solver levels must be nonempty");
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config " + path.string());
  return parse_config(is, path.parent_path());
}

}  // namespace olab::harness
