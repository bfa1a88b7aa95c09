#pragma once

#include <charconv>
#include <cmath>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "thbheat/assembly/problem.hpp"
#include "thbheat/errors.hpp"

namespace thbheat {

enum class RunMode { adaptive, uniform, non_admissible };

inline std::string to_string(RunMode m) {
  switch (m) {
  case RunMode::adaptive:
    return "adaptive";
  case RunMode::uniform:
    return "uniform";
  case RunMode::non_admissible:
    return "non_admissible";
  }
  return "?";
}

struct SimulationConfig {
  // [run]
  int degree = 3;
  int base_cells = 1;
  int max_levels = 7;
  int m = 2;
  double alpha_r = 0.1;
  double alpha_c = 0.25;
  double dt = 0.0;
  int n_steps = 0;
  double t_end = 0.0;
  double tol = 0.0;
  int imax_first = -1; ///< -1: iterate until the deepest level is populated
  int imax_rest = 2;
  double side_length = 10.0;
  RunMode mode = RunMode::adaptive;
  int uniform_level = 0; ///< uniform mode: base_cells * 2^k cells per direction
  int sample_n = 65;
  bool coarsen = true;
  int n_gauss = 0;
  double solver_tol = 1e-12;
  std::string label;
  // [material], [source], [path]
  Material material;
  HeatSource source;

  int steps() const {
    if (n_steps > 0) return n_steps;
    return static_cast<int>(std::llround(t_end / dt));
  }
  /// Iteration cap of the first step; the default only bounds the
  /// until-deepest-level iteration.
  int first_iterations() const { return imax_first >= 0 ? imax_first : 64 * max_levels; }
  /// Admissibility class actually used: the non-admissible mode lifts the grading bound.
  int effective_m() const { return mode == RunMode::non_admissible ? max_levels : m; }

  void validate() const {
    if (degree < 1) throw ConfigError("run.degree must be at least 1");
    if (base_cells < 1) throw ConfigError("run.base_cells must be at least 1");
    if (max_levels < 1) throw ConfigError("run.max_levels must be at least 1");
    if (!(alpha_r > 0.0 && alpha_r <= 1.0)) throw ConfigError("run.alpha_r must lie in (0, 1]");
    if (!(alpha_c > 0.0 && alpha_c <= 1.0)) throw ConfigError("run.alpha_c must lie in (0, 1]");
    if (mode == RunMode::adaptive && m < 2) throw ConfigError("run.m must be at least 2 in adaptive mode");
    if (!(dt > 0.0)) throw ConfigError("run.dt must be positive");
    if (n_steps <= 0 && !(t_end > 0.0)) throw ConfigError("run: set n_steps or t_end");
    if (imax_rest < 0) throw ConfigError("run.imax_rest must be non-negative");
    if (!(side_length > 0.0)) throw ConfigError("run.side_length must be positive");
    if (mode == RunMode::uniform && uniform_level < 0) throw ConfigError("run.uniform_level must be non-negative");
    if (sample_n < 2) throw ConfigError("run.sample_n must be at least 2");
    if (n_gauss != 0 && n_gauss < degree + 1) throw ConfigError("run.n_gauss must be 0 or at least degree + 1");
    material.validate();
    source.validate();
    if (const auto *pl = std::get_if<Polyline>(&source.path)) pl->validate();
  }
};

namespace detail {

inline std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string &v, const std::string &key) {
  double out = 0.0;
  const auto *end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("bad number for " + key + ": '" + v + "'");
  return out;
}

inline int parse_int(const std::string &v, const std::string &key) {
  int out = 0;
  const auto *end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("bad integer for " + key + ": '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string &v, const std::string &key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

/// "x y; x y; ..." or "a; b; ..."
inline std::vector<std::vector<double>> parse_list(const std::string &v, const std::string &key) {
  std::vector<std::vector<double>> out;
  std::stringstream groups(v);
  std::string g;
  while (std::getline(groups, g, ';')) {
    std::stringstream parts(g);
    std::vector<double> row;
    std::string tok;
    while (parts >> tok) row.push_back(parse_double(tok, key));
    if (!row.empty()) out.push_back(row);
  }
  return out;
}

} // namespace detail

/// Parse `[section]` / `key = value` text; `#` starts a comment. Unknown
/// sections or keys are errors.
inline SimulationConfig parse_config(std::istream &in) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_int;
  SimulationConfig c;
  std::map<std::string, std::string> path_keys;
  std::string section;
  std::string line;
  int lineno = 0;

  using Setter = std::function<void(const std::string &, const std::string &)>;
  const std::map<std::string, std::map<std::string, Setter>> table = {
      {"material",
       {{"k", [&](auto &v, auto &k) { c.material.k = parse_double(v, k); }},
        {"Cp", [&](auto &v, auto &k) { c.material.Cp = parse_double(v, k); }},
        {"rho", [&](auto &v, auto &k) { c.material.rho = parse_double(v, k); }},
        {"theta0", [&](auto &v, auto &k) { c.material.theta0 = parse_double(v, k); }}}},
      {"source",
       {{"P", [&](auto &v, auto &k) { c.source.P = parse_double(v, k); }},
        {"eta", [&](auto &v, auto &k) { c.source.eta = parse_double(v, k); }},
        {"r_h", [&](auto &v, auto &k) { c.source.r_h = parse_double(v, k); }}}},
      {"run",
       {{"degree", [&](auto &v, auto &k) { c.degree = parse_int(v, k); }},
        {"base_cells", [&](auto &v, auto &k) { c.base_cells = parse_int(v, k); }},
        {"max_levels", [&](auto &v, auto &k) { c.max_levels = parse_int(v, k); }},
        {"m", [&](auto &v, auto &k) { c.m = parse_int(v, k); }},
        {"alpha_r", [&](auto &v, auto &k) { c.alpha_r = parse_double(v, k); }},
        {"alpha_c", [&](auto &v, auto &k) { c.alpha_c = parse_double(v, k); }},
        {"dt", [&](auto &v, auto &k) { c.dt = parse_double(v, k); }},
        {"n_steps", [&](auto &v, auto &k) { c.n_steps = parse_int(v, k); }},
        {"t_end", [&](auto &v, auto &k) { c.t_end = parse_double(v, k); }},
        {"tol", [&](auto &v, auto &k) { c.tol = v == "inf" ? HUGE_VAL : parse_double(v, k); }},
        {"imax_first", [&](auto &v, auto &k) { c.imax_first = parse_int(v, k); }},
        {"imax_rest", [&](auto &v, auto &k) { c.imax_rest = parse_int(v, k); }},
        {"side_length", [&](auto &v, auto &k) { c.side_length = parse_double(v, k); }},
        {"mode",
         [&](auto &v, auto &) {
           if (v == "adaptive") {
             c.mode = RunMode::adaptive;
           } else if (v == "uniform") {
             c.mode = RunMode::uniform;
           } else if (v == "non_admissible") {
             c.mode = RunMode::non_admissible;
           } else {
             throw ConfigError("run.mode must be adaptive, uniform or non_admissible");
           }
         }},
        {"uniform_level", [&](auto &v, auto &k) { c.uniform_level = parse_int(v, k); }},
        {"sample_n", [&](auto &v, auto &k) { c.sample_n = parse_int(v, k); }},
        {"coarsen", [&](auto &v, auto &k) { c.coarsen = parse_bool(v, k); }},
        {"n_gauss", [&](auto &v, auto &k) { c.n_gauss = parse_int(v, k); }},
        {"solver_tol", [&](auto &v, auto &k) { c.solver_tol = parse_double(v, k); }},
        {"label", [&](auto &v, auto &) { c.label = v; }}}},
  };
  static const std::map<std::string, std::vector<std::string>> path_schema = {
      {"circular_arc", {"center_x", "center_y", "radius", "start_angle", "angular_speed", "sweep"}},
      {"alternating", {"origin_x", "origin_y", "track_length", "hatch", "n_tracks", "speed"}},
      {"polyline", {"points", "speeds"}},
  };

  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (section != "path" && !table.count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(where + "key outside of a section");
    if (section == "path") {
      if (path_keys.count(key)) throw ConfigError(where + "duplicate key path." + key);
      path_keys[key] = value;
      continue;
    }
    const auto &keys = table.at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError(where + "unknown key " + section + "." + key);
    it->second(value, section + "." + key);
  }

  if (!path_keys.empty()) {
    const auto type_it = path_keys.find("type");
    if (type_it == path_keys.end()) throw ConfigError("path.type is required");
    const auto schema = path_schema.find(type_it->second);
    if (schema == path_schema.end()) throw ConfigError("unknown path.type '" + type_it->second + "'");
    for (const auto &[k, v] : path_keys) {
      if (k != "type" && std::find(schema->second.begin(), schema->second.end(), k) == schema->second.end()) {
        throw ConfigError("unknown key path." + k + " for path type " + type_it->second);
      }
    }
    auto get = [&](const std::string &k) -> double {
      const auto f = path_keys.find(k);
      if (f == path_keys.end()) throw ConfigError("missing key path." + k);
      return parse_double(f->second, "path." + k);
    };
    if (type_it->second == "circular_arc") {
      CircularArc a;
      a.center = {get("center_x"), get("center_y")};
      a.radius = get("radius");
      a.start_angle = get("start_angle");
      a.angular_speed = get("angular_speed");
      a.sweep = get("sweep");
      c.source.path = a;
    } else if (type_it->second == "alternating") {
      AlternatingTracks a;
      a.origin = {get("origin_x"), get("origin_y")};
      a.track_length = get("track_length");
      a.hatch = get("hatch");
      a.n_tracks = static_cast<int>(get("n_tracks"));
      a.speed = get("speed");
      c.source.path = a;
    } else {
      Polyline p;
      if (!path_keys.count("points") || !path_keys.count("speeds")) throw ConfigError("polyline needs points and speeds");
      for (const auto &row : detail::parse_list(path_keys["points"], "path.points")) {
        if (row.size() != 2) throw ConfigError("path.points entries must be 'x y'");
        p.points.push_back({row[0], row[1]});
      }
      for (const auto &row : detail::parse_list(path_keys["speeds"], "path.speeds")) {
        if (row.size() != 1) throw ConfigError("path.speeds entries must be single numbers");
        p.speeds.push_back(row[0]);
      }
      c.source.path = p;
    }
  }
  c.validate();
  return c;
}

/// Serialize a config in the format read by parse_config.
inline void write_config(std::ostream &os, const SimulationConfig &c) {
  os << std::setprecision(17);
  os << "[material]\n";
  os << "k = " << c.material.k << "\nCp = " << c.material.Cp << "\nrho = " << c.material.rho
     << "\ntheta0 = " << c.material.theta0 << "\n\n";
  os << "[source]\n";
  os << "P = " << c.source.P << "\neta = " << c.source.eta << "\nr_h = " << c.source.r_h << "\n\n";
  os << "[path]\n";
  if (const auto *a = std::get_if<CircularArc>(&c.source.path)) {
    os << "type = circular_arc\ncenter_x = " << a->center[0] << "\ncenter_y = " << a->center[1]
       << "\nradius = " << a->radius << "\nstart_angle = " << a->start_angle << "\nangular_speed = " << a->angular_speed
       << "\nsweep = " << a->sweep << "\n\n";
  } else if (const auto *t = std::get_if<AlternatingTracks>(&c.source.path)) {
    os << "type = alternating\norigin_x = " << t->origin[0] << "\norigin_y = " << t->origin[1]
       << "\ntrack_length = " << t->track_length << "\nhatch = " << t->hatch << "\nn_tracks = " << t->n_tracks
       << "\nspeed = " << t->speed << "\n\n";
  } else {
    const auto &p = std::get<Polyline>(c.source.path);
    os << "type = polyline\npoints = ";
    for (std::size_t k = 0; k < p.points.size(); ++k) os << (k ? "; " : "") << p.points[k][0] << " " << p.points[k][1];
    os << "\nspeeds = ";
    for (std::size_t k = 0; k < p.speeds.size(); ++k) os << (k ? "; " : "") << p.speeds[k];
    os << "\n\n";
  }
  os << "[run]\n";
  os << "degree = " << c.degree << "\nbase_cells = " << c.base_cells << "\nmax_levels = " << c.max_levels
     << "\nm = " << c.m << "\nalpha_r = " << c.alpha_r << "\nalpha_c = " << c.alpha_c << "\ndt = " << c.dt << "\n";
  if (c.n_steps > 0) {
    os << "n_steps = " << c.n_steps << "\n";
  } else {
    os << "t_end = " << c.t_end << "\n";
  }
  os << "tol = ";
  if (std::isinf(c.tol)) {
    os << "inf\n";
  } else {
    os << c.tol << "\n";
  }
  if (c.imax_first >= 0) os << "imax_first = " << c.imax_first << "\n";
  os << "imax_rest = " << c.imax_rest << "\nside_length = " << c.side_length << "\nmode = " << to_string(c.mode)
     << "\n";
  if (c.mode == RunMode::uniform) os << "uniform_level = " << c.uniform_level << "\n";
  os << "sample_n = " << c.sample_n << "\ncoarsen = " << (c.coarsen ? "true" : "false") << "\n";
  if (c.n_gauss) os << "n_gauss = " << c.n_gauss << "\n";
  os << "solver_tol = " << c.solver_tol << "\n";
  if (!c.label.empty()) os << "label = " << c.label << "\n";
}

/// Built-in scenarios.
inline SimulationConfig preset(const std::string &name) {
  SimulationConfig c;
  if (name == "circular_arc") {
    c.material = {1.0, 1.0, 1.0, 20.0};
    const double speed = 1.57; // mm/s
    CircularArc arc;
    arc.center = {5.0, 5.0};
    arc.radius = 3.0;
    arc.start_angle = 7.0 * std::numbers::pi / 6.0;
    arc.angular_speed = speed / arc.radius;
    arc.sweep = std::numbers::pi;
    c.source = {9e5, 0.33, 0.1, arc};
    c.degree = 3;
    c.base_cells = 1;
    c.max_levels = 7;
    c.m = 2;
    c.alpha_r = 0.1;
    c.alpha_c = 0.25;
    c.side_length = 10.0;
    c.dt = 0.5 * c.source.r_h / speed;
    c.n_steps = 30;
  } else if (name == "alternating") {
    c.material = {29e-3, 650.0, 8440.0, 25.0};
    AlternatingTracks tr;
    tr.origin = {1.0, 5.0};
    tr.track_length = 8.0;
    tr.hatch = 0.05;
    tr.n_tracks = 2;
    tr.speed = 8.0;
    c.source = {190.0, 0.33, 0.05, tr};
    c.degree = 3;
    c.base_cells = 1;
    c.max_levels = 9;
    c.m = 2;
    c.alpha_r = 0.08;
    c.alpha_c = 0.25;
    c.side_length = 10.0;
    c.dt = 0.5 * c.source.r_h / tr.speed;
    c.n_steps = 30;
  } else {
    throw ConfigError("unknown preset '" + name + "' (circular_arc, alternating)");
  }
  c.validate();
  return c;
}

} // namespace thbheat
