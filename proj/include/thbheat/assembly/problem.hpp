#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "thbheat/errors.hpp"

namespace thbheat {

using Point = std::array<double, 2>;

/// Affine map of the parametric unit square onto [0, L]^2.
struct Geometry {
  double side_length = 1.0;

  explicit Geometry(double L = 1.0) : side_length(L) {
    if (!(L > 0.0)) throw DomainError("geometry: side length must be positive");
  }
  Point map(double u, double v) const { return {side_length * u, side_length * v}; }
  double jacobian() const { return side_length * side_length; }
  double grad_factor() const { return 1.0 / side_length; }
  double hess_factor() const { return 1.0 / (side_length * side_length); }
};

struct Material {
  double k = 1.0;
  double Cp = 1.0;
  double rho = 1.0;
  double theta0 = 0.0;

  void validate() const {
    if (!(k > 0.0 && Cp > 0.0 && rho > 0.0)) throw ConfigError("material: k, Cp and rho must be positive");
  }
  double capacity() const { return Cp * rho; }
};

/// Beam moving on a circle: center + radius * (cos, sin)(start + omega t)
/// for t in [0, sweep / |omega|].
struct CircularArc {
  Point center{0.0, 0.0};
  double radius = 1.0;
  double start_angle = 0.0;
  double angular_speed = 1.0;
  double sweep = std::numbers::pi;

  double duration() const { return sweep / std::abs(angular_speed); }
  Point position(double t) const {
    const double a = start_angle + angular_speed * t;
    return {center[0] + radius * std::cos(a), center[1] + radius * std::sin(a)};
  }
};

/// Piecewise-linear path; segment s runs from points[s] to points[s+1] at speeds[s].
struct Polyline {
  std::vector<Point> points;
  std::vector<double> speeds;

  void validate() const {
    if (points.size() < 2 || speeds.size() != points.size() - 1) {
      throw ConfigError("polyline: need n >= 2 points and n-1 speeds");
    }
    for (double v : speeds) {
      if (!(v > 0.0)) throw ConfigError("polyline: speeds must be positive");
    }
  }
  double segment_time(std::size_t s) const {
    return std::hypot(points[s + 1][0] - points[s][0], points[s + 1][1] - points[s][1]) / speeds[s];
  }
  double duration() const {
    double d = 0.0;
    for (std::size_t s = 0; s + 1 < points.size(); ++s) d += segment_time(s);
    return d;
  }
  Point position(double t) const {
    double t0 = 0.0;
    for (std::size_t s = 0; s + 1 < points.size(); ++s) {
      const double ts = segment_time(s);
      if (t <= t0 + ts || s + 2 == points.size()) {
        const double r = ts > 0.0 ? std::clamp((t - t0) / ts, 0.0, 1.0) : 1.0;
        return {points[s][0] + r * (points[s + 1][0] - points[s][0]), points[s][1] + r * (points[s + 1][1] - points[s][1])};
      }
      t0 += ts;
    }
    return points.back();
  }
};

/// Parallel tracks along +x / -x, alternating direction, offset by `hatch` in
/// +y; consecutive tracks are joined by a hatch-length move at the same speed.
struct AlternatingTracks {
  Point origin{0.0, 0.0};
  double track_length = 1.0;
  double hatch = 0.1;
  int n_tracks = 1;
  double speed = 1.0;

  Polyline as_polyline() const {
    Polyline pl;
    Point cur = origin;
    pl.points.push_back(cur);
    for (int k = 0; k < n_tracks; ++k) {
      cur[0] += (k % 2 == 0 ? 1.0 : -1.0) * track_length;
      pl.points.push_back(cur);
      pl.speeds.push_back(speed);
      if (k + 1 < n_tracks) {
        cur[1] += hatch;
        pl.points.push_back(cur);
        pl.speeds.push_back(speed);
      }
    }
    return pl;
  }
  double duration() const { return as_polyline().duration(); }
  Point position(double t) const { return as_polyline().position(t); }
};

using ScanPath = std::variant<CircularArc, AlternatingTracks, Polyline>;

inline double path_duration(const ScanPath &p) {
  return std::visit([](const auto &v) { return v.duration(); }, p);
}
inline Point path_position(const ScanPath &p, double t) {
  return std::visit([t](const auto &v) { return v.position(t); }, p);
}

/// Gaussian surface flux P * eta * exp(-|x - x0(t)|^2 / r_h^2), switched off
/// once the scan path has ended.
struct HeatSource {
  double P = 0.0;
  double eta = 1.0;
  double r_h = 1.0;
  ScanPath path = CircularArc{};

  void validate() const {
    if (P < 0.0) throw ConfigError("source: power must be non-negative");
    if (!(r_h > 0.0)) throw ConfigError("source: spot radius must be positive");
    if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("source: absorptivity must lie in (0, 1]");
  }
};

/// Source position at time t plus whether the beam is on.
struct BeamState {
  Point center{0.0, 0.0};
  bool on = false;
};

inline BeamState beam_state(const HeatSource &src, double t) {
  if (src.P == 0.0 || t < 0.0 || t > path_duration(src.path)) return {};
  return {path_position(src.path, t), true};
}

inline double source_value(const HeatSource &src, double t, const Point &x) {
  const auto b = beam_state(src, t);
  if (!b.on) return 0.0;
  const double dx = x[0] - b.center[0];
  const double dy = x[1] - b.center[1];
  return src.P * src.eta * std::exp(-(dx * dx + dy * dy) / (src.r_h * src.r_h));
}

} // namespace thbheat
