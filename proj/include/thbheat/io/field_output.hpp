#pragma once

#include <iomanip>
#include <ostream>
#include <vector>

#include "thbheat/assembly/problem.hpp"
#include "thbheat/hierarchy/space.hpp"
#include "thbheat/state.hpp"
#include "thbheat/util/parallel.hpp"

namespace thbheat {

/// Temperatures on an n x n vertex grid over [0, L]^2; values[j * n + i] at
/// (i * L / (n-1), j * L / (n-1)), x fastest.
struct SampledField {
  int n = 0;
  double side_length = 1.0;
  std::vector<double> values;

  double spacing() const { return side_length / (n - 1); }
};

inline SampledField sample_field(const HierarchicalSpace &space, const StateVector &theta, const Geometry &geom, int n) {
  require_generation(space, theta, "sample_field");
  if (n < 2) throw DomainError("sample_field: grid needs at least 2 points per direction");
  SampledField out{n, geom.side_length, std::vector<double>(static_cast<std::size_t>(n) * n)};
  const std::span<const double> c(theta.coeffs.data(), static_cast<std::size_t>(theta.coeffs.size()));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
    const double v = static_cast<double>(j) / (n - 1);
    for (int i = 0; i < n; ++i) {
      const double u = static_cast<double>(i) / (n - 1);
      double s = 0.0;
      for (const auto &b : space.eval(u, v, 0)) s += c[static_cast<std::size_t>(b.dof)] * b.value;
      out.values[j * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = s;
    }
  });
  return out;
}

/// Legacy VTK, ASCII STRUCTURED_POINTS, one point scalar named "temperature".
inline void write_vtk(std::ostream &os, const SampledField &f) {
  os << "# vtk DataFile Version 3.0\n";
  os << "temperature\n";
  os << "ASCII\n";
  os << "DATASET STRUCTURED_POINTS\n";
  os << std::setprecision(17);
  os << "DIMENSIONS " << f.n << " " << f.n << " 1\n";
  os << "ORIGIN 0 0 0\n";
  os << "SPACING " << f.spacing() << " " << f.spacing() << " 1\n";
  os << "POINT_DATA " << f.values.size() << "\n";
  os << "SCALARS temperature double 1\n";
  os << "LOOKUP_TABLE default\n";
  for (double v : f.values) os << v << "\n";
}

/// Flat CSV with header x,y,value, rows in the same order as the VTK points.
inline void write_field_csv(std::ostream &os, const SampledField &f) {
  os << "x,y,value\n" << std::setprecision(17);
  for (int j = 0; j < f.n; ++j) {
    for (int i = 0; i < f.n; ++i) {
      os << i * f.spacing() << "," << j * f.spacing() << "," << f.values[static_cast<std::size_t>(j * f.n + i)] << "\n";
    }
  }
}

} // namespace thbheat
