#pragma once

#include <algorithm>
#include <compare>
#include <string>
#include <vector>

#include "thbheat/errors.hpp"
#include "thbheat/spline/knot_vector.hpp"

namespace thbheat {

/// A cell (nonempty knot span pair) of a given level.
struct CellIndex {
  int level = 0;
  int i = 0;
  int j = 0;
  auto operator<=>(const CellIndex &) const = default;
};

/// A tensor-product B-spline of a given level.
struct FunctionIndex {
  int level = 0;
  int a = 0;
  int b = 0;
  auto operator<=>(const FunctionIndex &) const = default;
};

inline std::string to_string(const CellIndex &c) {
  return "(" + std::to_string(c.level) + ";" + std::to_string(c.i) + "," + std::to_string(c.j) + ")";
}

/// Half-open index range [lo, hi).
struct IndexRange {
  int lo = 0;
  int hi = 0;
  int size() const { return hi - lo; }
  bool contains(int v) const { return v >= lo && v < hi; }
};

/// Tensor-product spline space of one level of the hierarchy.
class TensorSpace {
public:
  TensorSpace() = default;
  TensorSpace(int level, KnotVector kx, KnotVector ky) : level_(level), kx_(std::move(kx)), ky_(std::move(ky)) {
    if (kx_.degree() != ky_.degree()) throw StructuralError("both directions must share the degree");
  }

  static TensorSpace uniform(int degree, int cells_x, int cells_y) {
    return TensorSpace(0, KnotVector::uniform(degree, cells_x), KnotVector::uniform(degree, cells_y));
  }

  /// The next level: both knot vectors dyadically refined.
  TensorSpace refined() const { return TensorSpace(level_ + 1, dyadic_refine(kx_), dyadic_refine(ky_)); }

  int level() const { return level_; }
  int degree() const { return kx_.degree(); }
  const KnotVector &kv_x() const { return kx_; }
  const KnotVector &kv_y() const { return ky_; }
  int cells_x() const { return kx_.cells(); }
  int cells_y() const { return ky_.cells(); }
  int size_x() const { return kx_.size(); }
  int size_y() const { return ky_.size(); }

  bool valid(const CellIndex &c) const {
    return c.level == level_ && c.i >= 0 && c.i < cells_x() && c.j >= 0 && c.j < cells_y();
  }
  bool valid(const FunctionIndex &f) const {
    return f.level == level_ && f.a >= 0 && f.a < size_x() && f.b >= 0 && f.b < size_y();
  }

  // With simple interior knots, cell c carries functions c..c+p and function a
  // is supported on cells a-p..a (clipped to the grid).
  IndexRange functions_on_cell_x(int i) const { return {i, i + degree() + 1}; }
  IndexRange functions_on_cell_y(int j) const { return {j, j + degree() + 1}; }
  IndexRange support_x(int a) const { return {std::max(0, a - degree()), std::min(cells_x(), a + 1)}; }
  IndexRange support_y(int b) const { return {std::max(0, b - degree()), std::min(cells_y(), b + 1)}; }

private:
  int level_ = 0;
  KnotVector kx_;
  KnotVector ky_;
};

inline std::vector<FunctionIndex> functions_on_cell(const TensorSpace &space, const CellIndex &cell) {
  if (cell.level != space.level()) throw StructuralError("cell level does not match space level");
  if (!space.valid(cell)) throw DomainError("cell index out of range: " + to_string(cell));
  std::vector<FunctionIndex> out;
  const auto rx = space.functions_on_cell_x(cell.i);
  const auto ry = space.functions_on_cell_y(cell.j);
  for (int a = rx.lo; a < rx.hi; ++a) {
    for (int b = ry.lo; b < ry.hi; ++b) out.push_back({cell.level, a, b});
  }
  return out;
}

inline std::vector<CellIndex> cells_in_support(const TensorSpace &space, const FunctionIndex &fn) {
  if (fn.level != space.level()) throw StructuralError("function level does not match space level");
  if (!space.valid(fn)) throw DomainError("function index out of range");
  std::vector<CellIndex> out;
  const auto sx = space.support_x(fn.a);
  const auto sy = space.support_y(fn.b);
  for (int i = sx.lo; i < sx.hi; ++i) {
    for (int j = sy.lo; j < sy.hi; ++j) out.push_back({fn.level, i, j});
  }
  return out;
}

} // namespace thbheat
