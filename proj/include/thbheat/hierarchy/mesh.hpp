#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <ostream>
#include <set>
#include <vector>

#include "thbheat/errors.hpp"
#include "thbheat/spline/tensor_space.hpp"

namespace thbheat {

/// Per-level state of a cell of the tensor grid.
enum class CellState : std::uint8_t {
  absent = 0,  ///< not in the level's subdomain (an ancestor is active)
  active = 1,
  refined = 2, ///< in the subdomain, with its four children present one level down
};

/// Hierarchical mesh over [0,1]^2: the tensor spaces of levels 0..N-1 and the
/// active cells of every level. Mutated only through HierarchicalSpace.
class HierarchicalMesh {
public:
  HierarchicalMesh() = default;

  HierarchicalMesh(const TensorSpace &base, int max_levels) {
    if (max_levels < 1) throw PreconditionError("max_levels must be >= 1");
    if (base.level() != 0) throw StructuralError("base space must be level 0");
    spaces_.reserve(static_cast<std::size_t>(max_levels));
    spaces_.push_back(base);
    for (int l = 1; l < max_levels; ++l) spaces_.push_back(spaces_.back().refined());
    for (int l = 0; l + 1 < max_levels; ++l) {
      const auto &c = spaces_[static_cast<std::size_t>(l)];
      const auto &f = spaces_[static_cast<std::size_t>(l + 1)];
      two_scale_x_.push_back(two_scale_matrix(c.kv_x(), f.kv_x()));
      two_scale_y_.push_back(two_scale_matrix(c.kv_y(), f.kv_y()));
    }
    state_.resize(static_cast<std::size_t>(max_levels));
    for (int l = 0; l < max_levels; ++l) {
      const auto &s = spaces_[static_cast<std::size_t>(l)];
      state_[static_cast<std::size_t>(l)].assign(static_cast<std::size_t>(s.cells_x() * s.cells_y()),
                                                 static_cast<std::uint8_t>(l == 0 ? CellState::active : CellState::absent));
    }
    for (int i = 0; i < base.cells_x(); ++i) {
      for (int j = 0; j < base.cells_y(); ++j) active_.insert({0, i, j});
    }
  }

  int max_levels() const { return static_cast<int>(spaces_.size()); }
  int degree() const { return spaces_.front().degree(); }
  const TensorSpace &space(int level) const { return spaces_.at(static_cast<std::size_t>(level)); }
  const TwoScaleMatrix &two_scale_x(int coarse_level) const { return two_scale_x_.at(static_cast<std::size_t>(coarse_level)); }
  const TwoScaleMatrix &two_scale_y(int coarse_level) const { return two_scale_y_.at(static_cast<std::size_t>(coarse_level)); }

  bool valid(const CellIndex &c) const {
    return c.level >= 0 && c.level < max_levels() && space(c.level).valid(c);
  }

  CellState state(int level, int i, int j) const {
    const auto &s = spaces_[static_cast<std::size_t>(level)];
    return static_cast<CellState>(state_[static_cast<std::size_t>(level)][static_cast<std::size_t>(i * s.cells_y() + j)]);
  }
  CellState state(const CellIndex &c) const { return state(c.level, c.i, c.j); }

  /// Whether the cell lies in the level's subdomain (active or refined).
  bool in_subdomain(int level, int i, int j) const { return state(level, i, j) != CellState::absent; }

  bool is_active(const CellIndex &c) const { return valid(c) && state(c) == CellState::active; }

  /// Active cells ordered by (level, i, j).
  const std::set<CellIndex> &active_cells() const { return active_; }

  std::vector<int> active_cells_per_level() const {
    std::vector<int> out(static_cast<std::size_t>(max_levels()), 0);
    for (const auto &c : active_) ++out[static_cast<std::size_t>(c.level)];
    return out;
  }

  int deepest_active_level() const {
    int l = 0;
    for (const auto &c : active_) l = std::max(l, c.level);
    return l;
  }

  static CellIndex parent(const CellIndex &c) { return {c.level - 1, c.i / 2, c.j / 2}; }

  static std::array<CellIndex, 4> children(const CellIndex &c) {
    return {CellIndex{c.level + 1, 2 * c.i, 2 * c.j}, CellIndex{c.level + 1, 2 * c.i, 2 * c.j + 1},
            CellIndex{c.level + 1, 2 * c.i + 1, 2 * c.j}, CellIndex{c.level + 1, 2 * c.i + 1, 2 * c.j + 1}};
  }

  /// The level-k cell containing c (k <= c.level).
  static CellIndex ancestor(const CellIndex &c, int k) {
    const int s = c.level - k;
    return {k, c.i >> s, c.j >> s};
  }

  /// Parametric bounds [x0,x1] x [y0,y1] of a cell.
  std::array<double, 4> bounds(const CellIndex &c) const {
    const auto &s = space(c.level);
    return {s.kv_x().cell_lower(c.i), s.kv_x().cell_upper(c.i), s.kv_y().cell_lower(c.j), s.kv_y().cell_upper(c.j)};
  }

  /// The active cell containing the parametric point (x, y).
  CellIndex locate(double x, double y) const {
    const auto &s0 = space(0);
    CellIndex c{0, find_span(s0.kv_x(), x) - s0.degree(), find_span(s0.kv_y(), y) - s0.degree()};
    while (state(c) == CellState::refined) {
      const auto &s = space(c.level + 1);
      c = {c.level + 1, find_span(s.kv_x(), x) - s.degree(), find_span(s.kv_y(), y) - s.degree()};
    }
    return c;
  }

  // Raw mutations; HierarchicalSpace keeps the function sets in sync.
  void subdivide(const CellIndex &c) {
    if (!is_active(c)) throw PreconditionError("subdivide: cell " + to_string(c) + " is not active");
    if (c.level + 1 >= max_levels()) throw CapacityError("subdivide: cell " + to_string(c) + " is at the deepest level");
    set_state(c, CellState::refined);
    active_.erase(c);
    for (const auto &ch : children(c)) {
      set_state(ch, CellState::active);
      active_.insert(ch);
    }
  }

  void reactivate(const CellIndex &c) {
    if (!valid(c) || c.level + 1 >= max_levels() || state(c) != CellState::refined) {
      throw PreconditionError("reactivate: cell " + to_string(c) + " has no children");
    }
    for (const auto &ch : children(c)) {
      if (state(ch) != CellState::active) {
        throw PreconditionError("reactivate: child " + to_string(ch) + " is not active");
      }
    }
    for (const auto &ch : children(c)) {
      set_state(ch, CellState::absent);
      active_.erase(ch);
    }
    set_state(c, CellState::active);
    active_.insert(c);
  }

private:
  void set_state(const CellIndex &c, CellState s) {
    const auto &sp = space(c.level);
    state_[static_cast<std::size_t>(c.level)][static_cast<std::size_t>(c.i * sp.cells_y() + c.j)] = static_cast<std::uint8_t>(s);
  }

  std::vector<TensorSpace> spaces_;
  std::vector<TwoScaleMatrix> two_scale_x_;
  std::vector<TwoScaleMatrix> two_scale_y_;
  std::vector<std::vector<std::uint8_t>> state_;
  std::set<CellIndex> active_;
};

/// Multilevel support extension S(Q, k): the level-k cells sharing a level-k
/// B-spline with Q.
inline std::vector<CellIndex> support_extension(const HierarchicalMesh &mesh, const CellIndex &q, int k) {
  if (k < 0 || k > q.level) throw DomainError("support_extension: level k must satisfy 0 <= k <= level(Q)");
  const int p = mesh.degree();
  const auto anc = HierarchicalMesh::ancestor(q, k);
  const auto &s = mesh.space(k);
  std::vector<CellIndex> out;
  for (int i = std::max(0, anc.i - p); i <= std::min(s.cells_x() - 1, anc.i + p); ++i) {
    for (int j = std::max(0, anc.j - p); j <= std::min(s.cells_y() - 1, anc.j + p); ++j) out.push_back({k, i, j});
  }
  return out;
}

/// Refinement neighborhood N_r(Q, m): active cells of level l-m+1 containing a
/// cell of S(Q, l-m+2).
inline std::vector<CellIndex> refinement_neighborhood(const HierarchicalMesh &mesh, const CellIndex &q, int m) {
  const int k = q.level - m + 1;
  if (k < 0) return {};
  std::set<CellIndex> out;
  for (const auto &c : support_extension(mesh, q, k + 1)) {
    const auto par = HierarchicalMesh::parent(c);
    if (mesh.state(par) == CellState::active) out.insert(par);
  }
  return {out.begin(), out.end()};
}

/// Coarsening neighborhood N_c(Q, m): active cells of level l+m inside the
/// support extension S(Q'', l+1) of some active child Q'' of Q.
inline std::vector<CellIndex> coarsening_neighborhood(const HierarchicalMesh &mesh, const CellIndex &q, int m) {
  const int target = q.level + m;
  if (q.level + 1 >= mesh.max_levels() || target >= mesh.max_levels()) return {};
  std::set<CellIndex> region;
  for (const auto &ch : HierarchicalMesh::children(q)) {
    if (mesh.state(ch) != CellState::active) continue;
    for (const auto &c : support_extension(mesh, ch, ch.level)) region.insert(c);
  }
  std::vector<CellIndex> out;
  if (region.empty()) return out;
  const int shift = target - (q.level + 1);
  for (auto it = mesh.active_cells().lower_bound({target, 0, 0});
       it != mesh.active_cells().end() && it->level == target; ++it) {
    const CellIndex anc{q.level + 1, it->i >> shift, it->j >> shift};
    if (region.count(anc)) out.push_back(*it);
  }
  return out;
}

/// One JSON object per active cell, ordered by level, then i, then j.
inline void write_mesh_jsonl(const HierarchicalMesh &mesh, std::ostream &os) {
  for (const auto &c : mesh.active_cells()) {
    os << "{\"level\":" << c.level << ",\"i\":" << c.i << ",\"j\":" << c.j << "}\n";
  }
}

} // namespace thbheat
