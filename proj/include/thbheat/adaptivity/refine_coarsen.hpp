#pragma once

#include <set>
#include <vector>

#include "thbheat/adaptivity/marking.hpp"
#include "thbheat/hierarchy/mesh.hpp"
#include "thbheat/hierarchy/space.hpp"

namespace thbheat {

struct RefineReport {
  int subdivided = 0;
  /// Cells left alone because they already sit on the deepest level.
  int capacity_skipped = 0;
};

/// Subdivide q after recursively refining its refinement neighborhood, so the
/// mesh stays admissible of class m.
inline void refine_recursive(HierarchicalSpace &space, const CellIndex &q, int m, RefineReport &report) {
  if (!space.mesh().is_active(q)) return;
  if (q.level + 1 >= space.max_levels()) {
    ++report.capacity_skipped;
    return;
  }
  for (const auto &c : refinement_neighborhood(space.mesh(), q, m)) refine_recursive(space, c, m, report);
  if (space.mesh().is_active(q)) {
    space.subdivide(q);
    ++report.subdivided;
  }
}

inline RefineReport refine(HierarchicalSpace &space, const MarkedSet &marked, int m) {
  if (marked.kind != MarkKind::refine) throw PreconditionError("refine: marked set is not a refinement set");
  if (m < 2) throw PreconditionError("refine: admissibility class must be at least 2");
  RefineReport report;
  for (const auto &c : marked.cells) refine_recursive(space, c, m, report);
  return report;
}

struct CoarsenReport {
  int reactivated = 0;
};

/// Reactivate parents whose four children are all active and marked, provided
/// the coarsening neighborhood is empty. Finest parents first.
inline CoarsenReport coarsen(HierarchicalSpace &space, const MarkedSet &marked, int m) {
  if (marked.kind != MarkKind::coarsen) throw PreconditionError("coarsen: marked set is not a coarsening set");
  if (m < 2) throw PreconditionError("coarsen: admissibility class must be at least 2");
  std::set<CellIndex> parents;
  for (const auto &c : marked.cells) {
    if (c.level > 0) parents.insert(HierarchicalMesh::parent(c));
  }
  std::vector<CellIndex> order(parents.begin(), parents.end());
  std::stable_sort(order.begin(), order.end(), [](const auto &l, const auto &r) { return l.level > r.level; });
  CoarsenReport report;
  for (const auto &par : order) {
    bool ok = true;
    for (const auto &ch : HierarchicalMesh::children(par)) {
      ok = ok && space.mesh().is_active(ch) && marked.cells.count(ch) > 0;
    }
    if (!ok || !coarsening_neighborhood(space.mesh(), par, m).empty()) continue;
    space.reactivate(par);
    ++report.reactivated;
  }
  return report;
}

} // namespace thbheat
