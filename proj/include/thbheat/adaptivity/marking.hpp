#pragma once

#include <algorithm>
#include <set>
#include <utility>
#include <vector>

#include "thbheat/errors.hpp"
#include "thbheat/solver/time_stepping.hpp"

namespace thbheat {

enum class MarkKind { refine, coarsen };

struct MarkedSet {
  std::set<CellIndex> cells;
  MarkKind kind = MarkKind::refine;
  double alpha = 1.0;
};

namespace detail {
inline void check_alpha(double alpha, const char *what) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw PreconditionError(std::string(what) + ": alpha must lie in (0, 1]");
}
} // namespace detail

/// Doerfler marking for refinement: the fewest largest indicators whose
/// squared sum reaches alpha^2 * total^2. Ties go to the smaller cell key.
inline MarkedSet mark_max(const Estimate &est, double alpha) {
  detail::check_alpha(alpha, "mark_max");
  MarkedSet out{{}, MarkKind::refine, alpha};
  std::vector<std::pair<CellIndex, double>> order(est.per_cell.begin(), est.per_cell.end());
  std::stable_sort(order.begin(), order.end(), [](const auto &l, const auto &r) { return l.second > r.second; });
  double total2 = 0.0;
  for (const auto &e : order) total2 += e.second * e.second;
  const double threshold = alpha * alpha * total2;
  if (total2 == 0.0) return out;
  double acc = 0.0;
  for (const auto &[c, v] : order) {
    if (acc >= threshold || v == 0.0) break;
    out.cells.insert(c);
    acc += v * v;
  }
  return out;
}

/// Doerfler marking for coarsening: the most smallest indicators whose
/// squared sum stays within alpha^2 * total^2.
inline MarkedSet mark_min(const Estimate &est, double alpha) {
  detail::check_alpha(alpha, "mark_min");
  MarkedSet out{{}, MarkKind::coarsen, alpha};
  std::vector<std::pair<CellIndex, double>> order(est.per_cell.begin(), est.per_cell.end());
  std::stable_sort(order.begin(), order.end(), [](const auto &l, const auto &r) { return l.second < r.second; });
  double total2 = 0.0;
  for (const auto &e : order) total2 += e.second * e.second;
  const double threshold = alpha * alpha * total2;
  double acc = 0.0;
  for (const auto &[c, v] : order) {
    if (acc + v * v > threshold) break;
    out.cells.insert(c);
    acc += v * v;
  }
  return out;
}

} // namespace thbheat
