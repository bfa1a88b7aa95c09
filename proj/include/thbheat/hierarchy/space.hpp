#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "thbheat/errors.hpp"
#include "thbheat/hierarchy/mesh.hpp"
#include "thbheat/spline/knot_vector.hpp"
#include "thbheat/spline/tensor_space.hpp"

namespace thbheat {

namespace detail {
inline std::uint64_t next_generation() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

using FunctionKey = std::int64_t;
inline FunctionKey function_key(int a, int b) {
  return (static_cast<std::int64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}
inline int key_a(FunctionKey k) { return static_cast<int>(k >> 32); }
inline int key_b(FunctionKey k) { return static_cast<int>(k & 0xffffffff); }
} // namespace detail

/// Sparse level-wise expansion of a truncated hierarchical B-spline.
///
/// levels[r] holds the nonzero coefficients at level fn.level + 1 + r, sorted
/// by (a, b). Only functions whose support straddles the boundary of that
/// level's subdomain are kept: those fully inside were truncated away, those
/// fully outside never contribute on cells of that level or deeper.
struct TruncatedFunction {
  FunctionIndex fn;
  std::vector<std::vector<std::pair<detail::FunctionKey, double>>> levels;

  /// Deepest level carrying coefficients.
  int depth() const { return fn.level + static_cast<int>(levels.size()); }

  double coefficient(int level, int a, int b) const {
    if (level == fn.level) return (a == fn.a && b == fn.b) ? 1.0 : 0.0;
    const int r = level - fn.level - 1;
    if (r < 0 || r >= static_cast<int>(levels.size())) return 0.0;
    const auto &v = levels[static_cast<std::size_t>(r)];
    const auto key = detail::function_key(a, b);
    const auto it = std::lower_bound(v.begin(), v.end(), key, [](const auto &e, auto k) { return e.first < k; });
    return (it != v.end() && it->first == key) ? it->second : 0.0;
  }
};

/// Restriction of the THB basis to one active cell: each THB function nonzero
/// on the cell written over the (p+1)^2 B-splines of the cell's level.
struct CellBasis {
  CellIndex cell;
  std::vector<int> dofs;
  std::vector<int> levels;
  /// dofs.size() rows of (p+1)^2 entries; local index rx * (p+1) + ry.
  std::vector<double> coeffs;

  std::span<const double> row(std::size_t r, int local_size) const {
    return {coeffs.data() + r * static_cast<std::size_t>(local_size), static_cast<std::size_t>(local_size)};
  }
};

/// One THB function evaluated at a point (parametric derivatives).
struct ThbValue {
  FunctionIndex fn;
  int dof = -1;
  double value = 0.0;
  std::array<double, 2> grad{0.0, 0.0};
  std::array<double, 3> hess{0.0, 0.0, 0.0}; ///< (xx, xy, yy)
};

/// Tensor-product B-splines of one cell evaluated at one point.
struct LocalBasis {
  std::vector<double> value, dx, dy, dxx, dxy, dyy;
};

inline LocalBasis local_tensor_basis(const BasisEval &bx, const BasisEval &by) {
  const std::size_t n = bx.values.size();
  LocalBasis out;
  for (auto *v : {&out.value, &out.dx, &out.dy, &out.dxx, &out.dxy, &out.dyy}) v->resize(n * n);
  for (std::size_t rx = 0; rx < n; ++rx) {
    const auto &x = bx.values[rx];
    for (std::size_t ry = 0; ry < n; ++ry) {
      const auto &y = by.values[ry];
      const std::size_t k = rx * n + ry;
      out.value[k] = x[0] * y[0];
      out.dx[k] = x[1] * y[0];
      out.dy[k] = x[0] * y[1];
      out.dxx[k] = x[2] * y[0];
      out.dxy[k] = x[1] * y[1];
      out.dyy[k] = x[0] * y[2];
    }
  }
  return out;
}

/// Hierarchical spline space on a hierarchical mesh: the active HB functions,
/// their truncations (the THB basis), and per-cell extraction data.
///
/// Mutation (subdivide/reactivate) is single-writer. Derived data is rebuilt
/// lazily on first query after a mutation; concurrent queries are safe.
class HierarchicalSpace {
public:
  HierarchicalSpace() : lock_(std::make_unique<std::mutex>()) {}

  HierarchicalSpace(const TensorSpace &base, int max_levels)
      : mesh_(base, max_levels), generation_(detail::next_generation()), lock_(std::make_unique<std::mutex>()) {
    for (int a = 0; a < base.size_x(); ++a) {
      for (int b = 0; b < base.size_y(); ++b) active_fns_.insert({0, a, b});
    }
  }

  HierarchicalSpace(const HierarchicalSpace &o)
      : mesh_(o.mesh_), active_fns_(o.active_fns_), generation_(o.generation_), lock_(std::make_unique<std::mutex>()) {
    std::lock_guard g(*o.lock_);
    derived_ = o.derived_;
  }
  HierarchicalSpace &operator=(const HierarchicalSpace &o) {
    if (this != &o) {
      HierarchicalSpace tmp(o);
      *this = std::move(tmp);
    }
    return *this;
  }
  HierarchicalSpace(HierarchicalSpace &&) noexcept = default;
  HierarchicalSpace &operator=(HierarchicalSpace &&) noexcept = default;

  const HierarchicalMesh &mesh() const { return mesh_; }
  int degree() const { return mesh_.degree(); }
  int max_levels() const { return mesh_.max_levels(); }
  int local_size() const { return (degree() + 1) * (degree() + 1); }
  std::uint64_t generation() const { return generation_; }

  /// Active functions ordered by (level, a, b); the order defines dof numbers.
  const std::set<FunctionIndex> &active_functions() const { return active_fns_; }
  bool is_active(const FunctionIndex &f) const { return active_fns_.count(f) > 0; }
  int num_dofs() const { return static_cast<int>(active_fns_.size()); }

  int dof(const FunctionIndex &f) const {
    const auto &d = derived();
    if (f.level < 0 || f.level >= max_levels() || !mesh_.space(f.level).valid(f)) return -1;
    return d.fn_to_dof[static_cast<std::size_t>(f.level)][flat_fn(f.level, f.a, f.b)];
  }
  FunctionIndex function(int dof) const { return derived().dof_to_fn.at(static_cast<std::size_t>(dof)); }

  const TruncatedFunction &truncation(int dof) const { return derived().trunc.at(static_cast<std::size_t>(dof)); }

  /// Extraction data of every active cell, in active-cell order.
  const std::vector<CellBasis> &cell_bases() const { return derived().cells; }

  const CellBasis &cell_basis(const CellIndex &c) const {
    const auto &d = derived();
    if (!mesh_.is_active(c)) throw PreconditionError("cell " + to_string(c) + " is not active");
    const auto &sp = mesh_.space(c.level);
    const int slot = d.cell_slot[static_cast<std::size_t>(c.level)][static_cast<std::size_t>(c.i * sp.cells_y() + c.j)];
    return d.cells[static_cast<std::size_t>(slot)];
  }

  /// HB membership rule: supp f inside the level's subdomain and not inside the next one.
  bool satisfies_membership_rule(const FunctionIndex &f) const {
    const auto &s = mesh_.space(f.level);
    const auto sx = s.support_x(f.a);
    const auto sy = s.support_y(f.b);
    bool any_active = false;
    for (int i = sx.lo; i < sx.hi; ++i) {
      for (int j = sy.lo; j < sy.hi; ++j) {
        const auto st = mesh_.state(f.level, i, j);
        if (st == CellState::absent) return false;
        if (st == CellState::active) any_active = true;
      }
    }
    return any_active;
  }

  /// Replace an active cell by its four children.
  void subdivide(const CellIndex &c) {
    mesh_.subdivide(c);
    update_functions_near(c);
  }

  /// Activate a refined cell and remove its four (active) children.
  void reactivate(const CellIndex &c) {
    mesh_.reactivate(c);
    update_functions_near(c);
  }

  /// All active THB functions that are nonzero on the cell containing (x, y),
  /// with parametric first and second derivatives.
  std::vector<ThbValue> eval(double x, double y, int deriv_order = 2) const {
    if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) {
      throw DomainError("thb_eval: point outside the unit square");
    }
    const auto cell = mesh_.locate(x, y);
    const auto &cb = cell_basis(cell);
    const auto &sp = mesh_.space(cell.level);
    const auto loc = local_tensor_basis(eval_basis(sp.kv_x(), x, deriv_order), eval_basis(sp.kv_y(), y, deriv_order));
    const int n = local_size();
    std::vector<ThbValue> out;
    out.reserve(cb.dofs.size());
    for (std::size_t r = 0; r < cb.dofs.size(); ++r) {
      const auto row = cb.row(r, n);
      ThbValue v;
      v.dof = cb.dofs[r];
      v.fn = function(v.dof);
      for (int k = 0; k < n; ++k) {
        const double c = row[static_cast<std::size_t>(k)];
        if (c == 0.0) continue;
        const auto kk = static_cast<std::size_t>(k);
        v.value += c * loc.value[kk];
        v.grad[0] += c * loc.dx[kk];
        v.grad[1] += c * loc.dy[kk];
        v.hess[0] += c * loc.dxx[kk];
        v.hess[1] += c * loc.dxy[kk];
        v.hess[2] += c * loc.dyy[kk];
      }
      out.push_back(v);
    }
    return out;
  }

private:
  struct Derived {
    std::vector<FunctionIndex> dof_to_fn;
    std::vector<std::vector<int>> fn_to_dof;
    std::vector<TruncatedFunction> trunc;
    std::vector<CellBasis> cells;
    std::vector<std::vector<int>> cell_slot;
  };

  std::size_t flat_fn(int level, int a, int b) const {
    return static_cast<std::size_t>(a * mesh_.space(level).size_y() + b);
  }

  void update_functions_near(const CellIndex &c) {
    const int p = degree();
    auto refresh = [&](int level, int i0, int i1, int j0, int j1) {
      const auto &s = mesh_.space(level);
      for (int a = i0; a <= std::min(i1 + p, s.size_x() - 1); ++a) {
        for (int b = j0; b <= std::min(j1 + p, s.size_y() - 1); ++b) {
          const FunctionIndex f{level, a, b};
          if (satisfies_membership_rule(f)) {
            active_fns_.insert(f);
          } else {
            active_fns_.erase(f);
          }
        }
      }
    };
    refresh(c.level, c.i, c.i, c.j, c.j);
    if (c.level + 1 < max_levels()) refresh(c.level + 1, 2 * c.i, 2 * c.i + 1, 2 * c.j, 2 * c.j + 1);
    generation_ = detail::next_generation();
    std::lock_guard g(*lock_);
    derived_.reset();
  }

  const Derived &derived() const {
    std::lock_guard g(*lock_);
    if (!derived_) derived_ = build_derived();
    return *derived_;
  }

  // Coverage of a function's support by a level's subdomain.
  struct Coverage {
    bool touches = false;
    bool inside = true;
  };
  Coverage coverage(int level, int a, int b) const {
    const auto &s = mesh_.space(level);
    const auto sx = s.support_x(a);
    const auto sy = s.support_y(b);
    Coverage cov;
    for (int i = sx.lo; i < sx.hi; ++i) {
      for (int j = sy.lo; j < sy.hi; ++j) {
        if (mesh_.in_subdomain(level, i, j)) {
          cov.touches = true;
        } else {
          cov.inside = false;
        }
      }
    }
    return cov;
  }

  TruncatedFunction truncate(const FunctionIndex &f) const {
    using detail::FunctionKey;
    TruncatedFunction tf;
    tf.fn = f;
    std::vector<std::pair<FunctionKey, double>> cur{{detail::function_key(f.a, f.b), 1.0}};
    std::vector<std::pair<FunctionKey, double>> contrib;
    for (int level = f.level + 1; level < max_levels(); ++level) {
      const auto &tx = mesh_.two_scale_x(level - 1);
      const auto &ty = mesh_.two_scale_y(level - 1);
      contrib.clear();
      for (const auto &[key, c] : cur) {
        const auto &rx = tx.rows[static_cast<std::size_t>(detail::key_a(key))];
        const auto &ry = ty.rows[static_cast<std::size_t>(detail::key_b(key))];
        for (std::size_t ia = 0; ia < rx.coeffs.size(); ++ia) {
          for (std::size_t ib = 0; ib < ry.coeffs.size(); ++ib) {
            contrib.emplace_back(detail::function_key(rx.first + static_cast<int>(ia), ry.first + static_cast<int>(ib)),
                                 c * rx.coeffs[ia] * ry.coeffs[ib]);
          }
        }
      }
      std::stable_sort(contrib.begin(), contrib.end(), [](const auto &l, const auto &r) { return l.first < r.first; });
      std::vector<std::pair<FunctionKey, double>> next;
      for (std::size_t k = 0; k < contrib.size();) {
        const auto key = contrib[k].first;
        double sum = 0.0;
        for (; k < contrib.size() && contrib[k].first == key; ++k) sum += contrib[k].second;
        const auto cov = coverage(level, detail::key_a(key), detail::key_b(key));
        if (cov.touches && !cov.inside && sum != 0.0) next.emplace_back(key, sum);
      }
      if (next.empty()) break;
      tf.levels.push_back(next);
      cur = std::move(next);
    }
    return tf;
  }

  std::shared_ptr<const Derived> build_derived() const {
    auto d = std::make_shared<Derived>();
    const int nl = max_levels();
    const int p = degree();
    const int n = local_size();
    d->fn_to_dof.resize(static_cast<std::size_t>(nl));
    d->cell_slot.resize(static_cast<std::size_t>(nl));
    for (int l = 0; l < nl; ++l) {
      const auto &s = mesh_.space(l);
      d->fn_to_dof[static_cast<std::size_t>(l)].assign(static_cast<std::size_t>(s.size_x() * s.size_y()), -1);
      d->cell_slot[static_cast<std::size_t>(l)].assign(static_cast<std::size_t>(s.cells_x() * s.cells_y()), -1);
    }
    d->dof_to_fn.assign(active_fns_.begin(), active_fns_.end());
    d->trunc.reserve(d->dof_to_fn.size());
    for (std::size_t k = 0; k < d->dof_to_fn.size(); ++k) {
      const auto &f = d->dof_to_fn[k];
      d->fn_to_dof[static_cast<std::size_t>(f.level)][flat_fn(f.level, f.a, f.b)] = static_cast<int>(k);
      d->trunc.push_back(truncate(f));
    }

    d->cells.reserve(mesh_.active_cells().size());
    for (const auto &q : mesh_.active_cells()) {
      CellBasis cb;
      cb.cell = q;
      std::vector<double> row(static_cast<std::size_t>(n));
      for (int l = 0; l <= q.level; ++l) {
        const auto anc = HierarchicalMesh::ancestor(q, l);
        const auto &dofs = d->fn_to_dof[static_cast<std::size_t>(l)];
        for (int a = anc.i; a <= anc.i + p; ++a) {
          for (int b = anc.j; b <= anc.j + p; ++b) {
            const int dof = dofs[flat_fn(l, a, b)];
            if (dof < 0) continue;
            std::fill(row.begin(), row.end(), 0.0);
            bool nonzero = false;
            if (l == q.level) {
              row[static_cast<std::size_t>((a - q.i) * (p + 1) + (b - q.j))] = 1.0;
              nonzero = true;
            } else {
              const auto &tf = d->trunc[static_cast<std::size_t>(dof)];
              if (q.level > tf.depth()) continue;
              for (int rx = 0; rx <= p; ++rx) {
                for (int ry = 0; ry <= p; ++ry) {
                  const double c = tf.coefficient(q.level, q.i + rx, q.j + ry);
                  row[static_cast<std::size_t>(rx * (p + 1) + ry)] = c;
                  nonzero = nonzero || c != 0.0;
                }
              }
            }
            if (!nonzero) continue;
            cb.dofs.push_back(dof);
            cb.levels.push_back(l);
            cb.coeffs.insert(cb.coeffs.end(), row.begin(), row.end());
          }
        }
      }
      const auto &sp = mesh_.space(q.level);
      d->cell_slot[static_cast<std::size_t>(q.level)][static_cast<std::size_t>(q.i * sp.cells_y() + q.j)] =
          static_cast<int>(d->cells.size());
      d->cells.push_back(std::move(cb));
    }
    return d;
  }

  HierarchicalMesh mesh_;
  std::set<FunctionIndex> active_fns_;
  std::uint64_t generation_ = 0;
  std::unique_ptr<std::mutex> lock_;
  mutable std::shared_ptr<const Derived> derived_;
};

/// Single-level hierarchy over `base` with room for `max_levels` levels.
inline HierarchicalSpace build_initial(const TensorSpace &base, int max_levels) {
  return HierarchicalSpace(base, max_levels);
}

/// True iff the THB functions nonzero on every active cell belong to at most
/// m successive levels (truncated supports).
inline bool is_admissible(const HierarchicalSpace &space, int m) {
  for (const auto &cb : space.cell_bases()) {
    if (cb.levels.empty()) continue;
    const auto [lo, hi] = std::minmax_element(cb.levels.begin(), cb.levels.end());
    if (*hi - *lo + 1 > m) return false;
  }
  return true;
}

/// Value, parametric gradient and Laplacian of a THB field at a point.
struct FieldSample {
  double value = 0.0;
  std::array<double, 2> grad{0.0, 0.0};
  double laplacian = 0.0;
};

inline FieldSample evaluate_field(const HierarchicalSpace &space, std::span<const double> coeffs, double x, double y) {
  FieldSample s;
  for (const auto &v : space.eval(x, y, 2)) {
    const double c = coeffs[static_cast<std::size_t>(v.dof)];
    s.value += c * v.value;
    s.grad[0] += c * v.grad[0];
    s.grad[1] += c * v.grad[1];
    s.laplacian += c * (v.hess[0] + v.hess[2]);
  }
  return s;
}

} // namespace thbheat
