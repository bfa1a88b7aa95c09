#pragma once

#include <Eigen/SparseCholesky>
#include <cmath>
#include <limits>
#include <vector>

#include "thbheat/assembly/assemble.hpp"
#include "thbheat/hierarchy/space.hpp"
#include "thbheat/state.hpp"

namespace thbheat {

namespace detail {

/// Field restricted to one active cell, as coefficients over the cell's
/// (p+1)^2 level B-splines.
inline std::vector<double> local_coefficients(const HierarchicalSpace &space, const CellIndex &cell,
                                              const Eigen::VectorXd &theta) {
  const auto &cb = space.cell_basis(cell);
  const int n = space.local_size();
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (std::size_t r = 0; r < cb.dofs.size(); ++r) {
    const double c = theta(cb.dofs[r]);
    const auto row = cb.row(r, n);
    for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] += c * row[static_cast<std::size_t>(k)];
  }
  return out;
}

/// Knot insertion of a local representation on cell `c` into its child `ch`.
inline std::vector<double> refine_local(const HierarchicalMesh &mesh, const CellIndex &c, const CellIndex &ch,
                                        const std::vector<double> &coarse) {
  const int p = mesh.degree();
  const auto &tx = mesh.two_scale_x(c.level);
  const auto &ty = mesh.two_scale_y(c.level);
  const int w = p + 1;
  std::vector<double> tmp(static_cast<std::size_t>(w * w), 0.0);
  // x direction: tmp(fa, b) = sum_a coarse(a, b) tx(a, fa)
  for (int fa = 0; fa < w; ++fa) {
    for (int a = 0; a < w; ++a) {
      const double t = tx.at(c.i + a, ch.i + fa);
      if (t == 0.0) continue;
      for (int b = 0; b < w; ++b) tmp[static_cast<std::size_t>(fa * w + b)] += t * coarse[static_cast<std::size_t>(a * w + b)];
    }
  }
  std::vector<double> fine(static_cast<std::size_t>(w * w), 0.0);
  for (int fb = 0; fb < w; ++fb) {
    for (int b = 0; b < w; ++b) {
      const double t = ty.at(c.j + b, ch.j + fb);
      if (t == 0.0) continue;
      for (int fa = 0; fa < w; ++fa) fine[static_cast<std::size_t>(fa * w + fb)] += t * tmp[static_cast<std::size_t>(fa * w + b)];
    }
  }
  return fine;
}

} // namespace detail

/// Exact transfer of a field onto a refined space by knot insertion.
///
/// On every new active cell the old field is written over the cell's level
/// B-splines; THB coefficients are then read off level by level, coarse to
/// fine, after subtracting the contributions of coarser THB functions.
inline StateVector transfer_refine(const HierarchicalSpace &space_old, const HierarchicalSpace &space_new,
                                   const StateVector &theta) {
  require_generation(space_old, theta, "transfer_refine");
  const int p = space_new.degree();
  const int n = space_new.local_size();
  Eigen::VectorXd out = Eigen::VectorXd::Constant(space_new.num_dofs(), std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> known(static_cast<std::size_t>(space_new.num_dofs()), false);
  const auto &old_mesh = space_old.mesh();
  for (const auto &cell : space_new.mesh().active_cells()) {
    const auto &cb = space_new.cell_basis(cell);
    bool needed = false;
    for (std::size_t r = 0; r < cb.dofs.size(); ++r) needed = needed || !known[static_cast<std::size_t>(cb.dofs[r])];
    if (!needed) continue;
    // Old active cell covering this one: the ancestor that is active in the old mesh.
    int lo = -1;
    for (int l = 0; l <= cell.level; ++l) {
      if (old_mesh.is_active(HierarchicalMesh::ancestor(cell, l))) {
        lo = l;
        break;
      }
    }
    if (lo < 0) throw PreconditionError("transfer_refine: new space is not a refinement of the old one");
    auto cur = HierarchicalMesh::ancestor(cell, lo);
    auto loc = detail::local_coefficients(space_old, cur, theta.coeffs);
    while (cur.level < cell.level) {
      const auto next = HierarchicalMesh::ancestor(cell, cur.level + 1);
      loc = detail::refine_local(old_mesh, cur, next, loc);
      cur = next;
    }
    for (std::size_t r = 0; r < cb.dofs.size(); ++r) {
      const auto dof = static_cast<std::size_t>(cb.dofs[r]);
      if (cb.levels[r] != cell.level || known[dof]) continue;
      const auto f = space_new.function(cb.dofs[r]);
      const auto pos = static_cast<std::size_t>((f.a - cell.i) * (p + 1) + (f.b - cell.j));
      double v = loc[pos];
      for (std::size_t s = 0; s < cb.dofs.size(); ++s) {
        if (cb.levels[s] >= cell.level) continue;
        v -= out(cb.dofs[s]) * cb.row(s, n)[pos];
      }
      out(cb.dofs[r]) = v;
      known[dof] = true;
    }
  }
  for (std::size_t k = 0; k < known.size(); ++k) {
    if (!known[k]) throw NumericalError("transfer_refine: coefficient not recovered for dof " + std::to_string(k));
  }
  return {std::move(out), theta.t, space_new.generation()};
}

namespace detail {

inline StateVector solve_gram(const HierarchicalSpace &space, const Eigen::VectorXd &moments, double t) {
  const QuadratureCache cache(space, Geometry(1.0));
  const SparseMatrix G = assemble_gram(cache);
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(G);
  if (ldlt.info() != Eigen::Success) throw NumericalError("project_l2: Gram factorization failed");
  Eigen::VectorXd x = ldlt.solve(moments);
  if (ldlt.info() != Eigen::Success) throw NumericalError("project_l2: Gram solve failed");
  return {std::move(x), t, space.generation()};
}

} // namespace detail

/// L2 projection of a parametric field g(u, v) onto the space, integrating the
/// moments with an n_gauss^2 rule per active cell (0: p + 1).
template <class Field>
StateVector project_l2(const HierarchicalSpace &space, Field &&g, double t = 0.0, int n_gauss = 0) {
  const int ng = n_gauss > 0 ? n_gauss : space.degree() + 1;
  const auto rule = gauss_legendre(ng);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(space.num_dofs());
  for (const auto &c : space.mesh().active_cells()) {
    const auto bd = space.mesh().bounds(c);
    const double area = (bd[1] - bd[0]) * (bd[3] - bd[2]);
    for (int qx = 0; qx < ng; ++qx) {
      for (int qy = 0; qy < ng; ++qy) {
        const double u = bd[0] + rule.points[static_cast<std::size_t>(qx)] * (bd[1] - bd[0]);
        const double v = bd[2] + rule.points[static_cast<std::size_t>(qy)] * (bd[3] - bd[2]);
        const double w =
            rule.weights[static_cast<std::size_t>(qx)] * rule.weights[static_cast<std::size_t>(qy)] * area * g(u, v);
        for (const auto &e : space.eval(u, v, 0)) b(e.dof) += w * e.value;
      }
    }
  }
  return detail::solve_gram(space, b, t);
}

/// L2 projection of a discrete field from another hierarchy over the same
/// base onto `space_new`. Moments are integrated exactly over the common
/// refinement of both meshes.
inline StateVector project_l2(const HierarchicalSpace &space_new, const HierarchicalSpace &space_old,
                              const StateVector &theta_old) {
  require_generation(space_old, theta_old, "project_l2");
  const int ng = space_new.degree() + 1;
  const auto rule = gauss_legendre(ng);
  const auto &cells = space_new.mesh().active_cells();
  const std::vector<CellIndex> list(cells.begin(), cells.end());
  std::vector<std::vector<std::pair<int, double>>> local(list.size());
  const std::span<const double> c_old(theta_old.coeffs.data(), static_cast<std::size_t>(theta_old.coeffs.size()));
  parallel_for(list.size(), [&](std::size_t k) {
    std::vector<CellIndex> pieces;
    std::vector<CellIndex> stack{list[k]};
    while (!stack.empty()) {
      const auto q = stack.back();
      stack.pop_back();
      if (space_old.mesh().state(q) == CellState::refined) {
        for (const auto &ch : HierarchicalMesh::children(q)) stack.push_back(ch);
      } else {
        pieces.push_back(q);
      }
    }
    std::sort(pieces.begin(), pieces.end());
    std::map<int, double> acc;
    for (const auto &q : pieces) {
      const auto bd = space_new.mesh().bounds(q);
      const double area = (bd[1] - bd[0]) * (bd[3] - bd[2]);
      for (int qx = 0; qx < ng; ++qx) {
        for (int qy = 0; qy < ng; ++qy) {
          const double u = bd[0] + rule.points[static_cast<std::size_t>(qx)] * (bd[1] - bd[0]);
          const double v = bd[2] + rule.points[static_cast<std::size_t>(qy)] * (bd[3] - bd[2]);
          double g = 0.0;
          for (const auto &e : space_old.eval(u, v, 0)) g += c_old[static_cast<std::size_t>(e.dof)] * e.value;
          const double w = rule.weights[static_cast<std::size_t>(qx)] * rule.weights[static_cast<std::size_t>(qy)] * area * g;
          for (const auto &e : space_new.eval(u, v, 0)) acc[e.dof] += w * e.value;
        }
      }
    }
    local[k].assign(acc.begin(), acc.end());
  });
  Eigen::VectorXd b = Eigen::VectorXd::Zero(space_new.num_dofs());
  for (const auto &l : local) {
    for (const auto &[d, v] : l) b(d) += v;
  }
  return detail::solve_gram(space_new, b, theta_old.t);
}

} // namespace thbheat
