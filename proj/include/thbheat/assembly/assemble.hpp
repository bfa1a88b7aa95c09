#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstdint>
#include <memory>
#include <vector>

#include "thbheat/assembly/problem.hpp"
#include "thbheat/assembly/quadrature.hpp"
#include "thbheat/hierarchy/space.hpp"
#include "thbheat/state.hpp"
#include "thbheat/util/parallel.hpp"

namespace thbheat {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// THB basis tabulated at the quadrature points of one active cell, in
/// physical coordinates. Row q = quadrature point, column r = cb.dofs[r].
struct CellTables {
  CellIndex cell;
  std::vector<int> dofs;
  double h = 0.0;                ///< physical side length of the cell
  std::vector<Point> points;     ///< physical quadrature points
  Eigen::VectorXd weights;       ///< physical weights (include the Jacobian)
  Eigen::MatrixXd N, Nx, Ny, Lap; ///< values, gradient, Laplacian
};

/// Per-cell quadrature tables of one space generation.
class QuadratureCache {
public:
  QuadratureCache(const HierarchicalSpace &space, const Geometry &geom, int n_gauss = 0)
      : generation_(space.generation()), n_dofs_(space.num_dofs()), geom_(geom) {
    const int p = space.degree();
    if (n_gauss == 0) n_gauss = p + 1;
    if (n_gauss < p + 1) throw PreconditionError("assembly: n_gauss must be at least p + 1");
    const auto rule = gauss_legendre(n_gauss);
    const auto &bases = space.cell_bases();
    cells_.resize(bases.size());
    const int n = space.local_size();
    const auto nq = static_cast<Eigen::Index>(n_gauss * n_gauss);
    parallel_for(bases.size(), [&](std::size_t c) {
      const auto &cb = bases[c];
      const auto &ls = space.mesh().space(cb.cell.level);
      const auto b = space.mesh().bounds(cb.cell);
      auto &tab = cells_[c];
      tab.cell = cb.cell;
      tab.dofs = cb.dofs;
      tab.h = geom.side_length * (b[1] - b[0]);
      const auto nd = static_cast<Eigen::Index>(cb.dofs.size());
      // Extraction operator: THB functions over the cell's local B-splines.
      Eigen::MatrixXd C(nd, n);
      for (Eigen::Index r = 0; r < nd; ++r) {
        const auto row = cb.row(static_cast<std::size_t>(r), n);
        for (int k = 0; k < n; ++k) C(r, k) = row[static_cast<std::size_t>(k)];
      }
      Eigen::MatrixXd V(nq, n), Dx(nq, n), Dy(nq, n), L2(nq, n);
      tab.weights.resize(nq);
      tab.points.resize(static_cast<std::size_t>(nq));
      const double area = (b[1] - b[0]) * (b[3] - b[2]) * geom.jacobian();
      const double g = geom.grad_factor();
      const double hf = geom.hess_factor();
      Eigen::Index q = 0;
      for (int qx = 0; qx < n_gauss; ++qx) {
        const double u = b[0] + rule.points[static_cast<std::size_t>(qx)] * (b[1] - b[0]);
        const auto bx = eval_basis(ls.kv_x(), u, 2);
        for (int qy = 0; qy < n_gauss; ++qy, ++q) {
          const double v = b[2] + rule.points[static_cast<std::size_t>(qy)] * (b[3] - b[2]);
          const auto loc = local_tensor_basis(bx, eval_basis(ls.kv_y(), v, 2));
          for (int k = 0; k < n; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            V(q, k) = loc.value[kk];
            Dx(q, k) = g * loc.dx[kk];
            Dy(q, k) = g * loc.dy[kk];
            L2(q, k) = hf * (loc.dxx[kk] + loc.dyy[kk]);
          }
          tab.weights(q) =
              rule.weights[static_cast<std::size_t>(qx)] * rule.weights[static_cast<std::size_t>(qy)] * area;
          tab.points[static_cast<std::size_t>(q)] = geom.map(u, v);
        }
      }
      const Eigen::MatrixXd Ct = C.transpose();
      tab.N = V * Ct;
      tab.Nx = Dx * Ct;
      tab.Ny = Dy * Ct;
      tab.Lap = L2 * Ct;
    });
  }

  std::uint64_t generation() const { return generation_; }
  int n_dofs() const { return n_dofs_; }
  const Geometry &geometry() const { return geom_; }
  const std::vector<CellTables> &cells() const { return cells_; }

private:
  std::uint64_t generation_;
  int n_dofs_;
  Geometry geom_;
  std::vector<CellTables> cells_;
};

/// Mass and stiffness of one generation; the load is re-assembled per time.
struct SystemMatrices {
  SparseMatrix M; ///< Cp rho * int N N^T
  SparseMatrix K; ///< k * int grad N . grad N^T
  Eigen::VectorXd f;
  double t_f = 0.0;
  std::uint64_t generation = 0;
  std::shared_ptr<const QuadratureCache> cache;

  int n_dofs() const { return static_cast<int>(M.rows()); }
};

namespace detail {

/// Merge per-cell dense blocks into a sparse matrix in cell order.
inline SparseMatrix merge_blocks(const std::vector<CellTables> &cells, const std::vector<Eigen::MatrixXd> &blocks, int n) {
  std::vector<Eigen::Triplet<double>> trip;
  std::size_t total = 0;
  for (const auto &b : blocks) total += static_cast<std::size_t>(b.size());
  trip.reserve(total);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto &d = cells[c].dofs;
    for (std::size_t r = 0; r < d.size(); ++r) {
      for (std::size_t s = 0; s < d.size(); ++s) {
        trip.emplace_back(d[r], d[s], blocks[c](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)));
      }
    }
  }
  SparseMatrix A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

} // namespace detail

/// Unit-density Gram matrix int N N^T over the active cells.
inline SparseMatrix assemble_gram(const QuadratureCache &cache) {
  const auto &cells = cache.cells();
  std::vector<Eigen::MatrixXd> blocks(cells.size());
  parallel_for(cells.size(), [&](std::size_t c) {
    const auto &t = cells[c];
    blocks[c] = t.N.transpose() * t.weights.asDiagonal() * t.N;
  });
  return detail::merge_blocks(cells, blocks, cache.n_dofs());
}

inline SparseMatrix assemble_stiffness(const QuadratureCache &cache, double k) {
  const auto &cells = cache.cells();
  std::vector<Eigen::MatrixXd> blocks(cells.size());
  parallel_for(cells.size(), [&](std::size_t c) {
    const auto &t = cells[c];
    blocks[c] = k * (t.Nx.transpose() * t.weights.asDiagonal() * t.Nx + t.Ny.transpose() * t.weights.asDiagonal() * t.Ny);
  });
  return detail::merge_blocks(cells, blocks, cache.n_dofs());
}

/// Load vector int N g for a pointwise physical source g(x).
template <class Source> Eigen::VectorXd assemble_load(const QuadratureCache &cache, Source &&g) {
  const auto &cells = cache.cells();
  std::vector<Eigen::VectorXd> local(cells.size());
  parallel_for(cells.size(), [&](std::size_t c) {
    const auto &t = cells[c];
    Eigen::VectorXd vals(t.weights.size());
    for (Eigen::Index q = 0; q < vals.size(); ++q) vals(q) = t.weights(q) * g(t.points[static_cast<std::size_t>(q)]);
    local[c] = t.N.transpose() * vals;
  });
  Eigen::VectorXd f = Eigen::VectorXd::Zero(cache.n_dofs());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t r = 0; r < cells[c].dofs.size(); ++r) f(cells[c].dofs[r]) += local[c](static_cast<Eigen::Index>(r));
  }
  return f;
}

inline Eigen::VectorXd assemble_source_load(const QuadratureCache &cache, const HeatSource &src, double t) {
  const auto beam = beam_state(src, t);
  if (!beam.on) return Eigen::VectorXd::Zero(cache.n_dofs());
  const double peak = src.P * src.eta;
  const double inv_r2 = 1.0 / (src.r_h * src.r_h);
  return assemble_load(cache, [&](const Point &x) {
    const double dx = x[0] - beam.center[0];
    const double dy = x[1] - beam.center[1];
    return peak * std::exp(-(dx * dx + dy * dy) * inv_r2);
  });
}

/// Assemble M and K for the space's current generation and f at time t.
inline SystemMatrices assemble(const HierarchicalSpace &space, const Geometry &geom, const Material &mat,
                               const HeatSource &src, double t, int n_gauss = 0) {
  SystemMatrices sys;
  sys.cache = std::make_shared<QuadratureCache>(space, geom, n_gauss);
  sys.generation = space.generation();
  sys.M = assemble_gram(*sys.cache) * mat.capacity();
  sys.K = assemble_stiffness(*sys.cache, mat.k);
  sys.f = assemble_source_load(*sys.cache, src, t);
  sys.t_f = t;
  return sys;
}

/// Re-assemble only the load at a new time.
inline void update_load(SystemMatrices &sys, const HeatSource &src, double t) {
  sys.f = assemble_source_load(*sys.cache, src, t);
  sys.t_f = t;
}

} // namespace thbheat
