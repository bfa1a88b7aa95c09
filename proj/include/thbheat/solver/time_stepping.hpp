#pragma once

#include <cmath>
#include <map>

#include "thbheat/assembly/assemble.hpp"
#include "thbheat/solver/linear_solve.hpp"
#include "thbheat/state.hpp"

namespace thbheat {

struct TimeStepper {
  double dt = 1.0;
  double tol = 1e-12;
  int max_iter = 0;

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  }
};

/// Backward-Euler increment: (M + dt K) d = dt f - dt K theta, with f the load
/// currently held by `sys` (assembled at t + dt).
inline StateVector backward_euler_step(const SystemMatrices &sys, const StateVector &theta, const TimeStepper &ts,
                                       SolveReport *report = nullptr) {
  require_generation(theta.generation, sys.generation, "backward_euler_step");
  const SparseMatrix A = sys.M + ts.dt * sys.K;
  const Eigen::VectorXd rhs = ts.dt * (sys.f - sys.K * theta.coeffs);
  StateVector d;
  d.coeffs = linear_solve(A, rhs, ts.tol, ts.max_iter, report);
  d.t = theta.t + ts.dt;
  d.generation = theta.generation;
  return d;
}

/// theta + backward_euler_step(theta).
inline StateVector advance(const SystemMatrices &sys, const StateVector &theta, const TimeStepper &ts,
                           SolveReport *report = nullptr) {
  auto d = backward_euler_step(sys, theta, ts, report);
  d.coeffs += theta.coeffs;
  return d;
}

/// Per-cell residual indicators and their l2 total.
struct Estimate {
  std::map<CellIndex, double> per_cell;
  double total = 0.0;
  std::uint64_t generation = 0;
};

inline Estimate make_estimate(std::map<CellIndex, double> per_cell, std::uint64_t generation) {
  Estimate e{std::move(per_cell), 0.0, generation};
  double s = 0.0;
  for (const auto &[c, v] : e.per_cell) s += v * v;
  e.total = std::sqrt(s);
  return e;
}

/// Interior residual estimator eps_Q^2 = h_Q^2 int_Q |f - Cp rho (theta_new -
/// theta_old)/dt + k Lap theta_new|^2, with h_Q the physical cell side.
inline Estimate estimate(const QuadratureCache &cache, const Material &mat, const HeatSource &src,
                         const StateVector &theta_new, const StateVector &theta_old, double dt, double t_new) {
  require_generation(theta_new.generation, cache.generation(), "estimate");
  require_generation(theta_old.generation, cache.generation(), "estimate");
  const auto &cells = cache.cells();
  std::vector<double> eps(cells.size());
  const auto beam = beam_state(src, t_new);
  const double peak = src.P * src.eta;
  const double inv_r2 = 1.0 / (src.r_h * src.r_h);
  const double cap = mat.capacity() / dt;
  parallel_for(cells.size(), [&](std::size_t c) {
    const auto &t = cells[c];
    const auto nd = static_cast<Eigen::Index>(t.dofs.size());
    Eigen::VectorXd cn(nd), rate(nd);
    for (Eigen::Index r = 0; r < nd; ++r) {
      const int d = t.dofs[static_cast<std::size_t>(r)];
      cn(r) = theta_new.coeffs(d);
      rate(r) = theta_new.coeffs(d) - theta_old.coeffs(d);
    }
    const Eigen::VectorXd res_time = t.N * rate;
    const Eigen::VectorXd lap = t.Lap * cn;
    double s = 0.0;
    for (Eigen::Index q = 0; q < t.weights.size(); ++q) {
      double fq = 0.0;
      if (beam.on) {
        const auto &x = t.points[static_cast<std::size_t>(q)];
        const double dx = x[0] - beam.center[0];
        const double dy = x[1] - beam.center[1];
        fq = peak * std::exp(-(dx * dx + dy * dy) * inv_r2);
      }
      const double r = fq - cap * res_time(q) + mat.k * lap(q);
      s += t.weights(q) * r * r;
    }
    eps[c] = t.h * std::sqrt(s);
  });
  std::map<CellIndex, double> per;
  for (std::size_t c = 0; c < cells.size(); ++c) per.emplace_hint(per.end(), cells[c].cell, eps[c]);
  return make_estimate(std::move(per), cache.generation());
}

/// E_i = 1/2 theta^T K theta. K annihilates constants (partition of unity), so
/// the mean coefficient is removed first; this avoids cancellation when the
/// field is a small perturbation of a large ambient temperature.
inline double internal_energy(const SystemMatrices &sys, const StateVector &theta) {
  require_generation(theta.generation, sys.generation, "internal_energy");
  const Eigen::VectorXd d = theta.coeffs.array() - theta.coeffs.mean();
  return 0.5 * d.dot(sys.K * d);
}

/// E_T = E_i + 1/2 theta_new^T M (theta_new - theta_old) / dt.
inline double total_energy(const SystemMatrices &sys, const StateVector &theta_new, const StateVector &theta_old,
                           double dt) {
  require_generation(theta_old.generation, sys.generation, "total_energy");
  return internal_energy(sys, theta_new) +
         0.5 * theta_new.coeffs.dot(sys.M * (theta_new.coeffs - theta_old.coeffs)) / dt;
}

struct RelativeError {
  double value = 0.0;
  bool absolute = false; ///< reference was zero; value is |E - E_ref|
};

inline RelativeError relative_error(double e, double e_ref) {
  if (e_ref == 0.0) return {std::abs(e), true};
  return {std::abs(e_ref - e) / std::abs(e_ref), false};
}

} // namespace thbheat
