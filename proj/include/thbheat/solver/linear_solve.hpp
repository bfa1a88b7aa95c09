#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <string>

#include "thbheat/errors.hpp"

namespace thbheat {

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Diagonally preconditioned conjugate gradients for an SPD sparse matrix.
/// The relative residual |b - Ax| / |b| is checked after the solve.
inline Eigen::VectorXd linear_solve(const Eigen::SparseMatrix<double> &A, const Eigen::VectorXd &b, double tol = 1e-10,
                                    int max_iter = 0, SolveReport *report = nullptr,
                                    const Eigen::VectorXd *guess = nullptr) {
  if (A.rows() != A.cols() || A.rows() != b.size()) throw PreconditionError("linear_solve: dimension mismatch");
  const double bn = b.norm();
  if (bn == 0.0) {
    if (report) *report = {};
    return Eigen::VectorXd::Zero(b.size());
  }
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
  cg.setTolerance(tol);
  cg.setMaxIterations(max_iter > 0 ? max_iter : static_cast<int>(std::max<Eigen::Index>(1000, 10 * A.rows())));
  cg.compute(A);
  if (cg.info() != Eigen::Success) throw NumericalError("linear_solve: preconditioner setup failed");
  Eigen::VectorXd x = guess ? Eigen::VectorXd(cg.solveWithGuess(b, *guess)) : Eigen::VectorXd(cg.solve(b));
  const double rel = (b - A * x).norm() / bn;
  if (report) *report = {static_cast<int>(cg.iterations()), rel};
  // Eigen measures the preconditioned recurrence; accept a small slack on the true residual.
  if (cg.info() != Eigen::Success || rel > 10.0 * tol) {
    throw NumericalError("linear_solve: no convergence after " + std::to_string(cg.iterations()) +
                         " iterations, relative residual " + std::to_string(rel));
  }
  return x;
}

} // namespace thbheat
