// SPDX-License-Identifier: Apache-2.0
#ifndef MIMOEP_SOLVERS_HPP
#define MIMOEP_SOLVERS_HPP

#include <Eigen/Dense>
#include <vector>

namespace mimoep {

// Dense symmetric positive definite system A x = b.
struct SpdSystem {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
};

enum class Termination { kToleranceMet, kMaxSteps, kBreakdown };

// Per-solve trace. When tracing is enabled, rre_trace[k] is the relative
// residual error ||A x_k - b|| / ||b|| recomputed from the iterate itself
// (the recursion residual drifts in finite precision and is never trusted
// for reporting); it has steps + 1 entries including k = 0. In production
// mode the trace is left empty and only the rho-based stopping criterion
// is evaluated.
struct SolveReport {
  Eigen::VectorXd x;
  int steps = 0;
  std::vector<double> rre_trace;
  Termination termination = Termination::kMaxSteps;
};

struct Preconditioner {
  enum class Kind { kIdentity, kJacobi };
  Kind kind = Kind::kIdentity;
  Eigen::VectorXd inv_diag;  // 1/A_nn for kJacobi

  static Preconditioner identity() { return {}; }
};

// B = diag(1/A_nn). Throws when the diagonal is not strictly positive.
Preconditioner jacobi_preconditioner(const Eigen::MatrixXd& a);

// Exact solve via Cholesky factorization; throws std::runtime_error when the
// factorization fails (matrix not positive definite).
Eigen::VectorXd cholesky_solve(const SpdSystem& sys);

// Explicit SPD inverse, symmetrized on output.
Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& a);

// Forward Gauss-Seidel sweeps in ascending index order; one sweep is one
// step. Stops when the recomputed RRE drops to tol or after max_sweeps.
SolveReport gauss_seidel(const SpdSystem& sys, const Eigen::VectorXd& x0,
                         int max_sweeps, double tol);

// Reference scale for the stopping threshold tol * scale. The plain
// two-norm form compares the B-weighted residual norm sqrt(rho) against the
// unweighted ||b||_2, which loses meaning when a few huge diagonal entries
// inflate b much faster than they inflate sqrt(rho); measuring b in the same
// B-weighted norm keeps both sides on one scale. Both b-derived scales still
// drift when the diagonal grows between successive solves of a sequence, so
// a caller that solves a drifting family and needs one solve to be as
// accurate as the next can pin the reference: kFixedReference compares the
// plain residual two-norm ||A x_k - b||_2 against tol * reference with a
// caller-chosen reference that carries the problem's invariant scale.
enum class ThresholdScale { kTwoNorm, kPreconditionedNorm, kFixedReference };

// Preconditioned conjugate gradient:
//   g0 = A x0 - b, d0 = B g0, rho0 = <B g0, g0>
//   alpha_k = rho_k / <A d_k, d_k>
//   x_{k+1} = x_k - alpha_k d_k
//   g_{k+1} = g_k - alpha_k A d_k
//   rho_{k+1} = <B g_{k+1}, g_{k+1}>
//   d_{k+1} = B g_{k+1} + (rho_{k+1}/rho_k) d_k
// terminating when sqrt(rho_k) <= tol * ||b|| or k = max_steps, with ||b||
// taken per ThresholdScale (kFixedReference instead tests
// ||g_k||_2 <= tol * reference and requires reference > 0). An identity
// preconditioner yields plain CG. <A d, d> <= 0 signals loss of positive
// definiteness; the best iterate so far is returned flagged kBreakdown
// rather than aborting.
SolveReport pcg(const SpdSystem& sys, const Preconditioner& pre,
                const Eigen::VectorXd& x0, int max_steps, double tol,
                bool trace = false,
                ThresholdScale scale = ThresholdScale::kTwoNorm,
                double reference = -1.0);

}  // namespace mimoep

#endif
