// SPDX-License-Identifier: Apache-2.0
#include "solvers.hpp"

#include <cmath>
#include <stdexcept>

namespace mimoep {

namespace {

double rre_of(const SpdSystem& sys, const Eigen::VectorXd& x, double norm_b) {
  double denom = norm_b > 0.0 ? norm_b : 1.0;
  return (sys.a * x - sys.b).norm() / denom;
}

Eigen::VectorXd apply(const Preconditioner& pre, const Eigen::VectorXd& g) {
  if (pre.kind == Preconditioner::Kind::kJacobi)
    return pre.inv_diag.cwiseProduct(g);
  return g;
}

}  // namespace

Preconditioner jacobi_preconditioner(const Eigen::MatrixXd& a) {
  Eigen::VectorXd d = a.diagonal();
  if ((d.array() <= 0.0).any() || !d.allFinite())
    throw std::invalid_argument("Jacobi preconditioner needs a positive diagonal");
  Preconditioner p;
  p.kind = Preconditioner::Kind::kJacobi;
  p.inv_diag = d.cwiseInverse();
  return p;
}

Eigen::VectorXd cholesky_solve(const SpdSystem& sys) {
  Eigen::LLT<Eigen::MatrixXd> llt(sys.a);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("Cholesky factorization failed: matrix not positive definite");
  return llt.solve(sys.b);
}

Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("Cholesky factorization failed: matrix not positive definite");
  Eigen::MatrixXd inv =
      llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
  return 0.5 * (inv + inv.transpose()).eval();
}

SolveReport gauss_seidel(const SpdSystem& sys, const Eigen::VectorXd& x0,
                         int max_sweeps, double tol) {
  const Eigen::Index n = sys.a.rows();
  if ((sys.a.diagonal().array() == 0.0).any())
    throw std::invalid_argument("Gauss-Seidel needs a nonzero diagonal");

  SolveReport rep;
  rep.x = x0;
  double norm_b = sys.b.norm();
  rep.rre_trace.push_back(rre_of(sys, rep.x, norm_b));
  rep.termination = Termination::kMaxSteps;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    if (rep.rre_trace.back() <= tol) {
      rep.termination = Termination::kToleranceMet;
      break;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = sys.a.row(i).dot(rep.x) - sys.a(i, i) * rep.x[i];
      rep.x[i] = (sys.b[i] - s) / sys.a(i, i);
    }
    ++rep.steps;
    rep.rre_trace.push_back(rre_of(sys, rep.x, norm_b));
  }
  if (rep.rre_trace.back() <= tol)
    rep.termination = Termination::kToleranceMet;
  return rep;
}

SolveReport pcg(const SpdSystem& sys, const Preconditioner& pre,
                const Eigen::VectorXd& x0, int max_steps, double tol,
                bool trace, ThresholdScale scale, double reference) {
  SolveReport rep;
  rep.x = x0;

  const bool fixed_ref = scale == ThresholdScale::kFixedReference;
  if (fixed_ref && !(reference > 0.0))
    throw std::invalid_argument("fixed-reference stopping needs reference > 0");

  const double norm_b = sys.b.norm();
  const double scale_b =fixed_ref ? reference
                         : scale == ThresholdScale::kPreconditionedNorm
                             ? std::sqrt(apply(pre, sys.b).dot(sys.b))
                             : norm_b;
  const double threshold = tol * scale_b;

  Eigen::VectorXd g = sys.a * rep.x - sys.b;
  Eigen::VectorXd bg = apply(pre, g);
  Eigen::VectorXd d = bg;
  double rho = bg.dot(g);
  // The stopped-on quantity: the B-weighted residual norm from the recursion,
  // or the plain residual norm when the caller pinned the reference scale.
  const auto stop_norm = [&] { return fixed_ref ? g.norm() : std::sqrt(rho); };

  if (trace) rep.rre_trace.push_back(rre_of(sys, rep.x, norm_b));

  rep.termination = Termination::kMaxSteps;
  for (int k = 0; k < max_steps; ++k) {
    if (stop_norm() <= threshold) {
      rep.termination = Termination::kToleranceMet;
      return rep;
    }
    Eigen::VectorXd ad = sys.a * d;
    double dad = d.dot(ad);
    if (dad <= 0.0 || !std::isfinite(dad)) {
      rep.termination = Termination::kBreakdown;
      return rep;
    }
    double alpha = rho / dad;
    rep.x -= alpha * d;
    g -= alpha * ad;
    bg = apply(pre, g);
    double rho_next = bg.dot(g);
    d = bg + (rho_next / rho) * d;
    rho = rho_next;
    ++rep.steps;
    if (trace) rep.rre_trace.push_back(rre_of(sys, rep.x, norm_b));
  }
  if (stop_norm() <= threshold)
    rep.termination = Termination::kToleranceMet;
  return rep;
}

}  // namespace mimoep
