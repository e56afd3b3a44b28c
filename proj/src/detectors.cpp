// SPDX-License-Identifier: Apache-2.0
#include "detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mimoep {
namespace {

constexpr double kTiltedVarianceFloor = 1e-8;

double tol_for_iteration(const std::vector<double>& schedule, int ell) {
  if (schedule.empty()) {
    throw std::invalid_argument(
        "pcg mean backend requires a nonempty tolerance schedule");
  }
  const std::size_t i =
      std::min<std::size_t>(static_cast<std::size_t>(ell), schedule.size() - 1);
  return schedule[i];
}

// Default schedule: coarse first, then fixed.
std::vector<double> default_tol_schedule(int iters) {
  std::vector<double> tols;
  tols.reserve(static_cast<std::size_t>(iters) + 1);
  for (int ell = 0; ell <= iters; ++ell) {
    tols.push_back(ell == 0 ? 1e-3 : (ell == 1 ? 1e-4 : 1e-5));
  }
  return tols;
}

void check_system_invariants(const SpdSystem& s, const Eigen::VectorXd& lambda) {
  auto& counters = ep_invariant_counters();
  if ((lambda.array() <= 0.0).any()) {
    counters.nonpositive_site_precision.fetch_add(1,
                                                  std::memory_order_relaxed);
  }
  if ((s.a.array() != s.a.transpose().array()).any()) {
    counters.asymmetric_system.fetch_add(1, std::memory_order_relaxed);
  }
}

}  // namespace

CalibrationModel CalibrationModel::identity(int iters) {
  CalibrationModel m;
  m.alpha1 = Eigen::VectorXd::Ones(iters);
  m.alpha2 = Eigen::VectorXd::Zero(iters);
  return m;
}

SpdSystem build_system(const RealLinearSystem& sys,
                       const Eigen::VectorXd& gamma,
                       const Eigen::VectorXd& lambda) {
  const double inv_s2 = 1.0 / sys.sigma2;
  SpdSystem s;
  s.a = inv_s2 * sys.gram;
  s.a.diagonal() += lambda;
  s.b = inv_s2 * sys.matched_filter + gamma;
  return s;
}

CavityMoments cavity_moments(double mu_n, double sigma2_n, double gamma_n,
                             double lambda_n) {
  CavityMoments cav;
  const double denom = 1.0 - sigma2_n * lambda_n;
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    return cav;  // site subtraction would not leave a proper Gaussian
  }
  cav.sigma2 = sigma2_n / denom;
  cav.mu = cav.sigma2 * (mu_n / sigma2_n - gamma_n);
  cav.valid = std::isfinite(cav.mu) && std::isfinite(cav.sigma2);
  return cav;
}

TiltedMoments tilted_moments(double mu_cav, double sigma2_cav,
                             const Constellation& c) {
  const std::size_t m = c.pam_levels.size();
  // log-weights -(u - mu)^2 / (2 s2); subtract the max before
  // exponentiating so at least one weight is exactly 1.
  double max_log = -std::numeric_limits<double>::infinity();
  std::vector<double> logw(m);
  const double inv_2s2 = 1.0 / (2.0 * sigma2_cav);
  for (std::size_t i = 0; i < m; ++i) {
    const double d = c.pam_levels[i] - mu_cav;
    logw[i] = -d * d * inv_2s2;
    max_log = std::max(max_log, logw[i]);
  }
  double z = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double w = std::exp(logw[i] - max_log);
    z += w;
    m1 += w * c.pam_levels[i];
    m2 += w * c.pam_levels[i] * c.pam_levels[i];
  }
  TiltedMoments t;
  t.mu = m1 / z;
  t.sigma2 = m2 / z - t.mu * t.mu;
  return t;
}

void ep_update_sites(EpState& state, const Eigen::VectorXd& tilted_mu,
                     const Eigen::VectorXd& tilted_sigma2,
                     const std::vector<bool>& site_valid, double damping) {
  const int n = static_cast<int>(state.gamma.size());
  const double beta = damping;
  for (int i = 0; i < n; ++i) {
    if (!site_valid[static_cast<std::size_t>(i)]) {
      continue;
    }
    const double s2 = state.sigma2[i];
    const double s2p = std::max(tilted_sigma2[i], kTiltedVarianceFloor);
    const double lambda_new =
        beta * (1.0 / s2p - (1.0 - s2 * state.lambda[i]) / s2) +
        (1.0 - beta) * state.lambda[i];
    if (!(lambda_new > 0.0) || !std::isfinite(lambda_new)) {
      continue;  // keep the previous site; a nonpositive precision would
                 // break positive definiteness downstream
    }
    const double gamma_new =
        beta * (tilted_mu[i] / s2p - state.mu[i] / s2 + state.gamma[i]) +
        (1.0 - beta) * state.gamma[i];
    if (!std::isfinite(gamma_new)) {
      continue;
    }
    state.lambda[i] = lambda_new;
    state.gamma[i] = gamma_new;
  }
  state.iteration += 1;
}

Eigen::VectorXd variance_exact(const Eigen::MatrixXd& a) {
  return invert_spd(a).diagonal();
}

Eigen::VectorXd variance_corrected(const Eigen::MatrixXd& a, int ell,
                                   const CalibrationModel& calib) {
  if (calib.alpha1.size() == 0 || calib.alpha1.size() != calib.alpha2.size()) {
    throw std::invalid_argument("calibration model is empty or inconsistent");
  }
  const Eigen::Index i =
      std::min<Eigen::Index>(ell, calib.alpha1.size() - 1);
  const double a1 = calib.alpha1[i];
  const double a2 = calib.alpha2[i];
  const Eigen::ArrayXd inv_diag = a.diagonal().array().inverse();
  return (a1 * inv_diag + a2).max(inv_diag).matrix();
}

DetectionResult lmmse_detect(const RealLinearSystem& sys,
                             const Constellation& c) {
  auto& counters = ep_invariant_counters();
  counters.detections_started.fetch_add(1, std::memory_order_relaxed);

  const Eigen::Index n = sys.gram.rows();
  Eigen::VectorXd prior_precision =
      Eigen::VectorXd::Constant(n, 1.0 / c.per_dim_variance);
  const SpdSystem s =
      build_system(sys, Eigen::VectorXd::Zero(n), prior_precision);
  check_system_invariants(s, prior_precision);

  DetectionResult result;
  result.mu_final = cholesky_solve(s);
  result.decided = hard_decision(result.mu_final, c);
  counters.decisions_returned.fetch_add(1, std::memory_order_relaxed);
  return result;
}

DetectionResult ep_detect(const RealLinearSystem& sys, const Constellation& c,
                          const EpConfig& config, const EpObserver* observer) {
  if (config.iters < 1) {
    throw std::invalid_argument("EP needs at least one iteration");
  }
  if (!(config.damping > 0.0 && config.damping <= 1.0)) {
    throw std::invalid_argument("damping must lie in (0, 1]");
  }
  auto& counters = ep_invariant_counters();
  counters.detections_started.fetch_add(1, std::memory_order_relaxed);

  const int n = static_cast<int>(sys.gram.rows());
  const int pcg_cap =
      config.max_pcg_steps > 0 ? config.max_pcg_steps : 2 * n;
  std::vector<double> tols = config.tol_schedule;
  if (tols.empty() && config.mean_backend == MeanBackend::kPcg) {
    tols = default_tol_schedule(config.iters);
  }
  const CalibrationModel calib =
      config.calibration.value_or(CalibrationModel::identity(config.iters));

  EpState state;
  state.gamma = Eigen::VectorXd::Zero(n);
  state.lambda = Eigen::VectorXd::Constant(n, 1.0 / c.per_dim_variance);
  state.mu = Eigen::VectorXd::Zero(n);
  state.sigma2 = Eigen::VectorXd::Zero(n);

  Eigen::VectorXd tilted_mu = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd tilted_var =
      Eigen::VectorXd::Constant(n, c.per_dim_variance);
  std::vector<bool> site_valid(static_cast<std::size_t>(n), false);

  DetectionResult result;
  Eigen::MatrixXd sigma_full;  // reused when the exact inverse is formed

  // Invariant part of every right-hand side b = H^T y / sigma^2 + gamma. The
  // site term gamma tracks the growing precisions, so any b-derived stopping
  // scale loosens over the iterations exactly where accuracy still matters;
  // the data term is the one scale shared by the whole solve sequence.
  const double data_norm = std::max(sys.matched_filter.norm() / sys.sigma2,
                                    std::numeric_limits<double>::min());

  const Eigen::VectorXd empty;
  const bool keep_reports =
      config.mean_backend == MeanBackend::kPcg || config.trace_solves;

  for (int ell = 0; ell <= config.iters; ++ell) {
    const bool final_pass = (ell == config.iters);
    const SpdSystem s = build_system(sys, state.gamma, state.lambda);
    check_system_invariants(s, state.lambda);

    // Exact inference either by backend choice or for the variance
    // bootstrap at iteration 0.
    const bool exact_now =
        config.mean_backend == MeanBackend::kExactInverse ||
        (config.sigma0_init && ell == 0) ||
        (config.mean_backend == MeanBackend::kEpaFixedPoint && ell == 0);

    const SolveReport* solve_ptr = nullptr;
    bool have_sigma_full = false;
    if (exact_now) {
      sigma_full = invert_spd(s.a);
      state.mu.noalias() = sigma_full * s.b;
      have_sigma_full = true;
    } else {
      switch (config.mean_backend) {
        case MeanBackend::kCholesky:
          state.mu = cholesky_solve(s);
          break;
        case MeanBackend::kPcg: {
          Eigen::VectorXd x0 = (config.warm_start && ell > 0)
                                   ? state.mu
                                   : Eigen::VectorXd::Zero(n).eval();
          SolveReport rep =
              pcg(s, jacobi_preconditioner(s.a), x0, pcg_cap,
                  tol_for_iteration(tols, ell), config.trace_solves,
                  config.pcg_threshold, data_norm);
          state.mu = rep.x;
          result.total_pcg_steps += rep.steps;
          if (!final_pass) {
            result.ep_loop_pcg_steps += rep.steps;
          }
          if (rep.termination == Termination::kBreakdown) {
            result.solver_breakdown = true;
          }
          if (keep_reports) {
            result.per_iter_reports.push_back(std::move(rep));
            solve_ptr = &result.per_iter_reports.back();
          }
          break;
        }
        case MeanBackend::kEpaFixedPoint:
          state.mu = tilted_mu;  // previous iteration's tilted means
          break;
        case MeanBackend::kExactInverse:
          break;  // unreachable; handled above
      }
    }

    if (final_pass) {
      if (observer != nullptr) {
        EpIteration snap{ell,   true,  s,     state.lambda,
                         state.mu, empty, empty, solve_ptr};
        (*observer)(snap);
      }
      break;
    }

    if (have_sigma_full) {
      state.sigma2 = sigma_full.diagonal();
    } else if (config.variance_backend == VarianceBackend::kExactDiag) {
      state.sigma2 = variance_exact(s.a);
    } else {
      state.sigma2 = variance_corrected(s.a, ell, calib);
    }

    for (int i = 0; i < n; ++i) {
      const CavityMoments cav = cavity_moments(state.mu[i], state.sigma2[i],
                                               state.gamma[i], state.lambda[i]);
      site_valid[static_cast<std::size_t>(i)] = cav.valid;
      if (!cav.valid) {
        continue;  // tilted moments carry over from the last valid pass
      }
      const TiltedMoments t = tilted_moments(cav.mu, cav.sigma2, c);
      tilted_mu[i] = t.mu;
      tilted_var[i] = t.sigma2;
    }

    if (observer != nullptr) {
      EpIteration snap{ell,      false,        s,         state.lambda,
                       state.mu, state.sigma2, tilted_mu, solve_ptr};
      (*observer)(snap);
    }

    ep_update_sites(state, tilted_mu, tilted_var, site_valid, config.damping);
  }

  result.mu_final = state.mu;
  result.decided = hard_decision(result.mu_final, c);
  counters.decisions_returned.fetch_add(1, std::memory_order_relaxed);
  return result;
}

DetectorSetup make_detector(const std::string& name,
                            const DetectorOptions& opts) {
  DetectorSetup det;
  det.name = name;
  EpConfig& cfg = det.config;
  cfg.iters = opts.iters;
  cfg.damping = opts.beta;
  cfg.warm_start = opts.warm_start;
  cfg.trace_solves = opts.trace_solves;
  cfg.tol_schedule = opts.tol_schedule;
  cfg.pcg_threshold = opts.pcg_threshold;

  if (name == "lmmse") {
    det.is_lmmse = true;
  } else if (name == "ep") {
    cfg.mean_backend = MeanBackend::kExactInverse;
    cfg.variance_backend = VarianceBackend::kExactDiag;
  } else if (name == "ep-pcg") {
    cfg.mean_backend = MeanBackend::kPcg;
    cfg.variance_backend = VarianceBackend::kExactDiag;
    if (cfg.tol_schedule.empty()) {
      cfg.tol_schedule.assign(static_cast<std::size_t>(opts.iters) + 1, 1e-5);
    }
  } else if (name == "epicg" || name == "epicg-sigma0") {
    cfg.mean_backend = MeanBackend::kPcg;
    cfg.variance_backend = VarianceBackend::kCorrectedNeumann;
    cfg.sigma0_init = (name == "epicg-sigma0");
    cfg.calibration = opts.calibration;
  } else if (name == "epa") {
    cfg.mean_backend = MeanBackend::kEpaFixedPoint;
    cfg.variance_backend = VarianceBackend::kCorrectedNeumann;
    cfg.sigma0_init = true;
    cfg.calibration.reset();  // plain first-term Neumann variances
  } else {
    throw std::invalid_argument("unknown detector: " + name);
  }
  return det;
}

DetectionResult run_detector(const DetectorSetup& det,
                             const RealLinearSystem& sys,
                             const Constellation& c,
                             const EpObserver* observer) {
  if (det.is_lmmse) {
    return lmmse_detect(sys, c);
  }
  return ep_detect(sys, c, det.config, observer);
}

EpInvariantCounters& ep_invariant_counters() {
  static EpInvariantCounters counters;
  return counters;
}

}  // namespace mimoep
