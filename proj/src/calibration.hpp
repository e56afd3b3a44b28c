// SPDX-License-Identifier: Apache-2.0
#ifndef MIMOEP_CALIBRATION_HPP
#define MIMOEP_CALIBRATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "detectors.hpp"
#include "montecarlo.hpp"

namespace mimoep {

// SNR interval [lo_db, hi_db] for uniform sampling of training scenarios.
struct SnrBounds {
  double lo_db = 0.0;
  double hi_db = 0.0;
};

// One harvested sample: per-site regressors 1/A_nn and targets (A^-1)_nn of
// a single EP iteration.
struct CalibrationSamplePair {
  Eigen::VectorXd regressor;
  Eigen::VectorXd target;
};

struct CalibrationDataset {
  // per_iteration[l] holds one pair per surviving trajectory.
  std::vector<std::vector<CalibrationSamplePair>> per_iteration;
  int nt = 0;
  int nr = 0;
  ChannelKind channel_kind = ChannelKind::kRayleigh;
  SnrBounds bounds;
  std::uint64_t seed = 0;
  long dropped_samples = 0;  // trajectories lost to solver failures
};

// Detector and batch settings shared by the bisection and the harvest.
struct CalibrationSettings {
  int iters = 10;
  double beta = 0.1;
  std::vector<double> tol_schedule;  // empty: detector default
  bool warm_start = true;
  long pilot_channels = 200;  // per bisection probe
  // Detector whose trajectories supply the training pairs. The default is
  // the identity-calibrated bootstrap; "ep" harvests from the exact detector
  // instead (harvest_calibration is then ignored, exact variances need none).
  std::string harvest_detector = "epicg";
  // Optional model installed into the harvesting detector so a previous fit
  // can generate the trajectories for the next one (self-consistent
  // refinement).
  std::optional<CalibrationModel> harvest_calibration;
  int jobs = 1;
};

// Bisects snr_db so the identity-calibrated EPiCG detector hits the target
// SER within a factor of 2: target_lo_ser (larger) gives lo_db, target_hi_ser
// gives hi_db. Non-monotone pilot estimates widen the pilot batch by 4x once
// before the search fails. Throws std::invalid_argument for a degenerate
// target interval and std::runtime_error when the search fails.
SnrBounds find_snr_bounds(const ScenarioConfig& scenario,
                          const Constellation& c, double target_lo_ser,
                          double target_hi_ser,
                          const CalibrationSettings& settings);

// Generic single-target version used by the bounds search and by tests that
// need an operating point for other detectors.
double find_snr_for_ser(const ScenarioConfig& scenario, const Constellation& c,
                        const DetectorSetup& det, double target_ser,
                        long pilot_channels, int jobs);

// Runs d identity-calibrated EPiCG detections at SNRs drawn uniformly from
// the bounds and records, at every EP iteration, the inverse system diagonal
// 1/A_nn next to the exact inverse diagonal (A^-1)_nn. Trajectories whose
// solves fail are dropped and counted.
CalibrationDataset harvest_dataset(const ScenarioConfig& scenario,
                                   const Constellation& c,
                                   const SnrBounds& bounds, int d,
                                   const CalibrationSettings& settings);

struct FitResult {
  CalibrationModel model;
  Eigen::VectorXd residual;           // fitted sum of squares per iteration
  Eigen::VectorXd identity_residual;  // same for alpha1 = 1, alpha2 = 0
  std::vector<bool> degenerate;       // zero regressor variance fallback
};

// Per-iteration two-parameter least squares (alpha1 x + alpha2 ~ target) in
// the centered closed form. Zero regressor variance degrades to the mean
// target with a flag instead of failing.
FitResult fit_least_squares(const CalibrationDataset& dataset);

// Self-consistent refinement: harvest, fit, install the fit into the
// harvesting detector, repeat. The iteration-l fit depends only on fits for
// iterations below l, so rounds >= settings.iters reaches the exact fixed
// point where the training trajectories come from the very model being
// fitted. Starts from settings.harvest_calibration (identity when unset).
FitResult refine_calibration(const ScenarioConfig& scenario,
                             const Constellation& c, const SnrBounds& bounds,
                             int d, CalibrationSettings settings, int rounds);

// Text form: one line `iter=<l> alpha1=<v> alpha2=<v>` per iteration, 15
// significant digits.
std::string calibration_to_text(const CalibrationModel& model);
CalibrationModel calibration_from_text(const std::string& text);
void save_calibration(const CalibrationModel& model, const std::string& path);
CalibrationModel load_calibration(const std::string& path);

}  // namespace mimoep

#endif
