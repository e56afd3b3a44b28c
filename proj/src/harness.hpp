// SPDX-License-Identifier: Apache-2.0
#ifndef MIMOEP_HARNESS_HPP
#define MIMOEP_HARNESS_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "calibration.hpp"
#include "config.hpp"
#include "detectors.hpp"
#include "montecarlo.hpp"

namespace mimoep {

// Output-file failures, distinguished from configuration errors so callers
// can map them to a separate status code.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text_file(const std::string& path, const std::string& text);

// ---- SER sweep (waterfall curves) ----
struct SerRow {
  std::string detector;
  double snr_db = 0.0;
  SerEstimate est;
};
struct SweepResult {
  std::vector<SerRow> rows;  // ordered by (snr index, detector as listed)
};
SweepResult run_ser_sweep(const ExperimentSpec& spec);

// SNR where a detector's waterfall crosses target_ser, read by log-linear
// interpolation between the adjacent grid points. Throws when the curve
// never crosses the target.
double interpolate_snr_at_ser(const SweepResult& sweep,
                              const std::string& detector, double target_ser);

// ---- solver-convergence traces ----
struct TraceRow {
  std::string solver;
  int ell = 0;
  int k = 0;
  double median_rre = 0.0;
};
struct StepsToTolRow {
  std::string solver;
  int ell = 0;
  double median_steps = 0.0;  // censored at k_max + 1 when never reached
};
struct TraceResult {
  std::vector<TraceRow> rows;
  std::vector<StepsToTolRow> steps_to_tol;  // threshold RRE 1e-4
  int k_max = 0;
};
TraceResult run_rre_trace(const ExperimentSpec& spec);

// ---- total pCG step counts at the operating point ----
// mean_steps counts every solve in the detection (the reported contract
// quantity); mean_loop_steps drops the final decision-rule inference pass so
// the number compares against step budgets quoted for L-iteration loops.
struct StepCountRow {
  std::string detector;
  double mean_steps = 0.0;
  double std_error = 0.0;
  long rounded = 0;
  double mean_loop_steps = 0.0;
  double loop_std_error = 0.0;
  long loop_rounded = 0;
};
struct StepCountResult {
  double snr_db = 0.0;  // grid point operating nearest SER 1e-2
  std::vector<StepCountRow> rows;
};
StepCountResult run_step_count(const ExperimentSpec& spec);

// ---- calibration pipeline ----
struct CalibrateResult {
  SnrBounds bounds;
  FitResult fit;
  long dropped_samples = 0;
};
CalibrateResult run_calibrate(const ExperimentSpec& spec);

// CSV serialization. Columns are fixed:
//   experiment,detector,nt,nr,channel,snr_db,ell,k,value,stderr,seed
// with unused columns left empty and floats printed to 9 significant digits.
std::string csv_header();
std::string sweep_csv(const ExperimentSpec& spec, const SweepResult& result);
std::string trace_csv(const ExperimentSpec& spec, const TraceResult& result);
std::string step_count_csv(const ExperimentSpec& spec,
                           const StepCountResult& result);

// Builds detector setups from the spec (iters, beta, tol schedule, warm
// start, calibration file when given).
std::vector<DetectorSetup> spec_detectors(const ExperimentSpec& spec);

// Validates, dispatches on spec.kind, writes spec.out_path (CSV for the
// experiment kinds, calibration text for calibrate), and returns a one-line
// human-readable summary.
std::string run_experiment_to_file(const ExperimentSpec& spec);

}  // namespace mimoep

#endif
