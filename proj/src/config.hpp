// SPDX-License-Identifier: Apache-2.0
#ifndef MIMOEP_CONFIG_HPP
#define MIMOEP_CONFIG_HPP

#include <string>
#include <vector>

#include "channel.hpp"

namespace mimoep {

enum class ExperimentKind { kRreTrace, kSerSweep, kStepCount, kCalibrate };

const char* experiment_kind_name(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

// Full description of one experiment run; built from defaults, an optional
// key-value config file, and explicit key/value assignments (in that order,
// later sources override earlier ones).
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kSerSweep;
  ScenarioConfig scenario;
  std::vector<std::string> detectors;
  std::vector<double> snr_grid;
  long n_channels = 5000;
  int jobs = 1;
  int iters = 10;
  double beta = 0.1;
  std::vector<double> tol_schedule;  // empty: detector defaults
  bool warm_start = true;
  std::string calib_path;  // calibration model installed into epicg variants
  std::string out_path;
};

// Defaults appropriate for each experiment kind (detector set, SNR grid,
// sample count).
ExperimentSpec make_default_spec(ExperimentKind kind);

// Applies one `key=value` assignment. Keys mirror the CLI flags: kind, nt,
// nr, mod, channel, rho, snr, detectors, channels, seed, beta, iters,
// tol-schedule, calib, warm-start, out, jobs. Throws std::invalid_argument
// on unknown keys or unparseable values.
void apply_key(ExperimentSpec& spec, const std::string& key,
               const std::string& value);

// Reads `key=value` lines ('#' comments and blank lines ignored) and applies
// them in order. Throws std::runtime_error when the file cannot be read.
void load_config_file(ExperimentSpec& spec, const std::string& path);

// Enforces the cross-field invariants (positive dimensions, strictly
// increasing SNR grid, detector lists valid for the kind, ...). Throws
// std::invalid_argument with a one-line diagnostic.
void validate_spec(const ExperimentSpec& spec);

// "lo:step:hi" inclusive grid, a comma list, or a single value.
std::vector<double> parse_snr_grid(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);
std::vector<std::string> split_list(const std::string& text);

}  // namespace mimoep

#endif
