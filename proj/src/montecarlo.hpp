// SPDX-License-Identifier: Apache-2.0
#ifndef MIMOEP_MONTECARLO_HPP
#define MIMOEP_MONTECARLO_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "channel.hpp"
#include "detectors.hpp"
#include "modem.hpp"

namespace mimoep {

// Purpose tags keep the channel, symbol, and noise streams of one trial
// independent of each other and of scheduling, so two detectors evaluated
// at the same (seed, key) see bit-identical draws (common random numbers).
namespace stream_tag {
inline constexpr std::uint64_t kChannel = 0x636e6c;
inline constexpr std::uint64_t kSymbols = 0x73796d;
inline constexpr std::uint64_t kNoise = 0x6e7365;
inline constexpr std::uint64_t kCalibSnr = 0x736e72;
}  // namespace stream_tag

// Packs (batch, trial) into one substream key; the batch distinguishes SNR
// grid points, bisection probes, and similar outer loops.
std::uint64_t trial_key(std::uint32_t batch, std::uint32_t trial);

struct TrialDraw {
  Eigen::VectorXd x_truth;  // stacked real transmit vector, length 2 nt
  RealLinearSystem sys;
};

// One transmission: channel draw, uniform symbols, circular Gaussian noise
// at the scenario's SNR. The noise stream is independent of snr_db, so
// re-drawing the same key at a different SNR rescales the same noise
// realization (smooth SER-vs-SNR probes for bisection).
TrialDraw draw_trial(const ScenarioConfig& scenario, const Constellation& c,
                     std::uint64_t key);

// Runs fn(0), ..., fn(n-1) on up to `jobs` threads, claiming indices from a
// shared counter. Callers keep determinism by writing only to slot t.
void parallel_for(long n, int jobs, const std::function<void(long)>& fn);

struct SerEstimate {
  long errors = 0;
  long total = 0;
  double ser = 0.0;
  double std_error = 0.0;  // binomial sqrt(p(1-p)/total)
};

SerEstimate reduce_errors(const std::vector<ErrorCount>& counts);

// SER and mean pCG step counts of several detectors over n_channels trials
// drawn with keys (batch, 0..n-1); every detector sees the same trials.
// Two step quantities are kept: the EP-loop count (comparable across
// detectors sharing L regardless of the extra decision-rule inference pass)
// and the total across every solve in the detection.
struct PointResult {
  std::vector<SerEstimate> ser;          // one per detector
  std::vector<double> mean_steps;        // mean pCG steps across the EP loop
  std::vector<double> steps_std_error;   // standard error of that mean
  std::vector<double> mean_steps_total;  // mean over all solves (incl. final)
  std::vector<double> steps_total_std_error;
};
PointResult run_point(const ScenarioConfig& scenario, const Constellation& c,
                      const std::vector<DetectorSetup>& detectors,
                      long n_channels, std::uint32_t batch, int jobs);

// Single-detector convenience wrapper.
SerEstimate estimate_ser(const ScenarioConfig& scenario,
                         const Constellation& c, const DetectorSetup& det,
                         long n_channels, std::uint32_t batch, int jobs);

}  // namespace mimoep

#endif
