// SPDX-License-Identifier: Apache-2.0
#include "calibration.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace mimoep {
namespace {

constexpr std::uint32_t kPilotBatch = 0;
constexpr std::uint32_t kHarvestBatch = 1;

DetectorSetup harvest_detector(const CalibrationSettings& settings) {
  DetectorOptions opts;
  opts.iters = settings.iters;
  opts.beta = settings.beta;
  opts.tol_schedule = settings.tol_schedule;
  opts.warm_start = settings.warm_start;
  opts.calibration = settings.harvest_calibration;
  return make_detector(settings.harvest_detector, opts);
}

double probe_ser(const ScenarioConfig& scenario, const Constellation& c,
                 const DetectorSetup& det, double snr_db, long pilots,
                 int jobs, std::map<double, double>& memo) {
  const auto it = memo.find(snr_db);
  if (it != memo.end()) {
    return it->second;
  }
  ScenarioConfig probe = scenario;
  probe.snr_db = snr_db;
  const double ser = estimate_ser(probe, c, det, pilots, kPilotBatch, jobs).ser;
  memo.emplace(snr_db, ser);
  return ser;
}

}  // namespace

double find_snr_for_ser(const ScenarioConfig& scenario, const Constellation& c,
                        const DetectorSetup& det, double target_ser,
                        long pilot_channels, int jobs) {
  if (!(target_ser > 0.0 && target_ser < 0.5)) {
    throw std::invalid_argument("target SER must lie in (0, 0.5)");
  }
  constexpr double kMinSnr = -10.0;
  constexpr double kMaxSnr = 45.0;
  std::map<double, double> memo;
  const auto ser_at = [&](double snr) {
    return probe_ser(scenario, c, det, snr, pilot_channels, jobs, memo);
  };

  double lo = 0.0;
  double hi = 25.0;
  while (ser_at(lo) < target_ser && lo > kMinSnr) {
    lo -= 5.0;
  }
  while (ser_at(hi) > target_ser && hi < kMaxSnr) {
    hi += 5.0;
  }
  if (ser_at(lo) < target_ser || ser_at(hi) > target_ser) {
    throw std::runtime_error("SER target not bracketed in the SNR range");
  }

  for (int step = 0; step < 50; ++step) {
    const double mid = 0.5 * (lo + hi);
    const double ser = ser_at(mid);
    if (ser >= 0.5 * target_ser && ser <= 2.0 * target_ser) {
      return mid;
    }
    if (ser > target_ser) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-3) {
      break;  // interval collapsed without entering the acceptance window:
              // the pilot estimate was non-monotone at this batch size
    }
  }
  throw std::runtime_error("SNR bisection did not reach the target SER");
}

SnrBounds find_snr_bounds(const ScenarioConfig& scenario,
                          const Constellation& c, double target_lo_ser,
                          double target_hi_ser,
                          const CalibrationSettings& settings) {
  if (!(target_hi_ser > 0.0) || !(target_lo_ser < 0.5) ||
      !(target_hi_ser < target_lo_ser) ||
      target_lo_ser < 2.0 * target_hi_ser) {
    throw std::invalid_argument("degenerate target SER interval");
  }
  const DetectorSetup det = harvest_detector(settings);
  long pilots = std::max<long>(settings.pilot_channels, 200);
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      SnrBounds bounds;
      bounds.lo_db =
          find_snr_for_ser(scenario, c, det, target_lo_ser, pilots, settings.jobs);
      bounds.hi_db =
          find_snr_for_ser(scenario, c, det, target_hi_ser, pilots, settings.jobs);
      if (bounds.lo_db < bounds.hi_db) {
        return bounds;
      }
    } catch (const std::runtime_error&) {
      // fall through to the widened retry
    }
    pilots *= 4;
  }
  throw std::runtime_error("SNR bound search failed after widening the pilot batch");
}

CalibrationDataset harvest_dataset(const ScenarioConfig& scenario,
                                   const Constellation& c,
                                   const SnrBounds& bounds, int d,
                                   const CalibrationSettings& settings) {
  if (d < 2) {
    throw std::invalid_argument("harvest needs at least 2 trajectories");
  }
  if (!(bounds.lo_db < bounds.hi_db)) {
    throw std::invalid_argument("SNR bounds must satisfy lo < hi");
  }
  const DetectorSetup det = harvest_detector(settings);
  const int iters = settings.iters;

  // One trajectory per slot; empty marks a dropped sample.
  std::vector<std::vector<CalibrationSamplePair>> trajectories(
      static_cast<std::size_t>(d));
  parallel_for(d, settings.jobs, [&](long j) {
    Rng snr_rng(scenario.seed, stream_tag::kCalibSnr,
                static_cast<std::uint64_t>(j));
    ScenarioConfig sample = scenario;
    sample.snr_db =
        bounds.lo_db + (bounds.hi_db - bounds.lo_db) * snr_rng.next_double();
    const TrialDraw trial = draw_trial(
        sample, c, trial_key(kHarvestBatch, static_cast<std::uint32_t>(j)));

    std::vector<CalibrationSamplePair> traj;
    traj.reserve(static_cast<std::size_t>(iters));
    const EpObserver observer = [&](const EpIteration& snap) {
      if (snap.final_pass) {
        return;
      }
      CalibrationSamplePair pair;
      pair.regressor = snap.system.a.diagonal().cwiseInverse();
      pair.target = variance_exact(snap.system.a);
      traj.push_back(std::move(pair));
    };
    try {
      run_detector(det, trial.sys, c, &observer);
      trajectories[static_cast<std::size_t>(j)] = std::move(traj);
    } catch (const std::runtime_error&) {
      // solver failure: drop this trajectory, keep the slot empty
    }
  });

  CalibrationDataset dataset;
  dataset.per_iteration.resize(static_cast<std::size_t>(iters));
  dataset.nt = scenario.nt;
  dataset.nr = scenario.nr;
  dataset.channel_kind = scenario.channel_kind;
  dataset.bounds = bounds;
  dataset.seed = scenario.seed;
  for (const auto& traj : trajectories) {
    if (traj.size() != static_cast<std::size_t>(iters)) {
      dataset.dropped_samples += 1;
      continue;
    }
    for (int ell = 0; ell < iters; ++ell) {
      dataset.per_iteration[static_cast<std::size_t>(ell)].push_back(
          traj[static_cast<std::size_t>(ell)]);
    }
  }
  return dataset;
}

FitResult fit_least_squares(const CalibrationDataset& dataset) {
  const std::size_t iters = dataset.per_iteration.size();
  FitResult fit;
  fit.model.alpha1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(iters));
  fit.model.alpha2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(iters));
  fit.residual = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(iters));
  fit.identity_residual =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(iters));
  fit.degenerate.assign(iters, false);

  for (std::size_t ell = 0; ell < iters; ++ell) {
    const auto& bucket = dataset.per_iteration[ell];
    if (bucket.size() < 2) {
      throw std::invalid_argument(
          "least-squares fit needs at least 2 samples per iteration");
    }
    long n = 0;
    double sum_x = 0.0;
    double sum_t = 0.0;
    for (const auto& pair : bucket) {
      sum_x += pair.regressor.sum();
      sum_t += pair.target.sum();
      n += pair.regressor.size();
    }
    const double mean_x = sum_x / static_cast<double>(n);
    const double mean_t = sum_t / static_cast<double>(n);
    double sxx = 0.0;
    double sxt = 0.0;
    for (const auto& pair : bucket) {
      const Eigen::ArrayXd dx = pair.regressor.array() - mean_x;
      const Eigen::ArrayXd dt = pair.target.array() - mean_t;
      sxx += (dx * dx).sum();
      sxt += (dx * dt).sum();
    }

    double a1;
    double a2;
    if (sxx > 0.0) {
      a1 = sxt / sxx;
      a2 = mean_t - a1 * mean_x;
    } else {
      a1 = 0.0;
      a2 = mean_t;
      fit.degenerate[ell] = true;
    }
    const Eigen::Index i = static_cast<Eigen::Index>(ell);
    fit.model.alpha1[i] = a1;
    fit.model.alpha2[i] = a2;
    for (const auto& pair : bucket) {
      fit.residual[i] +=
          (a1 * pair.regressor.array() + a2 - pair.target.array())
              .square()
              .sum();
      fit.identity_residual[i] +=
          (pair.regressor.array() - pair.target.array()).square().sum();
    }
  }
  return fit;
}

FitResult refine_calibration(const ScenarioConfig& scenario,
                             const Constellation& c, const SnrBounds& bounds,
                             int d, CalibrationSettings settings, int rounds) {
  if (rounds < 1) {
    throw std::invalid_argument("refinement needs at least 1 round");
  }
  FitResult fit;
  for (int r = 0; r < rounds; ++r) {
    fit = fit_least_squares(harvest_dataset(scenario, c, bounds, d, settings));
    settings.harvest_calibration = fit.model;
  }
  return fit;
}

std::string calibration_to_text(const CalibrationModel& model) {
  std::string text;
  char line[128];
  for (Eigen::Index ell = 0; ell < model.alpha1.size(); ++ell) {
    std::snprintf(line, sizeof line, "iter=%ld alpha1=%.15g alpha2=%.15g\n",
                  static_cast<long>(ell), model.alpha1[ell], model.alpha2[ell]);
    text += line;
  }
  return text;
}

CalibrationModel calibration_from_text(const std::string& text) {
  std::map<long, std::pair<double, double>> rows;
  std::istringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) {
    if (line.empty() || line[0] == '#') {
      continue;
    }
    long ell = 0;
    double a1 = 0.0;
    double a2 = 0.0;
    if (std::sscanf(line.c_str(), "iter=%ld alpha1=%lf alpha2=%lf", &ell, &a1,
                    &a2) != 3 ||
        ell < 0) {
      throw std::runtime_error("bad calibration line: " + line);
    }
    if (!rows.emplace(ell, std::make_pair(a1, a2)).second) {
      throw std::runtime_error("duplicate calibration iteration " +
                               std::to_string(ell));
    }
  }
  if (rows.empty()) {
    throw std::runtime_error("calibration text holds no iterations");
  }
  const long iters = rows.rbegin()->first + 1;
  if (static_cast<long>(rows.size()) != iters) {
    throw std::runtime_error("calibration iterations are not contiguous");
  }
  CalibrationModel model;
  model.alpha1 = Eigen::VectorXd::Zero(iters);
  model.alpha2 = Eigen::VectorXd::Zero(iters);
  for (const auto& [ell, ab] : rows) {
    model.alpha1[ell] = ab.first;
    model.alpha2[ell] = ab.second;
  }
  return model;
}

void save_calibration(const CalibrationModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open calibration file for writing: " +
                             path);
  }
  out << calibration_to_text(model);
  if (!out.flush()) {
    throw std::runtime_error("failed writing calibration file: " + path);
  }
}

CalibrationModel load_calibration(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open calibration file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return calibration_from_text(buffer.str());
}

}  // namespace mimoep
