// SPDX-License-Identifier: Apache-2.0
#include "montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <complex>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace mimoep {

std::uint64_t trial_key(std::uint32_t batch, std::uint32_t trial) {
  return (static_cast<std::uint64_t>(batch) << 32) |
         static_cast<std::uint64_t>(trial);
}

TrialDraw draw_trial(const ScenarioConfig& scenario, const Constellation& c,
                     std::uint64_t key) {
  Rng channel_rng(scenario.seed, stream_tag::kChannel, key);
  const ComplexChannel ch =
      scenario.channel_kind == ChannelKind::kRayleigh
          ? sample_rayleigh(scenario.nt, scenario.nr, channel_rng)
          : sample_kronecker(scenario.nt, scenario.nr, scenario.rho,
                             channel_rng);

  Rng symbol_rng(scenario.seed, stream_tag::kSymbols, key);
  TrialDraw trial;
  trial.x_truth = sample_symbols(c, 2 * scenario.nt, symbol_rng);
  Eigen::VectorXcd x(scenario.nt);
  for (int i = 0; i < scenario.nt; ++i) {
    x[i] = std::complex<double>(trial.x_truth[i],
                                trial.x_truth[i + scenario.nt]);
  }

  const double sigma2 = snr_to_sigma2(scenario.snr_db, scenario.nt, c.es);
  const double sd = std::sqrt(sigma2);
  Rng noise_rng(scenario.seed, stream_tag::kNoise, key);
  Eigen::VectorXcd y = ch.entries * x;
  for (int i = 0; i < scenario.nr; ++i) {
    y[i] += std::complex<double>(sd * noise_rng.next_gaussian(),
                                 sd * noise_rng.next_gaussian());
  }
  trial.sys = to_real_system(ch, y, sigma2);
  return trial;
}

void parallel_for(long n, int jobs, const std::function<void(long)>& fn) {
  if (n <= 0) {
    return;
  }
  const int workers = static_cast<int>(
      std::min<long>(n, std::max(1, jobs)));
  if (workers == 1) {
    for (long t = 0; t < n; ++t) {
      fn(t);
    }
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const long t = next.fetch_add(1, std::memory_order_relaxed);
      if (t >= n) {
        return;
      }
      try {
        fn(t);
      } catch (...) {
        {
          const std::lock_guard<std::mutex> guard(error_mutex);
          if (!first_error) {
            first_error = std::current_exception();
          }
        }
        next.store(n, std::memory_order_relaxed);  // drain remaining work
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back(work);
  }
  for (auto& th : pool) {
    th.join();
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
}

SerEstimate reduce_errors(const std::vector<ErrorCount>& counts) {
  SerEstimate est;
  for (const ErrorCount& c : counts) {
    est.errors += c.errors;
    est.total += c.total;
  }
  if (est.total > 0) {
    est.ser = static_cast<double>(est.errors) / static_cast<double>(est.total);
    est.std_error =
        std::sqrt(est.ser * (1.0 - est.ser) / static_cast<double>(est.total));
  }
  return est;
}

PointResult run_point(const ScenarioConfig& scenario, const Constellation& c,
                      const std::vector<DetectorSetup>& detectors,
                      long n_channels, std::uint32_t batch, int jobs) {
  if (n_channels < 1) {
    throw std::invalid_argument("n_channels must be at least 1");
  }
  const std::size_t n_det = detectors.size();
  std::vector<std::vector<ErrorCount>> counts(
      n_det, std::vector<ErrorCount>(static_cast<std::size_t>(n_channels)));
  std::vector<std::vector<long>> steps(
      n_det, std::vector<long>(static_cast<std::size_t>(n_channels), 0));
  std::vector<std::vector<long>> steps_total(
      n_det, std::vector<long>(static_cast<std::size_t>(n_channels), 0));

  parallel_for(n_channels, jobs, [&](long t) {
    const TrialDraw trial =
        draw_trial(scenario, c, trial_key(batch, static_cast<std::uint32_t>(t)));
    for (std::size_t d = 0; d < n_det; ++d) {
      const DetectionResult res = run_detector(detectors[d], trial.sys, c);
      counts[d][static_cast<std::size_t>(t)] =
          count_symbol_errors(res.decided, trial.x_truth);
      steps[d][static_cast<std::size_t>(t)] = res.ep_loop_pcg_steps;
      steps_total[d][static_cast<std::size_t>(t)] = res.total_pcg_steps;
    }
  });

  const auto mean_and_se = [n_channels](const std::vector<long>& xs) {
    double sum = 0.0;
    for (long s : xs) {
      sum += static_cast<double>(s);
    }
    const double mean = sum / static_cast<double>(n_channels);
    double ss = 0.0;
    for (long s : xs) {
      const double dev = static_cast<double>(s) - mean;
      ss += dev * dev;
    }
    const double se =
        n_channels > 1 ? std::sqrt(ss / static_cast<double>(n_channels - 1) /
                                   static_cast<double>(n_channels))
                       : 0.0;
    return std::pair<double, double>{mean, se};
  };

  PointResult point;
  point.ser.reserve(n_det);
  point.mean_steps.reserve(n_det);
  point.steps_std_error.reserve(n_det);
  point.mean_steps_total.reserve(n_det);
  point.steps_total_std_error.reserve(n_det);
  for (std::size_t d = 0; d < n_det; ++d) {
    point.ser.push_back(reduce_errors(counts[d]));
    const auto [mean, se] = mean_and_se(steps[d]);
    point.mean_steps.push_back(mean);
    point.steps_std_error.push_back(se);
    const auto [mean_t, se_t] = mean_and_se(steps_total[d]);
    point.mean_steps_total.push_back(mean_t);
    point.steps_total_std_error.push_back(se_t);
  }
  return point;
}

SerEstimate estimate_ser(const ScenarioConfig& scenario,
                         const Constellation& c, const DetectorSetup& det,
                         long n_channels, std::uint32_t batch, int jobs) {
  return run_point(scenario, c, {det}, n_channels, batch, jobs).ser[0];
}

}  // namespace mimoep
