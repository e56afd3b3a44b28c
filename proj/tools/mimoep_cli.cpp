// SPDX-License-Identifier: Apache-2.0
//
// Experiment front-end: subcommands configure one experiment through the
// shared-library C interface and run it. All option values pass through as
// strings; parsing and validation live behind the library boundary.

#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "mimoep/mimoep.h"

namespace {

struct SubcommandState {
  std::string kind;
  std::string config_path;
  // (key, value) per option the user actually set, in declaration order.
  std::vector<std::pair<std::string, std::shared_ptr<std::string>>> options;
};

void add_common_options(CLI::App* cmd, SubcommandState& state) {
  cmd->add_option("--config", state.config_path,
                  "key=value config file applied before the flags");
  const auto opt = [&](const std::string& flag, const std::string& help) {
    auto value = std::make_shared<std::string>();
    state.options.emplace_back(flag.substr(2), value);
    return cmd->add_option(flag, *value, help);
  };
  opt("--nt", "transmit users");
  opt("--nr", "receive antennas");
  opt("--mod", "QAM order (4, 16, 64, ...)");
  opt("--channel", "channel model: rayleigh|kronecker");
  opt("--rho", "Kronecker correlation coefficient in [0,1)");
  opt("--snr", "SNR grid: lo:step:hi, comma list, or single value (dB)");
  opt("--detectors", "comma list of detectors / solvers");
  opt("--channels", "Monte-Carlo channel count (trajectories for calibrate)");
  opt("--seed", "root seed (u64)");
  opt("--beta", "damping factor in (0,1]");
  opt("--iters", "EP iteration count");
  opt("--tol-schedule", "comma list of per-iteration CG tolerances");
  opt("--calib", "calibration file installed into epicg detectors");
  opt("--warm-start", "start CG from the previous mean: on|off");
  opt("--out", "output file path");
  opt("--jobs", "worker thread count");
}

int run_subcommand(const CLI::App* cmd, const SubcommandState& state) {
  std::unique_ptr<mimoep_experiment, void (*)(mimoep_experiment*)> exp(
      mimoep_experiment_create(state.kind.c_str()),
      &mimoep_experiment_destroy);
  if (!exp) {
    std::fprintf(stderr, "error: cannot create experiment '%s'\n",
                 state.kind.c_str());
    return 1;
  }
  if (!state.config_path.empty()) {
    const mimoep_status s =
        mimoep_experiment_load_file(exp.get(), state.config_path.c_str());
    if (s != MIMOEP_OK) {
      std::fprintf(stderr, "error: %s: %s\n", mimoep_status_string(s),
                   mimoep_experiment_last_error(exp.get()));
      return 1;
    }
  }
  for (const auto& [key, value] : state.options) {
    if (cmd->count("--" + key) == 0) {
      continue;  // not set on the command line; config/defaults apply
    }
    const mimoep_status s =
        mimoep_experiment_set(exp.get(), key.c_str(), value->c_str());
    if (s != MIMOEP_OK) {
      std::fprintf(stderr, "error: %s: %s\n", mimoep_status_string(s),
                   mimoep_experiment_last_error(exp.get()));
      return 1;
    }
  }
  const mimoep_status s = mimoep_experiment_run(exp.get());
  if (s != MIMOEP_OK) {
    std::fprintf(stderr, "error: %s: %s\n", mimoep_status_string(s),
                 mimoep_experiment_last_error(exp.get()));
    return 1;
  }
  std::printf("%s\n", mimoep_experiment_summary(exp.get()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MIMO detection benchmark harness (version " +
               std::string(mimoep_version()) + ")"};
  app.require_subcommand(1);

  struct Entry {
    const char* name;
    const char* help;
  };
  const Entry entries[] = {
      {"ser-sweep", "symbol-error-rate over an SNR grid, CSV output"},
      {"rre-trace", "median solver convergence on frozen EP systems"},
      {"step-count", "mean total CG steps at the SER 1e-2 operating point"},
      {"calibrate", "fit variance-correction coefficients to a file"},
  };
  std::vector<std::unique_ptr<SubcommandState>> states;
  for (const Entry& entry : entries) {
    CLI::App* cmd = app.add_subcommand(entry.name, entry.help);
    auto state = std::make_unique<SubcommandState>();
    state->kind = entry.name;
    add_common_options(cmd, *state);
    SubcommandState* raw = state.get();
    cmd->callback([cmd, raw] {
      const int rc = run_subcommand(cmd, *raw);
      if (rc != 0) {
        throw CLI::RuntimeError(rc);
      }
    });
    states.push_back(std::move(state));
  }

  CLI11_PARSE(app, argc, argv);
  return 0;
}
