// SPDX-License-Identifier: Apache-2.0
#include "mimoep/mimoep.h"

#include <complex>
#include <exception>
#include <string>

#include "calibration.hpp"
#include "config.hpp"
#include "detectors.hpp"
#include "harness.hpp"

using namespace mimoep;

namespace {

constexpr const char* kVersion = "0.1.0";

mimoep_status classify(const std::exception_ptr& eptr, std::string& message) {
  try {
    std::rethrow_exception(eptr);
  } catch (const IoError& e) {
    message = e.what();
    return MIMOEP_ERR_IO;
  } catch (const std::invalid_argument& e) {
    message = e.what();
    return MIMOEP_ERR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    message = e.what();
    return MIMOEP_ERR_RUNTIME;
  } catch (...) {
    message = "unknown error";
    return MIMOEP_ERR_RUNTIME;
  }
}

template <typename Fn>
mimoep_status guarded(std::string& error_slot, Fn&& fn) {
  try {
    fn();
  } catch (...) {
    return classify(std::current_exception(), error_slot);
  }
  error_slot.clear();
  return MIMOEP_OK;
}

}  // namespace

struct mimoep_experiment {
  ExperimentSpec spec;
  std::string summary;
  std::string last_error;
};

struct mimoep_detector {
  DetectorOptions options;
  std::string name;
  std::string last_error;
};

extern "C" {

const char* mimoep_version(void) { return kVersion; }

const char* mimoep_status_string(mimoep_status status) {
  switch (status) {
    case MIMOEP_OK:
      return "ok";
    case MIMOEP_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case MIMOEP_ERR_RUNTIME:
      return "runtime error";
    case MIMOEP_ERR_IO:
      return "i/o error";
    case MIMOEP_ERR_NULL_HANDLE:
      return "null handle";
  }
  return "unknown status";
}

mimoep_experiment* mimoep_experiment_create(const char* kind) {
  if (kind == nullptr) {
    return nullptr;
  }
  try {
    auto* exp = new mimoep_experiment;
    exp->spec = make_default_spec(parse_experiment_kind(kind));
    return exp;
  } catch (...) {
    return nullptr;
  }
}

void mimoep_experiment_destroy(mimoep_experiment* exp) { delete exp; }

mimoep_status mimoep_experiment_set(mimoep_experiment* exp, const char* key,
                                    const char* value) {
  if (exp == nullptr) {
    return MIMOEP_ERR_NULL_HANDLE;
  }
  if (key == nullptr || value == nullptr) {
    exp->last_error = "key and value must be non-null";
    return MIMOEP_ERR_INVALID_ARGUMENT;
  }
  return guarded(exp->last_error, [&] { apply_key(exp->spec, key, value); });
}

mimoep_status mimoep_experiment_load_file(mimoep_experiment* exp,
                                          const char* path) {
  if (exp == nullptr) {
    return MIMOEP_ERR_NULL_HANDLE;
  }
  if (path == nullptr) {
    exp->last_error = "path must be non-null";
    return MIMOEP_ERR_INVALID_ARGUMENT;
  }
  return guarded(exp->last_error, [&] {
    try {
      load_config_file(exp->spec, path);
    } catch (const std::runtime_error& e) {
      throw IoError(e.what());  // unreadable or malformed config file
    }
  });
}

mimoep_status mimoep_experiment_run(mimoep_experiment* exp) {
  if (exp == nullptr) {
    return MIMOEP_ERR_NULL_HANDLE;
  }
  return guarded(exp->last_error,
                 [&] { exp->summary = run_experiment_to_file(exp->spec); });
}

const char* mimoep_experiment_summary(const mimoep_experiment* exp) {
  return exp == nullptr ? "" : exp->summary.c_str();
}

const char* mimoep_experiment_last_error(const mimoep_experiment* exp) {
  return exp == nullptr ? "" : exp->last_error.c_str();
}

mimoep_detector* mimoep_detector_create(const char* name) {
  if (name == nullptr) {
    return nullptr;
  }
  try {
    make_detector(name, DetectorOptions{});  // validates the name
    auto* det = new mimoep_detector;
    det->name = name;
    return det;
  } catch (...) {
    return nullptr;
  }
}

void mimoep_detector_destroy(mimoep_detector* det) { delete det; }

mimoep_status mimoep_detector_set(mimoep_detector* det, const char* key,
                                  const char* value) {
  if (det == nullptr) {
    return MIMOEP_ERR_NULL_HANDLE;
  }
  if (key == nullptr || value == nullptr) {
    det->last_error = "key and value must be non-null";
    return MIMOEP_ERR_INVALID_ARGUMENT;
  }
  return guarded(det->last_error, [&] {
    // Reuse the experiment key grammar for the shared detector settings.
    ExperimentSpec scratch;
    const std::string k = key;
    if (k != "iters" && k != "beta" && k != "tol-schedule" &&
        k != "warm-start" && k != "calib") {
      throw std::invalid_argument("unknown detector key: " + k);
    }
    apply_key(scratch, key, value);
    det->options.iters = k == "iters" ? scratch.iters : det->options.iters;
    det->options.beta = k == "beta" ? scratch.beta : det->options.beta;
    if (k == "tol-schedule") {
      det->options.tol_schedule = scratch.tol_schedule;
    }
    if (k == "warm-start") {
      det->options.warm_start = scratch.warm_start;
    }
    if (k == "calib") {
      det->options.calibration = load_calibration(scratch.calib_path);
    }
  });
}

mimoep_status mimoep_detector_detect(mimoep_detector* det, int32_t nt,
                                     int32_t nr, int32_t mod_order,
                                     double snr_db, const double* h,
                                     const double* y, double* x_out,
                                     int32_t* steps_out) {
  if (det == nullptr) {
    return MIMOEP_ERR_NULL_HANDLE;
  }
  if (h == nullptr || y == nullptr || x_out == nullptr) {
    det->last_error = "h, y, and x_out must be non-null";
    return MIMOEP_ERR_INVALID_ARGUMENT;
  }
  return guarded(det->last_error, [&] {
    if (nt < 1 || nr < 1) {
      throw std::invalid_argument("nt and nr must be positive");
    }
    const Constellation c = build_constellation(mod_order);
    ComplexChannel channel;
    channel.nt = nt;
    channel.nr = nr;
    channel.entries.resize(nr, nt);
    for (int32_t j = 0; j < nt; ++j) {
      for (int32_t i = 0; i < nr; ++i) {
        const double* e = h + 2 * (i + static_cast<std::ptrdiff_t>(j) * nr);
        channel.entries(i, j) = std::complex<double>(e[0], e[1]);
      }
    }
    Eigen::VectorXcd obs(nr);
    for (int32_t i = 0; i < nr; ++i) {
      obs[i] = std::complex<double>(y[2 * i], y[2 * i + 1]);
    }
    const double sigma2 = snr_to_sigma2(snr_db, nt, c.es);
    const RealLinearSystem sys = to_real_system(channel, obs, sigma2);

    const DetectorSetup setup = make_detector(det->name, det->options);
    const DetectionResult result = run_detector(setup, sys, c);
    for (int32_t i = 0; i < nt; ++i) {
      x_out[2 * i] = result.decided[i];
      x_out[2 * i + 1] = result.decided[i + nt];
    }
    if (steps_out != nullptr) {
      *steps_out = static_cast<int32_t>(result.total_pcg_steps);
    }
  });
}

const char* mimoep_detector_last_error(const mimoep_detector* det) {
  return det == nullptr ? "" : det->last_error.c_str();
}

}  // extern "C"
