/* SPDX-License-Identifier: Apache-2.0 */
#ifndef MIMOEP_MIMOEP_H
#define MIMOEP_MIMOEP_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/*
 * C interface to the MIMO detection library: symbol detectors built around
 * expectation propagation with inversion-free (conjugate-gradient) variants,
 * plus the Monte-Carlo experiment harness that produces CSV benchmark data.
 *
 * All handles are opaque; every fallible call returns a status code and
 * leaves a human-readable message retrievable from the owning handle.
 */

typedef enum mimoep_status {
  MIMOEP_OK = 0,
  MIMOEP_ERR_INVALID_ARGUMENT = 1, /* bad key, value, or precondition */
  MIMOEP_ERR_RUNTIME = 2,          /* numerical or search failure */
  MIMOEP_ERR_IO = 3,               /* file could not be read or written */
  MIMOEP_ERR_NULL_HANDLE = 4
} mimoep_status;

const char* mimoep_version(void);
const char* mimoep_status_string(mimoep_status status);

/* ---- experiments ------------------------------------------------------ */

/*
 * An experiment is configured with string key/value pairs and then run; it
 * writes its output file itself. Kinds: "ser-sweep" (symbol-error-rate
 * waterfalls), "rre-trace" (solver convergence medians), "step-count"
 * (total conjugate-gradient steps at the operating point), "calibrate"
 * (variance-correction coefficients).
 *
 * Keys mirror the CLI flags: nt, nr, mod, channel (rayleigh|kronecker),
 * rho, snr (lo:step:hi | comma list | single), detectors (comma list),
 * channels, seed, beta, iters, tol-schedule (comma list), calib (path),
 * warm-start (on|off), out (path), jobs.
 */
typedef struct mimoep_experiment mimoep_experiment;

/* NULL when the kind is unknown. */
mimoep_experiment* mimoep_experiment_create(const char* kind);
void mimoep_experiment_destroy(mimoep_experiment* exp);

mimoep_status mimoep_experiment_set(mimoep_experiment* exp, const char* key,
                                    const char* value);

/* Applies `key=value` lines from a config file; '#' starts a comment.
 * Values set later (by further set calls) override the file. */
mimoep_status mimoep_experiment_load_file(mimoep_experiment* exp,
                                          const char* path);

/* Runs the experiment and writes the output file named by the `out` key. */
mimoep_status mimoep_experiment_run(mimoep_experiment* exp);

/* One-line summary of the last successful run (empty before run). */
const char* mimoep_experiment_summary(const mimoep_experiment* exp);

/* Message for the last failed call on this handle (empty when none). */
const char* mimoep_experiment_last_error(const mimoep_experiment* exp);

/* ---- single-shot detection -------------------------------------------- */

/*
 * Detector names: "lmmse", "ep" (exact-inverse expectation propagation),
 * "ep-pcg" (conjugate-gradient mean, exact variances), "epicg"
 * (conjugate-gradient mean, corrected diagonal variances), "epicg-sigma0"
 * (same with an exact first iteration), "epa" (fixed-point mean baseline).
 * Settable keys: iters, beta, tol-schedule, warm-start, calib.
 */
typedef struct mimoep_detector mimoep_detector;

/* NULL when the name is unknown. */
mimoep_detector* mimoep_detector_create(const char* name);
void mimoep_detector_destroy(mimoep_detector* det);

mimoep_status mimoep_detector_set(mimoep_detector* det, const char* key,
                                  const char* value);

/*
 * Detects nt complex symbols from an nr-antenna observation y = H x + n.
 *
 *   h      column-major nr x nt complex channel, interleaved re/im
 *          (2*nr*nt doubles; entry (i,j) at h[2*(i + j*nr)]).
 *   y      interleaved re/im observation (2*nr doubles).
 *   snr_db sets the noise variance assumed by the detector for a
 *          unit-energy constellation of the given order.
 *   x_out  hard decisions, interleaved re/im (2*nt doubles).
 *   steps_out  total conjugate-gradient steps spent (0 for direct solvers);
 *          may be NULL.
 */
mimoep_status mimoep_detector_detect(mimoep_detector* det, int32_t nt,
                                     int32_t nr, int32_t mod_order,
                                     double snr_db, const double* h,
                                     const double* y, double* x_out,
                                     int32_t* steps_out);

const char* mimoep_detector_last_error(const mimoep_detector* det);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MIMOEP_MIMOEP_H */
