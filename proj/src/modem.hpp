// SPDX-License-Identifier: Apache-2.0
#ifndef MIMOEP_MODEM_HPP
#define MIMOEP_MODEM_HPP

#include <Eigen/Dense>

#include "rng.hpp"

namespace mimoep {

// Real PAM alphabet obtained from a square QAM constellation, normalized to
// unit mean complex symbol energy.
struct Constellation {
  Eigen::VectorXd pam_levels;  // sqrt(order) levels, strictly increasing
  int order = 0;               // complex alphabet size M
  double es = 1.0;             // mean complex symbol energy
  double per_dim_variance = 0.5;  // es / 2
};

// order must be an even power of two (4, 16, 64, 256, ...).
Constellation build_constellation(int order);

// n i.i.d. uniform PAM symbols.
Eigen::VectorXd sample_symbols(const Constellation& c, int n, Rng& rng);

// Per-entry nearest PAM level; ties break toward the smaller level.
// Rejects non-finite inputs.
Eigen::VectorXd hard_decision(const Eigen::VectorXd& mu,
                              const Constellation& c);

struct ErrorCount {
  long errors = 0;
  long total = 0;
};

// Complex-symbol error count: entries (n, n + nt) of the stacked real vector
// form one complex symbol, wrong if either half differs.
ErrorCount count_symbol_errors(const Eigen::VectorXd& decided,
                               const Eigen::VectorXd& truth);

}  // namespace mimoep

#endif
