// SPDX-License-Identifier: Apache-2.0
#include "modem.hpp"

#include <cmath>
#include <stdexcept>

namespace mimoep {

Constellation build_constellation(int order) {
  int side = order > 0 ? static_cast<int>(std::lround(std::sqrt(order))) : 0;
  bool pow2 = side > 1 && (side & (side - 1)) == 0;
  if (!pow2 || side * side != order)
    throw std::invalid_argument("constellation order must be 4^p with p >= 1");

  Constellation c;
  c.order = order;
  c.es = 1.0;
  c.per_dim_variance = c.es / 2.0;
  // Odd-integer levels scaled so the mean PAM energy is es/2.
  double scale = std::sqrt(3.0 * c.es / (2.0 * (order - 1)));
  c.pam_levels.resize(side);
  for (int i = 0; i < side; ++i)
    c.pam_levels[i] = (2 * i - (side - 1)) * scale;
  return c;
}

Eigen::VectorXd sample_symbols(const Constellation& c, int n, Rng& rng) {
  Eigen::VectorXd x(n);
  auto levels = static_cast<std::uint32_t>(c.pam_levels.size());
  for (int i = 0; i < n; ++i) x[i] = c.pam_levels[rng.next_pow2_index(levels)];
  return x;
}

Eigen::VectorXd hard_decision(const Eigen::VectorXd& mu,
                              const Constellation& c) {
  if (!mu.allFinite())
    throw std::invalid_argument("hard decision on non-finite input");
  const auto& levels = c.pam_levels;
  const int m = static_cast<int>(levels.size());
  Eigen::VectorXd out(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    int best = 0;
    double best_dist = std::abs(mu[i] - levels[0]);
    for (int j = 1; j < m; ++j) {
      double d = std::abs(mu[i] - levels[j]);
      if (d < best_dist) {  // strict: ties keep the smaller level
        best_dist = d;
        best = j;
      }
    }
    out[i] = levels[best];
  }
  return out;
}

ErrorCount count_symbol_errors(const Eigen::VectorXd& decided,
                               const Eigen::VectorXd& truth) {
  if (decided.size() != truth.size())
    throw std::invalid_argument("symbol vector length mismatch");
  if (decided.size() % 2 != 0)
    throw std::invalid_argument("stacked real vector must have even length");
  const Eigen::Index nt = decided.size() / 2;
  ErrorCount ec;
  ec.total = nt;
  for (Eigen::Index i = 0; i < nt; ++i)
    if (decided[i] != truth[i] || decided[i + nt] != truth[i + nt])
      ++ec.errors;
  return ec;
}

}  // namespace mimoep
