// SPDX-License-Identifier: Apache-2.0
#ifndef MIMOEP_CHANNEL_HPP
#define MIMOEP_CHANNEL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "rng.hpp"

namespace mimoep {

// Complex channel between nt single-antenna users and an nr-antenna receiver.
struct ComplexChannel {
  Eigen::MatrixXcd entries;  // nr x nt
  int nt = 0;
  int nr = 0;
};

enum class ChannelKind { kRayleigh, kKronecker };

struct ScenarioConfig {
  int nt = 64;
  int nr = 128;
  double snr_db = 15.0;
  int mod_order = 16;
  ChannelKind channel_kind = ChannelKind::kRayleigh;
  double rho = 0.0;  // Kronecker exponential-correlation coefficient
  std::uint64_t seed = 1;
};

// Real-valued form of y = Hx + n with per-real-dimension noise variance
// sigma2. The Gram matrix H^T H and matched filter H^T y are computed once
// at construction and shared by every detector run on this system.
struct RealLinearSystem {
  Eigen::MatrixXd h;  // 2nr x 2nt, blocks [[Re -Im],[Im Re]]
  Eigen::VectorXd y;  // 2nr, (Re y; Im y)
  double sigma2 = 0.0;
  int nt = 0;
  int nr = 0;

  Eigen::MatrixXd gram;            // h^T h, exactly symmetric
  Eigen::VectorXd matched_filter;  // h^T y
};

// Entries i.i.d. circular complex Gaussian with unit total variance.
ComplexChannel sample_rayleigh(int nt, int nr, Rng& rng);

// Exponentially correlated substitute for geometric channel models:
// R_r^{1/2} G R_t^{1/2} with [R]_ij = rho^|i-j| and G a Rayleigh draw,
// followed by per-column power-control normalization. The square roots are
// Cholesky factors; throws std::invalid_argument when rho is outside [0,1).
ComplexChannel sample_kronecker(int nt, int nr, double rho, Rng& rng);

// Per-real-dimension noise variance sigma^2 that realizes the requested
// receive SNR for unit-variance channel entries and mean complex symbol
// energy es: sigma^2 = nt * es * 10^(-snr_db/10) / 2.
double snr_to_sigma2(double snr_db, int nt, double es);

RealLinearSystem to_real_system(const ComplexChannel& channel,
                                const Eigen::VectorXcd& y, double sigma2);

const char* channel_kind_name(ChannelKind kind);
ChannelKind parse_channel_kind(const std::string& name);

}  // namespace mimoep

#endif
