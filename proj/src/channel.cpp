// SPDX-License-Identifier: Apache-2.0
#include "channel.hpp"

#include <cmath>
#include <stdexcept>

namespace mimoep {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

Eigen::MatrixXd exp_correlation_chol(int n, double rho) {
  Eigen::MatrixXd r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = std::pow(rho, std::abs(i - j));
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(
        "correlation matrix factorization failed (rho out of range?)");
  return llt.matrixL();
}

}  // namespace

ComplexChannel sample_rayleigh(int nt, int nr, Rng& rng) {
  if (nt < 1 || nr < 1)
    throw std::invalid_argument("antenna counts must be positive");
  ComplexChannel c;
  c.nt = nt;
  c.nr = nr;
  c.entries.resize(nr, nt);
  // Column-major fill; real and imaginary parts each have variance 1/2.
  for (int j = 0; j < nt; ++j)
    for (int i = 0; i < nr; ++i)
      c.entries(i, j) = std::complex<double>(rng.next_gaussian() * kInvSqrt2,
                                             rng.next_gaussian() * kInvSqrt2);
  return c;
}

ComplexChannel sample_kronecker(int nt, int nr, double rho, Rng& rng) {
  if (rho < 0.0 || rho >= 1.0)
    throw std::invalid_argument("rho must lie in [0,1)");
  ComplexChannel c = sample_rayleigh(nt, nr, rng);
  Eigen::MatrixXd lr = exp_correlation_chol(nr, rho);
  Eigen::MatrixXd lt = exp_correlation_chol(nt, rho);
  c.entries = (lr * c.entries * lt.transpose()).eval();
  // Power control: each column carries average per-antenna gain 1.
  for (int j = 0; j < nt; ++j) {
    double p = c.entries.col(j).squaredNorm() / nr;
    c.entries.col(j) /= std::sqrt(p);
  }
  return c;
}

double snr_to_sigma2(double snr_db, int nt, double es) {
  if (es <= 0.0) throw std::invalid_argument("symbol energy must be positive");
  return nt * es * std::pow(10.0, -snr_db / 10.0) / 2.0;
}

RealLinearSystem to_real_system(const ComplexChannel& channel,
                                const Eigen::VectorXcd& y, double sigma2) {
  if (y.size() != channel.nr)
    throw std::invalid_argument("observation length mismatch");
  if (sigma2 <= 0.0) throw std::invalid_argument("sigma2 must be positive");

  const int nt = channel.nt;
  const int nr = channel.nr;
  RealLinearSystem s;
  s.nt = nt;
  s.nr = nr;
  s.sigma2 = sigma2;

  s.h.resize(2 * nr, 2 * nt);
  s.h.topLeftCorner(nr, nt) = channel.entries.real();
  s.h.topRightCorner(nr, nt) = -channel.entries.imag();
  s.h.bottomLeftCorner(nr, nt) = channel.entries.imag();
  s.h.bottomRightCorner(nr, nt) = channel.entries.real();

  s.y.resize(2 * nr);
  s.y.head(nr) = y.real();
  s.y.tail(nr) = y.imag();

  // Materialize the Gram matrix from a rank update so it is symmetric to
  // the last bit, not merely up to rounding.
  const int n = 2 * nt;
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  g.selfadjointView<Eigen::Lower>().rankUpdate(s.h.transpose());
  s.gram = g.selfadjointView<Eigen::Lower>();
  s.matched_filter.noalias() = s.h.transpose() * s.y;
  return s;
}

const char* channel_kind_name(ChannelKind kind) {
  return kind == ChannelKind::kRayleigh ? "rayleigh" : "kronecker";
}

ChannelKind parse_channel_kind(const std::string& name) {
  if (name == "rayleigh") return ChannelKind::kRayleigh;
  if (name == "kronecker") return ChannelKind::kKronecker;
  throw std::invalid_argument("unknown channel kind: " + name);
}

}  // namespace mimoep
