// SPDX-License-Identifier: Apache-2.0
#ifndef MIMOEP_RNG_HPP
#define MIMOEP_RNG_HPP

#include <cstdint>
#include <random>

namespace mimoep {

// Seeded random stream. A stream is addressed by (root, stream, substream),
// so independent trials can draw in parallel and still reproduce bit-for-bit
// regardless of scheduling order. Gaussian variates use an explicit
// Box-Muller transform instead of std::normal_distribution, whose output
// sequence is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t root, std::uint64_t stream = 0,
               std::uint64_t substream = 0);

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double next_double();

  // Standard normal variate.
  double next_gaussian();

  // Uniform index in [0, bound). bound must be a power of two.
  std::uint32_t next_pow2_index(std::uint32_t bound);

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mimoep

#endif
