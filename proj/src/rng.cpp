// SPDX-License-Identifier: Apache-2.0
#include "rng.hpp"

#include <cassert>
#include <cmath>

namespace mimoep {

namespace {

// splitmix64 finalizer; decorrelates nearby (root, stream, substream) keys
// before they seed the generator.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream,
                          std::uint64_t substream) {
  std::uint64_t s = mix64(root);
  s = mix64(s ^ mix64(stream));
  s = mix64(s ^ mix64(substream));
  return s;
}

}  // namespace

Rng::Rng(std::uint64_t root, std::uint64_t stream, std::uint64_t substream)
    : gen_(derive_seed(root, stream, substream)) {}

std::uint64_t Rng::next_u64() { return gen_(); }

double Rng::next_double() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::next_gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller on (0,1] x [0,1) uniforms; 1-u avoids log(0).
  double u = 1.0 - next_double();
  double v = next_double();
  double r = std::sqrt(-2.0 * std::log(u));
  double theta = 6.283185307179586476925286766559 * v;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint32_t Rng::next_pow2_index(std::uint32_t bound) {
  assert(bound > 0 && (bound & (bound - 1)) == 0);
  return static_cast<std::uint32_t>(gen_() & (bound - 1));
}

}  // namespace mimoep
