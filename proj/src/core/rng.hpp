#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

#include "core/error.hpp"

namespace m2oe {

// Deterministic random stream. std::mt19937_64 supplies the bits; the
// uniform/normal transforms are pinned here so the value sequence depends
// only on the seed and the number of draws, not on standard-library
// distribution internals.
class RngState {
public:
  explicit RngState(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return position_; }

  std::uint64_t next_u64() {
    ++position_;
    return engine_();
  }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // standard normal, Box-Muller; consumes exactly two engine draws
  double normal() {
    double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // unbiased integer in [0, n)
  std::uint32_t next_below(std::uint32_t n) {
    if (n == 0) {
      fail(ErrorKind::Internal, "next_below requires n >= 1");
    }
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = (max / n) * n;
    std::uint64_t draw = next_u64();
    while (draw >= limit) {
      draw = next_u64();
    }
    return static_cast<std::uint32_t>(draw % n);
  }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uint64_t position_ = 0;
};

} // namespace m2oe
