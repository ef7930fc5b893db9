#pragma once

#include <cmath>
#include <cstdint>

namespace rewa {

/// PCG32 (pcg_xsh_rr_64_32, O'Neill). Fixed algorithm so that every dataset
/// and shuffle is reproducible from its seed alone, independent of the
/// standard library.
class Pcg32 {
 public:
  explicit Pcg32(std::uint64_t seed, std::uint64_t stream = 0) {
    state_ = 0u;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  std::uint32_t next_u32() {
    const std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    const auto xorshifted =
        static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    return (hi << 32u) | lo;
  }

  // uniform in [0, 1) with 53 random bits
  double next_double() {
    return static_cast<double>(next_u64() >> 11u) * 0x1.0p-53;
  }

  // uniform integer in [0, bound) by rejection, bound >= 1
  std::uint32_t next_below(std::uint32_t bound) {
    const std::uint32_t threshold = (-bound) % bound;
    for (;;) {
      const std::uint32_t r = next_u32();
      if (r >= threshold) {
        return r % bound;
      }
    }
  }

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

/// Standard normal draws via Box-Muller on top of Pcg32; the spare value is
/// cached so draws come in a fixed order.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed, std::uint64_t stream = 0)
      : rng_(seed, stream) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = rng_.next_double();
    while (u1 <= 0.0) {
      u1 = rng_.next_double();
    }
    const double u2 = rng_.next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  Pcg32& raw() { return rng_; }

 private:
  Pcg32 rng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rewa
