#pragma once

#include <cmath>
#include <cstddef>

#include "rewa/errors.hpp"

namespace rewa::opt {

/// Learning-rate schedule, evaluated at 1-based step index t.
struct Schedule {
  enum class Kind { Constant, Cosine, InverseSqrt };

  Kind kind = Kind::Constant;
  double eta0 = 0.1;
  std::size_t total_steps = 0;  // Cosine only
  std::size_t warmup = 0;       // Cosine only, linear ramp over this many steps

  static Schedule constant(double eta0) { return {Kind::Constant, eta0, 0, 0}; }

  static Schedule cosine(double eta0, std::size_t total_steps,
                         std::size_t warmup = 0) {
    return {Kind::Cosine, eta0, total_steps, warmup};
  }

  static Schedule inverse_sqrt(double eta0) {
    return {Kind::InverseSqrt, eta0, 0, 0};
  }

  double eta(std::size_t t) const {
    if (t < 1) {
      throw DomainError("Schedule: step index is 1-based");
    }
    if (!(eta0 > 0.0)) {
      throw InvalidParams("Schedule: eta0 must be > 0");
    }
    switch (kind) {
      case Kind::Constant:
        return eta0;
      case Kind::InverseSqrt:
        return eta0 / std::sqrt(static_cast<double>(t));
      case Kind::Cosine: {
        if (total_steps == 0) {
          throw InvalidParams("Schedule: cosine needs total_steps > 0");
        }
        if (warmup > 0 && t <= warmup) {
          return eta0 * static_cast<double>(t) / static_cast<double>(warmup);
        }
        const double span = static_cast<double>(total_steps - warmup);
        // progress stays < 1 for t <= total_steps so eta_t stays > 0
        const double progress =
            span <= 0.0 ? 0.0
                        : (static_cast<double>(t - warmup) - 1.0) / span;
        return eta0 * 0.5 * (1.0 + std::cos(M_PI * progress));
      }
    }
    throw InvalidParams("Schedule: unknown kind");
  }
};

}  // namespace rewa::opt
