#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "rewa/errors.hpp"
#include "rewa/vecmath.hpp"

namespace rewa::reg {

enum class ClipKind { Constant, L1Tangent };

/// Parameters of the reparameterized iteration and of its induced
/// regularizer: power K, adaptive order M, stabilizer epsilon, decay lambda.
/// K = 1 with M = 0 is the degenerate configuration that reduces the
/// iteration to plain decoupled-weight-decay SGD.
struct ImplicitRegParams {
  int K = 3;
  double M = 0.0;
  double epsilon = 0.0;
  double lambda = 0.0;

  void validate() const {
    if (K < 1 || K % 2 == 0) {
      throw InvalidParams("params: K must be an odd integer >= 1");
    }
    if (!std::isfinite(M) || !std::isfinite(epsilon) || !std::isfinite(lambda)) {
      throw InvalidParams("params: non-finite field");
    }
    if (K == 1) {
      if (M != 0.0) {
        throw InvalidParams("params: K = 1 requires M = 0");
      }
    } else if (M < 0.0 || M > static_cast<double>(K) - 1.0) {
      throw InvalidParams("params: need 0 <= M <= K-1");
    }
    if (epsilon < 0.0) {
      throw InvalidParams("params: epsilon must be >= 0");
    }
    if (lambda < 0.0) {
      throw InvalidParams("params: lambda must be >= 0");
    }
  }
};

/// lam * ||x||_p^p with its subgradient, p in (0, 1]. At x_i = 0 the
/// subgradient coordinate is 0 by convention; for p < 1 the true one-sided
/// derivative is unbounded there, which is exactly the instability the
/// clipped variants below try (and fail) to patch.
inline std::pair<double, DenseVector> lp_penalty(const DenseVector& x, double p,
                                                 double lam) {
  if (!(p > 0.0) || p > 1.0) {
    throw DomainError("lp_penalty: p must be in (0, 1]");
  }
  if (lam < 0.0) {
    throw DomainError("lp_penalty: lam must be >= 0");
  }
  const double value = lam * lp_norm_pp(x, p);
  std::vector<double> sub(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) {
      sub[i] = lam * p * signed_pow(x[i], p - 1.0);
    }
  }
  return {value, DenseVector(std::move(sub))};
}

/// Clipped l_p penalty: below |x| = u the coordinate term is replaced by a
/// constant u^p or by the tangent line p u^{p-1}|x| + (1-p) u^p; above u it
/// is the plain |x|^p. Value is continuous at the knot; the gradient there
/// takes the clipped branch.
inline std::pair<double, DenseVector> clipped_lp(const DenseVector& x, double p,
                                                 double u, ClipKind kind) {
  if (!(p > 0.0) || !(p < 1.0)) {
    throw DomainError("clipped_lp: p must be in (0, 1)");
  }
  if (!(u > 0.0)) {
    throw DomainError("clipped_lp: u must be > 0");
  }
  const double slope = p * std::pow(u, p - 1.0);
  const double offset = (1.0 - p) * std::pow(u, p);
  double value = 0.0;
  std::vector<double> grad(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]);
    if (a > u) {
      value += std::pow(a, p);
      grad[i] = p * signed_pow(x[i], p - 1.0);
    } else if (kind == ClipKind::Constant) {
      value += std::pow(u, p);
      grad[i] = 0.0;
    } else {
      value += slope * a + offset;
      grad[i] = slope * (x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0));
    }
  }
  return {value, DenseVector(std::move(grad))};
}

namespace detail {

inline double second_coefficient(const ImplicitRegParams& prm) {
  return prm.epsilon * static_cast<double>(prm.K) / (2.0 - prm.M);
}

}  // namespace detail

/// Implicit regularizer of the adaptive reparameterized iteration:
///   R(x) = K/(1-M+K) ||x||_{p1}^{p1} + eps K/(2-M) ||x||_{q}^{q}
/// with p1 = 1+(1-M)/K and q = (2-M)/K. The epsilon term is dropped when
/// epsilon = 0 and is singular at M = 2 otherwise.
inline double implicit_R(const DenseVector& x, const ImplicitRegParams& prm) {
  prm.validate();
  const double K = static_cast<double>(prm.K);
  const double p1 = 1.0 + (1.0 - prm.M) / K;
  double r = K / (1.0 - prm.M + K) * lp_norm_pp(x, p1);
  if (prm.epsilon > 0.0) {
    if (prm.M == 2.0) {
      throw SingularCoefficient("implicit_R: M = 2 with epsilon > 0");
    }
    const double q = (2.0 - prm.M) / K;
    r += detail::second_coefficient(prm) * lp_norm_pp(x, q);
  }
  return r;
}

/// Gradient of lambda * R(x):
///   lambda x^{(1-M)/K} + lambda eps x^{(2-M-K)/K}   (signed powers),
/// with coordinate 0 wherever x_i = 0. Negative effective exponents are
/// absorbed by that zero convention; downstream uses always multiply by the
/// V weight, which vanishes at the same coordinates.
inline DenseVector implicit_R_gradient(const DenseVector& x,
                                       const ImplicitRegParams& prm) {
  prm.validate();
  const double K = static_cast<double>(prm.K);
  const double e1 = (1.0 - prm.M) / K;
  const double e2 = (2.0 - prm.M - K) / K;
  std::vector<double> g(x.size(), 0.0);
  if (prm.lambda == 0.0) {
    return DenseVector(std::move(g));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      continue;
    }
    double gi = prm.lambda * signed_pow(x[i], e1);
    if (prm.epsilon > 0.0) {
      gi += prm.lambda * prm.epsilon * signed_pow(x[i], e2);
    }
    g[i] = gi;
  }
  return DenseVector(std::move(g));
}

/// Stationarity weight V(x) = |x|^{1+(M-2)/(2K)} / sqrt(|x|^{1-1/K} + eps).
/// |x|^{1-1/K} is the nonnegative even-root power, so the denominator is
/// >= eps; at eps = 0 the whole expression simplifies to |x|^{(K+M-1)/(2K)}.
/// V_i = 0 exactly when x_i = 0.
inline DenseVector v_weight(const DenseVector& x, const ImplicitRegParams& prm) {
  prm.validate();
  const double K = static_cast<double>(prm.K);
  std::vector<double> v(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]);
    if (a == 0.0) {
      continue;
    }
    if (prm.epsilon == 0.0) {
      v[i] = std::pow(a, (K + prm.M - 1.0) / (2.0 * K));
    } else {
      const double num = std::pow(a, 1.0 + (prm.M - 2.0) / (2.0 * K));
      const double den = std::sqrt(std::pow(a, 1.0 - 1.0 / K) + prm.epsilon);
      v[i] = num / den;
    }
  }
  return DenseVector(std::move(v));
}

/// || V(x) (.) [grad_f + grad(lambda R)] ||^2, the quantity the adaptive
/// iteration drives toward zero. Coordinates with x_i = 0 contribute exactly
/// 0, which keeps the vanishing V from meeting the unbounded penalty
/// gradient.
inline double stationarity_residual(const DenseVector& x,
                                    const DenseVector& grad_f,
                                    const ImplicitRegParams& prm) {
  if (x.size() != grad_f.size()) {
    throw DimensionMismatch("stationarity_residual: dimension mismatch");
  }
  prm.validate();
  const DenseVector v = v_weight(x, prm);
  const DenseVector rg = implicit_R_gradient(x, prm);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      continue;
    }
    const double term = v[i] * (grad_f[i] + rg[i]);
    acc += term * term;
  }
  return acc;
}

}  // namespace rewa::reg
