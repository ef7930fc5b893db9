#pragma once

#include <cmath>

#include "rewa/errors.hpp"
#include "rewa/vecmath.hpp"

namespace rewa::theory {

/// || |x|^{(K-1)/(2K)} (.) grad ||, the weighted gradient norm whose running
/// minimum decays along the reparameterized trajectory. The exponent is an
/// even-rooted power, so it acts on |x|.
inline double weighted_grad_diagnostic(const DenseVector& x,
                                       const DenseVector& grad, int K) {
  if (x.size() != grad.size()) {
    throw DimensionMismatch("weighted_grad_diagnostic: dimension mismatch");
  }
  if (K < 1 || K % 2 == 0) {
    throw InvalidParams("weighted_grad_diagnostic: K must be odd >= 1");
  }
  const double e = (static_cast<double>(K) - 1.0) / (2.0 * K);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = std::pow(std::abs(x[i]), e);
    acc += (w * grad[i]) * (w * grad[i]);
  }
  return std::sqrt(acc);
}

/// || x (.) (grad + 2 lambda x^{2/K - 1}) ||_inf with signed powers; zero
/// coordinates contribute exactly 0. Vanishes at the substationary points the
/// non-adaptive scheme stagnates on.
inline double substationarity_gap(const DenseVector& x, const DenseVector& grad,
                                  double lambda, int K) {
  if (x.size() != grad.size()) {
    throw DimensionMismatch("substationarity_gap: dimension mismatch");
  }
  const double e = 2.0 / static_cast<double>(K) - 1.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] == 0.0) {
      continue;
    }
    const double r = x[i] * (grad[i] + 2.0 * lambda * signed_pow(x[i], e));
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

}  // namespace rewa::theory
