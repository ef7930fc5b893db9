#pragma once

#include <limits>
#include <vector>

#include "rewa/errors.hpp"
#include "rewa/vecmath.hpp"

namespace rewa::metrics {

/// Counts of coordinates at or below each threshold, thresholds ascending.
struct SparsityProfile {
  std::vector<double> thresholds;
  std::vector<std::size_t> counts;
};

inline SparsityProfile sparsity_profile(const DenseVector& x,
                                        const std::vector<double>& thresholds) {
  for (std::size_t k = 0; k < thresholds.size(); ++k) {
    if (thresholds[k] < 0.0 || (k > 0 && thresholds[k] < thresholds[k - 1])) {
      throw UnsortedThresholds("sparsity_profile: thresholds must be ascending and >= 0");
    }
  }
  SparsityProfile p;
  p.thresholds = thresholds;
  p.counts.reserve(thresholds.size());
  for (double tau : thresholds) {
    p.counts.push_back(count_below(x, tau));
  }
  return p;
}

/// d / (number of coordinates surviving |x_i| > tau); +infinity when
/// everything is pruned.
inline double compression_ratio(const DenseVector& x, double tau) {
  const std::size_t pruned = count_below(x, tau);
  const std::size_t kept = x.size() - pruned;
  if (kept == 0) {
    return std::numeric_limits<double>::infinity();
  }
  return static_cast<double>(x.size()) / static_cast<double>(kept);
}

struct SupportRecovery {
  bool exact = false;
  double precision = 0.0;
  double recall = 0.0;
};

/// Compares the thresholded support {i : |beta_i| > tau} against the true
/// support of beta_star.
inline SupportRecovery support_recovery(const DenseVector& beta,
                                        const DenseVector& beta_star,
                                        double tau) {
  if (beta.size() != beta_star.size()) {
    throw DimensionMismatch("support_recovery: dimension mismatch");
  }
  std::size_t predicted = 0;
  std::size_t truth = 0;
  std::size_t hit = 0;
  bool equal = true;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    const bool p = std::abs(beta[i]) > tau;
    const bool t = beta_star[i] != 0.0;
    predicted += p;
    truth += t;
    hit += (p && t);
    equal = equal && (p == t);
  }
  SupportRecovery r;
  r.exact = equal;
  r.precision = predicted == 0
                    ? (truth == 0 ? 1.0 : 0.0)
                    : static_cast<double>(hit) / static_cast<double>(predicted);
  r.recall = truth == 0 ? (predicted == 0 ? 1.0 : 0.0)
                        : static_cast<double>(hit) / static_cast<double>(truth);
  return r;
}

}  // namespace rewa::metrics
