#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "rewa/errors.hpp"

namespace rewa {

/// Dense real coordinate vector. Coordinates are finite by construction and
/// the dimension never changes; kernels return fresh validated vectors.
class DenseVector {
 public:
  explicit DenseVector(std::vector<double> values) : data_(std::move(values)) {
    if (data_.empty()) {
      throw DomainError("DenseVector: dimension must be >= 1");
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(data_[i])) {
        throw NonFinite("DenseVector: non-finite coordinate at index " +
                        std::to_string(i));
      }
    }
  }

  static DenseVector zeros(std::size_t dim) {
    return DenseVector(std::vector<double>(dim, 0.0));
  }

  static DenseVector constant(std::size_t dim, double c) {
    return DenseVector(std::vector<double>(dim, c));
  }

  std::size_t size() const { return data_.size(); }
  double operator[](std::size_t i) const { return data_[i]; }
  const std::vector<double>& values() const { return data_; }

  bool operator==(const DenseVector& other) const = default;

 private:
  std::vector<double> data_;
};

namespace detail {

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline void require_same_dim(const DenseVector& a, const DenseVector& b,
                             const char* op) {
  if (a.size() != b.size()) {
    throw DimensionMismatch(std::string(op) + ": dimensions " +
                            std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  }
}

}  // namespace detail

// sign(x) * |x|^q, the single power convention used everywhere. Agrees with
// odd integer powers and odd roots on negative inputs.
inline double signed_pow(double x, double q) {
  if (x == 0.0) {
    if (q < 0.0) {
      throw DomainError("signed_pow: zero base with negative exponent");
    }
    return 0.0;
  }
  return detail::sign(x) * std::pow(std::abs(x), q);
}

inline DenseVector signed_power(const DenseVector& v, double q) {
  if (!std::isfinite(q)) {
    throw DomainError("signed_power: exponent must be finite");
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = signed_pow(v[i], q);
    if (!std::isfinite(r)) {
      throw DomainError("signed_power: overflow at index " + std::to_string(i));
    }
    out[i] = r;
  }
  return DenseVector(std::move(out));
}

inline DenseVector hadamard(const DenseVector& a, const DenseVector& b) {
  detail::require_same_dim(a, b, "hadamard");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = a[i] * b[i];
  }
  return DenseVector(std::move(out));
}

// sum_i |v_i|^p
inline double lp_norm_pp(const DenseVector& v, double p) {
  if (!(p > 0.0)) {
    throw DomainError("lp_norm_pp: p must be > 0");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc += std::pow(std::abs(v[i]), p);
  }
  return acc;
}

// number of coordinates with |v_i| <= tau
inline std::size_t count_below(const DenseVector& v, double tau) {
  if (!(tau >= 0.0)) {
    throw DomainError("count_below: tau must be >= 0");
  }
  std::size_t n = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) <= tau) {
      ++n;
    }
  }
  return n;
}

inline double dot(const DenseVector& a, const DenseVector& b) {
  detail::require_same_dim(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += a[i] * b[i];
  }
  return acc;
}

inline double norm2(const DenseVector& v) { return std::sqrt(dot(v, v)); }

inline double max_abs(const DenseVector& v) {
  double m = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    m = std::max(m, std::abs(v[i]));
  }
  return m;
}

}  // namespace rewa
