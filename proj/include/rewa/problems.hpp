#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rewa/errors.hpp"
#include "rewa/rng.hpp"
#include "rewa/vecmath.hpp"

namespace rewa::problems {

/// Differentiable objective over DenseVector. Batched variants default to the
/// full value/gradient; data-backed objectives override them.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dim() const = 0;
  virtual double value(const DenseVector& x) const = 0;
  virtual DenseVector gradient(const DenseVector& x) const = 0;

  // number of samples behind the objective; 0 means not data-backed
  virtual std::size_t sample_count() const { return 0; }

  virtual double batch_value(const DenseVector& x,
                             const std::vector<std::size_t>& batch) const {
    (void)batch;
    return value(x);
  }

  virtual DenseVector batch_gradient(const DenseVector& x,
                                     const std::vector<std::size_t>& batch) const {
    (void)batch;
    return gradient(x);
  }
};

struct RegressionDataset {
  std::vector<std::vector<double>> X;  // n rows of d features
  std::vector<double> y;               // n targets
  std::vector<double> beta_star;       // ground truth, length d
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::size_t true_support_size = 0;  // ||beta_star||_0 recorded at generation

  std::size_t n() const { return X.size(); }
  std::size_t d() const { return beta_star.size(); }
};

/// Gaussian design y_i = <x_i, beta*> + eps_i. Draw order is fixed: all
/// features row-major from one PCG stream, then the n noise values, so equal
/// (seed, args) give bit-identical datasets.
inline RegressionDataset make_linreg(
    std::uint64_t seed, std::size_t d, std::size_t n,
    const std::vector<std::pair<std::size_t, double>>& support,
    double noise_sigma) {
  if (d < 1 || n < 1) {
    throw InvalidConfig("make_linreg: need d >= 1 and n >= 1");
  }
  if (noise_sigma < 0.0) {
    throw InvalidConfig("make_linreg: noise_sigma must be >= 0");
  }
  std::set<std::size_t> seen;
  for (const auto& [idx, val] : support) {
    (void)val;
    if (idx >= d) {
      throw InvalidSupport("make_linreg: support index " + std::to_string(idx) +
                           " out of range for d=" + std::to_string(d));
    }
    if (!seen.insert(idx).second) {
      throw InvalidSupport("make_linreg: duplicate support index " +
                           std::to_string(idx));
    }
  }

  RegressionDataset ds;
  ds.noise_sigma = noise_sigma;
  ds.seed = seed;
  ds.beta_star.assign(d, 0.0);
  for (const auto& [idx, val] : support) {
    ds.beta_star[idx] = val;
  }
  ds.true_support_size = 0;
  for (double b : ds.beta_star) {
    if (b != 0.0) {
      ++ds.true_support_size;
    }
  }

  GaussianSampler g(seed);
  ds.X.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ds.X[i].resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      ds.X[i][j] = g.next();
    }
  }
  ds.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double dotv = 0.0;
    for (const auto& [idx, val] : support) {
      dotv += ds.X[i][idx] * val;
    }
    ds.y[i] = dotv + (noise_sigma > 0.0 ? noise_sigma * g.next() : 0.0);
  }
  return ds;
}

/// Held-out split: a fresh draw of n/2 samples from the same distribution
/// under seed+1.
inline RegressionDataset test_split(const RegressionDataset& ds) {
  std::vector<std::pair<std::size_t, double>> support;
  for (std::size_t j = 0; j < ds.beta_star.size(); ++j) {
    if (ds.beta_star[j] != 0.0) {
      support.emplace_back(j, ds.beta_star[j]);
    }
  }
  const std::size_t n_test = std::max<std::size_t>(1, ds.n() / 2);
  return make_linreg(ds.seed + 1, ds.d(), n_test, support, ds.noise_sigma);
}

/// Mean squared error objective (1/|batch|) sum (<x_i, beta> - y_i)^2 over
/// the dataset rows.
class LinRegObjective : public Objective {
 public:
  explicit LinRegObjective(std::shared_ptr<const RegressionDataset> ds)
      : ds_(std::move(ds)) {}

  std::size_t dim() const override { return ds_->d(); }
  std::size_t sample_count() const override { return ds_->n(); }

  double value(const DenseVector& beta) const override {
    return batch_value(beta, all_indices());
  }

  DenseVector gradient(const DenseVector& beta) const override {
    return batch_gradient(beta, all_indices());
  }

  double batch_value(const DenseVector& beta,
                     const std::vector<std::size_t>& batch) const override {
    check(beta, batch);
    double acc = 0.0;
    for (std::size_t i : batch) {
      const double r = residual(beta, i);
      acc += r * r;
    }
    return acc / static_cast<double>(batch.size());
  }

  DenseVector batch_gradient(const DenseVector& beta,
                             const std::vector<std::size_t>& batch) const override {
    check(beta, batch);
    std::vector<double> grad(ds_->d(), 0.0);
    const double scale = 2.0 / static_cast<double>(batch.size());
    for (std::size_t i : batch) {
      const double r = scale * residual(beta, i);
      const auto& row = ds_->X[i];
      for (std::size_t j = 0; j < row.size(); ++j) {
        grad[j] += r * row[j];
      }
    }
    return DenseVector(std::move(grad));
  }

  const RegressionDataset& dataset() const { return *ds_; }

 private:
  std::vector<std::size_t> all_indices() const {
    std::vector<std::size_t> idx(ds_->n());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      idx[i] = i;
    }
    return idx;
  }

  double residual(const DenseVector& beta, std::size_t i) const {
    const auto& row = ds_->X[i];
    double acc = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      acc += row[j] * beta[j];
    }
    return acc - ds_->y[i];
  }

  void check(const DenseVector& beta,
             const std::vector<std::size_t>& batch) const {
    if (beta.size() != ds_->d()) {
      throw DimensionMismatch("linreg objective: beta has wrong dimension");
    }
    if (batch.empty()) {
      throw EmptyBatch("linreg objective: empty batch");
    }
    for (std::size_t i : batch) {
      if (i >= ds_->n()) {
        throw DomainError("linreg objective: batch index out of range");
      }
    }
  }

  std::shared_ptr<const RegressionDataset> ds_;
};

inline std::shared_ptr<LinRegObjective> linreg_objective(
    std::shared_ptr<const RegressionDataset> ds) {
  return std::make_shared<LinRegObjective>(std::move(ds));
}

/// f(x) = sum_i lambda_i x_i^2 with lambda_i >= 0; gradient 2 lambda (.) x.
/// Rank-deficient diagonals leave their null coordinates gradient-free.
class DiagonalQuadratic : public Objective {
 public:
  explicit DiagonalQuadratic(DenseVector lambda_diag)
      : lambda_(std::move(lambda_diag)) {
    for (std::size_t i = 0; i < lambda_.size(); ++i) {
      if (lambda_[i] < 0.0) {
        throw NegativeEigenvalue("make_quadratic: negative entry at index " +
                                 std::to_string(i));
      }
    }
  }

  std::size_t dim() const override { return lambda_.size(); }

  double value(const DenseVector& x) const override {
    require_dim(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      acc += lambda_[i] * x[i] * x[i];
    }
    return acc;
  }

  DenseVector gradient(const DenseVector& x) const override {
    require_dim(x);
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      g[i] = 2.0 * lambda_[i] * x[i];
    }
    return DenseVector(std::move(g));
  }

 private:
  void require_dim(const DenseVector& x) const {
    if (x.size() != lambda_.size()) {
      throw DimensionMismatch("quadratic objective: wrong dimension");
    }
  }

  DenseVector lambda_;
};

inline std::shared_ptr<DiagonalQuadratic> make_quadratic(DenseVector lambda_diag) {
  return std::make_shared<DiagonalQuadratic>(std::move(lambda_diag));
}

/// One-dimensional f(x) = (x - 1)^2.
class ScalarShiftedSquare : public Objective {
 public:
  std::size_t dim() const override { return 1; }

  double value(const DenseVector& x) const override {
    const double r = x[0] - 1.0;
    return r * r;
  }

  DenseVector gradient(const DenseVector& x) const override {
    return DenseVector({2.0 * (x[0] - 1.0)});
  }
};

inline std::shared_ptr<ScalarShiftedSquare> make_scalar_shifted_square() {
  return std::make_shared<ScalarShiftedSquare>();
}

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

}  // namespace detail

/// Flat-file dataset format: header `d,n,sigma,seed`, one CSV row per sample
/// (features then target), then one row for beta_star.
inline std::string dataset_to_string(const RegressionDataset& ds) {
  std::ostringstream out;
  out << ds.d() << ',' << ds.n() << ',' << detail::format_double(ds.noise_sigma)
      << ',' << ds.seed << '\n';
  for (std::size_t i = 0; i < ds.n(); ++i) {
    for (std::size_t j = 0; j < ds.d(); ++j) {
      out << detail::format_double(ds.X[i][j]) << ',';
    }
    out << detail::format_double(ds.y[i]) << '\n';
  }
  for (std::size_t j = 0; j < ds.d(); ++j) {
    if (j > 0) {
      out << ',';
    }
    out << detail::format_double(ds.beta_star[j]);
  }
  out << '\n';
  return out.str();
}

inline void save_dataset(const RegressionDataset& ds, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw IoError("save_dataset: cannot open " + path);
  }
  f << dataset_to_string(ds);
  if (!f) {
    throw IoError("save_dataset: write failed for " + path);
  }
}

inline RegressionDataset load_dataset(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    throw IoError("load_dataset: cannot open " + path);
  }
  auto split_csv = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
      cells.push_back(cell);
    }
    return cells;
  };

  std::string line;
  if (!std::getline(f, line)) {
    throw IoError("load_dataset: missing header in " + path);
  }
  const auto head = split_csv(line);
  if (head.size() != 4) {
    throw IoError("load_dataset: malformed header in " + path);
  }
  RegressionDataset ds;
  const std::size_t d = std::stoull(head[0]);
  const std::size_t n = std::stoull(head[1]);
  ds.noise_sigma = std::stod(head[2]);
  ds.seed = std::stoull(head[3]);

  ds.X.resize(n);
  ds.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(f, line)) {
      throw IoError("load_dataset: truncated sample rows in " + path);
    }
    const auto cells = split_csv(line);
    if (cells.size() != d + 1) {
      throw IoError("load_dataset: bad row width in " + path);
    }
    ds.X[i].resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      ds.X[i][j] = std::stod(cells[j]);
    }
    ds.y[i] = std::stod(cells[d]);
  }
  if (!std::getline(f, line)) {
    throw IoError("load_dataset: missing beta_star row in " + path);
  }
  const auto cells = split_csv(line);
  if (cells.size() != d) {
    throw IoError("load_dataset: bad beta_star width in " + path);
  }
  ds.beta_star.resize(d);
  ds.true_support_size = 0;
  for (std::size_t j = 0; j < d; ++j) {
    ds.beta_star[j] = std::stod(cells[j]);
    if (ds.beta_star[j] != 0.0) {
      ++ds.true_support_size;
    }
  }
  return ds;
}

}  // namespace rewa::problems
