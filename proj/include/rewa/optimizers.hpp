#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rewa/diagnostics.hpp"
#include "rewa/errors.hpp"
#include "rewa/metrics.hpp"
#include "rewa/problems.hpp"
#include "rewa/regularizers.hpp"
#include "rewa/rng.hpp"
#include "rewa/schedule.hpp"
#include "rewa/vecmath.hpp"

namespace rewa::opt {

struct AdamMoments {
  DenseVector m;
  DenseVector v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t t = 0;
};

/// State of the reparameterized iteration: the iterate lives in y-space,
/// the model reads out x = y^K.
struct ReWAState {
  DenseVector y;
  reg::ImplicitRegParams params;
  std::size_t t = 0;
  std::optional<AdamMoments> adam;
};

inline ReWAState rewa_init(const DenseVector& x0,
                           const reg::ImplicitRegParams& params,
                           bool with_adam = false, double beta1 = 0.9,
                           double beta2 = 0.999, double adam_eps = 1e-8) {
  params.validate();
  ReWAState s{signed_power(x0, 1.0 / params.K), params, 0, std::nullopt};
  if (with_adam) {
    s.adam = AdamMoments{DenseVector::zeros(x0.size()),
                         DenseVector::zeros(x0.size()),
                         beta1, beta2, adam_eps, 0};
  }
  return s;
}

inline DenseVector readout(const ReWAState& s) {
  return signed_power(s.y, static_cast<double>(s.params.K));
}

namespace detail {

// Adaptive factor |y|^M * y^{K-1} / (y^{K-1} + eps), with y^{K-1} the
// nonnegative even power. At eps = 0 the ratio cancels to |y|^M before
// evaluation, so y = 0 never produces 0/0; |0|^0 = 1 keeps the M = 0 factor
// at unity through the origin. Even-integer M gives a nonnegative factor,
// matching the plain power, and the |.|^M extension keeps that for real M.
inline double adaptive_factor(double y, const reg::ImplicitRegParams& prm) {
  const double num = std::pow(std::abs(y), prm.M);
  if (prm.epsilon == 0.0) {
    return num;
  }
  const double yk1 = std::pow(std::abs(y), static_cast<double>(prm.K) - 1.0);
  return num * yk1 / (yk1 + prm.epsilon);
}

inline void require_step_inputs(std::size_t dim_y, const DenseVector& grad,
                                double eta, double lambda) {
  if (grad.size() != dim_y) {
    throw DimensionMismatch("step: gradient dimension mismatch");
  }
  if (!(eta > 0.0)) {
    throw InvalidParams("step: eta must be > 0");
  }
  if (lambda * eta >= 1.0) {
    throw StepTooLarge("step: lambda * eta must be < 1");
  }
}

inline DenseVector checked_vector(std::vector<double> values, const char* who) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NonFinite(std::string(who) + ": update overflowed");
    }
  }
  return DenseVector(std::move(values));
}

}  // namespace detail

/// One step of the adaptive reparameterized iteration:
///   y <- (1 - lambda eta) y - eta (y^M / (y^{K-1} + eps)) y^{K-1} grad_x
/// where grad_x is the objective gradient at x = y^K.
inline ReWAState rewa_step(const ReWAState& state, const DenseVector& grad_x,
                           double eta_t) {
  detail::require_step_inputs(state.y.size(), grad_x, eta_t,
                              state.params.lambda);
  const double shrink = 1.0 - state.params.lambda * eta_t;
  std::vector<double> next(state.y.size());
  for (std::size_t i = 0; i < next.size(); ++i) {
    const double f = detail::adaptive_factor(state.y[i], state.params);
    next[i] = shrink * state.y[i] - eta_t * f * grad_x[i];
  }
  ReWAState out = state;
  out.y = detail::checked_vector(std::move(next), "rewa_step");
  out.t = state.t + 1;
  return out;
}

/// Plain reparameterized step without the adaptive factor:
///   y <- (1 - lambda eta) y - eta y^{K-1} grad_x.
/// A coordinate at y = 0 never moves again, whatever the gradient.
inline DenseVector nonadaptive_step(const DenseVector& y,
                                    const DenseVector& grad_x, double eta,
                                    double lambda, int K) {
  if (K < 1 || K % 2 == 0) {
    throw InvalidParams("nonadaptive_step: K must be odd >= 1");
  }
  detail::require_step_inputs(y.size(), grad_x, eta, lambda);
  const double shrink = 1.0 - lambda * eta;
  std::vector<double> next(y.size());
  for (std::size_t i = 0; i < next.size(); ++i) {
    const double yk1 = std::pow(std::abs(y[i]), static_cast<double>(K) - 1.0);
    next[i] = shrink * y[i] - eta * yk1 * grad_x[i];
  }
  return detail::checked_vector(std::move(next), "nonadaptive_step");
}

/// AdamW hosting: the surrogate gradient (y^M / (y^{K-1} + eps)) y^{K-1}
/// grad_x feeds the moment estimates; eta_t is applied once, as the outer
/// step size, with decoupled decay.
inline ReWAState rewa_adamw_step(const ReWAState& state,
                                 const DenseVector& grad_x, double eta_t) {
  if (!state.adam.has_value()) {
    throw InvalidParams("rewa_adamw_step: adam moments not initialized");
  }
  detail::require_step_inputs(state.y.size(), grad_x, eta_t,
                              state.params.lambda);
  ReWAState out = state;
  AdamMoments& a = *out.adam;
  a.t += 1;
  const double bc1 = 1.0 - std::pow(a.beta1, static_cast<double>(a.t));
  const double bc2 = 1.0 - std::pow(a.beta2, static_cast<double>(a.t));
  const double shrink = 1.0 - state.params.lambda * eta_t;

  std::vector<double> m(state.y.size());
  std::vector<double> v(state.y.size());
  std::vector<double> next(state.y.size());
  for (std::size_t i = 0; i < next.size(); ++i) {
    const double g = detail::adaptive_factor(state.y[i], state.params) * grad_x[i];
    m[i] = a.beta1 * a.m[i] + (1.0 - a.beta1) * g;
    v[i] = a.beta2 * a.v[i] + (1.0 - a.beta2) * g * g;
    const double mhat = bc1 > 0.0 ? m[i] / bc1 : m[i];
    const double vhat = bc2 > 0.0 ? v[i] / bc2 : v[i];
    next[i] = shrink * state.y[i] - eta_t * mhat / (std::sqrt(vhat) + a.eps);
  }
  a.m = detail::checked_vector(std::move(m), "rewa_adamw_step");
  a.v = detail::checked_vector(std::move(v), "rewa_adamw_step");
  out.y = detail::checked_vector(std::move(next), "rewa_adamw_step");
  out.t = state.t + 1;
  return out;
}

/// x <- x - eta (grad + lambda1 sign(x)), sign(0) = 0.
inline DenseVector sgd_l1_step(const DenseVector& x, const DenseVector& grad,
                               double eta, double lambda1) {
  if (x.size() != grad.size()) {
    throw DimensionMismatch("sgd_l1_step: dimension mismatch");
  }
  if (!(eta > 0.0) || lambda1 < 0.0) {
    throw InvalidParams("sgd_l1_step: need eta > 0 and lambda1 >= 0");
  }
  std::vector<double> next(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
    next[i] = x[i] - eta * (grad[i] + lambda1 * s);
  }
  return detail::checked_vector(std::move(next), "sgd_l1_step");
}

// sign(z) * max(|z| - gamma, 0)
inline double soft_threshold(double z, double gamma) {
  if (z > gamma) {
    return z - gamma;
  }
  if (z < -gamma) {
    return z + gamma;
  }
  return 0.0;
}

/// Cyclic coordinate descent on (1/2n) ||X beta - y||^2 + lambda1 ||beta||_1
/// with exact per-coordinate soft-threshold updates. Stops when the largest
/// coordinate change in a sweep drops below tol.
inline DenseVector lasso_cd_solve(const problems::RegressionDataset& ds,
                                  double lambda1, std::size_t max_sweeps,
                                  double tol) {
  if (lambda1 < 0.0) {
    throw InvalidParams("lasso_cd_solve: lambda1 must be >= 0");
  }
  const std::size_t n = ds.n();
  const std::size_t d = ds.d();
  std::vector<double> beta(d, 0.0);
  std::vector<double> residual = ds.y;  // y - X beta, beta = 0

  std::vector<double> col_sq(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      col_sq[j] += ds.X[i][j] * ds.X[i][j];
    }
  }

  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (col_sq[j] == 0.0) {
        continue;
      }
      double rho = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        rho += ds.X[i][j] * residual[i];
      }
      rho = rho / static_cast<double>(n) +
            col_sq[j] / static_cast<double>(n) * beta[j];
      const double updated =
          soft_threshold(rho, lambda1) / (col_sq[j] / static_cast<double>(n));
      const double change = updated - beta[j];
      if (change != 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
          residual[i] -= ds.X[i][j] * change;
        }
        beta[j] = updated;
      }
      max_change = std::max(max_change, std::abs(change));
    }
    if (max_change < tol) {
      return DenseVector(std::move(beta));
    }
  }
  throw NotConverged("lasso_cd_solve: sweep budget exhausted", std::move(beta));
}

enum class MethodKind { RewaSgd, RewaAdamW, Nonadaptive, SgdL1 };

struct MethodConfig {
  MethodKind kind = MethodKind::RewaSgd;
  reg::ImplicitRegParams params;  // reparameterized family
  double lambda1 = 0.0;           // sgd_l1
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct LogRow {
  std::size_t step = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double residual = 0.0;
  double weighted_grad = 0.0;
  std::vector<std::size_t> sparsity_counts;
  double elapsed_sec = 0.0;  // serialized only into the JSON sidecar
};

/// Trajectory log of one training run plus the final readout.
struct RunRecord {
  std::vector<LogRow> rows;
  std::vector<double> thresholds;
  std::vector<double> final_x;
  std::uint64_t seed = 0;
};

/// Step error rethrown with the failing step index; carries the rows logged
/// so far so callers can still write the partial record.
class TrainingFailure : public Error {
 public:
  TrainingFailure(const std::string& what, std::size_t step_index,
                  RunRecord partial_record)
      : Error(what + " (at step " + std::to_string(step_index) + ")"),
        step(step_index),
        partial(std::move(partial_record)) {}

  std::size_t step;
  RunRecord partial;
};

inline std::vector<double> default_thresholds() {
  return {1e-7, 5e-7, 1e-6, 5e-6, 1e-5, 5e-5, 1e-4, 5e-4, 1e-3};
}

namespace detail {

struct MethodState {
  std::optional<ReWAState> rewa;
  std::optional<DenseVector> x;  // direct-space methods

  DenseVector current_x() const {
    return rewa.has_value() ? readout(*rewa) : *x;
  }
};

inline double method_residual(const MethodConfig& method, const DenseVector& x,
                              const DenseVector& grad) {
  switch (method.kind) {
    case MethodKind::RewaSgd:
    case MethodKind::RewaAdamW:
      return reg::stationarity_residual(x, grad, method.params);
    case MethodKind::Nonadaptive: {
      // x-weighted substationarity of f + K lambda ||x||_{2/K}^{2/K}
      const double e = 2.0 / method.params.K - 1.0;
      double acc = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) {
          continue;
        }
        const double r =
            x[i] * (grad[i] + 2.0 * method.params.lambda * signed_pow(x[i], e));
        acc += r * r;
      }
      return acc;
    }
    case MethodKind::SgdL1: {
      // min-norm subgradient residual of f + lambda1 ||x||_1
      double acc = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        double r;
        if (x[i] != 0.0) {
          r = grad[i] + method.lambda1 * (x[i] > 0.0 ? 1.0 : -1.0);
        } else {
          r = std::max(std::abs(grad[i]) - method.lambda1, 0.0);
        }
        acc += r * r;
      }
      return acc;
    }
  }
  return 0.0;
}

}  // namespace detail

/// Deterministic SGD-style training loop. Batches are contiguous slices of a
/// per-epoch Fisher-Yates shuffle driven by the run seed; objectives without
/// samples take one full-gradient step per epoch. Logs every log_every steps
/// plus the initial and final state.
inline RunRecord run_training(const problems::Objective& obj,
                              const MethodConfig& method,
                              const Schedule& schedule, std::size_t epochs,
                              std::size_t batch_size, std::uint64_t seed,
                              std::size_t log_every,
                              const std::vector<double>& thresholds,
                              const DenseVector& x0,
                              const problems::Objective* test_obj = nullptr) {
  if (batch_size < 1) {
    throw InvalidConfig("run_training: batch_size must be >= 1");
  }
  if (log_every < 1) {
    throw InvalidConfig("run_training: log_every must be >= 1");
  }
  if (x0.size() != obj.dim()) {
    throw DimensionMismatch("run_training: x0 dimension mismatch");
  }

  detail::MethodState st;
  switch (method.kind) {
    case MethodKind::RewaSgd:
      st.rewa = rewa_init(x0, method.params);
      break;
    case MethodKind::RewaAdamW:
      st.rewa = rewa_init(x0, method.params, true, method.beta1, method.beta2,
                          method.adam_eps);
      break;
    case MethodKind::Nonadaptive:
      method.params.validate();
      st.rewa = rewa_init(x0, method.params);
      break;
    case MethodKind::SgdL1:
      st.x = x0;
      break;
  }

  const std::size_t n = obj.sample_count();
  const std::size_t steps_per_epoch =
      n > 0 ? (n + batch_size - 1) / batch_size : 1;
  const std::size_t total_steps = epochs * steps_per_epoch;

  RunRecord record;
  record.thresholds = thresholds;
  record.seed = seed;

  const auto start = std::chrono::steady_clock::now();
  auto log_state = [&](std::size_t step) {
    const DenseVector x = st.current_x();
    const DenseVector grad = obj.gradient(x);
    LogRow row;
    row.step = step;
    row.train_loss = obj.value(x);
    row.test_loss = test_obj != nullptr ? test_obj->value(x) : row.train_loss;
    row.residual = detail::method_residual(method, x, grad);
    row.weighted_grad = theory::weighted_grad_diagnostic(
        x, grad, method.kind == MethodKind::SgdL1 ? 1 : method.params.K);
    row.sparsity_counts = metrics::sparsity_profile(x, thresholds).counts;
    row.elapsed_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    record.rows.push_back(std::move(row));
  };

  log_state(0);

  Pcg32 shuffle_rng(seed, 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = i;
  }

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    if (n > 0) {
      for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = shuffle_rng.next_below(static_cast<std::uint32_t>(i));
        std::swap(order[i - 1], order[j]);
      }
    }
    for (std::size_t b = 0; b < steps_per_epoch; ++b) {
      ++step;
      const double eta = schedule.eta(step);
      try {
        DenseVector x = st.current_x();
        DenseVector grad = DenseVector::zeros(x.size());
        if (n > 0) {
          const std::size_t lo = b * batch_size;
          const std::size_t hi = std::min(n, lo + batch_size);
          const std::vector<std::size_t> batch(order.begin() + lo,
                                               order.begin() + hi);
          grad = obj.batch_gradient(x, batch);
        } else {
          grad = obj.gradient(x);
        }
        switch (method.kind) {
          case MethodKind::RewaSgd:
            st.rewa = rewa_step(*st.rewa, grad, eta);
            break;
          case MethodKind::RewaAdamW:
            st.rewa = rewa_adamw_step(*st.rewa, grad, eta);
            break;
          case MethodKind::Nonadaptive:
            st.rewa->y = nonadaptive_step(st.rewa->y, grad, eta,
                                          method.params.lambda, method.params.K);
            st.rewa->t += 1;
            break;
          case MethodKind::SgdL1:
            st.x = sgd_l1_step(*st.x, grad, eta, method.lambda1);
            break;
        }
      } catch (const Error& e) {
        try {
          record.final_x = st.current_x().values();
        } catch (const Error&) {
          // readout itself overflowed; the partial record keeps no final x
        }
        throw TrainingFailure(e.what(), step, std::move(record));
      }
      if (step % log_every == 0 && step != total_steps) {
        log_state(step);
      }
    }
  }

  if (total_steps > 0) {
    log_state(total_steps);
  }
  record.final_x = st.current_x().values();
  return record;
}

}  // namespace rewa::opt
