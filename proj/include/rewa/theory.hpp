#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rewa/diagnostics.hpp"
#include "rewa/errors.hpp"
#include "rewa/optimizers.hpp"
#include "rewa/problems.hpp"
#include "rewa/regularizers.hpp"
#include "rewa/vecmath.hpp"

namespace rewa::theory {

/// Inputs of the stagnation-radius formulas. C = (1 - lambda eta) / (eta B)
/// is the ratio every radius is built from.
struct StagnationInputs {
  double eta = 0.1;
  double lambda = 0.0;
  double B = 1.0;
  int K = 3;
  double M = 0.0;
  double epsilon = 0.0;

  void validate() const {
    if (!(eta > 0.0) || lambda < 0.0 || !(B > 0.0)) {
      throw InvalidParams("StagnationInputs: need eta > 0, lambda >= 0, B > 0");
    }
    if (K < 3 || K % 2 == 0) {
      throw InvalidParams("StagnationInputs: K must be odd >= 3");
    }
    if (M < 0.0 || epsilon < 0.0) {
      throw InvalidParams("StagnationInputs: need M >= 0 and epsilon >= 0");
    }
    if (lambda * eta >= 1.0) {
      throw InvalidParams("StagnationInputs: need lambda * eta < 1");
    }
  }

  double C() const { return (1.0 - lambda * eta) / (eta * B); }
};

// U1 = C^{1/(M-1)}, the radius of the M-adaptive scheme (M > 1, eps = 0)
inline double stagnation_u1(const StagnationInputs& in) {
  in.validate();
  if (!(in.M > 1.0)) {
    throw DomainError("stagnation_u1: requires M > 1");
  }
  return std::pow(in.C(), 1.0 / (in.M - 1.0));
}

// U3 = C^{1/(K-2)}, the radius of the non-adaptive scheme
inline double stagnation_u3(const StagnationInputs& in) {
  in.validate();
  return std::pow(in.C(), 1.0 / (static_cast<double>(in.K) - 2.0));
}

namespace detail {

inline double stagnation_F(double u, double epsilon, int K) {
  return u + epsilon * std::pow(u, -(static_cast<double>(K) - 2.0));
}

// upper end of the strictly decreasing branch of F
inline double branch_knee(double epsilon, int K) {
  return std::pow(epsilon * (static_cast<double>(K) - 2.0),
                  1.0 / (static_cast<double>(K) - 1.0));
}

}  // namespace detail

/// U2 = F^{-1}(eta B / (1 - lambda eta)) with F(U) = U + eps U^{-(K-2)},
/// inverted on the strictly decreasing branch U < [eps (K-2)]^{1/(K-1)}
/// (the stagnation neighborhood of the origin) by bisection to 1e-12
/// relative. The epsilon-smallness condition is the solvability condition
/// eps <= [(eta B / (1 - lambda eta)) (K-2)/(K-1)]^{K-1} / (K-2), i.e. the
/// threshold 1/C must not fall below the minimum of F on the branch.
inline double stagnation_u2(const StagnationInputs& in) {
  in.validate();
  if (!(in.epsilon > 0.0)) {
    throw DomainError("stagnation_u2: requires epsilon > 0");
  }
  const double Km1 = static_cast<double>(in.K) - 1.0;
  const double Km2 = static_cast<double>(in.K) - 2.0;
  const double target = 1.0 / in.C();
  const double eps_bound = std::pow(target * Km2 / Km1, Km1) / Km2;
  if (in.epsilon > eps_bound * (1.0 + 1e-12)) {
    throw ConditionViolated("stagnation_u2: epsilon-smallness condition fails");
  }
  const double knee = detail::branch_knee(in.epsilon, in.K);
  const double min_f = detail::stagnation_F(knee, in.epsilon, in.K);
  if (target < min_f * (1.0 - 1e-12)) {
    throw NoRoot("stagnation_u2: 1/C below the minimum of F on the branch");
  }
  if (target <= min_f) {
    return knee;
  }

  double hi = knee;
  double lo = knee;
  for (int i = 0; i < 4000 && detail::stagnation_F(lo, in.epsilon, in.K) < target;
       ++i) {
    lo *= 0.5;
  }
  for (int i = 0; i < 500 && hi / lo > 1.0 + 1e-13; ++i) {
    const double mid = std::sqrt(lo * hi);
    if (detail::stagnation_F(mid, in.epsilon, in.K) >= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Per-clause report; a field is unset when the clause hypothesis does not
/// apply to the inputs.
struct Prop211Report {
  std::optional<bool> u1_le_u3;
  std::optional<bool> u2_le_u3;
  std::optional<bool> all_gt_1;

  bool all_applicable_hold() const {
    return u1_le_u3.value_or(true) && u2_le_u3.value_or(true) &&
           all_gt_1.value_or(true);
  }
};

/// Evaluates the radius-comparison clauses whose hypotheses hold:
///   C <= 1                      =>  U1 <= U3          (needs M > 1)
///   C <= (1-eps)^{(K-2)/(K-1)}  =>  U2 <= U3          (needs eps in (0,1))
///   C >= 1                      =>  U1, U3 > 1.
/// The divergence clause checks the two power-law radii; the F-based radius
/// only exceeds 1 in the no-root (everywhere-stagnant) regime, so it carries
/// no content there.
inline Prop211Report check_prop_211(const StagnationInputs& in,
                                    double slack = 1e-12) {
  in.validate();
  Prop211Report rep;
  const double C = in.C();
  const double Km1 = static_cast<double>(in.K) - 1.0;
  const double Km2 = static_cast<double>(in.K) - 2.0;

  const bool u1_defined = in.M > 1.0;
  if (C <= 1.0 && u1_defined && in.M <= Km1) {
    rep.u1_le_u3 = stagnation_u1(in) <= stagnation_u3(in) + slack;
  }
  if (in.epsilon > 0.0 && in.epsilon < 1.0 &&
      C <= std::pow(1.0 - in.epsilon, Km2 / Km1)) {
    rep.u2_le_u3 = stagnation_u2(in) <= stagnation_u3(in) + slack;
  }
  if (C >= 1.0) {
    bool ok = stagnation_u3(in) > 1.0 - slack;
    if (u1_defined) {
      ok = ok && stagnation_u1(in) > 1.0 - slack;
    }
    rep.all_gt_1 = ok;
  }
  return rep;
}

/// Closed-form gradient bound and approximation error of the clipped l_p
/// penalties: E1 = sqrt(d) p u^{p-1} for both kinds; E2 = d u^p (constant)
/// or d (1-p) u^p (l1 tangent), both attained at the origin.
inline std::pair<double, double> clipping_closed_forms(reg::ClipKind kind,
                                                       std::size_t d, double p,
                                                       double u) {
  if (!(p > 0.0) || !(p < 1.0) || !(u > 0.0) || d < 1) {
    throw DomainError("clipping_closed_forms: need p in (0,1), u > 0, d >= 1");
  }
  const double e1 = std::sqrt(static_cast<double>(d)) * p * std::pow(u, p - 1.0);
  const double e2 = kind == reg::ClipKind::Constant
                        ? static_cast<double>(d) * std::pow(u, p)
                        : static_cast<double>(d) * (1.0 - p) * std::pow(u, p);
  return {e1, e2};
}

/// Numerical maxima of the clipped penalty's gradient norm and gap. By
/// coordinate separability a 1-D scan suffices: the gradient-norm max sits on
/// the diagonal (factor sqrt(d)) and the gap max at the origin (factor d).
/// The scan runs over a log grid on (0, 10u] plus the points 0 and u; at the
/// knot both branch derivatives count (subgradients).
inline std::pair<double, double> clipping_grid_oracle(reg::ClipKind kind,
                                                      std::size_t d, double p,
                                                      double u,
                                                      std::size_t grid_n) {
  if (grid_n < 100) {
    throw DomainError("clipping_grid_oracle: grid_n must be >= 100");
  }
  if (!(p > 0.0) || !(p < 1.0) || !(u > 0.0) || d < 1) {
    throw DomainError("clipping_grid_oracle: need p in (0,1), u > 0, d >= 1");
  }
  const double slope = p * std::pow(u, p - 1.0);
  const double offset = (1.0 - p) * std::pow(u, p);

  auto branch_value = [&](double a) {
    if (a > u) {
      return std::pow(a, p);
    }
    return kind == reg::ClipKind::Constant ? std::pow(u, p) : slope * a + offset;
  };
  auto max_subgrad = [&](double a) {
    const double clipped = kind == reg::ClipKind::Constant ? 0.0 : slope;
    if (a > u) {
      return p * std::pow(a, p - 1.0);
    }
    if (a == u) {
      return std::max(clipped, p * std::pow(a, p - 1.0));
    }
    return clipped;
  };

  std::vector<double> grid;
  grid.reserve(grid_n + 2);
  grid.push_back(0.0);
  grid.push_back(u);
  const double lo = std::log(u * 1e-9);
  const double hi = std::log(10.0 * u);
  for (std::size_t k = 0; k < grid_n; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(grid_n - 1);
    grid.push_back(std::exp(lo + t * (hi - lo)));
  }

  double grad_max = 0.0;
  double gap_max = 0.0;
  for (double a : grid) {
    if (a > 0.0) {
      grad_max = std::max(grad_max, max_subgrad(a));
    }
    gap_max = std::max(gap_max, std::abs(branch_value(a) - std::pow(a, p)));
  }
  return {std::sqrt(static_cast<double>(d)) * grad_max,
          static_cast<double>(d) * gap_max};
}

struct Thm27Report {
  bool holds = true;
  std::size_t points_checked = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
};

/// Scans clipping thresholds u over [1e-6, 1e3] (log grid) and asserts the
/// mutual exclusion: no u keeps both the gradient bound and the
/// approximation error small. Constant kind sweeps p over (0,1) as well;
/// the l1-tangent kind is checked at its critical p = 1 - 1/(cd) - 1e-9
/// together with a few smaller exponents.
inline Thm27Report check_thm_27(reg::ClipKind kind, std::size_t d, double c = 1.0,
                                std::size_t u_points = 1000) {
  if (kind == reg::ClipKind::L1Tangent && !(c >= 1.0)) {
    throw DomainError("check_thm_27: l1 clause needs c >= 1");
  }
  std::vector<double> ps;
  if (kind == reg::ClipKind::Constant) {
    for (int j = 1; j <= 99; ++j) {
      ps.push_back(static_cast<double>(j) / 100.0);
    }
  } else {
    const double p_max = 1.0 - 1.0 / (c * static_cast<double>(d)) - 1e-9;
    for (int j = 1; j <= 7; ++j) {
      ps.push_back(p_max * static_cast<double>(j) / 8.0);
    }
    ps.push_back(p_max);
  }

  const double sqrt_d = std::sqrt(static_cast<double>(d));
  const double e2_bound = kind == reg::ClipKind::Constant
                              ? static_cast<double>(d) / (2.0 * std::exp(1.0))
                              : 1.0 / (c * std::exp(1.0));

  Thm27Report rep;
  const double lo = std::log(1e-6);
  const double hi = std::log(1e3);
  for (double p : ps) {
    for (std::size_t k = 0; k < u_points; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(u_points - 1);
      const double u = std::exp(lo + t * (hi - lo));
      const auto [e1, e2] = clipping_closed_forms(kind, d, p, u);
      ++rep.points_checked;
      if (e1 <= sqrt_d) {
        rep.worst_margin = std::min(rep.worst_margin, e2 - e2_bound);
        if (!(e2 > e2_bound)) {
          rep.holds = false;
        }
      }
    }
  }
  return rep;
}

enum class Example21Mode { Adaptive, NonAdaptive };

/// Exact 1-D saddle-escape recursions on f(x) = (x-1)^2 from y(0) = -1.
/// Adaptive is the reparameterized step with M = 0, eps = 0, lambda = 0;
/// NonAdaptive multiplies the gradient by y^{K-1}. Returns |y(t) - 1| for
/// t = 0..T.
inline std::vector<double> example21_simulate(int K, double eta,
                                              Example21Mode mode,
                                              std::size_t T,
                                              double y0 = -1.0) {
  if (K < 3 || K % 2 == 0) {
    throw InvalidParams("example21_simulate: K must be odd >= 3");
  }
  if (mode == Example21Mode::Adaptive && !(eta < 1.0 / (2.0 * K))) {
    throw PreconditionViolated("example21_simulate: adaptive needs eta < 1/(2K)");
  }
  if (mode == Example21Mode::NonAdaptive && !(eta < 0.25)) {
    throw PreconditionViolated("example21_simulate: non-adaptive needs eta < 1/4");
  }

  const auto objective = problems::make_scalar_shifted_square();
  reg::ImplicitRegParams prm{K, 0.0, 0.0, 0.0};
  opt::ReWAState state = opt::rewa_init(DenseVector({signed_pow(y0, K)}), prm);
  // init through the K-th root recovers y0 up to rounding; pin it exactly
  state.y = DenseVector({y0});

  std::vector<double> dist;
  dist.reserve(T + 1);
  dist.push_back(std::abs(y0 - 1.0));
  for (std::size_t t = 0; t < T; ++t) {
    const DenseVector x = opt::readout(state);
    const DenseVector grad = objective->gradient(x);
    if (mode == Example21Mode::Adaptive) {
      state = opt::rewa_step(state, grad, eta);
    } else {
      state.y = opt::nonadaptive_step(state.y, grad, eta, 0.0, K);
    }
    dist.push_back(std::abs(state.y[0] - 1.0));
  }
  return dist;
}

struct BallLpResult {
  DenseVector argmin = DenseVector::zeros(2);
  double value = 0.0;
};

/// Brute-force minimizer of ||theta||_p^p over the 2-D disk
/// (theta0-u)^2 + (theta1-u)^2 <= u^2, on a uniform grid with one
/// deterministic refinement around the coarse argmin. Ties break toward the
/// lexicographically smallest point.
inline BallLpResult ball_lp_grid_oracle(double p, double u, std::size_t grid_n) {
  if (!(p > 0.0) || p > 1.0 || !(u > 0.0)) {
    throw DomainError("ball_lp_grid_oracle: need p in (0,1] and u > 0");
  }
  if (grid_n < 1000) {
    throw DomainError("ball_lp_grid_oracle: grid_n must be >= 1000");
  }

  auto scan = [&](double lo0, double hi0, double lo1, double hi1,
                  BallLpResult best) {
    std::vector<double> axis0(grid_n);
    std::vector<double> axis1(grid_n);
    std::vector<double> pow0(grid_n);
    std::vector<double> pow1(grid_n);
    for (std::size_t i = 0; i < grid_n; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(grid_n - 1);
      axis0[i] = lo0 + t * (hi0 - lo0);
      axis1[i] = lo1 + t * (hi1 - lo1);
      pow0[i] = std::pow(std::abs(axis0[i]), p);
      pow1[i] = std::pow(std::abs(axis1[i]), p);
    }
    const double r2 = u * u;
    for (std::size_t i = 0; i < grid_n; ++i) {
      const double d0 = axis0[i] - u;
      const double d0sq = d0 * d0;
      if (d0sq > r2) {
        continue;
      }
      for (std::size_t j = 0; j < grid_n; ++j) {
        const double d1 = axis1[j] - u;
        if (d0sq + d1 * d1 > r2) {
          continue;
        }
        const double v = pow0[i] + pow1[j];
        const bool better =
            v < best.value ||
            (v == best.value &&
             (axis0[i] < best.argmin[0] ||
              (axis0[i] == best.argmin[0] && axis1[j] < best.argmin[1])));
        if (better) {
          best.value = v;
          best.argmin = DenseVector({axis0[i], axis1[j]});
        }
      }
    }
    return best;
  };

  BallLpResult best;
  best.argmin = DenseVector({u, u});
  best.value = 2.0 * std::pow(u, p);
  best = scan(0.0, 2.0 * u, 0.0, 2.0 * u, best);

  // second pass at doubled resolution: same point count over half the span,
  // centered on the coarse argmin
  const double w = 0.5 * u;
  const double a0 = best.argmin[0];
  const double a1 = best.argmin[1];
  best = scan(std::max(0.0, a0 - w), std::min(2.0 * u, a0 + w),
              std::max(0.0, a1 - w), std::min(2.0 * u, a1 + w), best);
  return best;
}

struct WeightDecayCell {
  double lambda = 0.0;
  double converged_max_abs_x = 0.0;
  std::size_t steps_run = 0;
  bool converged = false;
};

struct WeightDecayReport {
  double alpha = 0.0;
  int K = 3;
  // lambda = 0 run: worst deviation of the null-space coordinate of x from
  // alpha^K across all steps
  double null_coordinate_max_deviation = 0.0;
  std::vector<WeightDecayCell> cells;
};

/// Tied reparameterized gradient descent on f(x) = x' diag(1, 0) x from
/// y(0) = (alpha, alpha), with and without decay. Without decay the
/// null-space coordinate of x never moves; with decay both coordinates
/// shrink to zero, faster for larger lambda.
inline WeightDecayReport weight_decay_demo(const std::vector<double>& lambda_grid,
                                           double alpha, int K,
                                           std::size_t steps, double eta = 0.1) {
  if (K < 3 || K % 2 == 0) {
    throw InvalidParams("weight_decay_demo: K must be odd >= 3");
  }
  const auto objective = problems::make_quadratic(DenseVector({1.0, 0.0}));

  WeightDecayReport rep;
  rep.alpha = alpha;
  rep.K = K;

  const double null_target = signed_pow(alpha, K);
  DenseVector y = DenseVector::constant(2, alpha);
  for (std::size_t t = 0; t < steps; ++t) {
    const DenseVector x = signed_power(y, K);
    rep.null_coordinate_max_deviation = std::max(
        rep.null_coordinate_max_deviation, std::abs(x[1] - null_target));
    y = opt::nonadaptive_step(y, objective->gradient(x), eta, 0.0, K);
  }

  for (double lambda : lambda_grid) {
    WeightDecayCell cell;
    cell.lambda = lambda;
    DenseVector yl = DenseVector::constant(2, alpha);
    std::size_t quiet = 0;
    const std::size_t cap = 5'000'000;
    std::size_t t = 0;
    for (; t < cap; ++t) {
      const DenseVector x = signed_power(yl, K);
      const DenseVector next =
          opt::nonadaptive_step(yl, objective->gradient(x), eta, lambda, K);
      double delta = 0.0;
      for (std::size_t i = 0; i < 2; ++i) {
        delta = std::max(delta, std::abs(next[i] - yl[i]));
      }
      yl = next;
      quiet = delta < 1e-10 ? quiet + 1 : 0;
      if (quiet >= 100) {
        cell.converged = true;
        break;
      }
    }
    cell.steps_run = t + 1;
    cell.converged_max_abs_x = max_abs(signed_power(yl, K));
    rep.cells.push_back(cell);
  }
  return rep;
}

struct StagnationRunResult {
  DenseVector y;
  std::size_t steps = 0;
  bool converged = false;
};

/// Runs the non-adaptive scheme with constant eta until the iterate change
/// stays below 1e-10 for 100 consecutive steps (or the cap is hit).
inline StagnationRunResult run_nonadaptive_to_stagnation(
    const problems::Objective& obj, const DenseVector& x0, double eta,
    double lambda, int K, std::size_t max_steps) {
  StagnationRunResult out{signed_power(x0, 1.0 / K), 0, false};
  std::size_t quiet = 0;
  for (std::size_t t = 0; t < max_steps; ++t) {
    const DenseVector x = signed_power(out.y, K);
    const DenseVector next =
        opt::nonadaptive_step(out.y, obj.gradient(x), eta, lambda, K);
    double delta = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      delta = std::max(delta, std::abs(next[i] - out.y[i]));
    }
    out.y = next;
    out.steps = t + 1;
    quiet = delta < 1e-10 ? quiet + 1 : 0;
    if (quiet >= 100) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace rewa::theory
