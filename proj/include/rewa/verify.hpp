#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "rewa/metrics.hpp"
#include "rewa/optimizers.hpp"
#include "rewa/problems.hpp"
#include "rewa/rng.hpp"
#include "rewa/theory.hpp"

namespace rewa::verify {

/// One verified property: pass/fail plus the worst margin observed
/// (positive margins mean the inequality held with that much room).
struct CheckResult {
  std::string name;
  std::size_t samples = 0;
  bool pass = false;
  double worst_margin = 0.0;
};

inline CheckResult make_result(std::string name, std::size_t samples, bool pass,
                               double margin) {
  return {std::move(name), samples, pass, margin};
}

/// Saddle-escape envelopes: adaptive trajectories under the geometric bound
/// 2(1 - 2 eta/(K-1))^t at every step, non-adaptive ones trapped at
/// distance >= 1. `samples` picks how many odd K values to exercise.
inline std::vector<CheckResult> suite_example21(std::size_t samples = 3,
                                                std::size_t T = 10000) {
  std::vector<CheckResult> out;
  const double slack = 1e-12;
  for (std::size_t s = 0; s < samples; ++s) {
    const int K = 3 + 2 * static_cast<int>(s);
    const double eta = 0.9 / (2.0 * K);
    const auto traj =
        theory::example21_simulate(K, eta, theory::Example21Mode::Adaptive, T);
    double margin = std::numeric_limits<double>::infinity();
    bool pass = true;
    const double rate = 1.0 - 2.0 * eta / (K - 1);
    double bound = 2.0;
    for (std::size_t t = 0; t < traj.size(); ++t) {
      margin = std::min(margin, bound - traj[t] + slack);
      pass = pass && traj[t] <= bound + slack;
      bound *= rate;
    }
    out.push_back(make_result("example21/adaptive_envelope_K" + std::to_string(K),
                              traj.size(), pass, margin));
  }
  for (double etap : {0.05, 0.1, 0.2}) {
    const auto traj = theory::example21_simulate(
        3, etap, theory::Example21Mode::NonAdaptive, T);
    double margin = std::numeric_limits<double>::infinity();
    bool pass = true;
    for (double dist : traj) {
      margin = std::min(margin, dist - 1.0 + slack);
      pass = pass && dist >= 1.0 - slack;
    }
    out.push_back(make_result("example21/nonadaptive_trapped_eta" +
                                  std::to_string(etap).substr(0, 4),
                              traj.size(), pass, margin));
  }
  return out;
}

/// Randomized stagnation-radius inequalities over valid inputs.
inline std::vector<CheckResult> suite_stagnation(std::size_t samples = 10000,
                                                 std::uint64_t seed = 20240601) {
  Pcg32 rng(seed);
  auto logu = [&](double lo, double hi) {
    return lo * std::exp(rng.next_double() * std::log(hi / lo));
  };
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::size_t n3 = 0;
  bool pass = true;
  for (std::size_t s = 0; s < samples; ++s) {
    theory::StagnationInputs in;
    in.eta = logu(1e-3, 10.0);
    in.B = logu(1e-2, 100.0);
    in.lambda = (rng.next_u32() % 5 == 0) ? 0.0 : logu(1e-6, 0.5);
    if (in.lambda * in.eta >= 1.0) {
      in.lambda = 0.5 / in.eta;
    }
    const int ks[6] = {3, 5, 7, 9, 11, 13};
    in.K = ks[rng.next_u32() % 6];
    in.M = rng.next_double() * (in.K - 1);
    in.epsilon = (rng.next_u32() % 3 == 0) ? 0.0 : logu(1e-6, 0.99);
    const auto rep = theory::check_prop_211(in);
    if (rep.u1_le_u3.has_value()) {
      ++n1;
      pass = pass && *rep.u1_le_u3;
    }
    if (rep.u2_le_u3.has_value()) {
      ++n2;
      pass = pass && *rep.u2_le_u3;
    }
    if (rep.all_gt_1.has_value()) {
      ++n3;
      pass = pass && *rep.all_gt_1;
    }
  }
  std::vector<CheckResult> out;
  out.push_back(make_result("stagnation/u1_le_u3", n1, pass, 0.0));
  out.push_back(make_result("stagnation/u2_le_u3", n2, pass, 0.0));
  out.push_back(make_result("stagnation/all_gt_1", n3, pass, 0.0));

  // F round trip on the sampled U2 cases
  Pcg32 rng2(seed + 1);
  auto logu2 = [&](double lo, double hi) {
    return lo * std::exp(rng2.next_double() * std::log(hi / lo));
  };
  double worst = std::numeric_limits<double>::infinity();
  std::size_t nrt = 0;
  bool rt_pass = true;
  for (std::size_t s = 0; s < std::min<std::size_t>(samples, 2000); ++s) {
    theory::StagnationInputs in;
    in.eta = logu2(1e-2, 10.0);
    in.B = logu2(1e-1, 10.0);
    in.lambda = 0.0;
    in.K = 3 + 2 * static_cast<int>(rng2.next_u32() % 6);
    in.M = 0.0;
    in.epsilon = logu2(1e-6, 0.5);
    try {
      const double u2 = theory::stagnation_u2(in);
      const double f = u2 + in.epsilon * std::pow(u2, -(double(in.K) - 2.0));
      const double rel = std::abs(f - 1.0 / in.C()) / (1.0 / in.C());
      worst = std::min(worst, 1e-10 - rel);
      rt_pass = rt_pass && rel <= 1e-10;
      ++nrt;
    } catch (const ConditionViolated&) {
    } catch (const NoRoot&) {
    }
  }
  out.push_back(make_result("stagnation/F_round_trip", nrt, rt_pass, worst));
  return out;
}

/// Clipping tradeoff: closed forms against the separable grid oracle, and
/// the mutual-exclusion scans of both clipping kinds.
inline std::vector<CheckResult> suite_clipping(std::uint64_t seed = 7) {
  std::vector<CheckResult> out;

  Pcg32 rng(seed);
  auto logu = [&](double lo, double hi) {
    return lo * std::exp(rng.next_double() * std::log(hi / lo));
  };
  double worst = std::numeric_limits<double>::infinity();
  bool agree = true;
  for (int s = 0; s < 50; ++s) {
    const double p = 0.05 + 0.9 * rng.next_double();
    const double u = logu(1e-4, 10.0);
    const std::size_t d = 1 + rng.next_u32() % 200;
    const auto kind =
        (s % 2 == 0) ? reg::ClipKind::Constant : reg::ClipKind::L1Tangent;
    const auto [e1c, e2c] = theory::clipping_closed_forms(kind, d, p, u);
    const auto [e1n, e2n] = theory::clipping_grid_oracle(kind, d, p, u, 2000);
    const double rel =
        std::max(std::abs(e1n - e1c) / e1c, std::abs(e2n - e2c) / e2c);
    worst = std::min(worst, 1e-6 - rel);
    agree = agree && rel <= 1e-6;
  }
  out.push_back(make_result("clipping/oracle_matches_closed_forms", 50, agree, worst));

  for (std::size_t d : {2, 4, 16, 100}) {
    const auto rep = theory::check_thm_27(reg::ClipKind::Constant, d);
    out.push_back(make_result("clipping/mutual_exclusion_constant_d" +
                                  std::to_string(d),
                              rep.points_checked, rep.holds, rep.worst_margin));
  }
  const std::pair<std::size_t, double> l1_cases[3] = {{10, 1.0}, {10, 2.0}, {100, 4.0}};
  for (const auto& [d, c] : l1_cases) {
    const auto rep = theory::check_thm_27(reg::ClipKind::L1Tangent, d, c);
    out.push_back(make_result("clipping/mutual_exclusion_l1_d" + std::to_string(d) +
                                  "_c" + std::to_string(static_cast<int>(c)),
                              rep.points_checked, rep.holds, rep.worst_margin));
  }
  return out;
}

/// l1-vs-lp geometry on the 2-D disk: the l1 minimizer is dense, the lp
/// minimizers sit on an axis.
inline std::vector<CheckResult> suite_geometry(std::size_t grid_n = 2000) {
  std::vector<CheckResult> out;
  {
    const auto r = theory::ball_lp_grid_oracle(1.0, 1.0, grid_n);
    const double min_coord = std::min(r.argmin[0], r.argmin[1]);
    out.push_back(make_result("geometry/l1_dense", grid_n * grid_n,
                              min_coord > 0.25, min_coord - 0.25));
  }
  for (double p : {0.5, 0.3}) {
    const auto r = theory::ball_lp_grid_oracle(p, 1.0, grid_n);
    const double min_coord = std::min(r.argmin[0], r.argmin[1]);
    out.push_back(make_result("geometry/lp_sparse_p" + std::to_string(p).substr(0, 3),
                              grid_n * grid_n, min_coord < 1e-3,
                              1e-3 - min_coord));
  }
  return out;
}

/// Weight-decay necessity on the rank-deficient quadratic: without decay the
/// null coordinate is frozen at alpha^K; with decay the converged magnitude
/// shrinks monotonically as lambda grows, and is < 1e-2 at lambda = 1e-2.
inline std::vector<CheckResult> suite_weight_decay() {
  const auto rep = theory::weight_decay_demo({1e-2, 1e-3, 1e-4}, 0.5, 3, 100000);
  std::vector<CheckResult> out;
  out.push_back(make_result("weight_decay/null_coordinate_frozen", 100000,
                            rep.null_coordinate_max_deviation <= 1e-14,
                            1e-14 - rep.null_coordinate_max_deviation));
  // cells are ordered by descending lambda; magnitudes must ascend
  bool mono = true;
  for (std::size_t i = 1; i < rep.cells.size(); ++i) {
    mono = mono &&
           rep.cells[i - 1].converged_max_abs_x <= rep.cells[i].converged_max_abs_x;
  }
  out.push_back(make_result("weight_decay/monotone_in_lambda", rep.cells.size(),
                            mono, 0.0));
  const double at_1e2 = rep.cells.front().converged_max_abs_x;
  out.push_back(make_result("weight_decay/small_at_lambda_1e-2", 1,
                            at_1e2 < 1e-2, 1e-2 - at_1e2));
  return out;
}

/// Substationarity at stagnation of the non-adaptive scheme on a
/// strongly-convex quadratic.
inline std::vector<CheckResult> suite_substationarity() {
  std::vector<CheckResult> out;
  for (int K : {3, 5}) {
    std::vector<double> diag(10);
    for (int i = 0; i < 10; ++i) {
      diag[i] = 0.5 + 0.1 * i;
    }
    const auto obj = problems::make_quadratic(DenseVector(diag));
    const auto run = theory::run_nonadaptive_to_stagnation(
        *obj, DenseVector::constant(10, 0.8), 0.1, 1e-3, K, 3000000);
    const DenseVector x = signed_power(run.y, K);
    const double gap = theory::substationarity_gap(x, obj->gradient(x), 1e-3, K);
    out.push_back(make_result("substationarity/gap_K" + std::to_string(K),
                              run.steps, run.converged && gap <= 1e-3,
                              1e-3 - gap));
  }
  return out;
}

/// Residual decay along the adaptive run: the trajectory minimum of the
/// V-weighted stationarity residual at T = 1e4 falls well below its value
/// at T = 1e2.
inline std::vector<CheckResult> suite_residual_decay() {
  std::vector<double> diag(20);
  for (int i = 0; i < 20; ++i) {
    diag[i] = 0.5 + 0.08 * i;
  }
  const auto obj = problems::make_quadratic(DenseVector(diag));
  const reg::ImplicitRegParams prm{3, 2.0, 0.0, 1e-3};
  auto st = opt::rewa_init(DenseVector::constant(20, 1.0), prm);
  double min100 = std::numeric_limits<double>::infinity();
  double min_all = min100;
  for (std::size_t t = 1; t <= 10000; ++t) {
    const double eta = 0.1 / std::sqrt(static_cast<double>(t));
    const DenseVector x = opt::readout(st);
    st = opt::rewa_step(st, obj->gradient(x), eta);
    const DenseVector x2 = opt::readout(st);
    const double r = reg::stationarity_residual(x2, obj->gradient(x2), prm);
    if (t <= 100) {
      min100 = std::min(min100, r);
    }
    min_all = std::min(min_all, r);
  }
  std::vector<CheckResult> out;
  out.push_back(make_result("residual_decay/min_T1e4_below_tenth_of_T1e2", 10000,
                            min_all < 0.1 * min100, 0.1 * min100 - min_all));
  return out;
}

inline std::vector<CheckResult> run_suite(const std::string& name,
                                          std::size_t samples,
                                          std::uint64_t seed) {
  if (name == "example21") {
    return suite_example21(samples == 0 ? 3 : samples);
  }
  if (name == "stagnation") {
    return suite_stagnation(samples == 0 ? 10000 : samples, seed);
  }
  if (name == "clipping") {
    return suite_clipping(seed);
  }
  if (name == "geometry") {
    return suite_geometry();
  }
  if (name == "weight-decay") {
    return suite_weight_decay();
  }
  if (name == "substationarity") {
    return suite_substationarity();
  }
  if (name == "residual-decay") {
    return suite_residual_decay();
  }
  if (name == "all") {
    std::vector<CheckResult> out;
    for (const char* s : {"example21", "stagnation", "clipping", "geometry",
                          "weight-decay", "substationarity", "residual-decay"}) {
      const auto part = run_suite(s, samples, seed);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  throw InvalidConfig("unknown verify suite: " + name);
}

}  // namespace rewa::verify
