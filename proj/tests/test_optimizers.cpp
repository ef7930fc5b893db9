#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "rewa/optimizers.hpp"
#include "rewa/records.hpp"
#include "rewa/rng.hpp"
#include "rewa/theory.hpp"

using namespace rewa;
using namespace rewa::opt;

namespace {

// random orthogonal design with ||x_j||^2 = n, by Gram-Schmidt on gaussian
// columns scaled by sqrt(n)
problems::RegressionDataset orthogonal_dataset(std::uint64_t seed, std::size_t n,
                                               std::size_t d) {
  GaussianSampler g(seed);
  std::vector<std::vector<double>> cols(d, std::vector<double>(n));
  for (auto& col : cols) {
    for (auto& v : col) {
      v = g.next();
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        dot += cols[j][i] * cols[k][i];
      }
      for (std::size_t i = 0; i < n; ++i) {
        cols[j][i] -= dot * cols[k][i];
      }
    }
    double nrm = 0.0;
    for (double v : cols[j]) {
      nrm += v * v;
    }
    nrm = std::sqrt(nrm);
    for (auto& v : cols[j]) {
      v /= nrm;
    }
  }
  problems::RegressionDataset ds;
  ds.X.assign(n, std::vector<double>(d));
  const double scale = std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      ds.X[i][j] = scale * cols[j][i];
    }
  }
  ds.beta_star.assign(d, 0.0);
  ds.y.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    ds.y[i] = g.next();
  }
  return ds;
}

}  // namespace

TEST_CASE("rewa_init examples") {
  const reg::ImplicitRegParams prm{3, 0.0, 0.0, 0.0};
  CHECK(rewa_init(DenseVector({-8.0}), prm).y[0] == Catch::Approx(-2.0));
  const auto s = rewa_init(DenseVector({1.0, 1.0}), {7, 2.0, 0.0, 0.0});
  CHECK(s.y[0] == Catch::Approx(1.0));
  CHECK(s.t == 0);
  CHECK_THROWS_AS(rewa_init(DenseVector({1.0}), {4, 0.0, 0.0, 0.0}),
                  InvalidParams);
}

TEST_CASE("init round trip over random starts") {
  Pcg32 rng(5);
  for (int K : {3, 5, 7, 9}) {
    for (int rep = 0; rep < 250; ++rep) {
      std::vector<double> x(1 + rep % 5);
      for (auto& v : x) {
        v = -3.0 + 6.0 * rng.next_double();
      }
      const DenseVector x0(x);
      const auto s = rewa_init(x0, {K, 0.0, 0.0, 0.0});
      const auto back = readout(s);
      for (std::size_t i = 0; i < x0.size(); ++i) {
        CHECK(back[i] == Catch::Approx(x0[i]).margin(1e-10).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("rewa_step hand-computed values on the scalar problem") {
  const reg::ImplicitRegParams prm{3, 0.0, 0.0, 0.0};
  ReWAState s = rewa_init(DenseVector({1.0}), prm);
  s.y = DenseVector({-1.0});
  // grad at x = y^3 = -1 is 2(-1-1) = -4
  const auto s1 = rewa_step(s, DenseVector({-4.0}), 0.1);
  CHECK(s1.y[0] == Catch::Approx(-0.6));
  CHECK(s1.t == 1);

  s.y = DenseVector({-0.5});
  const auto s2 = rewa_step(s, DenseVector({2.0 * (-0.125 - 1.0)}), 0.1);
  CHECK(s2.y[0] == Catch::Approx(-0.275));
}

TEST_CASE("rewa_step fixed point at zero gradient without decay") {
  const reg::ImplicitRegParams prm{5, 2.0, 0.1, 0.0};
  ReWAState s = rewa_init(DenseVector({0.7, -0.2}), prm);
  const auto s1 = rewa_step(s, DenseVector::zeros(2), 0.05);
  CHECK(s1.y[0] == s.y[0]);
  CHECK(s1.y[1] == s.y[1]);
}

TEST_CASE("rewa_step rejects oversized decay step") {
  const reg::ImplicitRegParams prm{3, 0.0, 0.0, 2.0};
  ReWAState s = rewa_init(DenseVector({1.0}), prm);
  CHECK_THROWS_AS(rewa_step(s, DenseVector({0.0}), 0.5), StepTooLarge);
}

TEST_CASE("epsilon-zero path equals the ratio form away from zero") {
  Pcg32 rng(42);
  for (int rep = 0; rep < 300; ++rep) {
    const int K = 3 + 2 * static_cast<int>(rng.next_u32() % 4);
    const double M = rng.next_double() * (K - 1);
    std::vector<double> y(3);
    for (auto& v : y) {
      v = 1e-3 + 2.0 * rng.next_double();
      if (rng.next_u32() % 2 == 0) {
        v = -v;
      }
    }
    std::vector<double> g(3);
    for (auto& v : g) {
      v = -2.0 + 4.0 * rng.next_double();
    }
    const double eta = 0.01 + 0.1 * rng.next_double();

    reg::ImplicitRegParams simplified{K, M, 0.0, 0.0};
    ReWAState s{DenseVector(y), simplified, 0, std::nullopt};
    const auto stepped = rewa_step(s, DenseVector(g), eta);

    // literal ratio with a vanishing epsilon stands in for the eps = 0 limit
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double yk1 = std::pow(std::abs(y[i]), K - 1.0);
      const double factor = std::pow(std::abs(y[i]), M) * yk1 / (yk1 + 0.0);
      const double expect = y[i] - eta * factor * g[i];
      CHECK(stepped.y[i] == Catch::Approx(expect).epsilon(1e-10));
    }
  }
}

TEST_CASE("rewa_step with K=1 reduces to decoupled weight decay SGD") {
  Pcg32 rng(43);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> x(4);
    std::vector<double> g(4);
    for (auto& v : x) {
      v = -2.0 + 4.0 * rng.next_double();
    }
    for (auto& v : g) {
      v = -2.0 + 4.0 * rng.next_double();
    }
    const double eta = 0.05;
    const double lambda = 0.3;
    ReWAState s = rewa_init(DenseVector(x), {1, 0.0, 0.0, lambda});
    const auto stepped = rewa_step(s, DenseVector(g), eta);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(stepped.y[i] ==
            Catch::Approx((1.0 - lambda * eta) * x[i] - eta * g[i]).epsilon(1e-14));
    }
  }
}

TEST_CASE("nonadaptive_step hand value and saddle trap") {
  const auto s = nonadaptive_step(DenseVector({-0.5}),
                                  DenseVector({2.0 * (-0.125 - 1.0)}), 0.1, 0.0, 3);
  CHECK(s[0] == Catch::Approx(-0.44375));

  // a zero coordinate never moves, whatever the gradient
  DenseVector y({0.0, 0.4});
  for (int t = 0; t < 50; ++t) {
    y = nonadaptive_step(y, DenseVector({100.0, 0.1}), 0.1, 0.0, 3);
    CHECK(y[0] == 0.0);
  }

  const auto unchanged = nonadaptive_step(DenseVector({0.3}), DenseVector({0.0}),
                                          0.1, 0.0, 3);
  CHECK(unchanged[0] == Catch::Approx(0.3));
}

TEST_CASE("rewa_adamw_step examples") {
  {
    ReWAState s = rewa_init(DenseVector({0.5}), {3, 0.0, 0.0, 0.0}, true);
    const auto s1 = rewa_adamw_step(s, DenseVector({0.0}), 0.01);
    CHECK(s1.y[0] == s.y[0]);
  }
  {
    // beta1 = beta2 = 0 degenerates to the RMS-normalized sign-free step
    ReWAState s = rewa_init(DenseVector({0.8}), {3, 0.0, 0.0, 0.0}, true, 0.0,
                            0.0, 1e-8);
    const double g = 1.7;
    const auto s1 = rewa_adamw_step(s, DenseVector({g}), 0.01);
    CHECK(s1.y[0] ==
          Catch::Approx(s.y[0] - 0.01 * g / (std::abs(g) + 1e-8)).epsilon(1e-12));
  }
  {
    // one bias-corrected step from zero
    ReWAState s = rewa_init(DenseVector({0.0}), {3, 0.0, 0.0, 0.0}, true);
    const auto s1 = rewa_adamw_step(s, DenseVector({1.0}), 0.001);
    CHECK(s1.y[0] == Catch::Approx(-0.001).epsilon(1e-6));
  }
  {
    ReWAState s = rewa_init(DenseVector({0.0}), {3, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(rewa_adamw_step(s, DenseVector({1.0}), 0.01), InvalidParams);
  }
}

TEST_CASE("sgd_l1_step examples") {
  CHECK(sgd_l1_step(DenseVector({1.0}), DenseVector({0.0}), 1.0, 0.1)[0] ==
        Catch::Approx(0.9));
  CHECK(sgd_l1_step(DenseVector({0.0}), DenseVector({0.0}), 1.0, 0.1)[0] == 0.0);
  CHECK(sgd_l1_step(DenseVector({-1.0}), DenseVector({0.0}), 1.0, 0.1)[0] ==
        Catch::Approx(-0.9));
}

TEST_CASE("soft_threshold examples") {
  CHECK(soft_threshold(1.5, 1.0) == Catch::Approx(0.5));
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-3.25, 0.0) == -3.25);
}

TEST_CASE("lasso matches the orthogonal-design closed form") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto ds = orthogonal_dataset(seed, 16, 8);
    const double lambda1 = 0.01 + 0.02 * (seed % 5);
    const auto beta = lasso_cd_solve(ds, lambda1, 500, 1e-12);
    for (std::size_t j = 0; j < 8; ++j) {
      double xty = 0.0;
      for (std::size_t i = 0; i < 16; ++i) {
        xty += ds.X[i][j] * ds.y[i];
      }
      const double expect = soft_threshold(xty / 16.0, lambda1);
      CHECK(beta[j] == Catch::Approx(expect).margin(1e-8));
    }
  }
}

TEST_CASE("lasso deactivates fully above lambda_max") {
  const auto ds = orthogonal_dataset(7, 16, 8);
  double lambda_max = 0.0;
  for (std::size_t j = 0; j < 8; ++j) {
    double xty = 0.0;
    for (std::size_t i = 0; i < 16; ++i) {
      xty += ds.X[i][j] * ds.y[i];
    }
    lambda_max = std::max(lambda_max, std::abs(xty / 16.0));
  }
  const auto beta = lasso_cd_solve(ds, lambda_max * 1.0001, 100, 1e-12);
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(beta[j] == 0.0);
  }
}

TEST_CASE("lasso with zero penalty solves least squares on orthonormal designs") {
  const auto ds = orthogonal_dataset(11, 12, 6);
  const auto beta = lasso_cd_solve(ds, 0.0, 500, 1e-12);
  // residual must be orthogonal to every column
  for (std::size_t j = 0; j < 6; ++j) {
    double dot = 0.0;
    for (std::size_t i = 0; i < 12; ++i) {
      double pred = 0.0;
      for (std::size_t k = 0; k < 6; ++k) {
        pred += ds.X[i][k] * beta[k];
      }
      dot += ds.X[i][j] * (ds.y[i] - pred);
    }
    CHECK(dot == Catch::Approx(0.0).margin(1e-8));
  }
}

TEST_CASE("lasso reports non-convergence with the last iterate") {
  const auto ds = orthogonal_dataset(13, 16, 8);
  try {
    lasso_cd_solve(ds, 1e-6, 1, 0.0);  // tol 0 cannot be met in one sweep
    FAIL("expected NotConverged");
  } catch (const NotConverged& e) {
    CHECK(e.last_iterate.size() == 8);
  }
}

TEST_CASE("run_training with zero epochs records only the initial row") {
  const auto obj = problems::make_quadratic(DenseVector({1.0, 2.0}));
  MethodConfig mc;
  mc.kind = MethodKind::RewaSgd;
  mc.params = {3, 0.0, 0.0, 0.0};
  const auto rec = run_training(*obj, mc, Schedule::constant(0.1), 0, 1, 1, 10,
                                default_thresholds(), DenseVector({0.5, -0.5}));
  REQUIRE(rec.rows.size() == 1);
  CHECK(rec.rows[0].step == 0);
  CHECK(rec.final_x[0] == Catch::Approx(0.5).margin(1e-10));
  CHECK(rec.final_x[1] == Catch::Approx(-0.5).margin(1e-10));
}

TEST_CASE("run_training is bit-deterministic given the seed") {
  const auto ds = std::make_shared<const problems::RegressionDataset>(
      problems::make_linreg(3, 6, 30, {{0, 1.0}}, 0.5));
  const auto obj = problems::linreg_objective(ds);
  MethodConfig mc;
  mc.kind = MethodKind::RewaSgd;
  mc.params = {3, 0.0, 0.0, 1e-3};
  const auto sched = Schedule::cosine(0.05, 60);
  const auto a = run_training(*obj, mc, sched, 10, 5, 9, 7, default_thresholds(),
                              DenseVector::constant(6, 0.1));
  const auto b = run_training(*obj, mc, sched, 10, 5, 9, 7, default_thresholds(),
                              DenseVector::constant(6, 0.1));
  CHECK(records::run_record_csv(a) == records::run_record_csv(b));
  CHECK(a.final_x == b.final_x);
  const auto c = run_training(*obj, mc, sched, 10, 5, 10, 7, default_thresholds(),
                              DenseVector::constant(6, 0.1));
  CHECK(records::run_record_csv(a) != records::run_record_csv(c));
}

TEST_CASE("run_training propagates step failures with the step index") {
  const auto obj = problems::make_quadratic(DenseVector({1.0}));
  MethodConfig mc;
  mc.kind = MethodKind::RewaSgd;
  mc.params = {3, 0.0, 0.0, 0.0};
  // grossly unstable step size blows up the iterate
  try {
    run_training(*obj, mc, Schedule::constant(1e6), 200, 1, 1, 50,
                 default_thresholds(), DenseVector({2.0}));
    FAIL("expected TrainingFailure");
  } catch (const TrainingFailure& e) {
    CHECK(e.step > 0);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
    CHECK(!e.partial.rows.empty());
  }
}

TEST_CASE("substationarity holds at stagnation of the nonadaptive scheme") {
  std::vector<double> diag(10);
  for (int i = 0; i < 10; ++i) {
    diag[i] = 0.5 + 0.1 * i;
  }
  const auto obj = problems::make_quadratic(DenseVector(diag));
  for (int K : {3, 5}) {
    const auto run = theory::run_nonadaptive_to_stagnation(
        *obj, DenseVector::constant(10, 0.8), 0.1, 1e-3, K, 3000000);
    REQUIRE(run.converged);
    const auto x = signed_power(run.y, K);
    CHECK(theory::substationarity_gap(x, obj->gradient(x), 1e-3, K) <= 1e-3);
  }
}

TEST_CASE("schedules") {
  CHECK(Schedule::constant(0.1).eta(5) == 0.1);
  CHECK(Schedule::inverse_sqrt(0.2).eta(4) == Catch::Approx(0.1));
  const auto cos = Schedule::cosine(1.0, 100);
  CHECK(cos.eta(1) == Catch::Approx(1.0));
  CHECK(cos.eta(100) > 0.0);
  CHECK(cos.eta(51) < cos.eta(50));
  const auto warm = Schedule::cosine(1.0, 100, 10);
  CHECK(warm.eta(5) == Catch::Approx(0.5));
  CHECK(warm.eta(10) == Catch::Approx(1.0));
  CHECK_THROWS_AS(Schedule::constant(0.1).eta(0), DomainError);
}

TEST_CASE("training loop reproduces the saddle-escape envelope") {
  const auto obj = problems::make_scalar_shifted_square();
  MethodConfig mc;
  mc.kind = MethodKind::RewaSgd;
  mc.params = {3, 0.0, 0.0, 0.0};
  const double eta = 0.15;  // < 1/(2K)
  const std::size_t T = 2000;
  const auto rec = run_training(*obj, mc, Schedule::constant(eta), T, 1, 1, 500,
                                default_thresholds(), DenseVector({-1.0}));
  const double y_final = signed_pow(rec.final_x[0], 1.0 / 3.0);
  const double bound = 2.0 * std::pow(1.0 - 2.0 * eta / 2.0, double(T));
  CHECK(std::abs(y_final - 1.0) <= bound + 1e-12);
  CHECK(rec.rows.back().train_loss < 1e-12);
}
