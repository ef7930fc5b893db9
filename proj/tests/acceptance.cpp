// Acceptance suite: one line per criterion, nonzero exit if any fails.
//  1 saddle-escape envelopes        6 substationarity at stagnation
//  2 stagnation-radius inequalities 7 residual decay along the run
//  3 clipping mutual exclusion      8 desk-scale sparse recovery
//  4 disk geometry oracle           9 lasso against the closed-form oracle
//  5 weight-decay necessity        10 training determinism

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "rewa/experiment.hpp"
#include "rewa/metrics.hpp"
#include "rewa/optimizers.hpp"
#include "rewa/problems.hpp"
#include "rewa/records.hpp"
#include "rewa/verify.hpp"

using namespace rewa;

namespace {

int failures = 0;

void report(int criterion, const std::string& name, bool pass,
            const std::string& detail, double seconds) {
  std::printf("criterion %2d %-28s %s  (%s; %.2fs)\n", criterion, name.c_str(),
              pass ? "PASS" : "FAIL", detail.c_str(), seconds);
  if (!pass) {
    ++failures;
  }
}

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

bool all_pass(const std::vector<verify::CheckResult>& results, double& margin) {
  bool ok = true;
  margin = std::numeric_limits<double>::infinity();
  for (const auto& r : results) {
    ok = ok && r.pass;
    margin = std::min(margin, r.worst_margin);
  }
  return ok;
}

char buffer[256];

std::string fmt(const char* format, ...) {
  va_list args;
  va_start(args, format);
  std::vsnprintf(buffer, sizeof(buffer), format, args);
  va_end(args);
  return std::string(buffer);
}

struct RecoveryRun {
  double test_loss = 0.0;
  std::size_t below_1e4 = 0;
  std::size_t below_1e6 = 0;
  bool exact = false;
};

RecoveryRun desk_recovery_run(std::uint64_t seed, bool use_rewa) {
  const auto ds = std::make_shared<const problems::RegressionDataset>(
      problems::make_linreg(seed, 200, 400, {{0, 1.0}}, 1.0));
  const auto train = problems::linreg_objective(ds);
  const auto test_ds = std::make_shared<const problems::RegressionDataset>(
      problems::test_split(*ds));
  const auto test = problems::linreg_objective(test_ds);

  opt::MethodConfig mc;
  if (use_rewa) {
    mc.kind = opt::MethodKind::RewaSgd;
    mc.params = reg::ImplicitRegParams{9, 4.0, 0.0, 1e-1};
  } else {
    mc.kind = opt::MethodKind::SgdL1;
    mc.lambda1 = 1e-1;
  }
  const std::size_t steps = 800 * (400 / 25);
  const auto sched = opt::Schedule::cosine(2e-3, steps);
  const auto rec = opt::run_training(*train, mc, sched, 800, 25, seed, steps,
                                     opt::default_thresholds(),
                                     DenseVector::constant(200, 1e-2),
                                     test.get());
  const DenseVector fx{rec.final_x};
  RecoveryRun out;
  out.test_loss = rec.rows.back().test_loss;
  out.below_1e4 = count_below(fx, 1e-4);
  out.below_1e6 = count_below(fx, 1e-6);
  out.exact =
      metrics::support_recovery(fx, DenseVector(ds->beta_star), 1e-2).exact;
  return out;
}

void criterion_recovery() {
  Timer timer;
  double mean_test = 0.0;
  double mean_b4 = 0.0;
  double mean_b6 = 0.0;
  double mean_b6_l1 = 0.0;
  int exact_seeds = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto r = desk_recovery_run(seed, true);
    const auto l = desk_recovery_run(seed, false);
    mean_test += r.test_loss / 3.0;
    mean_b4 += static_cast<double>(r.below_1e4) / 3.0;
    mean_b6 += static_cast<double>(r.below_1e6) / 3.0;
    mean_b6_l1 += static_cast<double>(l.below_1e6) / 3.0;
    exact_seeds += r.exact ? 1 : 0;
  }
  const bool a = mean_test <= 1.2;
  const bool b = mean_b4 >= 195.0;
  const bool c = exact_seeds >= 2;
  const bool d = mean_b6_l1 < mean_b6;
  report(8, "sparse_recovery_desk_scale", a && b && c && d,
         fmt("test=%.3f below1e-4=%.1f exact=%d/3 l1_below1e-6=%.1f vs %.1f",
             mean_test, mean_b4, exact_seeds, mean_b6_l1, mean_b6),
         timer.seconds());
}

void criterion_lasso_oracle() {
  Timer timer;
  bool ok = true;
  double worst = 0.0;
  GaussianSampler g(404);
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t n = 16;
    const std::size_t d = 8;
    // orthogonal design with column norms sqrt(n), Gram-Schmidt on gaussians
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
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        ds.X[i][j] = std::sqrt(static_cast<double>(n)) * cols[j][i];
      }
    }
    ds.beta_star.assign(d, 0.0);
    ds.y.assign(n, 0.0);
    for (auto& v : ds.y) {
      v = g.next();
    }

    const double lambda1 = 0.02 + 0.01 * inst;
    const auto beta = opt::lasso_cd_solve(ds, lambda1, 1000, 1e-13);
    double lambda_max = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double xty = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        xty += ds.X[i][j] * ds.y[i];
      }
      lambda_max = std::max(lambda_max, std::abs(xty / n));
      const double expect = opt::soft_threshold(xty / n, lambda1);
      worst = std::max(worst, std::abs(beta[j] - expect));
      ok = ok && std::abs(beta[j] - expect) <= 1e-8;
    }
    const auto zero = opt::lasso_cd_solve(ds, lambda_max * (1 + 1e-9), 1000, 1e-13);
    for (std::size_t j = 0; j < d; ++j) {
      ok = ok && zero[j] == 0.0;
    }
  }
  report(9, "lasso_orthogonal_oracle", ok, fmt("worst coordinate gap %.2e", worst),
         timer.seconds());
}

void criterion_determinism() {
  Timer timer;
  const auto base = std::filesystem::temp_directory_path() / "rewa_acceptance";
  std::filesystem::remove_all(base);
  cli::ExperimentConfig c;
  c.problem_kind = "linreg";
  c.d = 50;
  c.n = 100;
  c.support = {{0, 1.0}};
  c.noise_sigma = 1.0;
  c.data_seed = 11;
  c.method = "rewa_sgd";
  c.K = 9;
  c.M = 4.0;
  c.epsilon = 0.0;
  c.lambda = 0.05;
  c.schedule = "cosine";
  c.eta0 = 2e-3;
  c.init_kind = "gaussian";
  c.init_scale = 0.01;
  c.epochs = 50;
  c.batch_size = 25;
  c.seed = 1;
  c.log_every = 40;

  c.out_dir = (base / "a").string();
  const auto run1 = cli::cmd_train(c);
  c.out_dir = (base / "b").string();
  const auto run2 = cli::cmd_train(c);
  const bool same = records::read_file(run1.csv_path) ==
                    records::read_file(run2.csv_path);
  std::filesystem::remove_all(base);
  report(10, "training_determinism", same,
         same ? "csv bodies byte-identical" : "csv bodies differ",
         timer.seconds());
}

}  // namespace

int main() {
  {
    Timer timer;
    double margin = 0.0;
    const bool ok = all_pass(verify::suite_example21(3), margin);
    report(1, "saddle_escape_envelopes", ok, fmt("worst margin %.2e", margin),
           timer.seconds());
  }
  {
    Timer timer;
    double margin = 0.0;
    const bool ok = all_pass(verify::suite_stagnation(10000), margin);
    report(2, "stagnation_inequalities", ok, "10000 sampled inputs",
           timer.seconds());
  }
  {
    Timer timer;
    double margin = 0.0;
    const bool ok = all_pass(verify::suite_clipping(), margin);
    report(3, "clipping_mutual_exclusion", ok, fmt("worst margin %.2e", margin),
           timer.seconds());
  }
  {
    Timer timer;
    double margin = 0.0;
    const bool ok = all_pass(verify::suite_geometry(2000), margin);
    report(4, "disk_geometry_oracle", ok, fmt("worst margin %.2e", margin),
           timer.seconds());
  }
  {
    Timer timer;
    double margin = 0.0;
    const bool ok = all_pass(verify::suite_weight_decay(), margin);
    report(5, "weight_decay_necessity", ok, fmt("worst margin %.2e", margin),
           timer.seconds());
  }
  {
    Timer timer;
    double margin = 0.0;
    const bool ok = all_pass(verify::suite_substationarity(), margin);
    report(6, "substationarity_gap", ok, fmt("worst margin %.2e", margin),
           timer.seconds());
  }
  {
    Timer timer;
    double margin = 0.0;
    const bool ok = all_pass(verify::suite_residual_decay(), margin);
    report(7, "residual_decay", ok, fmt("worst margin %.2e", margin),
           timer.seconds());
  }
  criterion_recovery();
  criterion_lasso_oracle();
  criterion_determinism();

  if (failures == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criteria FAILED\n", failures);
  return 1;
}
