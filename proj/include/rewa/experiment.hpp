#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "rewa/errors.hpp"
#include "rewa/metrics.hpp"
#include "rewa/optimizers.hpp"
#include "rewa/problems.hpp"
#include "rewa/records.hpp"
#include "rewa/verify.hpp"

#include <json.hpp>

namespace rewa::cli {

using nlohmann::json;

/// Full description of one experiment. Serialized verbatim into every
/// output; the run id is a content hash of the canonical JSON form.
struct ExperimentConfig {
  // problem
  std::string problem_kind = "linreg";  // linreg | quadratic | scalar_shifted_square
  std::size_t d = 200;
  std::size_t n = 400;
  std::vector<std::pair<std::size_t, double>> support = {{0, 1.0}};
  double noise_sigma = 1.0;
  std::uint64_t data_seed = 1;
  std::string dataset_file;            // when set, loaded instead of generated
  std::vector<double> lambda_diag;     // quadratic only

  // method
  std::string method = "rewa_sgd";  // rewa_sgd | rewa_adamw | nonadaptive | sgd_l1 | lasso
  int K = 9;
  double M = 4.0;
  double epsilon = 0.0;
  double lambda = 0.0;
  double lambda1 = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t lasso_max_sweeps = 2000;
  double lasso_tol = 1e-10;

  // schedule
  std::string schedule = "cosine";  // constant | cosine | inverse_sqrt
  double eta0 = 2e-3;
  std::size_t warmup = 0;

  // init
  std::string init_kind = "constant";  // constant | gaussian
  double init_scale = 1e-2;

  // loop
  std::size_t epochs = 800;
  std::size_t batch_size = 25;
  std::uint64_t seed = 1;
  std::size_t log_every = 100;
  std::vector<double> thresholds = opt::default_thresholds();

  std::string out_dir = "runs";
};

inline json to_json(const ExperimentConfig& c) {
  json support = json::array();
  for (const auto& [i, v] : c.support) {
    support.push_back(json::array({i, v}));
  }
  json j;
  j["problem"] = {{"kind", c.problem_kind},  {"d", c.d},
                  {"n", c.n},                {"support", support},
                  {"noise_sigma", c.noise_sigma}, {"data_seed", c.data_seed},
                  {"dataset_file", c.dataset_file}, {"lambda_diag", c.lambda_diag}};
  j["method"] = {{"name", c.method},     {"K", c.K},
                 {"M", c.M},             {"epsilon", c.epsilon},
                 {"lambda", c.lambda},   {"lambda1", c.lambda1},
                 {"beta1", c.beta1},     {"beta2", c.beta2},
                 {"adam_eps", c.adam_eps}, {"lasso_max_sweeps", c.lasso_max_sweeps},
                 {"lasso_tol", c.lasso_tol}};
  j["schedule"] = {{"kind", c.schedule}, {"eta0", c.eta0}, {"warmup", c.warmup}};
  j["init"] = {{"kind", c.init_kind}, {"scale", c.init_scale}};
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["log_every"] = c.log_every;
  j["thresholds"] = c.thresholds;
  j["out_dir"] = c.out_dir;
  return j;
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("problem")) {
      const auto& p = j.at("problem");
      c.problem_kind = p.value("kind", c.problem_kind);
      c.d = p.value("d", c.d);
      c.n = p.value("n", c.n);
      if (p.contains("support")) {
        c.support.clear();
        for (const auto& e : p.at("support")) {
          c.support.emplace_back(e.at(0).get<std::size_t>(),
                                 e.at(1).get<double>());
        }
      }
      c.noise_sigma = p.value("noise_sigma", c.noise_sigma);
      c.data_seed = p.value("data_seed", c.data_seed);
      c.dataset_file = p.value("dataset_file", c.dataset_file);
      c.lambda_diag = p.value("lambda_diag", c.lambda_diag);
    }
    if (j.contains("method")) {
      const auto& m = j.at("method");
      c.method = m.value("name", c.method);
      c.K = m.value("K", c.K);
      c.M = m.value("M", c.M);
      c.epsilon = m.value("epsilon", c.epsilon);
      c.lambda = m.value("lambda", c.lambda);
      c.lambda1 = m.value("lambda1", c.lambda1);
      c.beta1 = m.value("beta1", c.beta1);
      c.beta2 = m.value("beta2", c.beta2);
      c.adam_eps = m.value("adam_eps", c.adam_eps);
      c.lasso_max_sweeps = m.value("lasso_max_sweeps", c.lasso_max_sweeps);
      c.lasso_tol = m.value("lasso_tol", c.lasso_tol);
    }
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      c.schedule = s.value("kind", c.schedule);
      c.eta0 = s.value("eta0", c.eta0);
      c.warmup = s.value("warmup", c.warmup);
    }
    if (j.contains("init")) {
      const auto& s = j.at("init");
      c.init_kind = s.value("kind", c.init_kind);
      c.init_scale = s.value("scale", c.init_scale);
    }
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.log_every = j.value("log_every", c.log_every);
    c.thresholds = j.value("thresholds", c.thresholds);
    c.out_dir = j.value("out_dir", c.out_dir);
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("config: ") + e.what());
  }
  return c;
}

inline std::string run_id(const ExperimentConfig& c) {
  return records::hex64(records::fnv1a(to_json(c).dump()));
}

struct BuiltProblem {
  std::shared_ptr<problems::Objective> train;
  std::shared_ptr<problems::Objective> test;  // null when no held-out split
  std::shared_ptr<const problems::RegressionDataset> dataset;  // linreg only
};

inline BuiltProblem build_problem(const ExperimentConfig& c) {
  BuiltProblem b;
  if (c.problem_kind == "linreg") {
    auto ds = std::make_shared<problems::RegressionDataset>(
        c.dataset_file.empty()
            ? problems::make_linreg(c.data_seed, c.d, c.n, c.support,
                                    c.noise_sigma)
            : problems::load_dataset(c.dataset_file));
    auto test_ds = std::make_shared<problems::RegressionDataset>(
        problems::test_split(*ds));
    b.dataset = ds;
    b.train = problems::linreg_objective(ds);
    b.test = problems::linreg_objective(test_ds);
  } else if (c.problem_kind == "quadratic") {
    if (c.lambda_diag.empty()) {
      throw InvalidConfig("quadratic problem needs lambda_diag");
    }
    b.train = problems::make_quadratic(DenseVector(c.lambda_diag));
  } else if (c.problem_kind == "scalar_shifted_square") {
    b.train = problems::make_scalar_shifted_square();
  } else {
    throw InvalidConfig("unknown problem kind: " + c.problem_kind);
  }
  return b;
}

inline opt::MethodConfig build_method(const ExperimentConfig& c) {
  opt::MethodConfig m;
  if (c.method == "rewa_sgd") {
    m.kind = opt::MethodKind::RewaSgd;
  } else if (c.method == "rewa_adamw") {
    m.kind = opt::MethodKind::RewaAdamW;
  } else if (c.method == "nonadaptive") {
    m.kind = opt::MethodKind::Nonadaptive;
  } else if (c.method == "sgd_l1" || c.method == "sgd") {
    m.kind = opt::MethodKind::SgdL1;
  } else {
    throw InvalidConfig("unknown method: " + c.method);
  }
  m.params = reg::ImplicitRegParams{c.K, c.M, c.epsilon, c.lambda};
  if (m.kind != opt::MethodKind::SgdL1) {
    m.params.validate();
  }
  m.lambda1 = c.method == "sgd" ? 0.0 : c.lambda1;
  m.beta1 = c.beta1;
  m.beta2 = c.beta2;
  m.adam_eps = c.adam_eps;
  return m;
}

inline opt::Schedule build_schedule(const ExperimentConfig& c,
                                    std::size_t total_steps) {
  if (c.schedule == "constant") {
    return opt::Schedule::constant(c.eta0);
  }
  if (c.schedule == "cosine") {
    return opt::Schedule::cosine(c.eta0, std::max<std::size_t>(1, total_steps),
                                 c.warmup);
  }
  if (c.schedule == "inverse_sqrt") {
    return opt::Schedule::inverse_sqrt(c.eta0);
  }
  throw InvalidConfig("unknown schedule: " + c.schedule);
}

inline DenseVector build_init(const ExperimentConfig& c, std::size_t dim) {
  if (c.init_kind == "constant") {
    return DenseVector::constant(dim, c.init_scale);
  }
  if (c.init_kind == "gaussian") {
    GaussianSampler g(c.seed ^ 0xA5A5A5A5A5A5A5A5ULL);
    std::vector<double> x(dim);
    for (auto& v : x) {
      v = c.init_scale * g.next();
    }
    return DenseVector(std::move(x));
  }
  throw InvalidConfig("unknown init kind: " + c.init_kind);
}

struct TrainOutput {
  std::string run_id;
  std::string csv_path;
  std::string json_path;
  opt::RunRecord record;
  bool diverged = false;
  std::string failure;
};

namespace detail {

inline std::size_t steps_per_epoch(const ExperimentConfig& c,
                                   const problems::Objective& train) {
  const std::size_t n = train.sample_count();
  return n > 0 ? (n + c.batch_size - 1) / c.batch_size : 1;
}

inline void write_outputs(TrainOutput& out, const ExperimentConfig& c) {
  std::filesystem::create_directories(c.out_dir);
  out.csv_path = c.out_dir + "/" + out.run_id + ".csv";
  out.json_path = c.out_dir + "/" + out.run_id + ".json";
  records::write_file(out.csv_path, records::run_record_csv(out.record));
  auto sidecar = records::run_record_sidecar(
      out.record, to_json(c), out.run_id,
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  if (out.diverged) {
    sidecar["diverged"] = true;
  }
  if (!out.failure.empty()) {
    sidecar["failure"] = out.failure;
  }
  records::write_file(out.json_path, sidecar.dump(2) + "\n");
}

// LASSO is a direct solver, not a step method: record the start and the
// solution as the two log rows.
inline opt::RunRecord run_lasso(const ExperimentConfig& c,
                                const BuiltProblem& problem,
                                std::string* failure) {
  if (problem.dataset == nullptr) {
    throw InvalidConfig("lasso method needs a linreg problem");
  }
  DenseVector beta = DenseVector::zeros(problem.dataset->d());
  try {
    beta = opt::lasso_cd_solve(*problem.dataset, c.lambda1, c.lasso_max_sweeps,
                               c.lasso_tol);
  } catch (const NotConverged& e) {
    beta = DenseVector(e.last_iterate);
    if (failure != nullptr) {
      *failure = e.what();
    }
  }
  opt::RunRecord rec;
  rec.thresholds = c.thresholds;
  rec.seed = c.seed;
  auto log_beta = [&](std::size_t step, const DenseVector& b) {
    opt::LogRow row;
    row.step = step;
    row.train_loss = problem.train->value(b);
    row.test_loss =
        problem.test != nullptr ? problem.test->value(b) : row.train_loss;
    const DenseVector grad = problem.train->gradient(b);
    double acc = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      double r;
      if (b[i] != 0.0) {
        r = grad[i] + c.lambda1 * (b[i] > 0.0 ? 1.0 : -1.0);
      } else {
        r = std::max(std::abs(grad[i]) - c.lambda1, 0.0);
      }
      acc += r * r;
    }
    row.residual = acc;
    row.weighted_grad = theory::weighted_grad_diagnostic(b, grad, 1);
    row.sparsity_counts = metrics::sparsity_profile(b, c.thresholds).counts;
    rec.rows.push_back(std::move(row));
  };
  log_beta(0, DenseVector::zeros(problem.dataset->d()));
  log_beta(1, beta);
  rec.final_x = beta.values();
  return rec;
}

}  // namespace detail

/// Generates (or copies) the dataset file for the configured problem and
/// returns its path and checksum.
struct GenDataOutput {
  std::string path;
  std::string checksum;
};

inline GenDataOutput cmd_gen_data(const ExperimentConfig& c) {
  if (c.problem_kind != "linreg") {
    throw InvalidConfig("gen-data: only linreg datasets have a file form");
  }
  const auto ds =
      problems::make_linreg(c.data_seed, c.d, c.n, c.support, c.noise_sigma);
  std::filesystem::create_directories(c.out_dir);
  GenDataOutput out;
  out.path = c.out_dir + "/dataset_" + run_id(c) + ".csv";
  const std::string body = problems::dataset_to_string(ds);
  records::write_file(out.path, body);
  out.checksum = records::hex64(records::fnv1a(body));
  return out;
}

/// Runs one training configuration and writes <run-id>.csv plus the JSON
/// sidecar. On divergence the partial record is still written and the
/// returned TrainOutput has diverged = true.
inline TrainOutput cmd_train(const ExperimentConfig& c) {
  const BuiltProblem problem = build_problem(c);
  TrainOutput out;
  out.run_id = run_id(c);

  if (c.method == "lasso") {
    out.record = detail::run_lasso(c, problem, &out.failure);
    detail::write_outputs(out, c);
    return out;
  }

  const opt::MethodConfig method = build_method(c);
  const std::size_t spe = detail::steps_per_epoch(c, *problem.train);
  const opt::Schedule schedule = build_schedule(c, c.epochs * spe);
  const DenseVector x0 = build_init(c, problem.train->dim());
  try {
    out.record = opt::run_training(*problem.train, method, schedule, c.epochs,
                                   c.batch_size, c.seed, c.log_every,
                                   c.thresholds, x0, problem.test.get());
  } catch (const opt::TrainingFailure& e) {
    out.record = e.partial;
    out.diverged = true;
    out.failure = e.what();
  }
  detail::write_outputs(out, c);
  return out;
}

/// Cartesian grid over optimizer hyperparameters; unset axes fall back to
/// the base config's value.
struct SweepGrid {
  std::vector<int> K;
  std::vector<double> M;
  std::vector<double> epsilon;
  std::vector<double> lambda;
  std::vector<double> eta0;

  static SweepGrid from_json(const json& j) {
    SweepGrid g;
    g.K = j.value("K", g.K);
    g.M = j.value("M", g.M);
    g.epsilon = j.value("epsilon", g.epsilon);
    g.lambda = j.value("lambda", g.lambda);
    g.eta0 = j.value("eta0", g.eta0);
    return g;
  }
};

struct SweepCell {
  ExperimentConfig config;
  std::string run_id;
  std::string status;  // ok | skipped | diverged | failed
  double final_train_loss = 0.0;
  double final_test_loss = 0.0;
  std::vector<std::size_t> final_counts;
};

struct SweepOutput {
  std::vector<SweepCell> cells;
  std::string summary_path;
};

/// Runs every valid grid point (invalid parameter combinations are skipped
/// and logged, failures recorded per point) and writes one summary CSV row
/// per point, in grid order.
inline SweepOutput cmd_sweep(const SweepGrid& grid, const ExperimentConfig& base,
                             std::size_t parallelism = 1) {
  const auto axis_or = [](const std::vector<double>& axis, double fallback) {
    return axis.empty() ? std::vector<double>{fallback} : axis;
  };
  const std::vector<int> ks = grid.K.empty() ? std::vector<int>{base.K} : grid.K;
  const std::vector<double> ms = axis_or(grid.M, base.M);
  const std::vector<double> es = axis_or(grid.epsilon, base.epsilon);
  const std::vector<double> ls = axis_or(grid.lambda, base.lambda);
  const std::vector<double> etas = axis_or(grid.eta0, base.eta0);

  SweepOutput out;
  for (int K : ks) {
    for (double M : ms) {
      for (double eps : es) {
        for (double lam : ls) {
          for (double eta0 : etas) {
            SweepCell cell;
            cell.config = base;
            cell.config.K = K;
            cell.config.M = M;
            cell.config.epsilon = eps;
            cell.config.lambda = lam;
            cell.config.eta0 = eta0;
            cell.run_id = run_id(cell.config);
            try {
              reg::ImplicitRegParams{K, M, eps, lam}.validate();
              cell.status = "pending";
            } catch (const InvalidParams&) {
              cell.status = "skipped";
            }
            out.cells.push_back(std::move(cell));
          }
        }
      }
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= out.cells.size()) {
        return;
      }
      SweepCell& cell = out.cells[i];
      if (cell.status == "skipped") {
        continue;
      }
      const std::string csv = cell.config.out_dir + "/" + cell.run_id + ".csv";
      const std::string sidecar = cell.config.out_dir + "/" + cell.run_id + ".json";
      if (std::filesystem::exists(csv) && std::filesystem::exists(sidecar)) {
        std::lock_guard<std::mutex> lock(mu);
        cell.status = "exists";
      }
      try {
        TrainOutput t;
        if (cell.status == "exists") {
          // resumption: reuse the written record
          const auto j = json::parse(records::read_file(sidecar));
          t.diverged = j.value("diverged", false);
          ExperimentConfig cc = cell.config;
          const BuiltProblem problem = build_problem(cc);
          DenseVector fx{j.at("final_x").get<std::vector<double>>()};
          std::lock_guard<std::mutex> lock(mu);
          cell.status = t.diverged ? "diverged" : "exists";
          cell.final_train_loss = problem.train->value(fx);
          cell.final_test_loss = problem.test != nullptr
                                     ? problem.test->value(fx)
                                     : cell.final_train_loss;
          cell.final_counts =
              metrics::sparsity_profile(fx, cell.config.thresholds).counts;
          continue;
        }
        TrainOutput res = cmd_train(cell.config);
        std::lock_guard<std::mutex> lock(mu);
        cell.status = res.diverged ? "diverged" : "ok";
        if (!res.record.rows.empty()) {
          cell.final_train_loss = res.record.rows.back().train_loss;
          cell.final_test_loss = res.record.rows.back().test_loss;
          cell.final_counts = res.record.rows.back().sparsity_counts;
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        cell.status = std::string("failed: ") + e.what();
      }
    }
  };

  std::vector<std::thread> pool;
  const std::size_t nthreads = std::max<std::size_t>(1, parallelism);
  for (std::size_t i = 0; i + 1 < nthreads; ++i) {
    pool.emplace_back(worker);
  }
  worker();
  for (auto& th : pool) {
    th.join();
  }

  std::ostringstream csv;
  csv << "run_id,K,M,epsilon,lambda,eta0,status,final_train_loss,final_test_loss";
  for (double tau : base.thresholds) {
    csv << ",below_" << records::format_label(tau);
  }
  csv << '\n';
  for (const auto& cell : out.cells) {
    csv << cell.run_id << ',' << cell.config.K << ','
        << records::format_double(cell.config.M) << ','
        << records::format_double(cell.config.epsilon) << ','
        << records::format_double(cell.config.lambda) << ','
        << records::format_double(cell.config.eta0) << ',' << cell.status << ','
        << records::format_double(cell.final_train_loss) << ','
        << records::format_double(cell.final_test_loss);
    for (std::size_t k = 0; k < base.thresholds.size(); ++k) {
      csv << ',';
      if (k < cell.final_counts.size()) {
        csv << cell.final_counts[k];
      }
    }
    csv << '\n';
  }
  std::filesystem::create_directories(base.out_dir);
  out.summary_path = base.out_dir + "/sweep_summary.csv";
  records::write_file(out.summary_path, csv.str());
  return out;
}

struct PruneRow {
  double tau = 0.0;
  double compression = 0.0;
  double test_loss = 0.0;
};

/// Post-hoc magnitude pruning of a finished run: zero out |x_i| <= tau and
/// report compression ratio and test loss per threshold.
inline std::vector<PruneRow> cmd_prune_eval(const std::string& out_dir,
                                            const std::string& run,
                                            const std::vector<double>& taus) {
  const std::string sidecar_path = out_dir + "/" + run + ".json";
  if (!std::filesystem::exists(sidecar_path)) {
    throw MissingRun("prune-eval: no sidecar at " + sidecar_path);
  }
  const auto j = json::parse(records::read_file(sidecar_path));
  const ExperimentConfig c = config_from_json(j.at("config"));
  const BuiltProblem problem = build_problem(c);
  const problems::Objective& eval =
      problem.test != nullptr ? *problem.test : *problem.train;
  const std::vector<double> fx = j.at("final_x").get<std::vector<double>>();

  std::vector<PruneRow> rows;
  for (double tau : taus) {
    std::vector<double> pruned = fx;
    for (auto& v : pruned) {
      if (std::abs(v) <= tau) {
        v = 0.0;
      }
    }
    const DenseVector xp{pruned};
    PruneRow row;
    row.tau = tau;
    row.compression = metrics::compression_ratio(DenseVector{fx}, tau);
    row.test_loss = eval.value(xp);
    rows.push_back(row);
  }
  return rows;
}

inline std::string prune_rows_csv(const std::vector<PruneRow>& rows) {
  std::ostringstream csv;
  csv << "tau,compression_ratio,test_loss\n";
  for (const auto& r : rows) {
    csv << records::format_double(r.tau) << ','
        << records::format_double(r.compression) << ','
        << records::format_double(r.test_loss) << '\n';
  }
  return csv.str();
}

/// Runs the named verification suites; machine-readable JSON plus one
/// pass/fail line per property.
inline json verify_report_json(const std::vector<verify::CheckResult>& results) {
  json checks = json::array();
  bool all = true;
  for (const auto& r : results) {
    checks.push_back({{"name", r.name},
                      {"samples", r.samples},
                      {"pass", r.pass},
                      {"worst_margin", r.worst_margin}});
    all = all && r.pass;
  }
  return json{{"pass", all}, {"checks", checks}};
}

}  // namespace rewa::cli
