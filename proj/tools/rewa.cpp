// rewa: sparse-optimization experiment harness.
// Subcommands: gen-data | train | sweep | verify | prune-eval.
// Exit codes: 0 ok, 1 usage/config error, 2 numerical divergence,
// 3 verification failure.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "rewa/experiment.hpp"

namespace {

bool use_color() {
  return ::isatty(::fileno(stdout)) != 0 && std::getenv("NO_COLOR") == nullptr;
}

std::string pass_str(bool pass) {
  if (!use_color()) {
    return pass ? "PASS" : "FAIL";
  }
  return pass ? "\x1b[32mPASS\x1b[0m" : "\x1b[31mFAIL\x1b[0m";
}

rewa::cli::ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) {
    return {};
  }
  return rewa::cli::config_from_json(
      nlohmann::json::parse(rewa::records::read_file(path)));
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  long long log_every = -1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--out-dir", out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", seed, "run seed (overrides config)");
    cmd->add_option("--log-every", log_every, "log period in steps (overrides config)");
  }

  rewa::cli::ExperimentConfig resolve() const {
    auto c = load_config(config_path);
    if (!out_dir.empty()) {
      c.out_dir = out_dir;
    }
    if (seed >= 0) {
      c.seed = static_cast<std::uint64_t>(seed);
    }
    if (log_every > 0) {
      c.log_every = static_cast<std::size_t>(log_every);
    }
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rewa: reparameterized sparse optimization experiments"};
  app.require_subcommand(1);

  CommonFlags gen_flags;
  auto* gen = app.add_subcommand("gen-data", "generate a regression dataset file");
  gen_flags.attach(gen);

  CommonFlags train_flags;
  auto* train = app.add_subcommand("train", "run one training configuration");
  train_flags.attach(train);

  CommonFlags sweep_flags;
  std::string grid_path;
  std::size_t parallelism = 1;
  auto* sweep = app.add_subcommand("sweep", "run a hyperparameter grid");
  sweep_flags.attach(sweep);
  sweep->add_option("--grid", grid_path, "JSON file with grid axes (K, M, epsilon, lambda, eta0)")
      ->required();
  sweep->add_option("--parallelism", parallelism, "concurrent runs");

  std::string suite = "all";
  std::size_t samples = 0;
  long long verify_seed = 20240601;
  std::string report_path;
  auto* verify_cmd = app.add_subcommand("verify", "run property verification suites");
  verify_cmd->add_option("suite", suite,
                         "stagnation|clipping|example21|geometry|weight-decay|"
                         "substationarity|residual-decay|all");
  verify_cmd->add_option("--samples", samples, "sample count for randomized suites");
  verify_cmd->add_option("--seed", verify_seed, "seed for randomized suites");
  verify_cmd->add_option("--report", report_path, "write the JSON report here");

  std::string prune_run_id;
  std::string prune_out_dir = "runs";
  std::vector<double> prune_taus;
  auto* prune = app.add_subcommand("prune-eval", "threshold-prune a finished run");
  prune->add_option("--run-id", prune_run_id, "run id of a finished training run")
      ->required();
  prune->add_option("--out-dir", prune_out_dir, "directory holding the run files");
  prune->add_option("--thresholds", prune_taus, "pruning thresholds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help
    }
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) {
      const auto c = gen_flags.resolve();
      const auto out = rewa::cli::cmd_gen_data(c);
      std::printf("%s\n", out.path.c_str());
      std::printf("checksum %s\n", out.checksum.c_str());
      return 0;
    }
    if (train->parsed()) {
      const auto c = train_flags.resolve();
      const auto out = rewa::cli::cmd_train(c);
      std::printf("run %s\n", out.run_id.c_str());
      std::printf("csv %s\n", out.csv_path.c_str());
      if (!out.record.rows.empty()) {
        std::printf("final train_loss %.17g test_loss %.17g\n",
                    out.record.rows.back().train_loss,
                    out.record.rows.back().test_loss);
      }
      if (out.diverged) {
        std::fprintf(stderr, "diverged: %s\n", out.failure.c_str());
        return 2;
      }
      return 0;
    }
    if (sweep->parsed()) {
      const auto base = sweep_flags.resolve();
      const auto grid = rewa::cli::SweepGrid::from_json(
          nlohmann::json::parse(rewa::records::read_file(grid_path)));
      const auto out = rewa::cli::cmd_sweep(grid, base, parallelism);
      std::size_t ok = 0;
      std::size_t skipped = 0;
      for (const auto& cell : out.cells) {
        if (cell.status == "ok" || cell.status == "exists") {
          ++ok;
        } else if (cell.status == "skipped") {
          ++skipped;
          std::printf("skip K=%d M=%g (invalid combination)\n", cell.config.K,
                      cell.config.M);
        } else if (cell.status != "ok") {
          std::printf("%s K=%d M=%g: %s\n", cell.run_id.c_str(), cell.config.K,
                      cell.config.M, cell.status.c_str());
        }
      }
      std::printf("summary %s (%zu ok, %zu skipped, %zu total)\n",
                  out.summary_path.c_str(), ok, skipped, out.cells.size());
      return 0;
    }
    if (verify_cmd->parsed()) {
      const auto results = rewa::verify::run_suite(
          suite, samples, static_cast<std::uint64_t>(verify_seed));
      bool all = true;
      for (const auto& r : results) {
        std::printf("%-55s samples=%-8zu %s  worst_margin=%.6g\n", r.name.c_str(),
                    r.samples, pass_str(r.pass).c_str(), r.worst_margin);
        all = all && r.pass;
      }
      const auto report = rewa::cli::verify_report_json(results);
      if (!report_path.empty()) {
        rewa::records::write_file(report_path, report.dump(2) + "\n");
        std::printf("report %s\n", report_path.c_str());
      }
      return all ? 0 : 3;
    }
    if (prune->parsed()) {
      if (prune_taus.empty()) {
        prune_taus = rewa::opt::default_thresholds();
      }
      const auto rows =
          rewa::cli::cmd_prune_eval(prune_out_dir, prune_run_id, prune_taus);
      const std::string csv = rewa::cli::prune_rows_csv(rows);
      const std::string path =
          prune_out_dir + "/" + prune_run_id + "_prune.csv";
      rewa::records::write_file(path, csv);
      std::fputs(csv.c_str(), stdout);
      std::printf("written %s\n", path.c_str());
      return 0;
    }
  } catch (const rewa::NonFinite& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const rewa::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
