#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pnpbench/errors.hpp"
#include "pnpbench/harness/report.hpp"

namespace {

using namespace pnpbench;

void print_summary(const ExperimentResult& result) {
  for (const auto& s : summarize(result)) {
    std::cout << s.solver;
    if (s.sweep_value) std::cout << " [" << result.cfg.sweep->name << "=" << *s.sweep_value << "]";
    std::cout << "  coverage=" << format_number(s.coverage)
              << "  width=" << format_number(s.mean_width)
              << "  rmse=" << format_number(s.rmse_mean)
              << "  var_obs=" << format_number(s.var_obs)
              << "  var_null=" << format_number(s.var_null)
              << "  failure_rate=" << format_number(s.failure_rate) << '\n';
  }
  std::cout << "oracle  coverage=" << format_number(result.oracle.oracle_coverage)
            << "  rmse=" << format_number(result.oracle.oracle_rmse)
            << "  theory_var_obs=" << format_number(result.oracle.theory_var_obs)
            << "  theory_var_null=" << format_number(result.oracle.theory_var_null) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Posterior-sampler UQ benchmark on a Gaussian-mixture toy problem"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PNPBENCH_VERSION);

  std::string config_path, out_dir, in_dir, axis;
  std::vector<double> values;
  int workers = 0;

  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--workers", workers, "worker threads (default: $PNPBENCH_WORKERS or 1)");

  auto* oracle = app.add_subcommand("oracle", "print the exact-posterior reference values");
  oracle->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "run with a hyperparameter sweep axis");
  sweep->add_option("--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--axis", axis, "hyperparameter name, e.g. particles")->required();
  sweep->add_option("--values", values, "comma-separated values")->required()->delimiter(',');
  sweep->add_option("--out", out_dir, "output directory")->required();
  sweep->add_option("--workers", workers, "worker threads (default: $PNPBENCH_WORKERS or 1)");

  auto* report = app.add_subcommand("report", "recompute reports from persisted samples");
  report->add_option("--in", in_dir, "directory written by run or sweep")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed() || sweep->parsed()) {
      ExperimentConfig cfg = load_config(config_path);
      if (sweep->parsed()) set_sweep(cfg, {axis, values});
      const ExperimentResult result = run_experiment(cfg, resolve_workers(workers));
      write_report(result, out_dir);
      print_summary(result);
      std::cout << "wrote " << out_dir << '\n';
    } else if (oracle->parsed()) {
      const ExperimentConfig cfg = load_config(config_path);
      const DiffusionPrior dp = make_diffusion_prior(cfg);
      std::cout << oracle_to_json(compute_oracle(cfg, dp.prior(), make_operator(cfg))).dump(2)
                << '\n';
    } else if (report->parsed()) {
      const ExperimentResult result = load_persisted(in_dir);
      write_report(result, out_dir);
      print_summary(result);
      std::cout << "wrote " << out_dir << '\n';
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
