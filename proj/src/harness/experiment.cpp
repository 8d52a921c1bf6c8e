#include "pnpbench/harness/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "pnpbench/errors.hpp"
#include "pnpbench/parallel.hpp"
#include "pnpbench/rng.hpp"
#include "pnpbench/seed.hpp"

namespace pnpbench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double sample_std(const std::vector<double>& v) {
  std::vector<double> ok;
  for (double x : v)
    if (std::isfinite(x)) ok.push_back(x);
  if (ok.size() < 2) return ok.empty() ? kNaN : 0.0;
  double mean = 0.0;
  for (double x : ok) mean += x;
  mean /= static_cast<double>(ok.size());
  double ss = 0.0;
  for (double x : ok) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(ok.size() - 1));
}

std::vector<std::optional<double>> sweep_values(const ExperimentConfig& cfg) {
  if (!cfg.sweep) return {std::nullopt};
  std::vector<std::optional<double>> out;
  for (double v : cfg.sweep->values) out.emplace_back(v);
  return out;
}

}  // namespace

std::uint64_t truth_seed(std::uint64_t master, int case_id) {
  return derive_seed(master, {{"truth", case_id}});
}

std::uint64_t noise_seed(std::uint64_t master, int case_id) {
  return derive_seed(master, {{"noise", case_id}});
}

std::uint64_t sampling_seed(std::uint64_t master, SolverName solver, int case_id) {
  return derive_seed(master, {{"solver", static_cast<std::int64_t>(solver)}, {"case", case_id}});
}

std::uint64_t oracle_seed(std::uint64_t master) { return derive_seed(master, {{"oracle", 0}}); }

DiffusionPrior make_diffusion_prior(const ExperimentConfig& cfg) {
  return DiffusionPrior(build_toy_prior(cfg.prior), make_schedule(cfg.schedule), cfg.score_error);
}

std::vector<Measurement> synthesize_cases(const ExperimentConfig& cfg, const GaussianMixture& prior,
                                          const LinearOperatorSVD& op) {
  std::vector<Measurement> out;
  for (int c = 0; c < cfg.n_cases; ++c) {
    Rng rng(truth_seed(cfg.master_seed, c));
    const Vector x_star = sample_mixture(prior, rng);
    out.push_back(synthesize_measurement(op, x_star, cfg.sigma_y, noise_seed(cfg.master_seed, c)));
  }
  return out;
}

OracleReference compute_oracle(const ExperimentConfig& cfg, const GaussianMixture& prior,
                               const LinearOperatorSVD& op) {
  return oracle_reference(prior, op, cfg.sigma_y, cfg.oracle_cases, oracle_seed(cfg.master_seed),
                          cfg.k_samples);
}

std::vector<SolverSpec> solvers_for(const ExperimentConfig& cfg, std::optional<double> value) {
  if (!value) return cfg.solvers;
  std::vector<SolverSpec> out;
  for (const auto& s : cfg.solvers) {
    Hyperparameters h = s.hyper;
    h[cfg.sweep->name] = *value;
    out.push_back(resolve_solver(s.name, h));
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int workers) {
  const DiffusionPrior dp = make_diffusion_prior(cfg);
  ExperimentResult result{cfg, make_operator(cfg), {}, {}, {}, {}};
  result.measurements = synthesize_cases(cfg, dp.prior(), result.op);
  result.oracle = compute_oracle(cfg, dp.prior(), result.op);

  for (const auto& value : sweep_values(cfg)) {
    for (const auto& spec : solvers_for(cfg, value)) {
      for (int c = 0; c < cfg.n_cases; ++c) {
        result.batches.push_back({spec, value, c, {}});
      }
    }
  }
  parallel_for(result.batches.size(), workers, [&](std::size_t i) {
    BatchRecord& rec = result.batches[i];
    rec.batch = run_batch(rec.spec, result.measurements[static_cast<std::size_t>(rec.case_id)],
                          result.op, dp, cfg.k_samples,
                          sampling_seed(cfg.master_seed, rec.spec.name, rec.case_id));
  });
  result.rows = compute_rows(result);
  return result;
}

std::vector<ResultRow> compute_rows(const ExperimentResult& result) {
  const ExperimentConfig& cfg = result.cfg;
  const bool binary = result.op.has_binary_spectrum();
  std::vector<ResultRow> rows;
  rows.reserve(result.batches.size());
  for (const auto& rec : result.batches) {
    const std::vector<CaseSamples> one{{rec.batch.usable_samples(), rec.batch.measurement.x_star}};
    const CoverageReport cov = coverage_eval(one);
    const AccuracyReport acc = rmse_eval(one);
    ResultRow r;
    r.experiment = to_string(cfg.experiment);
    r.solver = to_string(rec.spec.name);
    r.family = to_string(rec.spec.family);
    r.sweep_axis = cfg.sweep ? cfg.sweep->name : "";
    r.sweep_value = rec.sweep_value.value_or(kNaN);
    r.case_id = rec.case_id;
    r.k_valid = static_cast<int>(rec.batch.k_valid());
    r.coverage = cov.coverage_global;
    r.mean_width = cov.mean_interval_width;
    if (binary) {
      const ObsNullReport on = obs_null_variance(one, result.op);
      r.var_obs = on.var_obs;
      r.var_null = on.var_null;
      r.ratio = on.ratio_null_obs;
    } else {
      r.var_obs = r.var_null = r.ratio = kNaN;
    }
    r.rmse_mean = acc.rmse_mean;
    r.rmse_std = acc.rmse_std;
    r.failure_rate = rec.batch.failure_rate();
    r.sigma_y = cfg.sigma_y;
    r.oracle_coverage = result.oracle.oracle_coverage;
    r.theory_var_obs = result.oracle.theory_var_obs;
    r.theory_var_null = result.oracle.theory_var_null;
    r.theory_ratio = result.oracle.theory_var_null / result.oracle.theory_var_obs;
    r.oracle_rmse = result.oracle.oracle_rmse;
    r.hyper_digest = hyper_digest(rec.spec);
    r.seed = sampling_seed(cfg.master_seed, rec.spec.name, rec.case_id);
    r.wall_time = rec.batch.wall_time;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<SolverSummary> summarize(const ExperimentResult& result) {
  std::vector<SolverSummary> out;
  std::size_t i = 0;
  while (i < result.batches.size()) {
    const BatchRecord& head = result.batches[i];
    std::vector<CaseSamples> cases;
    std::vector<double> per_cov, per_width;
    SolverSummary s;
    s.solver = to_string(head.spec.name);
    s.family = to_string(head.spec.family);
    s.sweep_value = head.sweep_value;
    Eigen::Index total = 0;
    Eigen::Index failed = 0;
    std::size_t j = i;
    for (; j < result.batches.size() && result.batches[j].spec.name == head.spec.name &&
           result.batches[j].sweep_value == head.sweep_value;
         ++j) {
      const SampleBatch& b = result.batches[j].batch;
      cases.push_back({b.usable_samples(), b.measurement.x_star});
      const CoverageReport one = coverage_eval({cases.back()});
      per_cov.push_back(one.coverage_global);
      per_width.push_back(one.mean_interval_width);
      total += b.k();
      failed += b.k() - b.k_valid();
      s.k_valid_total += static_cast<int>(b.k_valid());
      s.wall_time += b.wall_time;
    }
    const CoverageReport cov = coverage_eval(cases);
    s.coverage = cov.coverage_global;
    s.coverage_std = sample_std(per_cov);
    s.mean_width = cov.mean_interval_width;
    s.mean_width_std = sample_std(per_width);
    s.invalid_cases = cov.invalid_cases;
    if (result.op.has_binary_spectrum()) {
      const ObsNullReport on = obs_null_variance(cases, result.op);
      s.var_obs = on.var_obs;
      s.var_null = on.var_null;
      s.ratio = on.ratio_null_obs;
    } else {
      s.var_obs = s.var_null = s.ratio = kNaN;
    }
    const AccuracyReport acc = rmse_eval(cases);
    s.rmse_mean = acc.rmse_mean;
    s.rmse_std = acc.rmse_std;
    s.failure_rate = total > 0 ? static_cast<double>(failed) / static_cast<double>(total) : 0.0;
    out.push_back(std::move(s));
    i = j;
  }
  return out;
}

int resolve_workers(int cli_workers) {
  if (cli_workers > 0) return cli_workers;
  if (const char* env = std::getenv("PNPBENCH_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) {
      throw ConfigError(std::string("PNPBENCH_WORKERS must be a positive integer, got '") + env +
                        "'");
    }
    return static_cast<int>(v);
  }
  return 1;
}

}  // namespace pnpbench
