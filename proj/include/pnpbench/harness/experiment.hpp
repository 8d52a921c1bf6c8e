#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pnpbench/harness/config.hpp"
#include "pnpbench/uq.hpp"

namespace pnpbench {

struct ResultRow {
  std::string experiment;
  std::string solver;
  std::string family;
  std::string sweep_axis;  // empty without a sweep
  double sweep_value = 0.0;
  int case_id = 0;
  int k_valid = 0;
  double coverage = 0.0;
  double mean_width = 0.0;
  double var_obs = 0.0;
  double var_null = 0.0;
  double ratio = 0.0;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;
  double failure_rate = 0.0;
  double sigma_y = 0.0;
  double oracle_coverage = 0.0;
  double theory_var_obs = 0.0;
  double theory_var_null = 0.0;
  double theory_ratio = 0.0;
  double oracle_rmse = 0.0;
  std::string hyper_digest;
  std::uint64_t seed = 0;
  double wall_time = 0.0;
};

struct BatchRecord {
  SolverSpec spec;
  std::optional<double> sweep_value;
  int case_id = 0;
  SampleBatch batch;
};

// Aggregate over all cases of one (solver, sweep value) group: coverage and
// variances pooled exactly as in the per-case evaluation, with the standard
// deviation of the per-case values alongside.
struct SolverSummary {
  std::string solver;
  std::string family;
  std::optional<double> sweep_value;
  double coverage = 0.0;
  double coverage_std = 0.0;
  double mean_width = 0.0;
  double mean_width_std = 0.0;
  double var_obs = 0.0;
  double var_null = 0.0;
  double ratio = 0.0;
  double rmse_mean = 0.0;
  double rmse_std = 0.0;
  double failure_rate = 0.0;
  int k_valid_total = 0;
  int invalid_cases = 0;
  double wall_time = 0.0;
};

struct ExperimentResult {
  ExperimentConfig cfg;
  LinearOperatorSVD op;
  OracleReference oracle;
  std::vector<Measurement> measurements;
  std::vector<BatchRecord> batches;  // ordered by sweep value, solver, case
  std::vector<ResultRow> rows;
};

// Seeds. Truth and noise seeds depend on the case only, so every solver sees
// the same measurement; sampling seeds add the solver.
std::uint64_t truth_seed(std::uint64_t master, int case_id);
std::uint64_t noise_seed(std::uint64_t master, int case_id);
std::uint64_t sampling_seed(std::uint64_t master, SolverName solver, int case_id);
std::uint64_t oracle_seed(std::uint64_t master);

DiffusionPrior make_diffusion_prior(const ExperimentConfig& cfg);
std::vector<Measurement> synthesize_cases(const ExperimentConfig& cfg, const GaussianMixture& prior,
                                          const LinearOperatorSVD& op);
OracleReference compute_oracle(const ExperimentConfig& cfg, const GaussianMixture& prior,
                               const LinearOperatorSVD& op);

// Solver specs of the sweep group at `value` (or the configured specs).
std::vector<SolverSpec> solvers_for(const ExperimentConfig& cfg, std::optional<double> value);

ExperimentResult run_experiment(const ExperimentConfig& cfg, int workers = 1);

// Rows are a pure function of the batches, the operator and the oracle.
std::vector<ResultRow> compute_rows(const ExperimentResult& result);
std::vector<SolverSummary> summarize(const ExperimentResult& result);

// --workers wins when given (> 0); otherwise PNPBENCH_WORKERS; otherwise 1.
int resolve_workers(int cli_workers);

}  // namespace pnpbench
