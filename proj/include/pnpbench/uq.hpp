#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pnpbench/forward_ops.hpp"
#include "pnpbench/gmm.hpp"
#include "pnpbench/solvers.hpp"

namespace pnpbench {

// Per case: the usable sample rows (K x d) and the ground truth.
struct CaseSamples {
  Matrix samples;
  Vector truth;
};

std::vector<CaseSamples> collect_cases(const std::vector<SampleBatch>& batches);

// Interval mu_j +/- alpha_z * sd_j per (case, dim), with the K - 1 sample
// standard deviation. Cases with fewer than two rows are excluded and counted.
struct CoverageReport {
  Matrix hits;  // valid cases x d, entries 0/1
  double coverage_global = 0.0;
  double mean_interval_width = 0.0;
  Vector per_dim_variance;
  int invalid_cases = 0;
};

CoverageReport coverage_eval(const std::vector<CaseSamples>& cases, double alpha_z = 1.96);

// Per-dimension variances of V^T x averaged over cases, split by S_j = 1 / 0.
// An empty index set yields NaN.
struct ObsNullReport {
  Vector per_dim_variance_svd;
  double var_obs = 0.0;
  double var_null = 0.0;
  double ratio_null_obs = 0.0;
  double theory_var_obs = 0.0;
  double theory_var_null = 0.0;
  int invalid_cases = 0;
};

ObsNullReport obs_null_variance(const std::vector<CaseSamples>& cases, const LinearOperatorSVD& A);

// rmse of a sample = |x - x*| / sqrt(d); pooled over all usable samples of
// all cases. rmse_std uses the n - 1 normalization (0 for a single sample).
struct AccuracyReport {
  double rmse_mean = 0.0;
  double rmse_std = 0.0;
  std::vector<double> per_sample_rmse;
};

AccuracyReport rmse_eval(const std::vector<CaseSamples>& cases);

// (k, mean over dims of the variance of the first k rows).
std::vector<std::pair<int, double>> variance_vs_k(const Matrix& samples,
                                                  const std::vector<int>& k_grid);

// Mean over the index set of diag(V^T cov V); NaN for an empty set.
std::pair<double, double> theory_obs_null(const Matrix& cov, const LinearOperatorSVD& A);

struct OracleReference {
  double oracle_coverage = 0.0;
  double theory_var_obs = 0.0;
  double theory_var_null = 0.0;
  double oracle_rmse = 0.0;
  int n_cases = 0;
  int k_samples = 0;
};

// Exact-posterior sampler pushed through the coverage and rmse evaluation on
// n_cases measurements synthesized from prior draws; theory variances are the
// posterior directional variances averaged over the same cases.
OracleReference oracle_reference(const GaussianMixture& prior, const LinearOperatorSVD& A,
                                 double sigma_y, int n_cases, std::uint64_t seed,
                                 int k_samples = 100);

}  // namespace pnpbench
