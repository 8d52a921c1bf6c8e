#include "pnpbench/uq.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pnpbench/rng.hpp"
#include "pnpbench/seed.hpp"

namespace pnpbench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Column variances with the n - 1 normalization.
Vector column_variance(const Matrix& X) {
  const Eigen::RowVectorXd mean = X.colwise().mean();
  return (X.rowwise() - mean).colwise().squaredNorm().transpose() /
         static_cast<double>(X.rows() - 1);
}

double mean_over(const Vector& v, const std::vector<Eigen::Index>& idx) {
  if (idx.empty()) return kNaN;
  double acc = 0.0;
  for (auto j : idx) acc += v[j];
  return acc / static_cast<double>(idx.size());
}

}  // namespace

std::vector<CaseSamples> collect_cases(const std::vector<SampleBatch>& batches) {
  std::vector<CaseSamples> out;
  out.reserve(batches.size());
  for (const auto& b : batches) out.push_back({b.usable_samples(), b.measurement.x_star});
  return out;
}

CoverageReport coverage_eval(const std::vector<CaseSamples>& cases, double alpha_z) {
  CoverageReport rep;
  std::vector<Eigen::Index> valid;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    if (cases[c].samples.rows() >= 2) {
      valid.push_back(static_cast<Eigen::Index>(c));
    } else {
      ++rep.invalid_cases;
    }
  }
  const Eigen::Index d = cases.empty() ? 0 : cases.front().truth.size();
  rep.hits = Matrix::Zero(static_cast<Eigen::Index>(valid.size()), d);
  rep.per_dim_variance = Vector::Zero(d);
  if (valid.empty()) {
    rep.coverage_global = kNaN;
    rep.mean_interval_width = kNaN;
    rep.per_dim_variance.setConstant(kNaN);
    return rep;
  }
  double width = 0.0;
  for (std::size_t r = 0; r < valid.size(); ++r) {
    const CaseSamples& cs = cases[static_cast<std::size_t>(valid[r])];
    const Vector mu = cs.samples.colwise().mean().transpose();
    const Vector var = column_variance(cs.samples);
    const Vector sd = var.cwiseSqrt();
    for (Eigen::Index j = 0; j < d; ++j) {
      const double lo = mu[j] - alpha_z * sd[j];
      const double hi = mu[j] + alpha_z * sd[j];
      rep.hits(static_cast<Eigen::Index>(r), j) = (lo <= cs.truth[j] && cs.truth[j] <= hi) ? 1.0 : 0.0;
    }
    width += 2.0 * alpha_z * sd.mean();
    rep.per_dim_variance += var;
  }
  const auto n = static_cast<double>(valid.size());
  rep.coverage_global = rep.hits.mean();
  rep.mean_interval_width = width / n;
  rep.per_dim_variance /= n;
  return rep;
}

ObsNullReport obs_null_variance(const std::vector<CaseSamples>& cases, const LinearOperatorSVD& A) {
  if (!A.has_binary_spectrum()) {
    throw std::invalid_argument("obs_null_variance: operator singular values must be 0 or 1");
  }
  ObsNullReport rep;
  const Eigen::Index d = A.input_dim();
  rep.per_dim_variance_svd = Vector::Zero(d);
  int used = 0;
  for (const auto& cs : cases) {
    if (cs.samples.rows() < 2) {
      ++rep.invalid_cases;
      continue;
    }
    rep.per_dim_variance_svd += column_variance(cs.samples * A.V());
    ++used;
  }
  if (used == 0) {
    rep.per_dim_variance_svd.setConstant(kNaN);
  } else {
    rep.per_dim_variance_svd /= static_cast<double>(used);
  }
  rep.var_obs = mean_over(rep.per_dim_variance_svd, A.observed_indices());
  rep.var_null = mean_over(rep.per_dim_variance_svd, A.null_indices());
  rep.ratio_null_obs = rep.var_null / rep.var_obs;
  rep.theory_var_obs = kNaN;
  rep.theory_var_null = kNaN;
  return rep;
}

AccuracyReport rmse_eval(const std::vector<CaseSamples>& cases) {
  AccuracyReport rep;
  for (const auto& cs : cases) {
    const double scale = std::sqrt(static_cast<double>(cs.truth.size()));
    for (Eigen::Index k = 0; k < cs.samples.rows(); ++k) {
      rep.per_sample_rmse.push_back((cs.samples.row(k).transpose() - cs.truth).norm() / scale);
    }
  }
  const auto n = rep.per_sample_rmse.size();
  if (n == 0) {
    rep.rmse_mean = rep.rmse_std = kNaN;
    return rep;
  }
  double sum = 0.0;
  for (double r : rep.per_sample_rmse) sum += r;
  rep.rmse_mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double r : rep.per_sample_rmse) ss += (r - rep.rmse_mean) * (r - rep.rmse_mean);
  rep.rmse_std = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  return rep;
}

std::vector<std::pair<int, double>> variance_vs_k(const Matrix& samples,
                                                  const std::vector<int>& k_grid) {
  std::vector<std::pair<int, double>> out;
  int prev = 1;
  for (int k : k_grid) {
    if (k < 2 || k <= prev || k > samples.rows()) {
      throw std::invalid_argument("variance_vs_k: grid must increase within [2, K]");
    }
    prev = k;
    out.emplace_back(k, column_variance(samples.topRows(k)).mean());
  }
  return out;
}

std::pair<double, double> theory_obs_null(const Matrix& cov, const LinearOperatorSVD& A) {
  const Vector dir = (A.V().transpose() * cov * A.V()).diagonal();
  return {mean_over(dir, A.observed_indices()), mean_over(dir, A.null_indices())};
}

OracleReference oracle_reference(const GaussianMixture& prior, const LinearOperatorSVD& A,
                                 double sigma_y, int n_cases, std::uint64_t seed, int k_samples) {
  if (n_cases < 1 || k_samples < 2) {
    throw std::invalid_argument("oracle_reference: need n_cases >= 1 and k_samples >= 2");
  }
  std::vector<CaseSamples> cases;
  double tv_obs = 0.0;
  double tv_null = 0.0;
  for (int c = 0; c < n_cases; ++c) {
    Rng truth_rng(derive_seed(seed, {{"oracle_truth", c}}));
    const Vector x_star = sample_mixture(prior, truth_rng);
    const Measurement m =
        synthesize_measurement(A, x_star, sigma_y, derive_seed(seed, {{"oracle_noise", c}}));
    const GaussianMixture post = exact_posterior(prior, A, m.y, sigma_y);
    const auto [obs, null] = theory_obs_null(mixture_moments(post).cov, A);
    tv_obs += obs;
    tv_null += null;
    Rng rng(derive_seed(seed, {{"oracle_samples", c}}));
    Matrix samples(k_samples, prior.dim());
    for (int k = 0; k < k_samples; ++k) samples.row(k) = sample_mixture(post, rng).transpose();
    cases.push_back({std::move(samples), x_star});
  }
  OracleReference ref;
  ref.oracle_coverage = coverage_eval(cases).coverage_global;
  ref.oracle_rmse = rmse_eval(cases).rmse_mean;
  ref.theory_var_obs = tv_obs / n_cases;
  ref.theory_var_null = tv_null / n_cases;
  ref.n_cases = n_cases;
  ref.k_samples = k_samples;
  return ref;
}

}  // namespace pnpbench
