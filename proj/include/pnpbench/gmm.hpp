#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "pnpbench/forward_ops.hpp"

namespace pnpbench {

class Rng;

struct ToyPriorSpec {
  int d = 16;
  int structured_dim = 8;
  double rho_ar = 0.8;
  double sigma_w_sq = 5.0;
  double mu_sep = 2.0;
  int bimodal_coord = 7;

  bool operator==(const ToyPriorSpec&) const = default;
};

void validate(const ToyPriorSpec& spec);

// Weighted sum of full-covariance Gaussians. Per-component Cholesky factors,
// precisions and log-determinants are computed once at construction.
class GaussianMixture {
 public:
  GaussianMixture(Vector weights, std::vector<Vector> means, std::vector<Matrix> covs);

  Eigen::Index components() const { return weights_.size(); }
  Eigen::Index dim() const { return means_.front().size(); }

  const Vector& weights() const { return weights_; }
  const std::vector<Vector>& means() const { return means_; }
  const std::vector<Matrix>& covs() const { return covs_; }
  const Vector& mean(Eigen::Index c) const { return means_[static_cast<std::size_t>(c)]; }
  const Matrix& cov(Eigen::Index c) const { return covs_[static_cast<std::size_t>(c)]; }

  const Matrix& precision(Eigen::Index c) const { return factor(c).precision; }
  const Matrix& chol_lower(Eigen::Index c) const { return factor(c).lower; }
  double log_det(Eigen::Index c) const { return factor(c).log_det; }
  bool shared_covariance() const { return factors_.size() == 1; }

 private:
  struct Factor {
    Matrix lower;
    Matrix precision;
    double log_det = 0.0;
  };
  const Factor& factor(Eigen::Index c) const {
    return factors_[shared_covariance() ? 0 : static_cast<std::size_t>(c)];
  }

  Vector weights_;
  std::vector<Vector> means_;
  std::vector<Matrix> covs_;
  std::vector<Factor> factors_;
};

GaussianMixture build_toy_prior(const ToyPriorSpec& spec = {});

double mixture_logpdf(const GaussianMixture& gmm, const Vector& x);

// Rows are i.i.d. draws. Each draw takes a categorical component index and
// then d normals from the generator, in that order.
Matrix sample_mixture(const GaussianMixture& gmm, Eigen::Index n, std::uint64_t seed);
Vector sample_mixture(const GaussianMixture& gmm, Rng& rng);

GaussianMixture noisy_marginal(const GaussianMixture& gmm, double sigma_t);

struct ScoreResult {
  Vector score;
  Vector x_hat0;
  Matrix jacobian;  // d x d dx_hat0/dx, empty unless requested
};

// Score of gmm convolved with N(0, sigma_t^2 I) and the Tweedie denoiser.
ScoreResult score_and_denoise(const GaussianMixture& gmm, const Vector& x, double sigma_t,
                              bool with_jacobian = true);

// Same quantities when the noisy marginal at sigma_t is already at hand.
ScoreResult denoise_with_marginal(const GaussianMixture& marginal, const Vector& x,
                                  double sigma_t, bool with_jacobian);

// Mixture posterior for y = H x + e, e ~ N(0, R), under a mixture prior.
GaussianMixture linear_gaussian_posterior(const GaussianMixture& prior, const Matrix& H,
                                          const Vector& y, const Matrix& R);

GaussianMixture exact_posterior(const GaussianMixture& gmm, const LinearOperatorSVD& A,
                                const Vector& y, double sigma_y);

struct Moments {
  Vector mean;
  Matrix cov;
};

Moments mixture_moments(const GaussianMixture& gmm);

// P(a <= x_coord <= b); infinite bounds are allowed.
double mixture_cdf_1d(const GaussianMixture& gmm, Eigen::Index coord, double a, double b);

}  // namespace pnpbench
