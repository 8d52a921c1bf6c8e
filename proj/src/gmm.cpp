#include "pnpbench/gmm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pnpbench/errors.hpp"
#include "pnpbench/rng.hpp"

namespace pnpbench {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double log_sum_exp(const Vector& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

// Normalizes log-weights, zeroing anything below 1e-300.
Vector normalize_log_weights(const Vector& logw) {
  const double lse = log_sum_exp(logw);
  if (!std::isfinite(lse)) throw NumericalError("mixture weights underflowed to zero");
  Vector w = (logw.array() - lse).exp();
  for (Eigen::Index c = 0; c < w.size(); ++c)
    if (w[c] < 1e-300) w[c] = 0.0;
  return w / w.sum();
}

double normal_cdf(double z) {
  if (z == std::numeric_limits<double>::infinity()) return 1.0;
  if (z == -std::numeric_limits<double>::infinity()) return 0.0;
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double gaussian_logpdf(const Vector& r, const Eigen::LLT<Matrix>& llt) {
  const Vector w = llt.matrixL().solve(r);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(r.size()) * kLog2Pi + logdet + w.squaredNorm());
}

}  // namespace

void validate(const ToyPriorSpec& spec) {
  if (spec.d < 1) throw std::invalid_argument("toy prior: d must be positive");
  if (!(spec.rho_ar >= 0.0 && spec.rho_ar < 1.0))
    throw std::invalid_argument("toy prior: rho_ar must lie in [0, 1)");
  if (!(spec.sigma_w_sq > 0.0)) throw std::invalid_argument("toy prior: sigma_w_sq must be > 0");
  if (!(0 <= spec.bimodal_coord && spec.bimodal_coord < spec.structured_dim &&
        spec.structured_dim <= spec.d)) {
    throw std::invalid_argument(
        "toy prior: need 0 <= bimodal_coord < structured_dim <= d (got bimodal_coord=" +
        std::to_string(spec.bimodal_coord) + ", structured_dim=" +
        std::to_string(spec.structured_dim) + ", d=" + std::to_string(spec.d) + ")");
  }
}

GaussianMixture::GaussianMixture(Vector weights, std::vector<Vector> means,
                                 std::vector<Matrix> covs)
    : weights_(std::move(weights)), means_(std::move(means)), covs_(std::move(covs)) {
  const auto C = weights_.size();
  if (C < 1) throw std::invalid_argument("mixture needs at least one component");
  if (static_cast<Eigen::Index>(means_.size()) != C ||
      static_cast<Eigen::Index>(covs_.size()) != C) {
    throw std::invalid_argument("mixture: weights, means and covariances differ in length");
  }
  if ((weights_.array() < 0.0).any() || std::abs(weights_.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("mixture weights must be nonnegative and sum to 1");
  }
  const Eigen::Index d = means_.front().size();
  bool shared = true;
  for (std::size_t c = 0; c < means_.size(); ++c) {
    if (means_[c].size() != d || covs_[c].rows() != d || covs_[c].cols() != d) {
      throw std::invalid_argument("mixture component " + std::to_string(c) +
                                  " has inconsistent dimension");
    }
    if ((covs_[c] - covs_[c].transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("mixture covariance " + std::to_string(c) +
                                  " is not symmetric");
    }
    if (c > 0 && covs_[c] != covs_[0]) shared = false;
  }
  const std::size_t n_factors = shared ? 1 : covs_.size();
  factors_.resize(n_factors);
  for (std::size_t c = 0; c < n_factors; ++c) {
    Eigen::LLT<Matrix> llt(covs_[c]);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("Cholesky failed for mixture covariance " + std::to_string(c),
                           static_cast<int>(c));
    }
    Factor& f = factors_[c];
    f.lower = llt.matrixL();
    f.precision = llt.solve(Matrix::Identity(d, d));
    f.precision = 0.5 * (f.precision + f.precision.transpose());
    f.log_det = 2.0 * f.lower.diagonal().array().log().sum();
  }
}

GaussianMixture build_toy_prior(const ToyPriorSpec& spec) {
  validate(spec);
  const int d = spec.d;
  Matrix cov = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i < spec.structured_dim && j < spec.structured_dim) {
        cov(i, j) = std::pow(spec.rho_ar, std::abs(i - j));
      } else if (i == j) {
        cov(i, j) = spec.sigma_w_sq;
      }
    }
  }
  Vector plus = Vector::Zero(d);
  plus[spec.bimodal_coord] = spec.mu_sep;
  return GaussianMixture(Vector::Constant(2, 0.5), {plus, -plus}, {cov, cov});
}

double mixture_logpdf(const GaussianMixture& gmm, const Vector& x) {
  if (x.size() != gmm.dim()) throw std::invalid_argument("mixture_logpdf: dimension mismatch");
  if (!x.allFinite()) throw std::invalid_argument("mixture_logpdf: x is not finite");
  const double d = static_cast<double>(gmm.dim());
  Vector terms(gmm.components());
  for (Eigen::Index c = 0; c < gmm.components(); ++c) {
    const Vector r = x - gmm.mean(c);
    const double quad = r.dot(gmm.precision(c) * r);
    terms[c] = std::log(gmm.weights()[c]) - 0.5 * (d * kLog2Pi + gmm.log_det(c) + quad);
  }
  return log_sum_exp(terms);
}

Vector sample_mixture(const GaussianMixture& gmm, Rng& rng) {
  const Eigen::Index c = rng.categorical(gmm.weights());
  const Vector z = rng.normal_vector(gmm.dim());
  return gmm.mean(c) + gmm.chol_lower(c) * z;
}

Matrix sample_mixture(const GaussianMixture& gmm, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_mixture: n must be >= 1");
  Rng rng(seed);
  Matrix out(n, gmm.dim());
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = sample_mixture(gmm, rng).transpose();
  return out;
}

GaussianMixture noisy_marginal(const GaussianMixture& gmm, double sigma_t) {
  if (!(sigma_t >= 0.0)) throw std::invalid_argument("noisy_marginal: sigma_t must be >= 0");
  if (sigma_t == 0.0) return gmm;
  std::vector<Matrix> covs = gmm.covs();
  for (auto& cov : covs) cov.diagonal().array() += sigma_t * sigma_t;
  return GaussianMixture(gmm.weights(), gmm.means(), std::move(covs));
}

ScoreResult denoise_with_marginal(const GaussianMixture& marginal, const Vector& x,
                                  double sigma_t, bool with_jacobian) {
  const Eigen::Index C = marginal.components();
  const Eigen::Index d = marginal.dim();
  std::vector<Vector> grads(static_cast<std::size_t>(C));
  Vector logr = Vector::Constant(C, -std::numeric_limits<double>::infinity());
  for (Eigen::Index c = 0; c < C; ++c) {
    const double w = marginal.weights()[c];
    if (w == 0.0) continue;
    const Vector r = x - marginal.mean(c);
    Vector g = -(marginal.precision(c) * r);
    const double quad = -r.dot(g);
    logr[c] = std::log(w) - 0.5 * (marginal.log_det(c) + quad);
    if (!std::isfinite(logr[c]) || !g.allFinite()) {
      throw NumericalError("non-finite score term in mixture component " + std::to_string(c),
                           static_cast<int>(c));
    }
    grads[static_cast<std::size_t>(c)] = std::move(g);
  }
  const double lse = log_sum_exp(logr);
  ScoreResult out;
  out.score = Vector::Zero(d);
  Vector resp(C);
  for (Eigen::Index c = 0; c < C; ++c) {
    resp[c] = std::isfinite(logr[c]) ? std::exp(logr[c] - lse) : 0.0;
    if (resp[c] > 0.0) out.score += resp[c] * grads[static_cast<std::size_t>(c)];
  }
  const double s2 = sigma_t * sigma_t;
  out.x_hat0 = x + s2 * out.score;
  if (with_jacobian) {
    Matrix hess = -out.score * out.score.transpose();
    for (Eigen::Index c = 0; c < C; ++c) {
      if (resp[c] == 0.0) continue;
      const Vector& g = grads[static_cast<std::size_t>(c)];
      hess.noalias() += resp[c] * (g * g.transpose() - marginal.precision(c));
    }
    out.jacobian = Matrix::Identity(d, d) + s2 * hess;
  }
  return out;
}

ScoreResult score_and_denoise(const GaussianMixture& gmm, const Vector& x, double sigma_t,
                              bool with_jacobian) {
  if (!(sigma_t > 0.0)) throw std::invalid_argument("score_and_denoise: sigma_t must be > 0");
  if (x.size() != gmm.dim()) throw std::invalid_argument("score_and_denoise: dimension mismatch");
  return denoise_with_marginal(noisy_marginal(gmm, sigma_t), x, sigma_t, with_jacobian);
}

GaussianMixture linear_gaussian_posterior(const GaussianMixture& prior, const Matrix& H,
                                          const Vector& y, const Matrix& R) {
  const Eigen::Index d = prior.dim();
  if (H.cols() != d || H.rows() != y.size() || R.rows() != y.size() || R.cols() != y.size()) {
    throw std::invalid_argument("linear_gaussian_posterior: dimension mismatch");
  }
  Eigen::LLT<Matrix> r_llt(R);
  if (r_llt.info() != Eigen::Success) throw NumericalError("noise covariance is not SPD");
  const Matrix Ht_Rinv = r_llt.solve(H).transpose();
  const Matrix info_lik = Ht_Rinv * H;
  const Vector info_y = Ht_Rinv * y;

  const Eigen::Index C = prior.components();
  std::vector<Vector> means(static_cast<std::size_t>(C));
  std::vector<Matrix> covs(static_cast<std::size_t>(C));
  Vector logw = Vector::Constant(C, -std::numeric_limits<double>::infinity());
  for (Eigen::Index c = 0; c < C; ++c) {
    const auto k = static_cast<std::size_t>(c);
    if (c == 0 || !prior.shared_covariance()) {
      Eigen::LLT<Matrix> llt(prior.precision(c) + info_lik);
      if (llt.info() != Eigen::Success) {
        throw NumericalError("posterior precision not SPD for component " + std::to_string(c),
                             static_cast<int>(c));
      }
      Matrix post = llt.solve(Matrix::Identity(d, d));
      covs[k] = 0.5 * (post + post.transpose());
    } else {
      covs[k] = covs[0];
    }
    means[k] = covs[k] * (prior.precision(c) * prior.mean(c) + info_y);
    if (prior.weights()[c] == 0.0) continue;
    Eigen::LLT<Matrix> ev(H * prior.cov(c) * H.transpose() + R);
    if (ev.info() != Eigen::Success) {
      throw NumericalError("evidence covariance not SPD for component " + std::to_string(c),
                           static_cast<int>(c));
    }
    logw[c] = std::log(prior.weights()[c]) + gaussian_logpdf(y - H * prior.mean(c), ev);
  }
  return GaussianMixture(normalize_log_weights(logw), std::move(means), std::move(covs));
}

GaussianMixture exact_posterior(const GaussianMixture& gmm, const LinearOperatorSVD& A,
                                const Vector& y, double sigma_y) {
  if (!(sigma_y > 0.0)) throw std::invalid_argument("exact_posterior: sigma_y must be > 0");
  if (y.size() != A.output_dim()) throw std::invalid_argument("exact_posterior: y has wrong size");
  const Eigen::Index m = A.output_dim();
  return linear_gaussian_posterior(gmm, A.dense(), y,
                                   sigma_y * sigma_y * Matrix::Identity(m, m));
}

Moments mixture_moments(const GaussianMixture& gmm) {
  const Eigen::Index d = gmm.dim();
  Moments out{Vector::Zero(d), Matrix::Zero(d, d)};
  for (Eigen::Index c = 0; c < gmm.components(); ++c) {
    const double w = gmm.weights()[c];
    out.mean += w * gmm.mean(c);
    out.cov += w * (gmm.cov(c) + gmm.mean(c) * gmm.mean(c).transpose());
  }
  out.cov -= out.mean * out.mean.transpose();
  return out;
}

double mixture_cdf_1d(const GaussianMixture& gmm, Eigen::Index coord, double a, double b) {
  if (coord < 0 || coord >= gmm.dim()) {
    throw std::out_of_range("mixture_cdf_1d: coordinate " + std::to_string(coord) +
                            " outside [0, " + std::to_string(gmm.dim()) + ")");
  }
  if (!(a <= b)) throw std::invalid_argument("mixture_cdf_1d: need a <= b");
  double p = 0.0;
  for (Eigen::Index c = 0; c < gmm.components(); ++c) {
    const double mu = gmm.mean(c)[coord];
    const double sd = std::sqrt(gmm.cov(c)(coord, coord));
    p += gmm.weights()[c] * (normal_cdf((b - mu) / sd) - normal_cdf((a - mu) / sd));
  }
  return p;
}

}  // namespace pnpbench
