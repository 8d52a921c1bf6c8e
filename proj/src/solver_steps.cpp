#include "pnpbench/solver_steps.hpp"

#include <cmath>
#include <stdexcept>

#include "pnpbench/rng.hpp"

namespace pnpbench {

namespace {

// U^T y restricted to the singular directions, one entry per S_j.
Vector spectral_measurement(const LinearOperatorSVD& A, const Vector& y) {
  return A.U().leftCols(A.S().size()).transpose() * y;
}

}  // namespace

Vector pnpdm_z_step(const Vector& x, const Vector& y, const LinearOperatorSVD& A, double sigma_y,
                    double rho, Rng& rng) {
  if (!(sigma_y > 0.0) || !(rho > 0.0)) {
    throw std::invalid_argument("pnpdm_z_step: sigma_y and rho must be > 0");
  }
  const Eigen::Index d = A.input_dim();
  const Vector ys = spectral_measurement(A, y);
  const Vector xs = A.V().transpose() * x;
  const double iv = 1.0 / (sigma_y * sigma_y);
  const double ir = 1.0 / (rho * rho);
  Vector zs(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double s = A.singular_value(j);
    const double c = 1.0 / (s * s * iv + ir);
    const double obs = j < ys.size() ? s * ys[j] * iv : 0.0;
    zs[j] = c * (obs + xs[j] * ir) + std::sqrt(c) * rng.normal();
  }
  return A.V() * zs;
}

Vector pnpdm_z_step(const Vector& x, const Vector& y, const LinearOperatorSVD& A, double sigma_y,
                    double rho, std::uint64_t seed) {
  Rng rng(seed);
  return pnpdm_z_step(x, y, A, sigma_y, rho, rng);
}

GaussianMixture conjugate_denoising_posterior(const GaussianMixture& prior, const Vector& z,
                                              double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("conjugate_denoising_posterior: rho must be > 0");
  const Eigen::Index d = prior.dim();
  return linear_gaussian_posterior(prior, Matrix::Identity(d, d), z,
                                   rho * rho * Matrix::Identity(d, d));
}

GaussianMixture split_target_marginal(const GaussianMixture& prior, const LinearOperatorSVD& A,
                                      const Vector& y, double sigma_y, double rho) {
  const Eigen::Index m = A.output_dim();
  const Matrix R = sigma_y * sigma_y * Matrix::Identity(m, m) +
                   rho * rho * A.dense() * A.dense().transpose();
  return linear_gaussian_posterior(prior, A.dense(), y, R);
}

Vector dps_guidance_gradient(const ScoreResult& den, const Vector& y, const LinearOperatorSVD& A) {
  const Vector res = y - apply_forward(A, den.x_hat0);
  return -(den.jacobian.transpose() * apply_adjoint(A, res));
}

Vector dps_guidance_gradient(const GaussianMixture& prior, const Vector& x_t, double sigma_t,
                             const Vector& y, const LinearOperatorSVD& A, double /*sigma_y*/) {
  return dps_guidance_gradient(score_and_denoise(prior, x_t, sigma_t, true), y, A);
}

Vector ddnm_projection(const Vector& x_hat0, const Vector& y, const LinearOperatorSVD& A) {
  const Vector projected = apply_pinv(A, apply_forward(A, x_hat0));
  return apply_pinv(A, y) + x_hat0 - projected;
}

Vector ddrm_step(const Vector& x_t, const Vector& x_hat0, const Vector& y,
                 const LinearOperatorSVD& A, double sigma_y, double sigma_from, double sigma_to,
                 double eta, double eta_b, Rng& rng) {
  const Eigen::Index d = A.input_dim();
  const Vector ys = spectral_measurement(A, y);
  const Vector x0 = A.V().transpose() * x_hat0;
  const Vector xt = A.V().transpose() * x_t;
  const double a = sigma_from;
  const double b = sigma_to;
  const double keep = std::sqrt(1.0 - eta * eta);
  Vector out(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double s = A.singular_value(j);
    const double e = rng.normal();
    if (s == 0.0) {
      out[j] = x0[j] + keep * b * (xt[j] - x0[j]) / a + eta * b * e;
      continue;
    }
    const double ybar = ys[j] / s;
    const double noise = sigma_y / s;
    if (b < noise) {
      out[j] = x0[j] + keep * b * (ybar - x0[j]) / noise + eta * b * e;
    } else {
      out[j] = (1.0 - eta_b) * x0[j] + eta_b * ybar +
               std::sqrt(std::max(0.0, b * b - eta_b * eta_b * noise * noise)) * e;
    }
  }
  return A.V() * out;
}

Vector ddrm_init(const Vector& y, const LinearOperatorSVD& A, double sigma_y, double sigma_max,
                 Rng& rng) {
  const Eigen::Index d = A.input_dim();
  const Vector ys = spectral_measurement(A, y);
  Vector out(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double s = A.singular_value(j);
    const double e = rng.normal();
    const double noise = s > 0.0 ? sigma_y / s : 0.0;
    if (s > 0.0 && sigma_max > noise) {
      out[j] = ys[j] / s + std::sqrt(sigma_max * sigma_max - noise * noise) * e;
    } else {
      out[j] = sigma_max * e;
    }
  }
  return A.V() * out;
}

Vector spectral_consistency_update(SpectralKind kind, const Vector& x_hat0, const Vector& y,
                                   const LinearOperatorSVD& A, double sigma_y, double sigma_t,
                                   double eta, double eta_b, Rng& rng, const Vector& x_t,
                                   double sigma_to) {
  if (kind == SpectralKind::ddnm_projection) return ddnm_projection(x_hat0, y, A);
  if (x_t.size() != x_hat0.size()) {
    throw std::invalid_argument("spectral_consistency_update: ddrm_step needs the current iterate");
  }
  return ddrm_step(x_t, x_hat0, y, A, sigma_y, sigma_t, sigma_to, eta, eta_b, rng);
}

Vector prox_data_step(const Vector& x_hat0, const Vector& y, const LinearOperatorSVD& A,
                      double sigma_y, double rho_t) {
  if (!(rho_t > 0.0)) throw std::invalid_argument("prox_data_step: rho_t must be > 0");
  const Eigen::Index d = A.input_dim();
  const Vector ys = spectral_measurement(A, y);
  const Vector x0 = A.V().transpose() * x_hat0;
  const double iv = 1.0 / (sigma_y * sigma_y);
  Vector z(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double s = A.singular_value(j);
    const double obs = j < ys.size() ? s * ys[j] * iv : 0.0;
    z[j] = (obs + rho_t * x0[j]) / (s * s * iv + rho_t);
  }
  return A.V() * z;
}

Vector daps_log_target_grad(const Vector& x0, const Vector& anchor, double r_t, const Vector& y,
                            const LinearOperatorSVD& A, double sigma_y) {
  return apply_adjoint(A, y - apply_forward(A, x0)) / (sigma_y * sigma_y) -
         (x0 - anchor) / (r_t * r_t);
}

Vector daps_langevin_step(const Vector& x0, const Vector& anchor, double r_t, const Vector& y,
                          const LinearOperatorSVD& A, double sigma_y, double step_size, Rng& rng) {
  if (step_size == 0.0) return x0;
  const Vector grad = daps_log_target_grad(x0, anchor, r_t, y, A, sigma_y);
  return x0 + 0.5 * step_size * grad + std::sqrt(step_size) * rng.normal_vector(x0.size());
}

Vector reddiff_update(const Vector& mu, const Vector& y, const LinearOperatorSVD& A,
                      double sigma_y, const DiffusionPrior& dp, double lambda_reg,
                      double step_size, int level_lo, int level_hi, Rng& rng) {
  if (!(step_size > 0.0)) throw std::invalid_argument("reddiff_update: step_size must be > 0");
  if (level_lo < 0 || level_hi > dp.schedule().steps || level_lo > level_hi) {
    throw std::invalid_argument("reddiff_update: invalid level window");
  }
  const int span = level_hi - level_lo + 1;
  const int level = level_lo + static_cast<int>(rng.uniform() * span);
  const double sigma = dp.schedule()[level];
  const Vector eps = rng.normal_vector(mu.size());
  Vector grad = apply_adjoint(A, apply_forward(A, mu) - y) / (sigma_y * sigma_y);
  if (lambda_reg != 0.0) {
    const ScoreResult den = dp.denoise(level, mu + sigma * eps);
    grad += lambda_reg * (mu - den.x_hat0);
  }
  return mu - step_size * grad;
}

}  // namespace pnpbench
