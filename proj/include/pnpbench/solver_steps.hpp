#pragma once

#include <cstdint>
#include <string>

#include "pnpbench/diffusion.hpp"
#include "pnpbench/forward_ops.hpp"
#include "pnpbench/gmm.hpp"

namespace pnpbench {

class Rng;

// Exact draw from p(z | x, y) proportional to
// exp(-|y - A z|^2 / (2 sigma_y^2) - |x - z|^2 / (2 rho^2)).
Vector pnpdm_z_step(const Vector& x, const Vector& y, const LinearOperatorSVD& A, double sigma_y,
                    double rho, Rng& rng);
Vector pnpdm_z_step(const Vector& x, const Vector& y, const LinearOperatorSVD& A, double sigma_y,
                    double rho, std::uint64_t seed);

// p(x) N(x; z, rho^2 I), normalized.
GaussianMixture conjugate_denoising_posterior(const GaussianMixture& prior, const Vector& z,
                                              double rho);

// x-marginal of the split target p(x) N(y; A x, sigma_y^2 I + rho^2 A A^T).
GaussianMixture split_target_marginal(const GaussianMixture& prior, const LinearOperatorSVD& A,
                                      const Vector& y, double sigma_y, double rho);

// Gradient of 0.5 |y - A x_hat0(x_t)|^2 with respect to x_t. sigma_y does not
// enter the loss; the DPS step normalizes by the residual norm instead.
Vector dps_guidance_gradient(const GaussianMixture& prior, const Vector& x_t, double sigma_t,
                             const Vector& y, const LinearOperatorSVD& A, double sigma_y);
Vector dps_guidance_gradient(const ScoreResult& den, const Vector& y, const LinearOperatorSVD& A);

enum class SpectralKind { ddnm_projection, ddrm_step };

// A^+ y + (I - A^+ A) x_hat0.
Vector ddnm_projection(const Vector& x_hat0, const Vector& y, const LinearOperatorSVD& A);

// One DDRM transition sigma_from -> sigma_to in the V^T basis. Coordinate j
// with singular value s_j and ybar_j = (U^T y)_j / s_j:
//   s_j = 0:                    x0 + sqrt(1-eta^2) b (xt - x0) / a + eta b e
//   b < sigma_y / s_j:          x0 + sqrt(1-eta^2) b (ybar - x0) / (sigma_y/s_j) + eta b e
//   otherwise:                  (1-eta_b) x0 + eta_b ybar + sqrt(b^2 - eta_b^2 sigma_y^2/s_j^2) e
// with a = sigma_from, b = sigma_to, x0 = V^T x_hat0, xt = V^T x_t.
Vector ddrm_step(const Vector& x_t, const Vector& x_hat0, const Vector& y,
                 const LinearOperatorSVD& A, double sigma_y, double sigma_from, double sigma_to,
                 double eta, double eta_b, Rng& rng);

// Initial iterate at sigma_max for DDRM: observed coordinates centred on ybar
// when sigma_max exceeds their noise level, pure noise elsewhere.
Vector ddrm_init(const Vector& y, const LinearOperatorSVD& A, double sigma_y, double sigma_max,
                 Rng& rng);

Vector spectral_consistency_update(SpectralKind kind, const Vector& x_hat0, const Vector& y,
                                   const LinearOperatorSVD& A, double sigma_y, double sigma_t,
                                   double eta, double eta_b, Rng& rng, const Vector& x_t = {},
                                   double sigma_to = 0.0);

// argmin_z |y - A z|^2 / (2 sigma_y^2) + (rho_t / 2) |z - x_hat0|^2.
Vector prox_data_step(const Vector& x_hat0, const Vector& y, const LinearOperatorSVD& A,
                      double sigma_y, double rho_t);

// Gradient of log pi(x0) = -|y - A x0|^2 / (2 sigma_y^2) - |x0 - anchor|^2 / (2 r_t^2).
Vector daps_log_target_grad(const Vector& x0, const Vector& anchor, double r_t, const Vector& y,
                            const LinearOperatorSVD& A, double sigma_y);

// x0 + (step / 2) grad log pi + sqrt(step) xi.
Vector daps_langevin_step(const Vector& x0, const Vector& anchor, double r_t, const Vector& y,
                          const LinearOperatorSVD& A, double sigma_y, double step_size, Rng& rng);

// One stochastic gradient step on
//   |y - A mu|^2 / (2 sigma_y^2) + lambda * sigma * sg(eps_hat - eps)^T mu
// at a noise level drawn uniformly from schedule indices [level_lo, level_hi].
// With eps_hat from the exact score the regularizer gradient is
// lambda * (mu - x_hat0(mu + sigma eps)).
Vector reddiff_update(const Vector& mu, const Vector& y, const LinearOperatorSVD& A,
                      double sigma_y, const DiffusionPrior& dp, double lambda_reg,
                      double step_size, int level_lo, int level_hi, Rng& rng);

}  // namespace pnpbench
