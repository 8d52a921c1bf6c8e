#include <cmath>

#include "algorithms.hpp"
#include "pnpbench/solver_steps.hpp"

namespace pnpbench {

namespace {

Vector initial_noise(const NoiseSchedule& s, Eigen::Index d, Rng& rng) {
  return s.sigma_max * rng.normal_vector(d);
}

}  // namespace

SolverOutput run_dps(const SolverContext& ctx, Rng& rng) {
  const NoiseSchedule& s = ctx.dp.schedule();
  const double zeta = ctx.spec.get("guidance_scale");
  Vector x = initial_noise(s, ctx.dp.dim(), rng);
  for (int i = 0; i <= s.steps; ++i) {
    const ScoreResult den = ctx.dp.denoise(i, x, zeta != 0.0);
    Vector next = ancestral_step(x, den, s[i], s[i + 1], rng);
    if (zeta != 0.0) {
      const double res_norm = (ctx.m.y - apply_forward(ctx.A, den.x_hat0)).norm();
      if (res_norm > 0.0) next -= (zeta / res_norm) * dps_guidance_gradient(den, ctx.m.y, ctx.A);
    }
    require_finite(next, i, "DPS iterate");
    x = std::move(next);
  }
  return {std::move(x), {}};
}

SolverOutput run_daps(const SolverContext& ctx, Rng& rng) {
  const NoiseSchedule& s = ctx.dp.schedule();
  const int inner = ctx.spec.get_int("langevin_steps");
  const double step_scale = ctx.spec.get("step_size");
  const double sy = ctx.m.sigma_y;
  const double smax = ctx.A.S().size() > 0 ? ctx.A.S().maxCoeff() : 0.0;
  Vector x = initial_noise(s, ctx.dp.dim(), rng);
  Vector x0;
  for (int i = 0; i <= s.steps; ++i) {
    const double r = s[i];
    const Vector anchor = ctx.dp.denoise(i, x).x_hat0;
    const double step = step_scale / (smax * smax / (sy * sy) + 1.0 / (r * r));
    x0 = anchor;
    for (int l = 0; l < inner; ++l) {
      x0 = daps_langevin_step(x0, anchor, r, ctx.m.y, ctx.A, sy, step, rng);
    }
    require_finite(x0, i, "DAPS iterate");
    x = x0 + s[i + 1] * rng.normal_vector(x0.size());
  }
  return {std::move(x0), {}};
}

SolverOutput run_diffpir(const SolverContext& ctx, Rng& rng) {
  const NoiseSchedule& s = ctx.dp.schedule();
  const double lambda = ctx.spec.get("lambda_reg");
  const double zeta = ctx.spec.get("zeta");
  Vector x = initial_noise(s, ctx.dp.dim(), rng);
  for (int i = 0; i <= s.steps; ++i) {
    const double sigma = s[i];
    const ScoreResult den = ctx.dp.denoise(i, x);
    const Vector z = prox_data_step(den.x_hat0, ctx.m.y, ctx.A, ctx.m.sigma_y,
                                    lambda / (sigma * sigma));
    if (s[i + 1] == 0.0) {
      x = z;
    } else {
      const Vector eps_hat = (x - z) / sigma;
      x = z + s[i + 1] * (std::sqrt(1.0 - zeta) * eps_hat +
                          std::sqrt(zeta) * rng.normal_vector(x.size()));
    }
    require_finite(x, i, "DiffPIR iterate");
  }
  return {std::move(x), {}};
}

SolverOutput run_ddnm(const SolverContext& ctx, Rng& rng) {
  const NoiseSchedule& s = ctx.dp.schedule();
  Vector x = initial_noise(s, ctx.dp.dim(), rng);
  for (int i = 0; i <= s.steps; ++i) {
    ScoreResult den = ctx.dp.denoise(i, x);
    den.x_hat0 = ddnm_projection(den.x_hat0, ctx.m.y, ctx.A);
    den.score = (den.x_hat0 - x) / (s[i] * s[i]);
    x = ancestral_step(x, den, s[i], s[i + 1], rng);
    require_finite(x, i, "DDNM iterate");
  }
  return {std::move(x), {}};
}

SolverOutput run_ddrm(const SolverContext& ctx, Rng& rng) {
  const NoiseSchedule& s = ctx.dp.schedule();
  const double eta = ctx.spec.get("eta");
  const double eta_b = ctx.spec.get("eta_b");
  Vector x = ddrm_init(ctx.m.y, ctx.A, ctx.m.sigma_y, s.sigma_max, rng);
  for (int i = 0; i <= s.steps; ++i) {
    const ScoreResult den = ctx.dp.denoise(i, x);
    x = ddrm_step(x, den.x_hat0, ctx.m.y, ctx.A, ctx.m.sigma_y, s[i], s[i + 1], eta, eta_b, rng);
    require_finite(x, i, "DDRM iterate");
  }
  return {std::move(x), {}};
}

}  // namespace pnpbench
