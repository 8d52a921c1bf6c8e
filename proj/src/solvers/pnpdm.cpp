#include <cmath>
#include <stdexcept>

#include "algorithms.hpp"
#include "pnpbench/solver_steps.hpp"

namespace pnpbench {

namespace {

// Coupling for iteration it: geometric decay from rho_start to rho over the
// first half of the iterations, then constant.
double coupling_at(int it, int iters, double rho_start, double rho) {
  const int anneal = iters / 2;
  if (rho_start <= rho || it >= anneal) return rho;
  const double t = static_cast<double>(it) / static_cast<double>(anneal);
  return rho_start * std::pow(rho / rho_start, t);
}

}  // namespace

SolverOutput run_pnpdm(const SolverContext& ctx, Rng& rng) {
  const NoiseSchedule& s = ctx.dp.schedule();
  const double rho = ctx.spec.get("rho_coupling");
  const double rho_start = ctx.spec.get("rho_start");
  const int iters = ctx.spec.get_int("gibbs_iters");
  const bool exact_x = ctx.spec.get_int("exact_x_step") != 0;
  if (iters < 1) throw std::invalid_argument("pnpdm: gibbs_iters must be >= 1");
  for (double r : {rho, std::max(rho, rho_start)}) {
    if (!(r >= s.sigma_min && r <= s.sigma_max)) {
      throw std::invalid_argument("pnpdm: coupling must lie in [sigma_min, sigma_max]");
    }
  }
  Vector x = ctx.cache.pinv_y;
  for (int it = 0; it < iters; ++it) {
    const double r = coupling_at(it, iters, rho_start, rho);
    const Vector z = pnpdm_z_step(x, ctx.m.y, ctx.A, ctx.m.sigma_y, r, rng);
    if (exact_x) {
      x = sample_mixture(conjugate_denoising_posterior(ctx.dp.prior(), z, r), rng);
    } else {
      x = reverse_from(ctx.dp, z, r, ReverseMode::ancestral_sde, rng);
    }
    require_finite(x, it, "PnP-DM iterate");
  }
  return {std::move(x), {}};
}

}  // namespace pnpbench
