#include <algorithm>
#include <stdexcept>

#include "algorithms.hpp"
#include "pnpbench/solver_steps.hpp"

namespace pnpbench {

// Gradient descent from A^+ y. Iteration t draws its noise level from a
// window of `level_window` consecutive schedule levels that slides from the
// top of the schedule (t = 0) to the bottom (t = opt_steps - 1).
SolverOutput run_reddiff(const SolverContext& ctx, Rng& rng) {
  const int steps = ctx.spec.get_int("opt_steps");
  const int levels = ctx.dp.schedule().steps + 1;
  const int window = std::clamp(ctx.spec.get_int("level_window"), 1, levels);
  const double lambda = ctx.spec.get("lambda_reg");
  const double lr = ctx.spec.get("step_size");
  if (steps < 1) throw std::invalid_argument("reddiff: opt_steps must be >= 1");
  Vector mu = ctx.cache.pinv_y;
  const int travel = levels - window;
  for (int t = 0; t < steps; ++t) {
    const int lo = steps == 1 ? travel : static_cast<int>(static_cast<long>(t) * travel / (steps - 1));
    mu = reddiff_update(mu, ctx.m.y, ctx.A, ctx.m.sigma_y, ctx.dp, lambda, lr, lo, lo + window - 1,
                        rng);
    require_finite(mu, t, "REDDiff iterate");
  }
  return {std::move(mu), {}};
}

}  // namespace pnpbench
