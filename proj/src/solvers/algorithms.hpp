#pragma once

#include <optional>

#include "pnpbench/rng.hpp"
#include "pnpbench/solvers.hpp"

namespace pnpbench {

struct SolverSession::Cache {
  Vector pinv_y;
  std::optional<GaussianMixture> posterior;
};

struct SolverContext {
  const SolverSpec& spec;
  const LinearOperatorSVD& A;
  const Measurement& m;
  const DiffusionPrior& dp;
  const SolverSession::Cache& cache;
};

struct SolverOutput {
  Vector x;
  SampleStatus status;
};

SolverOutput run_dps(const SolverContext& ctx, Rng& rng);
SolverOutput run_daps(const SolverContext& ctx, Rng& rng);
SolverOutput run_diffpir(const SolverContext& ctx, Rng& rng);
SolverOutput run_ddnm(const SolverContext& ctx, Rng& rng);
SolverOutput run_ddrm(const SolverContext& ctx, Rng& rng);
SolverOutput run_pnpdm(const SolverContext& ctx, Rng& rng);
SolverOutput run_fps_smc(const SolverContext& ctx, Rng& rng);
SolverOutput run_mcg_diff(const SolverContext& ctx, Rng& rng);
SolverOutput run_reddiff(const SolverContext& ctx, Rng& rng);

// Throws NumericalError tagged with `step` when x has a non-finite entry.
void require_finite(const Vector& x, int step, const char* what);

}  // namespace pnpbench
