#include <chrono>
#include <stdexcept>

#include "algorithms.hpp"
#include "pnpbench/errors.hpp"
#include "pnpbench/parallel.hpp"
#include "pnpbench/seed.hpp"

namespace pnpbench {

void require_finite(const Vector& x, int step, const char* what) {
  if (!x.allFinite()) {
    throw NumericalError(std::string("non-finite ") + what + " at step " + std::to_string(step),
                         step);
  }
}

Eigen::Index SampleBatch::k_valid() const {
  Eigen::Index n = 0;
  for (const auto& s : status) n += s.usable() ? 1 : 0;
  return n;
}

Matrix SampleBatch::usable_samples() const {
  Matrix out(k_valid(), samples.cols());
  Eigen::Index r = 0;
  for (Eigen::Index k = 0; k < samples.rows(); ++k)
    if (status[static_cast<std::size_t>(k)].usable()) out.row(r++) = samples.row(k);
  return out;
}

double SampleBatch::failure_rate() const {
  if (status.empty()) return 0.0;
  return static_cast<double>(k() - k_valid()) / static_cast<double>(k());
}

SolverSession::SolverSession(SolverSpec spec, const LinearOperatorSVD& A, Measurement m,
                             const DiffusionPrior& dp)
    : spec_(std::move(spec)), A_(&A), m_(std::move(m)), dp_(&dp),
      cache_(std::make_unique<Cache>()) {
  if (m_.y.size() != A.output_dim() || A.input_dim() != dp.dim()) {
    throw std::invalid_argument("measurement, operator and prior dimensions disagree");
  }
  cache_->pinv_y = apply_pinv(A, m_.y);
  if (spec_.name == SolverName::reference_exact) {
    cache_->posterior = exact_posterior(dp.prior(), A, m_.y, m_.sigma_y);
  }
}

SolverSession::~SolverSession() = default;
SolverSession::SolverSession(SolverSession&&) noexcept = default;

std::pair<Vector, SampleStatus> SolverSession::sample(std::uint64_t seed) const {
  Rng rng(seed);
  const SolverContext ctx{spec_, *A_, m_, *dp_, *cache_};
  SolverOutput out;
  try {
    switch (spec_.name) {
      case SolverName::reference_exact:
        out.x = sample_mixture(*cache_->posterior, rng);
        break;
      case SolverName::dps: out = run_dps(ctx, rng); break;
      case SolverName::daps: out = run_daps(ctx, rng); break;
      case SolverName::diffpir: out = run_diffpir(ctx, rng); break;
      case SolverName::ddnm: out = run_ddnm(ctx, rng); break;
      case SolverName::ddrm: out = run_ddrm(ctx, rng); break;
      case SolverName::pnpdm: out = run_pnpdm(ctx, rng); break;
      case SolverName::fps_smc: out = run_fps_smc(ctx, rng); break;
      case SolverName::mcg_diff: out = run_mcg_diff(ctx, rng); break;
      case SolverName::reddiff: out = run_reddiff(ctx, rng); break;
    }
    require_finite(out.x, -1, "output");
  } catch (const NumericalError& e) {
    SampleStatus st{StatusCode::diverged, e.index(), e.what()};
    return {Vector::Constant(dp_->dim(), std::numeric_limits<double>::quiet_NaN()), st};
  }
  return {std::move(out.x), out.status};
}

std::pair<Vector, SampleStatus> sample_one(const SolverSpec& spec, const Measurement& m,
                                           const LinearOperatorSVD& A, const DiffusionPrior& dp,
                                           std::uint64_t seed) {
  return SolverSession(spec, A, m, dp).sample(seed);
}

std::uint64_t row_seed(std::uint64_t base_seed, Eigen::Index k) {
  return derive_seed(base_seed, {{"row", static_cast<std::int64_t>(k)}});
}

SampleBatch run_batch(const SolverSpec& spec, const Measurement& m, const LinearOperatorSVD& A,
                      const DiffusionPrior& dp, Eigen::Index K, std::uint64_t base_seed,
                      int workers) {
  if (K < 1) throw std::invalid_argument("run_batch: K must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  const SolverSession session(spec, A, m, dp);
  SampleBatch batch{spec, m, Matrix(K, dp.dim()), {}, {}, 0.0};
  batch.seeds.resize(static_cast<std::size_t>(K));
  batch.status.resize(static_cast<std::size_t>(K));
  for (Eigen::Index k = 0; k < K; ++k) batch.seeds[static_cast<std::size_t>(k)] = row_seed(base_seed, k);
  parallel_for(static_cast<std::size_t>(K), workers, [&](std::size_t k) {
    auto [x, st] = session.sample(batch.seeds[k]);
    batch.samples.row(static_cast<Eigen::Index>(k)) = x.transpose();
    batch.status[k] = std::move(st);
  });
  batch.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return batch;
}

}  // namespace pnpbench
