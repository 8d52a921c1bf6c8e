#include <doctest.h>

#include <cmath>
#include <cstring>
#include <set>

#include "oracles.hpp"
#include "pnpbench/diffusion.hpp"
#include "pnpbench/forward_ops.hpp"
#include "pnpbench/gmm.hpp"
#include "pnpbench/solvers.hpp"
#include "pnpbench/solver_steps.hpp"

using namespace pnpbench;

namespace {

struct Problem {
  GaussianMixture prior = build_toy_prior();
  LinearOperatorSVD A;
  DiffusionPrior dp;
  Measurement m;

  Problem(OperatorKind kind, int obs, double sigma_y, std::uint64_t seed)
      : A(build_operator(kind, 16, obs, BasisMode::random_orthogonal, 20240917)),
        dp(prior, build_schedule(0.01, 10.0, 100)),
        m(synthesize_measurement(A, sample_mixture(prior, 1, seed).row(0).transpose(), sigma_y,
                                 seed + 1)) {}
};

Matrix reverse_samples(const DiffusionPrior& dp, int n, std::uint64_t seed0,
                       ReverseMode mode = ReverseMode::ancestral_sde) {
  Matrix X(n, dp.dim());
  for (int i = 0; i < n; ++i) {
    ReverseConfig cfg;
    cfg.mode = mode;
    cfg.seed = seed0 + static_cast<std::uint64_t>(i);
    X.row(i) = reverse_sample(dp, cfg).transpose();
  }
  return X;
}

// Two-sample comparison of per-coordinate means and variances.
void check_same_marginals(const Matrix& a, const Matrix& b) {
  const auto ma = oracle::sample_moments(a), mb = oracle::sample_moments(b);
  const double z = oracle::family_z(2 * static_cast<int>(a.cols()));
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double se_mean = std::hypot(ma.mean_se[j], mb.mean_se[j]);
    CHECK(std::abs(ma.mean[j] - mb.mean[j]) < z * se_mean);
    const double se_var = std::hypot(ma.cov_se(j, j), mb.cov_se(j, j));
    CHECK(std::abs(ma.cov(j, j) - mb.cov(j, j)) < z * se_var);
  }
}

}  // namespace

TEST_CASE("taxonomy follows the three families") {
  const std::set<SolverName> targeting{SolverName::reference_exact, SolverName::pnpdm,
                                       SolverName::fps_smc, SolverName::mcg_diff};
  CHECK(all_solvers().size() == 10);
  for (SolverName n : all_solvers()) {
    const Family expected = targeting.count(n)    ? Family::posterior_targeting
                            : n == SolverName::reddiff ? Family::map_like
                                                       : Family::heuristic;
    CHECK(family_of(n) == expected);
    CHECK(resolve_solver(n).family == expected);
    CHECK(solver_name_from_string(to_string(n)) == n);
  }
}

TEST_CASE("unknown solver names list the valid identifiers") {
  try {
    solver_name_from_string("dsp");
    FAIL("expected an error");
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    for (SolverName n : all_solvers()) CHECK(msg.find(to_string(n)) != std::string::npos);
  }
}

TEST_CASE("hyperparameter resolution") {
  const auto spec = resolve_solver(SolverName::pnpdm, {{"rho_coupling", 0.2}});
  CHECK(spec.get("rho_coupling") == 0.2);
  CHECK(spec.hyper.size() == default_hyperparameters(SolverName::pnpdm).size());
  for (const auto& [key, value] : default_hyperparameters(SolverName::pnpdm))
    CHECK(spec.hyper.count(key) == 1);
  CHECK_THROWS(resolve_solver(SolverName::pnpdm, {{"guidance_scale", 1.0}}));
  CHECK_THROWS(resolve_solver(SolverName::dps, {{"guidance_scale", std::nan("")}}));
  CHECK_THROWS(spec.get("nope"));
  CHECK(hyper_digest(spec) == hyper_digest(resolve_solver(SolverName::pnpdm, {{"rho_coupling", 0.2}})));
  CHECK(hyper_digest(spec) != hyper_digest(resolve_solver(SolverName::pnpdm)));
  CHECK(hyper_digest(spec).size() == 16);
}

TEST_CASE("status codes round-trip") {
  for (auto c : {StatusCode::ok, StatusCode::diverged, StatusCode::degenerate})
    CHECK(status_code_from_string(to_string(c)) == c);
  CHECK(SampleStatus{StatusCode::degenerate}.usable());
  CHECK_FALSE(SampleStatus{StatusCode::diverged}.usable());
}

TEST_CASE("reference_exact matches the analytic posterior moments") {
  const Problem p(OperatorKind::binary_svd, 8, 1.0, 100);
  const auto post = exact_posterior(p.prior, p.A, p.m.y, p.m.sigma_y);
  const auto truth = mixture_moments(post);
  const auto batch = run_batch(resolve_solver(SolverName::reference_exact), p.m, p.A, p.dp, 10000, 1);
  const auto m = oracle::sample_moments(batch.samples);
  const double zm = oracle::family_z(16);
  for (int j = 0; j < 16; ++j) CHECK(std::abs(m.mean[j] - truth.mean[j]) < zm * m.mean_se[j]);
  const double zc = oracle::family_z(16 * 17 / 2);
  for (int i = 0; i < 16; ++i)
    for (int j = i; j < 16; ++j) CHECK(std::abs(m.cov(i, j) - truth.cov(i, j)) < zc * m.cov_se(i, j));
}

TEST_CASE("dps without guidance is the unconditional reverse sampler, bitwise") {
  const Problem p(OperatorKind::identity, 16, 1.0, 200);
  const auto spec = resolve_solver(SolverName::dps, {{"guidance_scale", 0.0}});
  for (std::uint64_t seed : {1ULL, 77ULL, 123456789ULL}) {
    ReverseConfig cfg;
    cfg.seed = seed;
    const auto [x, st] = sample_one(spec, p.m, p.A, p.dp, seed);
    CHECK(st.code == StatusCode::ok);
    CHECK(x == reverse_sample(p.dp, cfg));
  }
}

TEST_CASE("ddnm with a zero operator reduces to unconditional reverse sampling") {
  const Problem p(OperatorKind::binary_svd, 0, 1.0, 300);
  const int n = 3000;
  const auto batch = run_batch(resolve_solver(SolverName::ddnm), p.m, p.A, p.dp, n, 2);
  check_same_marginals(batch.samples, reverse_samples(p.dp, n, 500000));
}

TEST_CASE("diffpir with a vanishing likelihood reduces to unconditional reverse sampling") {
  // With zeta = 0 the DiffPIR transition is the deterministic reverse step,
  // so the reference is the probability-flow sampler from random init.
  Problem p(OperatorKind::identity, 16, 1.0, 400);
  p.m.sigma_y = 1e8;
  const int n = 3000;
  const auto batch =
      run_batch(resolve_solver(SolverName::diffpir, {{"zeta", 0.0}}), p.m, p.A, p.dp, n, 3);
  check_same_marginals(batch.samples,
                       reverse_samples(p.dp, n, 600000, ReverseMode::deterministic_ode));
}

TEST_CASE("reddiff collapses to a point estimate") {
  const Problem p(OperatorKind::identity, 16, 1.0, 500);
  const auto post = exact_posterior(p.prior, p.A, p.m.y, p.m.sigma_y);
  const Vector oracle_var = mixture_moments(post).cov.diagonal();
  const auto batch = run_batch(resolve_solver(SolverName::reddiff), p.m, p.A, p.dp, 100, 4);
  const Vector var = oracle::sample_moments(batch.samples).cov.diagonal();
  for (int j = 0; j < 16; ++j) CHECK(var[j] < 1e-2 * oracle_var[j]);
}

TEST_CASE("run_batch contracts") {
  const Problem p(OperatorKind::binary_svd, 8, 1.0, 600);
  for (SolverName n : all_solvers()) {
    CAPTURE(to_string(n));
    const auto spec = resolve_solver(n);
    const auto a = run_batch(spec, p.m, p.A, p.dp, 6, 99);
    CHECK(a.samples.rows() == 6);
    CHECK(a.samples.cols() == 16);
    CHECK(a.seeds.size() == 6);
    CHECK(a.status.size() == 6);
    const auto b = run_batch(spec, p.m, p.A, p.dp, 6, 99, 4);
    // NaN rows compare unequal under ==, so compare the bytes.
    CHECK(std::memcmp(a.samples.data(), b.samples.data(), sizeof(double) * 96) == 0);
    CHECK(a.seeds == b.seeds);
    for (Eigen::Index k = 0; k < 6; ++k) {
      CHECK(a.seeds[static_cast<std::size_t>(k)] == row_seed(99, k));
      const auto [x, st] = sample_one(spec, p.m, p.A, p.dp, row_seed(99, k));
      CHECK(std::memcmp(x.data(), a.samples.row(k).eval().data(), sizeof(double) * 16) == 0);
      CHECK(st.code == a.status[static_cast<std::size_t>(k)].code);
    }
  }
  CHECK_THROWS(run_batch(resolve_solver(SolverName::dps), p.m, p.A, p.dp, 0, 1));
}

TEST_CASE("fps_smc on a rank-deficient operator is flagged, never thrown") {
  const Problem p(OperatorKind::binary_svd, 8, 1.0, 700);
  const auto direct = run_batch(resolve_solver(SolverName::fps_smc), p.m, p.A, p.dp, 5, 5);
  CHECK(direct.failure_rate() == 1.0);
  CHECK(direct.k_valid() == 0);
  for (const auto& st : direct.status) {
    CHECK(st.code == StatusCode::diverged);
    CHECK_FALSE(st.detail.empty());
  }
  CHECK(direct.samples.array().isNaN().all());

  const auto guarded =
      run_batch(resolve_solver(SolverName::fps_smc, {{"pinv_guard", 1}}), p.m, p.A, p.dp, 5, 5);
  CHECK(guarded.failure_rate() == 0.0);
  CHECK(guarded.samples.allFinite());
  for (const auto& st : guarded.status) CHECK(st.code == StatusCode::degenerate);
}

TEST_CASE("posterior-targeting solvers track the posterior mean on the identity task") {
  const Problem p(OperatorKind::identity, 16, 1.0, 800);
  const auto truth = mixture_moments(exact_posterior(p.prior, p.A, p.m.y, p.m.sigma_y));
  for (SolverName n : {SolverName::pnpdm, SolverName::mcg_diff, SolverName::fps_smc}) {
    CAPTURE(to_string(n));
    const auto batch = run_batch(resolve_solver(n), p.m, p.A, p.dp, 400, 6);
    CHECK(batch.failure_rate() == 0.0);
    const auto m = oracle::sample_moments(batch.samples);
    // Loose: these samplers carry small finite-N and split biases.
    for (int j = 0; j < 16; ++j) CHECK(std::abs(m.mean[j] - truth.mean[j]) < 0.25);
    CHECK(oracle::rel_err(m.cov.diagonal(), truth.cov.diagonal()) < 0.3);
  }
}

TEST_CASE("pnpdm with the exact x-step samples its split target") {
  const Problem p(OperatorKind::binary_svd, 8, 1.0, 900);
  // Mode switching along the bimodal direction is slow at small coupling;
  // 100 sweeps leave it visibly unmixed at rho = 0.3, 1000 do not.
  const double rho = 0.3;
  const auto spec = resolve_solver(SolverName::pnpdm, {{"rho_coupling", rho},
                                                       {"rho_start", rho},
                                                       {"exact_x_step", 1},
                                                       {"gibbs_iters", 1000}});
  const auto target = mixture_moments(split_target_marginal(p.prior, p.A, p.m.y, p.m.sigma_y, rho));
  const auto batch = run_batch(spec, p.m, p.A, p.dp, 2000, 7);
  const auto m = oracle::sample_moments(batch.samples);
  const double z = oracle::family_z(32);
  for (int j = 0; j < 16; ++j) {
    CHECK(std::abs(m.mean[j] - target.mean[j]) < z * m.mean_se[j]);
    CHECK(std::abs(m.cov(j, j) - target.cov(j, j)) < z * m.cov_se(j, j));
  }
}
