#include <cmath>
#include <numbers>
#include <stdexcept>

#include "algorithms.hpp"
#include "pnpbench/errors.hpp"
#include "pnpbench/smc.hpp"

namespace pnpbench {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Per-level potential g_k(x) = prod_{j active} N(xbar_j; center_j, var_j)
// in the V^T basis.
struct Potential {
  std::vector<Eigen::Index> active;
  Vector center;
  Vector var;
};

double log_potential(const Potential& g, const Vector& xbar) {
  double out = 0.0;
  for (std::size_t a = 0; a < g.active.size(); ++a) {
    const Eigen::Index j = g.active[a];
    const double r = xbar[j] - g.center[static_cast<Eigen::Index>(a)];
    const double v = g.var[static_cast<Eigen::Index>(a)];
    out += -0.5 * (kLog2Pi + std::log(v) + r * r / v);
  }
  return out;
}

// log of integral N(x; m, v I) g(x) dx.
double log_predictive(const Potential& g, const Vector& mbar, double v) {
  double out = 0.0;
  for (std::size_t a = 0; a < g.active.size(); ++a) {
    const Eigen::Index j = g.active[a];
    const double r = mbar[j] - g.center[static_cast<Eigen::Index>(a)];
    const double tot = v + g.var[static_cast<Eigen::Index>(a)];
    out += -0.5 * (kLog2Pi + std::log(tot) + r * r / tot);
  }
  return out;
}

// Draw from N(x; m, v I) g(x), normalized, in the V^T basis.
Vector propose(const Potential& g, const Vector& mbar, double v, Rng& rng) {
  Vector xbar = mbar;
  if (v == 0.0) return xbar;
  const Vector e = rng.normal_vector(mbar.size());
  std::vector<char> done(static_cast<std::size_t>(mbar.size()), 0);
  for (std::size_t a = 0; a < g.active.size(); ++a) {
    const Eigen::Index j = g.active[a];
    const double kappa = g.var[static_cast<Eigen::Index>(a)];
    const double prec = 1.0 / v + 1.0 / kappa;
    const double mean = (mbar[j] / v + g.center[static_cast<Eigen::Index>(a)] / kappa) / prec;
    xbar[j] = mean + std::sqrt(1.0 / prec) * e[j];
    done[static_cast<std::size_t>(j)] = 1;
  }
  const double sd = std::sqrt(v);
  for (Eigen::Index j = 0; j < mbar.size(); ++j)
    if (!done[static_cast<std::size_t>(j)]) xbar[j] += sd * e[j];
  return xbar;
}

// Fully adapted auxiliary particle filter over the schedule; potentials[k]
// is the potential at level k (k = 0 .. steps + 1).
Vector run_apf(const SolverContext& ctx, const std::vector<Potential>& potentials, int particles,
               double ess_threshold, Rng& rng) {
  const NoiseSchedule& s = ctx.dp.schedule();
  const Matrix& V = ctx.A.V();
  const Eigen::Index d = ctx.dp.dim();
  if (particles < 1) throw std::invalid_argument("particle count must be >= 1");
  const auto n = static_cast<std::size_t>(particles);

  std::vector<Vector> x(n), xbar(n), mbar(n);
  Vector logw(particles);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = s.sigma_max * rng.normal_vector(d);
    xbar[i] = V.transpose() * x[i];
    logw[static_cast<Eigen::Index>(i)] = log_potential(potentials[0], xbar[i]);
  }
  for (int k = 0; k <= s.steps; ++k) {
    const double a = s[k];
    const double b = s[k + 1];
    const double v = b == 0.0 ? 0.0 : (a * a - b * b) * b / a;
    const Potential& g_old = potentials[static_cast<std::size_t>(k)];
    const Potential& g_new = potentials[static_cast<std::size_t>(k) + 1];
    Vector logalpha(particles);
    for (std::size_t i = 0; i < n; ++i) {
      const ScoreResult den = ctx.dp.denoise(k, x[i]);
      const Vector m = b == 0.0 ? den.x_hat0 : Vector(x[i] + (a * a - b * b) * den.score);
      mbar[i] = V.transpose() * m;
      logalpha[static_cast<Eigen::Index>(i)] = logw[static_cast<Eigen::Index>(i)] +
                                               log_predictive(g_new, mbar[i], v) -
                                               log_potential(g_old, xbar[i]);
    }
    Vector w;
    try {
      w = normalize_log_weights(logalpha);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at step " + std::to_string(k), k);
    }
    std::vector<Eigen::Index> anc(n);
    if (smc_ess(w) < ess_threshold * particles) {
      anc = smc_ancestors(w, rng, ResampleScheme::systematic);
      logw.setZero();
    } else {
      for (std::size_t i = 0; i < n; ++i) anc[i] = static_cast<Eigen::Index>(i);
      logw = w.array().log();
    }
    const std::vector<Vector> parents = mbar;
    for (std::size_t i = 0; i < n; ++i) {
      xbar[i] = propose(g_new, parents[static_cast<std::size_t>(anc[i])], v, rng);
      x[i] = V * xbar[i];
      require_finite(x[i], k, "particle");
    }
  }
  const Eigen::Index pick = rng.categorical(normalize_log_weights(logw));
  return x[static_cast<std::size_t>(pick)];
}

Vector spectral_y(const SolverContext& ctx) {
  return ctx.A.U().leftCols(ctx.A.S().size()).transpose() * ctx.m.y;
}

}  // namespace

SolverOutput run_mcg_diff(const SolverContext& ctx, Rng& rng) {
  const NoiseSchedule& s = ctx.dp.schedule();
  const Vector ys = spectral_y(ctx);
  const double sy2 = ctx.m.sigma_y * ctx.m.sigma_y;
  Potential base;
  for (Eigen::Index j = 0; j < ys.size(); ++j)
    if (ctx.A.S()[j] > 0.0) base.active.push_back(j);
  const auto na = static_cast<Eigen::Index>(base.active.size());
  base.center.resize(na);
  for (Eigen::Index a = 0; a < na; ++a) {
    const Eigen::Index j = base.active[static_cast<std::size_t>(a)];
    base.center[a] = ys[j] / ctx.A.S()[j];
  }
  std::vector<Potential> potentials(static_cast<std::size_t>(s.steps) + 2, base);
  for (int k = 0; k <= s.steps + 1; ++k) {
    Potential& g = potentials[static_cast<std::size_t>(k)];
    g.var.resize(na);
    for (Eigen::Index a = 0; a < na; ++a) {
      const double sj = ctx.A.S()[base.active[static_cast<std::size_t>(a)]];
      g.var[a] = sy2 / (sj * sj) + s[k] * s[k];
    }
  }
  return {run_apf(ctx, potentials, ctx.spec.get_int("particles"), ctx.spec.get("ess_threshold"),
                  rng),
          {}};
}

// The measurement path y_k = y + sigma_k A eps_k is drawn backward as a
// Brownian bridge in the spectral basis. By default each potential is written
// in inverted form N(xbar_j; ybar_kj / s_j, sigma_y^2 / s_j^2) for every
// singular slot, which breaks down when some s_j = 0. With pinv_guard the
// zero slots are dropped instead, and the row is flagged degenerate.
SolverOutput run_fps_smc(const SolverContext& ctx, Rng& rng) {
  const NoiseSchedule& s = ctx.dp.schedule();
  const Vector ys = spectral_y(ctx);
  const Eigen::Index r = ys.size();
  const bool guard = ctx.spec.get_int("pinv_guard") != 0;
  const double sy2 = ctx.m.sigma_y * ctx.m.sigma_y;

  std::vector<Vector> path(static_cast<std::size_t>(s.steps) + 2);
  path[0] = s.sigma_max * rng.normal_vector(r);
  for (int k = 1; k <= s.steps + 1; ++k) {
    const double prev = s[k - 1] * s[k - 1];
    const double cur = s[k] * s[k];
    path[static_cast<std::size_t>(k)] =
        (cur / prev) * path[static_cast<std::size_t>(k) - 1] +
        std::sqrt(cur * (prev - cur) / prev) * rng.normal_vector(r);
  }

  SampleStatus status;
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < r; ++j) {
    if (guard && ctx.A.S()[j] == 0.0) {
      status.code = StatusCode::degenerate;
      status.detail = "zero singular values routed through the pseudo-inverse";
      continue;
    }
    active.push_back(j);
  }
  std::vector<Potential> potentials(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    Potential& g = potentials[k];
    g.active = active;
    g.center.resize(static_cast<Eigen::Index>(active.size()));
    g.var.resize(static_cast<Eigen::Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) {
      const Eigen::Index j = active[a];
      const double sj = ctx.A.S()[j];
      const double yk = ys[j] + sj * path[k][j];
      g.center[static_cast<Eigen::Index>(a)] = yk / sj;
      g.var[static_cast<Eigen::Index>(a)] = sy2 / (sj * sj);
    }
  }
  Vector x = run_apf(ctx, potentials, ctx.spec.get_int("particles"), ctx.spec.get("ess_threshold"),
                     rng);
  return {std::move(x), status};
}

}  // namespace pnpbench
