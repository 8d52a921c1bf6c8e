#include "pnpbench/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pnpbench/errors.hpp"
#include "pnpbench/rng.hpp"

namespace pnpbench {

std::string to_string(Spacing spacing) {
  return spacing == Spacing::geometric ? "geometric" : "polynomial";
}

Spacing spacing_from_string(const std::string& text) {
  if (text == "geometric") return Spacing::geometric;
  if (text == "polynomial") return Spacing::polynomial;
  throw std::invalid_argument("unknown spacing '" + text + "' (expected geometric or polynomial)");
}

NoiseSchedule build_schedule(double sigma_min, double sigma_max, int steps, Spacing spacing,
                             double exponent) {
  if (!(sigma_min > 0.0 && sigma_min < sigma_max)) {
    throw std::invalid_argument("schedule needs 0 < sigma_min < sigma_max");
  }
  if (steps < 1) throw std::invalid_argument("schedule needs steps >= 1");
  if (spacing == Spacing::polynomial && !(exponent > 0.0)) {
    throw std::invalid_argument("polynomial spacing needs exponent > 0");
  }
  NoiseSchedule s{sigma_min, sigma_max, steps, spacing, exponent, {}};
  s.levels.resize(static_cast<std::size_t>(steps) + 2);
  const double n = steps;
  for (int i = 0; i <= steps; ++i) {
    const double t = i / n;
    if (spacing == Spacing::geometric) {
      s.levels[i] = sigma_max * std::pow(sigma_min / sigma_max, t);
    } else {
      const double hi = std::pow(sigma_max, 1.0 / exponent);
      const double lo = std::pow(sigma_min, 1.0 / exponent);
      s.levels[i] = std::pow(hi + t * (lo - hi), exponent);
    }
  }
  s.levels.front() = sigma_max;
  s.levels[static_cast<std::size_t>(steps)] = sigma_min;
  s.levels.back() = 0.0;
  for (int i = 0; i < steps; ++i) {
    if (!(s.levels[i] > s.levels[i + 1])) {
      throw std::invalid_argument("schedule is not strictly decreasing at index " +
                                  std::to_string(i));
    }
  }
  return s;
}

int level_index_for_sigma(const NoiseSchedule& sched, double rho) {
  if (!(rho >= sched.sigma_min && rho <= sched.sigma_max)) {
    throw std::out_of_range("level_index_for_sigma: rho = " + std::to_string(rho) +
                            " outside [sigma_min, sigma_max]");
  }
  int idx = 0;
  while (idx < sched.steps && sched[idx + 1] >= rho) ++idx;
  return idx;
}

DiffusionPrior::DiffusionPrior(GaussianMixture prior, NoiseSchedule sched, ScoreError error)
    : prior_(std::move(prior)), sched_(std::move(sched)), error_(error) {
  marginals_.reserve(static_cast<std::size_t>(sched_.steps) + 1);
  for (int i = 0; i <= sched_.steps; ++i) marginals_.push_back(noisy_marginal(prior_, sched_[i]));
}

ScoreResult DiffusionPrior::perturb(ScoreResult r, double sigma) const {
  if (!error_.active()) return r;
  const Vector exact = r.score;
  r.score = (1.0 + error_.mult) * exact + Vector::Constant(exact.size(), error_.add);
  r.x_hat0 += sigma * sigma * (r.score - exact);
  if (r.jacobian.size() > 0) {
    const Matrix I = Matrix::Identity(r.jacobian.rows(), r.jacobian.cols());
    r.jacobian = I + (1.0 + error_.mult) * (r.jacobian - I);
  }
  return r;
}

ScoreResult DiffusionPrior::denoise(int level, const Vector& x, bool with_jacobian) const {
  if (level < 0 || level > sched_.steps) {
    throw std::out_of_range("denoise: level " + std::to_string(level) + " has no marginal");
  }
  const double sigma = sched_[level];
  return perturb(denoise_with_marginal(marginals_[static_cast<std::size_t>(level)], x, sigma,
                                       with_jacobian),
                 sigma);
}

ScoreResult DiffusionPrior::denoise_at(double sigma, const Vector& x, bool with_jacobian) const {
  if (!(sigma > 0.0)) throw std::invalid_argument("denoise_at: sigma must be > 0");
  for (int i = 0; i <= sched_.steps; ++i) {
    if (sched_[i] == sigma) return denoise(i, x, with_jacobian);
  }
  return perturb(denoise_with_marginal(noisy_marginal(prior_, sigma), x, sigma, with_jacobian),
                 sigma);
}

Vector ancestral_step(const Vector& x, const ScoreResult& den, double sigma_from,
                      double sigma_to, Rng& rng) {
  if (sigma_to == 0.0) return den.x_hat0;
  const double dv = sigma_from * sigma_from - sigma_to * sigma_to;
  const double noise = std::sqrt(dv * sigma_to / sigma_from);
  return x + dv * den.score + noise * rng.normal_vector(x.size());
}

Vector deterministic_step(const Vector& x, const ScoreResult& den, double sigma_from,
                          double sigma_to) {
  if (sigma_to == 0.0) return den.x_hat0;
  return den.x_hat0 + (sigma_to / sigma_from) * (x - den.x_hat0);
}

Vector reverse_from(const DiffusionPrior& dp, Vector x, double start, ReverseMode mode,
                    Rng& rng) {
  const NoiseSchedule& s = dp.schedule();
  const int entry = level_index_for_sigma(s, start);
  int i = entry;
  if (s[entry] != start) {
    // Off-grid entry: one transition from start to the first grid level below.
    const ScoreResult den = dp.denoise_at(start, x);
    x = mode == ReverseMode::ancestral_sde ? ancestral_step(x, den, start, s[entry + 1], rng)
                                           : deterministic_step(x, den, start, s[entry + 1]);
    if (!x.allFinite()) throw NumericalError("non-finite iterate at entry step", entry);
    ++i;
  }
  for (; i <= s.steps; ++i) {
    const ScoreResult den = dp.denoise(i, x);
    x = mode == ReverseMode::ancestral_sde ? ancestral_step(x, den, s[i], s[i + 1], rng)
                                           : deterministic_step(x, den, s[i], s[i + 1]);
    if (!x.allFinite()) {
      throw NumericalError("non-finite iterate at reverse step " + std::to_string(i), i);
    }
  }
  return x;
}

Vector reverse_sample(const DiffusionPrior& dp, const ReverseConfig& cfg) {
  const NoiseSchedule& s = dp.schedule();
  if (cfg.start_level > s.sigma_max) {
    throw std::invalid_argument("reverse_sample: start_level exceeds sigma_max");
  }
  Rng rng(cfg.seed);
  Vector x;
  if (cfg.init) {
    if (cfg.init->size() != dp.dim()) throw std::invalid_argument("reverse_sample: init has wrong size");
    x = *cfg.init;
  } else {
    if (cfg.start_level != s.sigma_max) {
      throw std::invalid_argument("reverse_sample: without init, start_level must equal sigma_max");
    }
    x = s.sigma_max * rng.normal_vector(dp.dim());
  }
  return reverse_from(dp, std::move(x), cfg.start_level, cfg.mode, rng);
}

Vector reverse_sample(const GaussianMixture& prior, const NoiseSchedule& sched,
                      const ReverseConfig& cfg) {
  return reverse_sample(DiffusionPrior(prior, sched), cfg);
}

}  // namespace pnpbench
