#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pnpbench/gmm.hpp"

namespace pnpbench {

class Rng;

enum class Spacing { geometric, polynomial };

std::string to_string(Spacing spacing);
Spacing spacing_from_string(const std::string& text);

// levels[0] = sigma_max > ... > levels[steps] = sigma_min > levels[steps + 1] = 0.
struct NoiseSchedule {
  double sigma_min = 0.01;
  double sigma_max = 10.0;
  int steps = 100;
  Spacing spacing = Spacing::geometric;
  double exponent = 7.0;  // polynomial spacing only
  std::vector<double> levels;

  // Index of the last nonzero level.
  int last() const { return steps; }
  double operator[](int i) const { return levels[static_cast<std::size_t>(i)]; }
};

NoiseSchedule build_schedule(double sigma_min, double sigma_max, int steps,
                             Spacing spacing = Spacing::geometric, double exponent = 7.0);

// Largest index i <= steps with levels[i] >= rho, i.e. the nearest grid level
// at or above rho.
int level_index_for_sigma(const NoiseSchedule& sched, double rho);

enum class ReverseMode { ancestral_sde, deterministic_ode };

struct ReverseConfig {
  ReverseMode mode = ReverseMode::ancestral_sde;
  double start_level = 10.0;
  std::optional<Vector> init;
  std::uint64_t seed = 0;
};

// score' = (1 + mult) * score + add, applied before Tweedie denoising.
struct ScoreError {
  double mult = 0.0;
  double add = 0.0;
  bool active() const { return mult != 0.0 || add != 0.0; }
  bool operator==(const ScoreError&) const = default;
};

// The prior together with its noisy marginals at every nonzero schedule level.
class DiffusionPrior {
 public:
  DiffusionPrior(GaussianMixture prior, NoiseSchedule sched, ScoreError error = {});

  const GaussianMixture& prior() const { return prior_; }
  const NoiseSchedule& schedule() const { return sched_; }
  const ScoreError& score_error() const { return error_; }
  Eigen::Index dim() const { return prior_.dim(); }

  ScoreResult denoise(int level, const Vector& x, bool with_jacobian = false) const;
  // Any sigma > 0; uses the cached marginal when sigma is a grid level.
  ScoreResult denoise_at(double sigma, const Vector& x, bool with_jacobian = false) const;

 private:
  ScoreResult perturb(ScoreResult r, double sigma) const;

  GaussianMixture prior_;
  NoiseSchedule sched_;
  ScoreError error_;
  std::vector<GaussianMixture> marginals_;
};

// One reverse transition from sigma_from to sigma_to < sigma_from given the
// denoiser output at (x, sigma_from). sigma_to = 0 returns x_hat0.
//   ancestral:     x + (a^2 - b^2) score + sqrt((a^2 - b^2) b / a) z
//   deterministic: x_hat0 + (b / a) (x - x_hat0)
Vector ancestral_step(const Vector& x, const ScoreResult& den, double sigma_from,
                      double sigma_to, Rng& rng);
Vector deterministic_step(const Vector& x, const ScoreResult& den, double sigma_from,
                          double sigma_to);

// Runs the reverse chain from x at noise level start (any value in
// [sigma_min, sigma_max]) through every grid level below it down to 0.
Vector reverse_from(const DiffusionPrior& dp, Vector x, double start, ReverseMode mode,
                    Rng& rng);

Vector reverse_sample(const DiffusionPrior& dp, const ReverseConfig& cfg);
Vector reverse_sample(const GaussianMixture& prior, const NoiseSchedule& sched,
                      const ReverseConfig& cfg);

}  // namespace pnpbench
