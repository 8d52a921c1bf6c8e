#include "pnpbench/smc.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pnpbench/errors.hpp"
#include "pnpbench/rng.hpp"

namespace pnpbench {

std::string to_string(ResampleScheme scheme) {
  return scheme == ResampleScheme::systematic ? "systematic" : "multinomial";
}

ResampleScheme resample_scheme_from_string(const std::string& text) {
  if (text == "systematic") return ResampleScheme::systematic;
  if (text == "multinomial") return ResampleScheme::multinomial;
  throw std::invalid_argument("unknown resampling scheme '" + text + "'");
}

double smc_ess(const Eigen::VectorXd& weights) {
  const double sq = weights.squaredNorm();
  if (!(sq > 0.0)) throw std::invalid_argument("smc_ess: all weights are zero");
  return 1.0 / sq;
}

std::vector<Eigen::Index> smc_ancestors(const Eigen::VectorXd& weights, Rng& rng,
                                        ResampleScheme scheme) {
  const Eigen::Index n = weights.size();
  std::vector<Eigen::Index> out(static_cast<std::size_t>(n));
  if (scheme == ResampleScheme::multinomial) {
    for (auto& a : out) a = rng.categorical(weights);
    return out;
  }
  const double u0 = rng.uniform() / static_cast<double>(n);
  double cum = weights[0];
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = u0 + static_cast<double>(i) / static_cast<double>(n);
    while (u >= cum && j < n - 1) cum += weights[++j];
    out[static_cast<std::size_t>(i)] = j;
  }
  return out;
}

Eigen::MatrixXd smc_resample(const Eigen::MatrixXd& particles, const Eigen::VectorXd& weights,
                             Rng& rng, ResampleScheme scheme) {
  if (particles.rows() != weights.size()) {
    throw std::invalid_argument("smc_resample: one weight per particle required");
  }
  const auto idx = smc_ancestors(weights, rng, scheme);
  Eigen::MatrixXd out(particles.rows(), particles.cols());
  for (Eigen::Index i = 0; i < particles.rows(); ++i)
    out.row(i) = particles.row(idx[static_cast<std::size_t>(i)]);
  return out;
}

Eigen::MatrixXd smc_resample(const Eigen::MatrixXd& particles, const Eigen::VectorXd& weights,
                             std::uint64_t seed, ResampleScheme scheme) {
  Rng rng(seed);
  return smc_resample(particles, weights, rng, scheme);
}

Eigen::VectorXd normalize_log_weights(const Eigen::VectorXd& logw) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : logw)
    if (!std::isnan(v) && v > top) top = v;
  if (!std::isfinite(top)) throw NumericalError("all particle weights vanished");
  Eigen::VectorXd w(logw.size());
  for (Eigen::Index i = 0; i < logw.size(); ++i)
    w[i] = std::isnan(logw[i]) ? 0.0 : std::exp(logw[i] - top);
  return w / w.sum();
}

}  // namespace pnpbench
