#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pnpbench {

class Rng;

enum class ResampleScheme { systematic, multinomial };

std::string to_string(ResampleScheme scheme);
ResampleScheme resample_scheme_from_string(const std::string& text);

double smc_ess(const Eigen::VectorXd& weights);

// Ancestor indices for N offspring; weights must be normalized.
std::vector<Eigen::Index> smc_ancestors(const Eigen::VectorXd& weights, Rng& rng,
                                        ResampleScheme scheme);

Eigen::MatrixXd smc_resample(const Eigen::MatrixXd& particles, const Eigen::VectorXd& weights,
                             Rng& rng, ResampleScheme scheme);
Eigen::MatrixXd smc_resample(const Eigen::MatrixXd& particles, const Eigen::VectorXd& weights,
                             std::uint64_t seed, ResampleScheme scheme);

// Normalized weights from log-weights (max-shifted). Throws NumericalError
// when no weight is positive and finite.
Eigen::VectorXd normalize_log_weights(const Eigen::VectorXd& logw);

}  // namespace pnpbench
