#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pnpbench/diffusion.hpp"
#include "pnpbench/forward_ops.hpp"
#include "pnpbench/gmm.hpp"
#include "pnpbench/solvers.hpp"

namespace pnpbench {

enum class ExperimentKind { exp1_identity, exp2_binary, sweep };

std::string to_string(ExperimentKind kind);

inline constexpr std::uint64_t kDefaultOperatorSeed = 20240917;

struct OperatorConfig {
  OperatorKind kind = OperatorKind::identity;
  int obs_count = 8;
  BasisMode basis = BasisMode::random_orthogonal;
  std::uint64_t seed = kDefaultOperatorSeed;

  bool operator==(const OperatorConfig&) const = default;
};

struct ScheduleConfig {
  double sigma_min = 0.01;
  double sigma_max = 10.0;
  int steps = 100;
  Spacing spacing = Spacing::geometric;
  double exponent = 7.0;

  bool operator==(const ScheduleConfig&) const = default;
};

struct SweepAxis {
  std::string name;
  std::vector<double> values;

  bool operator==(const SweepAxis&) const = default;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::exp1_identity;
  ToyPriorSpec prior;
  OperatorConfig op;
  double sigma_y = 1.0;
  int n_cases = 20;
  int k_samples = 100;
  int oracle_cases = 200;
  std::vector<SolverSpec> solvers;
  ScheduleConfig schedule;
  ScoreError score_error;
  std::uint64_t master_seed = 0;
  std::optional<SweepAxis> sweep;

  bool operator==(const ExperimentConfig&) const = default;
};

// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

// Fully resolved form: every field and hyperparameter is written out.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// Replaces the sweep axis, validating it against the configured solvers.
void set_sweep(ExperimentConfig& cfg, SweepAxis axis);

NoiseSchedule make_schedule(const ScheduleConfig& s);
LinearOperatorSVD make_operator(const ExperimentConfig& cfg);

}  // namespace pnpbench
