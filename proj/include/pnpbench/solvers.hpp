#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pnpbench/diffusion.hpp"
#include "pnpbench/forward_ops.hpp"
#include "pnpbench/gmm.hpp"

namespace pnpbench {

enum class SolverName {
  reference_exact,
  reddiff,
  dps,
  daps,
  diffpir,
  ddnm,
  ddrm,
  pnpdm,
  fps_smc,
  mcg_diff,
};

enum class Family { posterior_targeting, heuristic, map_like };

std::string to_string(SolverName name);
std::string to_string(Family family);
SolverName solver_name_from_string(const std::string& text);
const std::vector<SolverName>& all_solvers();
Family family_of(SolverName name);

using Hyperparameters = std::map<std::string, double>;

struct SolverSpec {
  SolverName name = SolverName::reference_exact;
  Family family = Family::posterior_targeting;
  Hyperparameters hyper;

  double get(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool operator==(const SolverSpec&) const = default;
};

// Every hyperparameter a solver reads, with its default value.
const Hyperparameters& default_hyperparameters(SolverName name);

// Defaults overlaid with overrides; unknown or non-finite keys are rejected.
SolverSpec resolve_solver(SolverName name, const Hyperparameters& overrides = {});

// Stable text form "key=value;..." hashed with FNV-1a, as 16 hex digits.
std::string hyper_digest(const SolverSpec& spec);

enum class StatusCode { ok, diverged, degenerate };

std::string to_string(StatusCode code);
StatusCode status_code_from_string(const std::string& text);

struct SampleStatus {
  StatusCode code = StatusCode::ok;
  int step = -1;
  std::string detail;

  // Rows that enter variance and coverage statistics.
  bool usable() const { return code != StatusCode::diverged; }
};

struct SampleBatch {
  SolverSpec solver;
  Measurement measurement;
  Matrix samples;  // K x d
  std::vector<std::uint64_t> seeds;
  std::vector<SampleStatus> status;
  double wall_time = 0.0;

  Eigen::Index k() const { return samples.rows(); }
  Eigen::Index k_valid() const;
  Matrix usable_samples() const;
  double failure_rate() const;
};

// Everything that depends only on (spec, operator, measurement, prior) and
// is shared by all rows of a batch.
class SolverSession {
 public:
  SolverSession(SolverSpec spec, const LinearOperatorSVD& A, Measurement m,
                const DiffusionPrior& dp);
  ~SolverSession();
  SolverSession(SolverSession&&) noexcept;

  const SolverSpec& spec() const { return spec_; }
  const Measurement& measurement() const { return m_; }

  // Never throws on numerical failure; the status carries it instead.
  std::pair<Vector, SampleStatus> sample(std::uint64_t seed) const;

  struct Cache;

 private:
  SolverSpec spec_;
  const LinearOperatorSVD* A_;
  Measurement m_;
  const DiffusionPrior* dp_;
  std::unique_ptr<Cache> cache_;
};

std::pair<Vector, SampleStatus> sample_one(const SolverSpec& spec, const Measurement& m,
                                           const LinearOperatorSVD& A, const DiffusionPrior& dp,
                                           std::uint64_t seed);

// Seed of row k: derive_seed(base_seed, {("row", k)}).
std::uint64_t row_seed(std::uint64_t base_seed, Eigen::Index k);

SampleBatch run_batch(const SolverSpec& spec, const Measurement& m, const LinearOperatorSVD& A,
                      const DiffusionPrior& dp, Eigen::Index K, std::uint64_t base_seed,
                      int workers = 1);

}  // namespace pnpbench
