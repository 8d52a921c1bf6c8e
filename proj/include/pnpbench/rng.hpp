#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace pnpbench {

// Seeded generator with a fixed, documented output contract:
//   uniform()  = (mt19937_64() >> 11) * 2^-53            in [0, 1)
//   normal()   = Box-Muller on (1 - uniform(), uniform()), cosine branch
//                first, the sine branch is returned on the next call.
// std::normal_distribution is avoided because its output differs across
// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double normal();
  Eigen::VectorXd normal_vector(Eigen::Index n);

  // Index drawn with probability proportional to weights (assumed normalized).
  Eigen::Index categorical(const Eigen::VectorXd& weights);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pnpbench
