#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace pnpbench {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class OperatorKind { identity, binary_svd };
enum class BasisMode { coordinate, random_orthogonal };

std::string to_string(OperatorKind kind);
std::string to_string(BasisMode mode);
OperatorKind operator_kind_from_string(const std::string& text);
BasisMode basis_mode_from_string(const std::string& text);

// Linear forward operator A = U diag(S) V^T with A : R^d -> R^m.
// U is m x m, V is d x d, S has min(m, d) nonnegative entries.
class LinearOperatorSVD {
 public:
  LinearOperatorSVD(Matrix U, Vector S, Matrix V, OperatorKind kind,
                    BasisMode basis, std::uint64_t seed);

  Eigen::Index input_dim() const { return V_.rows(); }
  Eigen::Index output_dim() const { return U_.rows(); }

  const Matrix& U() const { return U_; }
  const Vector& S() const { return S_; }
  const Matrix& V() const { return V_; }
  const Matrix& dense() const { return dense_; }
  OperatorKind kind() const { return kind_; }
  BasisMode basis() const { return basis_; }
  std::uint64_t seed() const { return seed_; }

  // Singular value attached to right singular vector j; zero past min(m, d).
  double singular_value(Eigen::Index j) const { return j < S_.size() ? S_[j] : 0.0; }
  bool has_binary_spectrum() const;
  // Columns j of V with singular value 1 / 0.
  std::vector<Eigen::Index> observed_indices() const;
  std::vector<Eigen::Index> null_indices() const;

  std::string id() const;

 private:
  Matrix U_;
  Vector S_;
  Matrix V_;
  Matrix dense_;
  OperatorKind kind_;
  BasisMode basis_;
  std::uint64_t seed_;
};

struct Measurement {
  Vector y;
  Vector x_star;
  double sigma_y = 1.0;
  std::string operator_id;
  std::uint64_t seed = 0;
};

// Haar-distributed orthogonal matrix: QR of a seeded standard normal matrix
// (filled column-major from Rng::normal), with the signs of Q's columns flipped
// so that diag(R) > 0.
Matrix haar_orthogonal(Eigen::Index d, std::uint64_t seed);

// identity: U = V = I, S = 1. binary_svd: square, U = I, first obs_count
// singular values 1 and the rest 0, V = I or Haar-random.
LinearOperatorSVD build_operator(OperatorKind kind, Eigen::Index d, Eigen::Index obs_count,
                                 BasisMode basis, std::uint64_t seed);

Vector apply_forward(const LinearOperatorSVD& A, const Vector& x);
Vector apply_adjoint(const LinearOperatorSVD& A, const Vector& y);
Vector apply_pinv(const LinearOperatorSVD& A, const Vector& y);

Measurement synthesize_measurement(const LinearOperatorSVD& A, const Vector& x_star,
                                   double sigma_y, std::uint64_t seed);

// JSON form: {"kind", "basis", "seed", "m", "d", "U", "S", "V"} with U and V
// stored row-major as flat arrays.
nlohmann::json operator_to_json(const LinearOperatorSVD& A);
LinearOperatorSVD operator_from_json(const nlohmann::json& j);

}  // namespace pnpbench
