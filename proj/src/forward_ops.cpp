#include "pnpbench/forward_ops.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pnpbench/rng.hpp"

namespace pnpbench {

namespace {

void check_orthogonal(const Matrix& Q, const char* name) {
  const Matrix gram = Q.transpose() * Q;
  const double err = (gram - Matrix::Identity(Q.cols(), Q.cols())).cwiseAbs().maxCoeff();
  if (err >= 1e-10) {
    throw std::invalid_argument(std::string(name) + " is not orthogonal (max deviation " +
                                std::to_string(err) + ")");
  }
}

std::vector<double> row_major(const Matrix& M) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(M.size()));
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) out.push_back(M(i, j));
  return out;
}

Matrix from_row_major(const std::vector<double>& flat, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(flat.size()) != rows * cols) {
    throw std::invalid_argument("operator JSON: matrix has wrong number of entries");
  }
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = flat[static_cast<std::size_t>(i * cols + j)];
  return M;
}

}  // namespace

std::string to_string(OperatorKind kind) {
  return kind == OperatorKind::identity ? "identity" : "binary_svd";
}

std::string to_string(BasisMode mode) {
  return mode == BasisMode::coordinate ? "coordinate" : "random_orthogonal";
}

OperatorKind operator_kind_from_string(const std::string& text) {
  if (text == "identity") return OperatorKind::identity;
  if (text == "binary_svd") return OperatorKind::binary_svd;
  throw std::invalid_argument("unknown operator kind '" + text +
                              "' (expected identity or binary_svd)");
}

BasisMode basis_mode_from_string(const std::string& text) {
  if (text == "coordinate") return BasisMode::coordinate;
  if (text == "random_orthogonal") return BasisMode::random_orthogonal;
  throw std::invalid_argument("unknown basis mode '" + text +
                              "' (expected coordinate or random_orthogonal)");
}

LinearOperatorSVD::LinearOperatorSVD(Matrix U, Vector S, Matrix V, OperatorKind kind,
                                     BasisMode basis, std::uint64_t seed)
    : U_(std::move(U)), S_(std::move(S)), V_(std::move(V)), kind_(kind), basis_(basis),
      seed_(seed) {
  if (U_.rows() != U_.cols() || V_.rows() != V_.cols()) {
    throw std::invalid_argument("U and V must be square");
  }
  if (S_.size() != std::min(U_.rows(), V_.rows())) {
    throw std::invalid_argument("S must have min(m, d) entries");
  }
  if ((S_.array() < 0.0).any() || !S_.allFinite()) {
    throw std::invalid_argument("singular values must be finite and nonnegative");
  }
  check_orthogonal(U_, "U");
  check_orthogonal(V_, "V");
  const Eigen::Index r = S_.size();
  dense_ = U_.leftCols(r) * S_.asDiagonal() * V_.leftCols(r).transpose();
}

bool LinearOperatorSVD::has_binary_spectrum() const {
  return ((S_.array() == 0.0) || (S_.array() == 1.0)).all();
}

std::vector<Eigen::Index> LinearOperatorSVD::observed_indices() const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < input_dim(); ++j)
    if (singular_value(j) == 1.0) out.push_back(j);
  return out;
}

std::vector<Eigen::Index> LinearOperatorSVD::null_indices() const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < input_dim(); ++j)
    if (singular_value(j) == 0.0) out.push_back(j);
  return out;
}

std::string LinearOperatorSVD::id() const {
  std::ostringstream os;
  os << to_string(kind_) << ":m" << output_dim() << ":d" << input_dim() << ":rank"
     << (S_.array() > 0.0).count() << ":" << to_string(basis_) << ":seed" << seed_;
  return os.str();
}

Matrix haar_orthogonal(Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix G(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) G(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  }
  return Q;
}

LinearOperatorSVD build_operator(OperatorKind kind, Eigen::Index d, Eigen::Index obs_count,
                                 BasisMode basis, std::uint64_t seed) {
  if (d < 1) throw std::invalid_argument("operator dimension must be positive");
  if (obs_count < 0 || obs_count > d) {
    throw std::invalid_argument("obs_count must lie in [0, d]; got " + std::to_string(obs_count) +
                                " for d = " + std::to_string(d));
  }
  const Matrix I = Matrix::Identity(d, d);
  if (kind == OperatorKind::identity) {
    return LinearOperatorSVD(I, Vector::Ones(d), I, kind, BasisMode::coordinate, seed);
  }
  Vector S = Vector::Zero(d);
  S.head(obs_count).setOnes();
  Matrix V = basis == BasisMode::coordinate ? I : haar_orthogonal(d, seed);
  return LinearOperatorSVD(I, std::move(S), std::move(V), kind, basis, seed);
}

Vector apply_forward(const LinearOperatorSVD& A, const Vector& x) {
  if (x.size() != A.input_dim()) {
    throw std::invalid_argument("apply_forward: expected input of dimension " +
                                std::to_string(A.input_dim()) + ", got " +
                                std::to_string(x.size()));
  }
  const Eigen::Index r = A.S().size();
  Vector spectral = Vector::Zero(A.output_dim());
  spectral.head(r) = A.S().cwiseProduct(A.V().leftCols(r).transpose() * x);
  return A.U() * spectral;
}

Vector apply_adjoint(const LinearOperatorSVD& A, const Vector& y) {
  if (y.size() != A.output_dim()) {
    throw std::invalid_argument("apply_adjoint: dimension mismatch");
  }
  const Eigen::Index r = A.S().size();
  const Vector t = A.U().leftCols(r).transpose() * y;
  return A.V().leftCols(r) * A.S().cwiseProduct(t);
}

Vector apply_pinv(const LinearOperatorSVD& A, const Vector& y) {
  if (y.size() != A.output_dim()) {
    throw std::invalid_argument("apply_pinv: expected measurement of dimension " +
                                std::to_string(A.output_dim()));
  }
  const Eigen::Index r = A.S().size();
  const Vector t = A.U().leftCols(r).transpose() * y;
  Vector scaled(r);
  for (Eigen::Index j = 0; j < r; ++j) scaled[j] = A.S()[j] > 0.0 ? t[j] / A.S()[j] : 0.0;
  return A.V().leftCols(r) * scaled;
}

Measurement synthesize_measurement(const LinearOperatorSVD& A, const Vector& x_star,
                                   double sigma_y, std::uint64_t seed) {
  if (!(sigma_y >= 0.0)) throw std::invalid_argument("sigma_y must be nonnegative");
  Measurement m;
  m.y = apply_forward(A, x_star);
  if (sigma_y > 0.0) {
    Rng rng(seed);
    m.y += sigma_y * rng.normal_vector(m.y.size());
  }
  m.x_star = x_star;
  m.sigma_y = sigma_y;
  m.operator_id = A.id();
  m.seed = seed;
  return m;
}

nlohmann::json operator_to_json(const LinearOperatorSVD& A) {
  nlohmann::json j;
  j["kind"] = to_string(A.kind());
  j["basis"] = to_string(A.basis());
  j["seed"] = A.seed();
  j["m"] = A.output_dim();
  j["d"] = A.input_dim();
  j["U"] = row_major(A.U());
  j["S"] = std::vector<double>(A.S().data(), A.S().data() + A.S().size());
  j["V"] = row_major(A.V());
  return j;
}

LinearOperatorSVD operator_from_json(const nlohmann::json& j) {
  const auto m = j.at("m").get<Eigen::Index>();
  const auto d = j.at("d").get<Eigen::Index>();
  const auto s = j.at("S").get<std::vector<double>>();
  Vector S = Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
  return LinearOperatorSVD(from_row_major(j.at("U").get<std::vector<double>>(), m, m), S,
                           from_row_major(j.at("V").get<std::vector<double>>(), d, d),
                           operator_kind_from_string(j.at("kind").get<std::string>()),
                           basis_mode_from_string(j.at("basis").get<std::string>()),
                           j.at("seed").get<std::uint64_t>());
}

}  // namespace pnpbench
