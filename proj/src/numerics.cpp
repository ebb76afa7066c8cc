#include "lapinv/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "lapinv/errors.hpp"

namespace lapinv {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double one_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

Vector deterministic_start(Index n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = Complex(1.0 + 0.5 * dist(gen), 0.5 * dist(gen));
  return v.normalized();
}

// Eigen's estimator reports 1 for an exactly zero pivot, so pivots are checked first.
double guarded_rcond(const Eigen::PartialPivLU<Matrix>& lu) {
  const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
  if (!(pivots.minCoeff() > kEps * pivots.maxCoeff())) return 0.0;
  return lu.rcond();
}

// Inverse iteration on (M^* M)^{-1}; converges to 1/σ_min².
double smallest_singular_value_inverse_iteration(const Matrix& m) {
  const Eigen::PartialPivLU<Matrix> lu(m);
  if (!(guarded_rcond(lu) > 0.0)) return 0.0;
  Vector v = deterministic_start(m.rows(), 0x5eed);
  double lambda = 0.0;
  for (int it = 0; it < 500; ++it) {
    const Vector w = lu.solve(v);
    const Vector y = lu.adjoint().solve(w);
    if (!y.allFinite()) return 0.0;
    const double next = std::abs(v.dot(y));
    const double ynorm = y.norm();
    if (ynorm == 0.0) return 0.0;
    v = y / ynorm;
    if (it > 2 && std::abs(next - lambda) <= 1e-14 * next) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda > 0.0 ? 1.0 / std::sqrt(lambda) : 0.0;
}

}  // namespace

Operator::Operator(Matrix entries, std::string source_tag)
    : entries_(std::move(entries)), source_tag_(std::move(source_tag)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
    throw DimensionError("operator must be square and non-empty (got " +
                         std::to_string(entries_.rows()) + "x" +
                         std::to_string(entries_.cols()) + ")");
  }
  if (!entries_.allFinite()) throw std::invalid_argument("operator has non-finite entries");
  is_real_ = entries_.imag().isZero(0.0);
}

ShiftedFactorization::ShiftedFactorization(const Operator& op, Complex z) : z_(z) {
  Matrix shifted = -op.matrix();
  shifted.diagonal().array() += z;
  lu_.compute(shifted);
  rcond_ = guarded_rcond(lu_);
  if (!(rcond_ >= kEps) || !lu_.matrixLU().allFinite()) {
    throw SingularSystemError("zI - A is numerically singular at z = (" +
                              std::to_string(z.real()) + ", " + std::to_string(z.imag()) +
                              "), rcond = " + std::to_string(rcond_));
  }
}

Vector ShiftedFactorization::solve(const Vector& rhs) const {
  if (rhs.size() != lu_.rows()) {
    throw DimensionError("right-hand side has length " + std::to_string(rhs.size()) +
                         ", operator has dimension " + std::to_string(lu_.rows()));
  }
  return lu_.solve(rhs);
}

ResolventSolution resolvent_solve(const Operator& op, Complex z, const Vector& rhs) {
  const ShiftedFactorization f(op, z);
  return {f.solve(rhs), 1.0 / f.rcond_estimate()};
}

double smallest_singular_value(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("smallest_singular_value needs a square matrix");
  if (m.rows() == 0) return 0.0;
  if (m.rows() <= kDenseSvdLimit) {
    const Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues().minCoeff();
  }
  return smallest_singular_value_inverse_iteration(m);
}

double shifted_condition_number(const Operator& op, Complex z) {
  Matrix shifted = -op.matrix();
  shifted.diagonal().array() += z;
  if (op.dim() <= kDenseSvdLimit) {
    const Eigen::BDCSVD<Matrix> svd(shifted);
    const auto& s = svd.singularValues();
    const double smin = s.minCoeff();
    return smin > 0.0 ? s.maxCoeff() / smin : std::numeric_limits<double>::infinity();
  }
  const Eigen::PartialPivLU<Matrix> lu(shifted);
  const double rc = guarded_rcond(lu);
  return rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
}

std::vector<Complex> eigenvalues(const Operator& op) {
  std::vector<Complex> out;
  out.reserve(static_cast<std::size_t>(op.dim()));
  if (op.is_real()) {
    const Eigen::MatrixXd real = op.matrix().real();
    Eigen::EigenSolver<Eigen::MatrixXd> es(real, false);
    if (es.info() != Eigen::Success) throw ConvergenceError("real eigen-solver did not converge");
    for (Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
  } else {
    Eigen::ComplexEigenSolver<Matrix> es(op.matrix(), false);
    if (es.info() != Eigen::Success) throw ConvergenceError("complex eigen-solver did not converge");
    for (Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
  }
  return out;
}

Matrix matrix_exponential(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("matrix_exponential needs a square matrix");
  const Index n = m.rows();
  if (n == 0) return m;

  // Higham (2005) degree-13 coefficients; θ13 bounds ‖A/2^s‖₁.
  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  constexpr double theta13 = 5.371920351148152;

  const double norm = one_norm(m);
  int s = 0;
  if (norm > theta13) s = static_cast<int>(std::ceil(std::log2(norm / theta13)));
  const Matrix a = m / std::ldexp(1.0, s);

  const Matrix ident = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                         b[3] * a2 + b[1] * ident;
  const Matrix u = a * u_inner;
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 +
                   b[2] * a2 + b[0] * ident;

  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < s; ++k) r = r * r;
  return r;
}

}  // namespace lapinv
