#pragma once

// Dense complex linear algebra kernels: shifted solves, smallest singular
// values, eigenvalues and the matrix exponential used by the reference oracle.

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lapinv {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// State vectors (u, u0, transformed sources) share the dense complex vector type.
using StateVector = Vector;

/// Largest operator dimension accepted from files.
inline constexpr Index kMaxFileDimension = 3000;

/// Above this dimension σ_min falls back from a full SVD to inverse iteration.
inline constexpr Index kDenseSvdLimit = 500;

/// Square, finite, complex-capable matrix A of u' = Au + b(t).
class Operator {
 public:
  /// Throws DimensionError if not square/empty, or std::invalid_argument on
  /// non-finite entries.
  explicit Operator(Matrix entries, std::string source_tag = {});

  Index dim() const noexcept { return entries_.rows(); }
  const Matrix& matrix() const noexcept { return entries_; }
  const std::string& source_tag() const noexcept { return source_tag_; }

  /// True when every entry has a zero imaginary part.
  bool is_real() const noexcept { return is_real_; }

 private:
  Matrix entries_;
  std::string source_tag_;
  bool is_real_ = true;
};

/// LU factorization of zI - A with partial pivoting.
class ShiftedFactorization {
 public:
  /// Throws SingularSystemError when the pivots signal numerical singularity.
  ShiftedFactorization(const Operator& op, Complex z);

  Vector solve(const Vector& rhs) const;
  Complex shift() const noexcept { return z_; }

  /// Reciprocal condition estimate in the 1-norm (LAPACK-style estimator).
  double rcond_estimate() const noexcept { return rcond_; }

 private:
  Complex z_;
  Eigen::PartialPivLU<Matrix> lu_;
  double rcond_ = 0.0;
};

struct ResolventSolution {
  Vector x;
  /// Estimated condition number of zI - A (1-norm estimator).
  double condition_estimate = 0.0;
};

/// Solves (zI - A) x = rhs.
ResolventSolution resolvent_solve(const Operator& op, Complex z, const Vector& rhs);

/// σ_min(M). Full SVD up to kDenseSvdLimit, inverse iteration above.
double smallest_singular_value(const Matrix& m);

/// Spectral condition number σ_max/σ_min of zI - A; +inf when singular.
double shifted_condition_number(const Operator& op, Complex z);

/// All eigenvalues, unordered. Throws ConvergenceError on solver failure.
std::vector<Complex> eigenvalues(const Operator& op);

/// exp(M) by scaling and squaring around a degree-13 Padé approximant.
Matrix matrix_exponential(const Matrix& m);

}  // namespace lapinv
