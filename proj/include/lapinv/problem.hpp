#pragma once

// Laplace-domain problems u' = Au + b(t), u(0) = u0, with sources whose
// transforms are sums of simple poles, plus the built-in generators and file
// ingestion.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lapinv/numerics.hpp"

namespace lapinv {

/// One closed-form source mode: b(t) ∋ coefficient·e^{pole·t}, b̂(z) ∋ coefficient/(z - pole).
struct SourceTerm {
  Vector coefficient;
  Complex pole{0.0, 0.0};
};

/// Transformed source b̂(z). Either a sum of SourceTerms (which also has a
/// time-domain form) or an arbitrary callable with declared singularities.
class SourceTransform {
 public:
  using Callable = std::function<Vector(Complex)>;

  SourceTransform() = default;
  explicit SourceTransform(std::vector<SourceTerm> terms);
  SourceTransform(Callable transform, std::vector<Complex> singularities);

  /// b̂(z); zero vector of length `dim` when there is no source.
  Vector evaluate(Complex z, Index dim) const;

  /// Poles of b̂, duplicates removed.
  std::vector<Complex> singularities() const;

  const std::vector<SourceTerm>& terms() const noexcept { return terms_; }
  bool has_time_form() const noexcept { return !custom_; }
  bool empty() const noexcept { return terms_.empty() && !custom_; }
  bool is_real() const noexcept;

 private:
  std::vector<SourceTerm> terms_;
  Callable custom_;
  std::vector<Complex> custom_singularities_;
};

struct LaplaceProblem {
  Operator op;
  Vector u0;
  SourceTransform source;
  std::string name;

  /// Throws DimensionError when u0 or a source coefficient has the wrong length.
  void validate() const;

  Index dim() const noexcept { return op.dim(); }
  std::vector<Complex> singularities() const { return source.singularities(); }

  /// u0 + b̂(z).
  Vector transformed_rhs(Complex z) const;

  /// Real A, u0 and b: the quadrature may use conjugate symmetry.
  bool is_real() const noexcept;
};

/// Builds and validates a problem.
LaplaceProblem make_problem(Operator op, Vector u0, SourceTransform source = {},
                            std::string name = {});

// ---------------------------------------------------------------------------
// Generators

/// First-order Chebyshev differentiation matrix on x_j = cos(jπ/n), j = 0..n.
Eigen::MatrixXd chebyshev_diff_matrix(int n);

/// Chebyshev points cos(jπ/n), j = 0..n.
Eigen::VectorXd chebyshev_points(int n);

/// u_t = u_xx + u_x on [0, d], u(x,0) = 0, u(0,t) = 0, u(d,t) = 1, collocated on
/// n+1 Chebyshev points (boundary rows eliminated, n-1 unknowns).
LaplaceProblem canonical_cd_problem(double d, int n);

/// Interior grid abscissae of canonical_cd_problem, in unknown order.
Eigen::VectorXd canonical_cd_grid(double d, int n);

struct BlackScholesParams {
  double lower = 0.0;    ///< L
  double upper = 200.0;  ///< S
  double strike = 80.0;  ///< K
  double rate = 0.06;    ///< r
  double sigma = 0.05;
  int n = 200;           ///< interior unknowns, h = (S - L)/(n + 1)
};

/// European call under Black–Scholes, centred finite differences.
LaplaceProblem black_scholes_problem(const BlackScholesParams& params);

/// Interior asset-price grid s_i = L + i h, i = 1..n.
Eigen::VectorXd black_scholes_grid(const BlackScholesParams& params);

/// A = diag(values), u0 given, optional constant source (pole 0).
LaplaceProblem diagonal_problem(const std::vector<double>& values, const std::vector<double>& u0,
                                const std::vector<double>& constant_source = {});

// ---------------------------------------------------------------------------
// File formats

/// Reads a coordinate MatrixMarket file (real/integer/complex, general/symmetric).
/// Duplicate coordinates are summed. Dimension limit kMaxFileDimension.
Operator load_operator(const std::string& path);

/// Writes a coordinate MatrixMarket file with 17 significant digits.
void save_operator(const Operator& op, const std::string& path);

/// One value per line ("re" or "re im"); '%'/'#' comments and blank lines skipped.
Vector load_vector(const std::string& path);
void save_vector(const Vector& v, const std::string& path);

/// Source specification for file problems: "none" or comma-separated
/// "pole:path" items, each contributing coefficient(path)/(z - pole).
SourceTransform parse_source_spec(const std::string& spec, Index dim);

LaplaceProblem load_problem(const std::string& matrix_path, const std::string& u0_path,
                            const std::string& source_spec);

// ---------------------------------------------------------------------------
// Reference oracle

/// u(t) = e^{At}u0 + ∫₀ᵗ e^{A(t-s)}b(s)ds from the exponential of an augmented
/// matrix carrying one scalar mode per source term. Throws UnsupportedSourceError
/// for sources without a time-domain form.
Vector reference_solution(const LaplaceProblem& problem, double t);

}  // namespace lapinv
