#include "lapinv/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lapinv/errors.hpp"

namespace lapinv {

namespace {

bool same_point(Complex a, Complex b) { return std::abs(a - b) <= 1e-15 * (1.0 + std::abs(a)); }

void push_unique(std::vector<Complex>& out, Complex p) {
  for (const Complex& q : out) {
    if (same_point(p, q)) return;
  }
  out.push_back(p);
}

}  // namespace

SourceTransform::SourceTransform(std::vector<SourceTerm> terms) : terms_(std::move(terms)) {}

SourceTransform::SourceTransform(Callable transform, std::vector<Complex> singularities)
    : custom_(std::move(transform)), custom_singularities_(std::move(singularities)) {}

Vector SourceTransform::evaluate(Complex z, Index dim) const {
  Vector out = Vector::Zero(dim);
  for (const SourceTerm& term : terms_) out += term.coefficient / (z - term.pole);
  if (custom_) out += custom_(z);
  return out;
}

std::vector<Complex> SourceTransform::singularities() const {
  std::vector<Complex> out;
  for (const SourceTerm& term : terms_) push_unique(out, term.pole);
  for (const Complex& p : custom_singularities_) push_unique(out, p);
  return out;
}

bool SourceTransform::is_real() const noexcept {
  if (custom_) return false;
  return std::all_of(terms_.begin(), terms_.end(), [](const SourceTerm& term) {
    return term.pole.imag() == 0.0 && term.coefficient.imag().isZero(0.0);
  });
}

void LaplaceProblem::validate() const {
  const Index n = op.dim();
  if (u0.size() != n) {
    throw DimensionError("u0 has length " + std::to_string(u0.size()) +
                         ", operator has dimension " + std::to_string(n));
  }
  for (const SourceTerm& term : source.terms()) {
    if (term.coefficient.size() != n) {
      throw DimensionError("source coefficient has length " +
                           std::to_string(term.coefficient.size()) +
                           ", operator has dimension " + std::to_string(n));
    }
  }
  if (!u0.allFinite()) throw std::invalid_argument("u0 has non-finite entries");
}

Vector LaplaceProblem::transformed_rhs(Complex z) const {
  if (source.empty()) return u0;
  return u0 + source.evaluate(z, op.dim());
}

bool LaplaceProblem::is_real() const noexcept {
  return op.is_real() && u0.imag().isZero(0.0) && source.is_real();
}

LaplaceProblem make_problem(Operator op, Vector u0, SourceTransform source, std::string name) {
  LaplaceProblem p{std::move(op), std::move(u0), std::move(source), std::move(name)};
  p.validate();
  return p;
}

Eigen::VectorXd chebyshev_points(int n) {
  if (n < 1) throw std::invalid_argument("Chebyshev degree must be >= 1");
  Eigen::VectorXd x(n + 1);
  for (int j = 0; j <= n; ++j) x(j) = std::cos(std::numbers::pi * j / n);
  return x;
}

Eigen::MatrixXd chebyshev_diff_matrix(int n) {
  const Eigen::VectorXd x = chebyshev_points(n);
  Eigen::VectorXd c(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 2.0 : 1.0;
    c(i) = (i % 2 == 0) ? w : -w;
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j <= n; ++j) {
      if (i == j) continue;
      d(i, j) = (c(i) / c(j)) / (x(i) - x(j));
      row_sum += d(i, j);
    }
    // Negative-sum diagonal keeps row sums exactly zero.
    d(i, i) = -row_sum;
  }
  return d;
}

Eigen::VectorXd canonical_cd_grid(double d, int n) {
  const Eigen::VectorXd x = chebyshev_points(n);
  return (d * 0.5 * (x.segment(1, n - 1).array() + 1.0)).matrix();
}

LaplaceProblem canonical_cd_problem(double d, int n) {
  if (!(d > 0.0)) throw std::invalid_argument("domain length d must be positive");
  if (n < 4) throw std::invalid_argument("Chebyshev degree must be >= 4");
  const Eigen::MatrixXd ds = chebyshev_diff_matrix(n) * (2.0 / d);
  const Eigen::MatrixXd l = ds * ds + ds;
  // Node 0 is x = d (u = 1), node n is x = 0 (u = 0).
  const Eigen::MatrixXd a = l.block(1, 1, n - 1, n - 1);
  const Eigen::VectorXd b = l.block(1, 0, n - 1, 1);
  SourceTransform source({SourceTerm{b.cast<Complex>(), Complex(0.0, 0.0)}});
  return make_problem(Operator(a.cast<Complex>(), "canonical-cd d=" + std::to_string(d) +
                                                      " n=" + std::to_string(n)),
                      Vector::Zero(n - 1), std::move(source), "canonical_cd");
}

Eigen::VectorXd black_scholes_grid(const BlackScholesParams& p) {
  const double h = (p.upper - p.lower) / (p.n + 1);
  Eigen::VectorXd s(p.n);
  for (int i = 0; i < p.n; ++i) s(i) = p.lower + (i + 1) * h;
  return s;
}

LaplaceProblem black_scholes_problem(const BlackScholesParams& p) {
  if (!(p.lower >= 0.0 && p.lower < p.strike && p.strike < p.upper)) {
    throw std::invalid_argument("Black-Scholes parameters need 0 <= L < K < S");
  }
  if (p.n < 4) throw std::invalid_argument("Black-Scholes grid needs at least 4 unknowns");
  if (!(p.sigma > 0.0) || p.rate < 0.0) throw std::invalid_argument("need sigma > 0 and r >= 0");
  const int n = p.n;
  const double h = (p.upper - p.lower) / (n + 1);
  const Eigen::VectorXd s = black_scholes_grid(p);

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd u0(n);
  double last_super = 0.0;
  for (int i = 0; i < n; ++i) {
    const double diffusion = p.sigma * p.sigma * s(i) * s(i) / (2.0 * h * h);
    const double drift = p.rate * s(i) / (2.0 * h);
    const double sub = diffusion - drift;
    const double diag = -2.0 * diffusion - p.rate;
    const double super = diffusion + drift;
    a(i, i) = diag;
    if (i > 0) a(i, i - 1) = sub;
    if (i + 1 < n) a(i, i + 1) = super;
    if (i + 1 == n) last_super = super;
    u0(i) = std::max(0.0, s(i) - p.strike);
  }
  // u(S,τ) = S - K e^{-rτ} enters the last row through its super-diagonal coefficient.
  Vector e_last = Vector::Zero(n);
  e_last(n - 1) = last_super;
  std::vector<SourceTerm> terms{
      SourceTerm{e_last * p.upper, Complex(0.0, 0.0)},
      SourceTerm{-e_last * p.strike, Complex(-p.rate, 0.0)},
  };
  return make_problem(Operator(a.cast<Complex>(), "black-scholes n=" + std::to_string(n)),
                      u0.cast<Complex>(), SourceTransform(std::move(terms)), "black_scholes");
}

LaplaceProblem diagonal_problem(const std::vector<double>& values, const std::vector<double>& u0,
                                const std::vector<double>& constant_source) {
  const auto n = static_cast<Index>(values.size());
  Matrix a = Matrix::Zero(n, n);
  Vector init(n);
  if (static_cast<Index>(u0.size()) != n) throw DimensionError("u0 length does not match diagonal");
  for (Index i = 0; i < n; ++i) {
    a(i, i) = values[static_cast<std::size_t>(i)];
    init(i) = u0[static_cast<std::size_t>(i)];
  }
  SourceTransform source;
  if (!constant_source.empty()) {
    if (static_cast<Index>(constant_source.size()) != n) {
      throw DimensionError("source length does not match diagonal");
    }
    Vector b(n);
    for (Index i = 0; i < n; ++i) b(i) = constant_source[static_cast<std::size_t>(i)];
    source = SourceTransform({SourceTerm{b, Complex(0.0, 0.0)}});
  }
  return make_problem(Operator(std::move(a), "diagonal"), std::move(init), std::move(source),
                      "diagonal");
}

Vector reference_solution(const LaplaceProblem& problem, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("reference_solution needs t >= 0");
  if (!problem.source.has_time_form()) {
    throw UnsupportedSourceError("source has no closed time-domain form; reference oracle unavailable");
  }
  const Index n = problem.dim();
  const auto& terms = problem.source.terms();
  const auto m = static_cast<Index>(terms.size());

  // d/dt [u; w] = [[A, C], [0, diag(poles)]] [u; w], w(0) = 1, so b(t) = C w(t).
  Matrix aug = Matrix::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = problem.op.matrix();
  for (Index k = 0; k < m; ++k) {
    aug.block(0, n + k, n, 1) = terms[static_cast<std::size_t>(k)].coefficient;
    aug(n + k, n + k) = terms[static_cast<std::size_t>(k)].pole;
  }
  Vector init(n + m);
  init.head(n) = problem.u0;
  init.tail(m).setOnes();
  const Matrix e = matrix_exponential(aug * t);
  return (e * init).head(n);
}

}  // namespace lapinv
