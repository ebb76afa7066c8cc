#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "lapinv/errors.hpp"
#include "lapinv/problem.hpp"
#include "support.hpp"

namespace lapinv {
namespace {

TEST(Chebyshev, DegreeOneMatrix) {
  const Eigen::MatrixXd d = chebyshev_diff_matrix(1);
  Eigen::MatrixXd expected(2, 2);
  expected << 0.5, -0.5, 0.5, -0.5;
  EXPECT_LT((d - expected).norm(), 1e-15);
}

TEST(Chebyshev, DifferentiatesCubicExactly) {
  const int n = 6;
  const Eigen::VectorXd x = chebyshev_points(n);
  EXPECT_NEAR(x(0), 1.0, 1e-15);
  EXPECT_NEAR(x(n), -1.0, 1e-15);
  const Eigen::VectorXd f = x.array().cube() - 2.0 * x.array();
  const Eigen::VectorXd df = 3.0 * x.array().square() - 2.0;
  EXPECT_LT((chebyshev_diff_matrix(n) * f - df).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Chebyshev, RowsSumToZero) {
  const Eigen::MatrixXd d = chebyshev_diff_matrix(20);
  EXPECT_LT(d.rowwise().sum().lpNorm<Eigen::Infinity>(), 1e-11);
}

// Steady state -A⁻¹b against (1 - e^{-x})/(1 - e^{-d}), the solution of
// u'' + u' = 0 with u(0) = 0, u(d) = 1.
double cd_steady_error(int n) {
  const double d = 400.0;
  const LaplaceProblem p = canonical_cd_problem(d, n);
  const Vector b = p.source.terms().at(0).coefficient;
  const Vector u = -p.op.matrix().partialPivLu().solve(b);
  const Eigen::VectorXd x = canonical_cd_grid(d, n);
  double err = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double exact = -std::expm1(-x(i)) / -std::expm1(-d);
    err = std::max(err, std::abs(u(i) - exact));
  }
  return err;
}

TEST(CanonicalCD, ShapeAndSteadyState) {
  const LaplaceProblem p = canonical_cd_problem(400.0, 63);
  EXPECT_EQ(p.dim(), 62);
  EXPECT_TRUE(p.is_real());
  EXPECT_LE(cd_steady_error(64), 1e-5);
  EXPECT_LE(cd_steady_error(128), 1e-8);
}

TEST(CanonicalCD, GridIsInteriorAndAscendingFromBoundary) {
  const Eigen::VectorXd x = canonical_cd_grid(400.0, 63);
  ASSERT_EQ(x.size(), 62);
  for (Index i = 0; i < x.size(); ++i) {
    EXPECT_GT(x(i), 0.0);
    EXPECT_LT(x(i), 400.0);
  }
}

TEST(BlackScholes, GershgorinEnclosesSpectrum) {
  const LaplaceProblem p = black_scholes_problem({});
  const Matrix& a = p.op.matrix();
  const auto ev = eigenvalues(p.op);
  ASSERT_EQ(static_cast<Index>(ev.size()), a.rows());
  for (const Complex& l : ev) {
    bool covered = false;
    for (Index i = 0; i < a.rows() && !covered; ++i) {
      const double radius = a.row(i).cwiseAbs().sum() - std::abs(a(i, i));
      covered = std::abs(l - a(i, i)) <= radius * (1.0 + 1e-10) + 1e-10;
    }
    EXPECT_TRUE(covered) << "eigenvalue " << l;
  }
}

TEST(BlackScholes, PayoffAndTridiagonalStructure) {
  BlackScholesParams bs;
  const LaplaceProblem p = black_scholes_problem(bs);
  const Eigen::VectorXd s = black_scholes_grid(bs);
  EXPECT_NEAR(s(1) - s(0), (bs.upper - bs.lower) / (bs.n + 1), 1e-12);
  for (Index i = 0; i < s.size(); ++i) EXPECT_EQ(p.u0(i).real(), std::max(0.0, s(i) - bs.strike));
  const Matrix& a = p.op.matrix();
  EXPECT_EQ(a(0, 2), Complex(0.0, 0.0));
  EXPECT_EQ(a(5, 2), Complex(0.0, 0.0));
  const auto sing = p.singularities();
  EXPECT_EQ(sing.size(), 2u);
  EXPECT_THROW(black_scholes_problem({.strike = 300.0}), std::invalid_argument);
}

TEST(BlackScholes, DiscreteSolutionNearClosedFormCall) {
  // European call value at s = 100 against the closed form, up to O(h²) error.
  BlackScholesParams bs;
  const LaplaceProblem p = black_scholes_problem(bs);
  const double t = 1.0;
  const Vector u = reference_solution(p, t);
  const Eigen::VectorXd s = black_scholes_grid(bs);
  Index idx = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (std::abs(s(i) - 100.0) < std::abs(s(idx) - 100.0)) idx = i;
  const double x = s(idx);
  const double v = bs.sigma * std::sqrt(t);
  const double d1 = (std::log(x / bs.strike) + (bs.rate + 0.5 * bs.sigma * bs.sigma) * t) / v;
  const auto ncdf = [](double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); };
  const double call = x * ncdf(d1) - bs.strike * std::exp(-bs.rate * t) * ncdf(d1 - v);
  EXPECT_NEAR(u(idx).real(), call, 1e-2 * call);
}

TEST(ReferenceSolution, ScalarConstantSource) {
  // u' = λu + β, u(0) = u0  ⇒  u(t) = u0 e^{λt} + β(e^{λt} - 1)/λ.
  const double lambda = -3.0, u0 = 0.5, beta = 2.0, t = 0.8;
  const LaplaceProblem p = diagonal_problem({lambda}, {u0}, {beta});
  const double exact = u0 * std::exp(lambda * t) + beta * std::expm1(lambda * t) / lambda;
  EXPECT_NEAR(reference_solution(p, t)(0).real(), exact, 1e-14);
}

TEST(ReferenceSolution, ExponentialSourceMode) {
  // u' = -u + e^{-2t}, u(0) = 0  ⇒  u = e^{-t} - e^{-2t}.
  Vector coeff(1);
  coeff << 1.0;
  const LaplaceProblem p = make_problem(Operator(Matrix::Constant(1, 1, -1.0)), Vector::Zero(1),
                                        SourceTransform({SourceTerm{coeff, -2.0}}));
  const double t = 1.3;
  EXPECT_NEAR(reference_solution(p, t)(0).real(), std::exp(-t) - std::exp(-2.0 * t), 1e-14);
}

TEST(ReferenceSolution, CustomSourceUnsupported) {
  SourceTransform custom([](Complex z) { return Vector::Constant(1, 1.0 / (z * z + 1.0)); },
                         {Complex(0.0, 1.0), Complex(0.0, -1.0)});
  const LaplaceProblem p =
      make_problem(Operator(Matrix::Constant(1, 1, -1.0)), Vector::Ones(1), custom);
  EXPECT_THROW(reference_solution(p, 1.0), UnsupportedSourceError);
  EXPECT_EQ(p.singularities().size(), 2u);
}

TEST(Problem, DimensionMismatch) {
  EXPECT_THROW(make_problem(Operator(Matrix::Zero(2, 2)), Vector::Zero(3)), DimensionError);
  EXPECT_THROW(diagonal_problem({-1.0, -2.0}, {1.0}), DimensionError);
}

TEST(MatrixMarket, RoundTripIsExact) {
  const auto dir = testing::scratch_dir("mm_roundtrip");
  Matrix a(3, 3);
  a << Complex(1.0 / 3.0, 0.1), 0.0, Complex(-2.5e-17, 0.0), 0.0, Complex(7.0, -1.0 / 7.0), 0.0,
      Complex(1e300, 0.0), 0.0, Complex(-0.0, 3.0);
  const Operator op(a, "roundtrip");
  save_operator(op, (dir / "a.mtx").string());
  const Operator back = load_operator((dir / "a.mtx").string());
  EXPECT_EQ(back.matrix(), op.matrix());

  const Operator real_op(Matrix::Identity(4, 4) * (1.0 / 3.0));
  save_operator(real_op, (dir / "r.mtx").string());
  EXPECT_EQ(load_operator((dir / "r.mtx").string()).matrix(), real_op.matrix());

  Vector v(3);
  v << Complex(0.1, 0.2), Complex(-1e-300, 0.0), Complex(2.0, -3.0);
  save_vector(v, (dir / "v.txt").string());
  EXPECT_EQ(load_vector((dir / "v.txt").string()), v);
}

TEST(MatrixMarket, SymmetricAndDuplicates) {
  const auto dir = testing::scratch_dir("mm_sym");
  std::ofstream((dir / "s.mtx").string()) << "%%MatrixMarket matrix coordinate real symmetric\n"
                                             "% comment\n"
                                             "2 2 3\n"
                                             "1 1 1.0\n"
                                             "2 1 4.0\n"
                                             "1 1 0.5\n";
  const Operator op = load_operator((dir / "s.mtx").string());
  EXPECT_EQ(op.matrix()(0, 0), Complex(1.5, 0.0));
  EXPECT_EQ(op.matrix()(0, 1), Complex(4.0, 0.0));
  EXPECT_EQ(op.matrix()(1, 0), Complex(4.0, 0.0));
}

TEST(MatrixMarket, MalformedInputs) {
  const auto dir = testing::scratch_dir("mm_bad");
  const auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream((dir / name).string()) << body;
    return (dir / name).string();
  };
  EXPECT_THROW(load_operator(write("banner.mtx", "hello\n")), ParseError);
  EXPECT_THROW(load_operator(write("array.mtx", "%%MatrixMarket matrix array real general\n2 2\n")),
               ParseError);
  EXPECT_THROW(load_operator(write("rect.mtx",
                                   "%%MatrixMarket matrix coordinate real general\n2 3 0\n")),
               DimensionError);
  EXPECT_THROW(load_operator(write("range.mtx",
                                   "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n")),
               ParseError);
  EXPECT_THROW(load_operator(write("short.mtx",
                                   "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n")),
               ParseError);
  EXPECT_THROW(load_operator((dir / "missing.mtx").string()), ParseError);
  try {
    load_operator(write("line.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 1\nx y z\n"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(LoadProblem, WithSourceSpec) {
  const auto dir = testing::scratch_dir("load_problem");
  save_operator(Operator(Matrix::Identity(2, 2) * -1.0), (dir / "a.mtx").string());
  save_vector(Vector::Ones(2), (dir / "u0.txt").string());
  save_vector(Vector::Constant(2, 3.0), (dir / "b.txt").string());
  const LaplaceProblem p = load_problem((dir / "a.mtx").string(), (dir / "u0.txt").string(),
                                        "-0.5:" + (dir / "b.txt").string());
  ASSERT_EQ(p.source.terms().size(), 1u);
  EXPECT_EQ(p.source.terms()[0].pole, Complex(-0.5, 0.0));
  EXPECT_THROW(parse_source_spec("nonsense", 2), ParseError);
  EXPECT_THROW(parse_source_spec("abc:" + (dir / "b.txt").string(), 2), ParseError);
  EXPECT_THROW(parse_source_spec("0:" + (dir / "b.txt").string(), 3), DimensionError);
  EXPECT_TRUE(parse_source_spec("none", 2).empty());
}

}  // namespace
}  // namespace lapinv
