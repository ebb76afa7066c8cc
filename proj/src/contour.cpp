#include "lapinv/contour.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>

#include "csv.hpp"
#include "lapinv/errors.hpp"
#include "parallel.hpp"

namespace lapinv {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kUnitRoundoff = std::numeric_limits<double>::epsilon() / 2.0;
constexpr double kClampMargin = 1e-12;
constexpr int kMaxFixedPointIterations = 50;
constexpr int kClampedIterations = 2;

// Height of the ellipse (centre z_l, horizontal semi-axis A, vertical B) above x.
double height_at(double z_l, double A, double B, double x) {
  const double u = (x - z_l) / A;
  return B * std::sqrt(std::max(0.0, 1.0 - u * u));
}

double candidate_semi_minor(double z_l, double z_r, double focus_x) {
  const double A = z_r - z_l;
  const double f = focus_x - z_l;
  return std::sqrt(std::max(0.0, A * A - f * f));
}

bool ellipse_encloses(double z_l, double A, double B, Complex p) {
  const double u = (p.real() - z_l) / A;
  if (B <= 0.0) return p.imag() == 0.0 && u * u <= 1.0;
  const double v = p.imag() / B;
  return u * u + v * v <= 1.0;
}

InnerEllipse finish(double z_l, double z_r, double d, double r, double B, EllipseCase which,
                    int stop_index, int m_ell) {
  InnerEllipse e;
  e.z_l = z_l;
  e.z_r = z_r;
  e.d = d;
  e.r = r;
  e.w_tilde = std::acos(std::clamp((d - z_l) / (z_r - z_l), -1.0, 1.0));
  e.semi_minor = B;
  e.which = which;
  e.stop_index = stop_index;
  e.m_ell = m_ell;
  if (!(r > 0.0)) {
    throw GeometryError("inner ellipse has non-positive height r at the passing point");
  }
  return e;
}

}  // namespace

const char* to_string(EllipseCase c) noexcept {
  switch (c) {
    case EllipseCase::kCircleFails: return "circle-fails";
    case EllipseCase::kFirstCandidate: return "first-candidate";
    case EllipseCase::kInterior: return "interior";
    case EllipseCase::kAllCandidates: return "all-candidates";
  }
  return "unknown";
}

double InnerEllipse::quadratic_form(Complex p) const noexcept {
  const double u = (p.real() - z_l) / semi_major();
  const double v = p.imag() / semi_minor;
  return u * u + v * v;
}

bool candidate_encloses(double z_l, double z_r, double focus_x, Complex p) {
  return ellipse_encloses(z_l, z_r - z_l, candidate_semi_minor(z_l, z_r, focus_x), p);
}

InnerEllipse build_inner_ellipse(const SingularitySet& phi, double z_l, double z_r, int m_ell) {
  if (!(z_l < z_r)) throw GeometryError("inner ellipse needs z_l < z_r");
  if (m_ell < 3) throw std::invalid_argument("inner ellipse needs m_ell >= 3");
  std::vector<Complex> pts;
  for (const Complex& p : phi.points) {
    if (p.real() > z_r) {
      throw GeometryError("singularity (" + std::to_string(p.real()) + ", " +
                          std::to_string(p.imag()) + ") lies right of z_r = " +
                          std::to_string(z_r));
    }
    if (p.real() >= z_l) pts.emplace_back(p.real(), std::abs(p.imag()));
  }
  if (pts.empty()) throw GeometryError("singularity set has no point with Re >= z_l");
  // Right to left, so the first failure found is the rightmost one.
  std::stable_sort(pts.begin(), pts.end(),
                   [](Complex p, Complex q) { return p.real() > q.real(); });

  const double A = z_r - z_l;
  const auto focus = [&](int k) { return z_l + A * k / (m_ell - 1); };

  const auto circle_miss = std::find_if(
      pts.begin(), pts.end(), [&](Complex p) { return !ellipse_encloses(z_l, A, A, p); });
  if (circle_miss != pts.end()) {
    // (v): pass above the tallest offending point, raising the margin until Φ fits.
    Complex tallest = *circle_miss;
    for (const Complex& p : pts) {
      if (!ellipse_encloses(z_l, A, A, p) && p.imag() > tallest.imag()) tallest = p;
    }
    const double u = (tallest.real() - z_l) / A;
    if (!(u < 1.0)) throw GeometryError("circle fallback: offending point sits at z_r");
    double eps = 0.05 * tallest.imag();
    if (!(eps > 0.0)) eps = 0.05 * A;
    for (int it = 0; it < 200; ++it, eps *= 2.0) {
      const double r = tallest.imag() + eps;
      const double B = r / std::sqrt(1.0 - u * u);
      const bool all = std::all_of(pts.begin(), pts.end(),
                                   [&](Complex p) { return ellipse_encloses(z_l, A, B, p); });
      if (all) {
        return finish(z_l, z_r, tallest.real(), r, B, EllipseCase::kCircleFails, 0, m_ell);
      }
    }
    throw GeometryError("circle fallback did not enclose the singularity set");
  }

  int accepted = 0;  // 0 is the circle
  for (int k = 1; k <= m_ell - 2; ++k) {
    const double B = candidate_semi_minor(z_l, z_r, focus(k));
    const auto miss = std::find_if(
        pts.begin(), pts.end(), [&](Complex p) { return !ellipse_encloses(z_l, A, B, p); });
    if (miss != pts.end()) {
      const double B_prev = accepted == 0 ? A : candidate_semi_minor(z_l, z_r, focus(accepted));
      const double d = miss->real();
      return finish(z_l, z_r, d, height_at(z_l, A, B_prev, d), B_prev,
                    accepted == 0 ? EllipseCase::kFirstCandidate : EllipseCase::kInterior,
                    accepted, m_ell);
    }
    accepted = k;
  }
  const double B = candidate_semi_minor(z_l, z_r, focus(accepted));
  return finish(z_l, z_r, z_l, B, B, EllipseCase::kAllCandidates, accepted, m_ell);
}

MappedPoint conformal_map(const ContourParams& p, Complex w) {
  const Complex i(0.0, 1.0);
  const Complex em = std::exp(-i * w);
  const Complex ep = std::exp(i * w);
  return {p.a1 * em + p.a2 * ep + p.A3, -i * p.a1 * em + i * p.a2 * ep};
}

ContourParams contour_from_a(const InnerEllipse& inner, double a) {
  if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("contour needs a > 0");
  const double s = std::sin(inner.w_tilde);
  if (!(s > 0.0)) throw GeometryError("sin(w_tilde) vanishes; passing point on the real axis");
  const double span = inner.z_r - inner.z_l;
  const double q = inner.r / s;
  if (!(span - q > 0.0)) {
    throw GeometryError("z_r - z_l = " + std::to_string(span) + " <= r/sin(w_tilde) = " +
                        std::to_string(q) + "; the contour foci would not be real");
  }
  ContourParams p;
  p.a = a;
  p.a1 = 0.5 * std::exp(-a) * (span - q);
  p.a2 = 0.5 * std::exp(a) * (span + q);
  p.A3 = inner.z_l;
  p.A1 = p.a1 + p.a2;
  p.A2 = p.a2 - p.a1;
  p.D = 0.5 * std::exp(-2.0 * a) * (span - q) + 0.5 * std::exp(2.0 * a) * (span + q) + inner.z_l;
  return p;
}

double objective(const InnerEllipse& inner, double a, double t, double tol) {
  const ContourParams p = contour_from_a(inner, a);
  return (p.D * t - std::log(tol / kPi)) / (2.0 * a);
}

ContourParams optimize_a(const InnerEllipse& inner, double t, double tol, double a_max) {
  if (!(t > 0.0) || !(tol > 0.0)) throw std::invalid_argument("optimize_a needs t > 0, tol > 0");
  if (!(a_max > 0.0)) throw std::invalid_argument("optimize_a needs a_max > 0");
  contour_from_a(inner, a_max);  // surfaces geometry errors before the search
  std::uintmax_t max_iter = 200;
  const auto [a, fa] = boost::math::tools::brent_find_minima(
      [&](double x) { return objective(inner, x, t, tol); }, 1e-8 * a_max, a_max,
      std::numeric_limits<double>::digits / 2, max_iter);
  (void)fa;
  return contour_from_a(inner, a);
}

int predicted_nodes(double a, double c, double D, double t, double tol) {
  if (!(a > 0.0) || !(c > 0.0) || !(t > 0.0) || !(tol > 0.0)) {
    throw std::invalid_argument("predicted_nodes needs positive a, c, t, tol");
  }
  const double n = (c / a) * (D * t - std::log(tol / (2.0 * kPi * c)));
  return std::max(1, static_cast<int>(std::ceil(n)));
}

double truncation_c_from_K(const ContourParams& p, double K, double t, double tol, bool clamp) {
  if (!(K > 0.0)) throw DomainError("truncation parameter needs K > 0", K);
  const double arg = std::log(tol / K) / (p.A1 * t) - p.A3 / p.A1;
  double x = arg;
  if (!(x >= -1.0 && x <= 1.0)) {
    if (!clamp || !std::isfinite(x)) {
      throw DomainError("arccos argument " + std::to_string(arg) + " outside [-1, 1]", arg);
    }
    x = std::clamp(x, -1.0 + kClampMargin, 1.0 - kClampMargin);
  }
  return std::acos(x) / kPi;
}

double scaled_transform_norm(const LaplaceProblem& problem, const ContourParams& p, double x) {
  const MappedPoint m = conformal_map(p, Complex(x, 0.0));
  const Vector u = resolvent_solve(problem.op, m.z, problem.transformed_rhs(m.z)).x;
  return (u * m.dz).norm() / (2.0 * kPi);
}

TruncationResult truncation_fixed_point(const LaplaceProblem& problem, const ContourParams& p,
                                        double t, double tol, double prec, double K_init) {
  if (!(prec > 0.0) || !(K_init > 0.0)) {
    throw std::invalid_argument("fixed point needs prec > 0 and K_init > 0");
  }
  double K = K_init;
  for (int it = 1; it <= kMaxFixedPointIterations; ++it) {
    const double c = truncation_c_from_K(p, K, t, tol, it <= kClampedIterations);
    const double K_next = scaled_transform_norm(problem, p, c * kPi);
    if (std::abs(K_next - K) < prec) return {c, K_next, it};
    K = K_next;
  }
  throw ConvergenceError("truncation fixed point did not converge in " +
                         std::to_string(kMaxFixedPointIterations) + " iterations");
}

double stability_constant(const ContourParams& p, double c, double t) {
  return 2.0 * p.a2 * c * std::exp((p.a1 + p.a2 + p.A3) * t);
}

double stability_constant_loose(const ContourParams& p, double c, double t) {
  return c * (p.A1 + p.A2) * std::exp((p.A1 + p.A3) * t);
}

FeasibilityVerdict feasibility_check(const LaplaceProblem& problem, const ContourParams& p,
                                     double c, double t, double tol) {
  constexpr int kSamples = 10;
  std::vector<double> cond(kSamples, 0.0);
  detail::parallel_for(kSamples, [&](std::size_t k) {
    const double x = -c * kPi + 2.0 * c * kPi * static_cast<double>(k) / (kSamples - 1);
    cond[k] = shifted_condition_number(problem.op, conformal_map(p, Complex(x, 0.0)).z);
  });
  FeasibilityVerdict v;
  v.max_condition = *std::max_element(cond.begin(), cond.end());
  v.stability = stability_constant(p, c, t);
  v.achievable = v.stability * kUnitRoundoff * v.max_condition;
  v.pass = v.achievable <= tol;
  return v;
}

double default_z_l(double t) {
  if (!(t > 0.0)) throw std::invalid_argument("default z_l needs t > 0");
  return std::ceil(std::log(1e-18) / t);
}

double default_z_r(double real_crossing, std::span<const Complex> source_singularities) {
  double x = real_crossing;
  for (const Complex& s : source_singularities) x = std::max(x, s.real());
  return x + 0.01;
}

void write_contour_csv(const ContourParams& p, double y, double x_min, double x_max, int n_pts,
                       const std::string& path) {
  if (n_pts < 2) throw std::invalid_argument("contour export needs at least 2 points");
  auto out = detail::open_output(path);
  out << "x,re,im\n";
  for (int k = 0; k < n_pts; ++k) {
    const double x = x_min + (x_max - x_min) * k / (n_pts - 1);
    const Complex z = conformal_map(p, Complex(x, y)).z;
    out << detail::sci(x) << ',' << detail::sci(z.real()) << ',' << detail::sci(z.imag()) << '\n';
  }
}

}  // namespace lapinv
