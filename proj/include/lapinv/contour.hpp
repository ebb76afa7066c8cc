#pragma once

// Elliptic integration contours: the bounding ellipse Γ₊ built from the
// singularity set, the one-parameter family z(w) = a1 e^{-iw} + a2 e^{iw} + A3,
// the choice of the strip half-height a, the truncation fixed point, and the
// stability and feasibility diagnostics.

#include <string>

#include "lapinv/numerics.hpp"
#include "lapinv/problem.hpp"
#include "lapinv/pseudospectra.hpp"

namespace lapinv {

/// How build_inner_ellipse picked the passing point.
enum class EllipseCase {
  kCircleFails,      ///< (v): the starting circle misses a point; r is pushed above it
  kFirstCandidate,   ///< (ii): the circle encloses Φ but the first candidate does not
  kInterior,         ///< (iii): the sweep stopped at an interior candidate
  kAllCandidates,    ///< (iv): every candidate encloses Φ; d = z_l
};

const char* to_string(EllipseCase c) noexcept;

/// Ellipse centred at z_l through z_r and d + ir. Semi-axes A = z_r - z_l
/// (horizontal) and semi_minor (vertical).
struct InnerEllipse {
  double z_l = 0.0;
  double z_r = 0.0;
  double d = 0.0;
  double r = 0.0;
  double w_tilde = 0.0;  ///< arccos((d - z_l)/(z_r - z_l))
  double semi_minor = 0.0;
  EllipseCase which = EllipseCase::kAllCandidates;
  int stop_index = 0;  ///< partition index of the accepted focus, 0 for the circle
  int m_ell = 0;

  double semi_major() const noexcept { return z_r - z_l; }
  /// ((Re p - z_l)/A)² + (Im p/B)²; ≤ 1 means enclosed.
  double quadratic_form(Complex p) const noexcept;
};

/// Inside-or-on test for the candidate centred at z_l through z_r with right
/// focus at focus_x.
bool candidate_encloses(double z_l, double z_r, double focus_x, Complex p);

/// Shrinks the circle of radius z_r - z_l around z_l to the flattest candidate
/// that still encloses Φ. Points with Re < z_l are ignored (only the right half
/// of the ellipse is used). Throws GeometryError when z_l >= z_r, when Φ is
/// empty, or when a point lies right of z_r.
InnerEllipse build_inner_ellipse(const SingularitySet& phi, double z_l, double z_r,
                                 int m_ell = 1000);

/// Parameters of Γ for one value of a. A1 = a1 + a2 and A2 = a2 - a1 are the
/// semi-axes of the integration ellipse (y = 0).
struct ContourParams {
  double a = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double A3 = 0.0;
  double A1 = 0.0;
  double A2 = 0.0;
  double D = 0.0;  ///< right vertex of the image of y = -a
};

struct MappedPoint {
  Complex z;
  Complex dz;
};

/// z(w) and z'(w).
MappedPoint conformal_map(const ContourParams& p, Complex w);

/// Throws GeometryError when a1 <= 0 (the foci would not be real) and
/// std::invalid_argument unless a > 0.
ContourParams contour_from_a(const InnerEllipse& inner, double a);

/// (1/(2a))(D(a)t - log(tol/π)).
double objective(const InnerEllipse& inner, double a, double t, double tol);

/// Bounded Brent minimization of `objective` over (0, a_max].
ContourParams optimize_a(const InnerEllipse& inner, double t, double tol, double a_max = 1.0);

/// ceil((c/a)(Dt - log(tol/(2πc)))).
int predicted_nodes(double a, double c, double D, double t, double tol);

struct TruncationResult {
  double c = 0.0;
  double K = 0.0;
  int iterations = 0;
};

/// c = (1/π) arccos(log(tol/K)/(A1 t) - A3/A1). With clamp, an argument outside
/// [-1, 1] is pulled to ±(1 - 1e-12); otherwise it raises DomainError.
double truncation_c_from_K(const ContourParams& p, double K, double t, double tol,
                           bool clamp = false);

/// (1/2π)‖û(z(x)) z'(x)‖ for real x on Γ.
double scaled_transform_norm(const LaplaceProblem& problem, const ContourParams& p, double x);

/// Fixed point for (c, K). The arccos argument is clamped on the first two
/// iterations only; ConvergenceError after 50 iterations.
TruncationResult truncation_fixed_point(const LaplaceProblem& problem, const ContourParams& p,
                                        double t, double tol, double prec = 0.1,
                                        double K_init = 100.0);

/// 2 a2 c e^{(a1 + a2 + z_l)t}.
double stability_constant(const ContourParams& p, double c, double t);
/// c(A1 + A2) e^{(A1 + A3)t}; algebraically the same value.
double stability_constant_loose(const ContourParams& p, double c, double t);

struct FeasibilityVerdict {
  bool pass = false;
  double achievable = 0.0;  ///< stability constant × unit roundoff × max cond
  double max_condition = 0.0;
  double stability = 0.0;
};

/// Samples cond(z(x)I - A) at 10 points of [-cπ, cπ].
FeasibilityVerdict feasibility_check(const LaplaceProblem& problem, const ContourParams& p,
                                     double c, double t, double tol);

/// ceil(log(1e-18)/t).
double default_z_l(double t);

/// Right vertex: the ε-crossing on the real axis or the rightmost source
/// singularity, whichever is further right, plus 0.01.
double default_z_r(double real_crossing, std::span<const Complex> source_singularities);

/// CSV "x,re,im" of z(x + iy) for x in [x_min, x_max].
void write_contour_csv(const ContourParams& p, double y, double x_min, double x_max, int n_pts,
                       const std::string& path);

}  // namespace lapinv
