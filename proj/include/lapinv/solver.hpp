#pragma once

// Trapezoidal quadrature on the elliptic contour, its error models, and the
// single-time and time-window pipelines.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "lapinv/contour.hpp"
#include "lapinv/problem.hpp"
#include "lapinv/pseudospectra.hpp"

namespace lapinv {

/// Minimum allowed distance between a node's z and a declared source singularity.
inline constexpr double kSingularityGuard = 1e-8;

/// e^{z t} û(z) z' at z = z(w); w may be complex (displaced lines x ± ia).
Vector integrand(const LaplaceProblem& problem, const ContourParams& p, Complex w, double t);

/// û(z(x)) z'(x) on Γ: the time-independent part of the integrand. Throws
/// SingularSystemError when z(x) is within kSingularityGuard of a source singularity.
Vector node_value(const LaplaceProblem& problem, const ContourParams& p, double x);

/// x_j = -cπ + j 2cπ/N.
double node_abscissa(double c, int N, int j);

struct QuadratureResult {
  int N = 0;
  double c = 0.0;
  double t = 0.0;
  Vector approx;
  bool full_sum = false;           ///< complex data: all j = 1..N-1 are evaluated
  std::vector<int> indices;        ///< j of every evaluated node, ascending
  std::vector<double> nodes;       ///< x_j
  std::vector<Vector> node_values; ///< û(z(x_j)) z'(x_j)
  double est_error = 0.0;          ///< error_model at N
  double B_term = 0.0;
  int new_solves = 0;              ///< resolvent solves spent producing this result
};

/// Real data: (2c/N) Im Σ_{j ≥ N/2} e^{z_j t} v_j, with the node x = 0 (even N)
/// weighted 1/2 so that the mirrored sum counts it once. Complex data:
/// (c/(iN)) Σ_{j=1}^{N-1} e^{z_j t} v_j. Summation is in ascending j.
QuadratureResult trapezoid_sum(const LaplaceProblem& problem, const ContourParams& p, double c,
                               double t, int N);

/// 2N-node result from `prev`; only the interleaved odd indices are solved.
QuadratureResult refine_doubling(const QuadratureResult& prev, const LaplaceProblem& problem,
                                 const ContourParams& p);

/// 2πc e^{Dt - (a/c)N}.
double error_model(const ContourParams& p, double c, double t, int N);

/// δ = π/2 - (2k+1)η - ξ with ξ = cπ, η = ξ/N, k = ⌊(π/2 - ξ - η)/(2η)⌋.
double b_delta(double c, int N);

/// Δ (2c log 2)/(Nπ) exp(((a1 e^{-a} + a2 e^{a}) cos(π/2 - δ) + A3) t).
double b_term(const ContourParams& p, double c, double t, int N, double Delta);

/// Bound on ‖û z'‖ on the vertical segment x = ±(π/2 - δ), |y| ≤ a: 32-sample
/// maximum times 2.
double estimate_delta(const LaplaceProblem& problem, const ContourParams& p, double c, int N);

struct RigorousBound {
  double M_plus = 0.0;
  double M_minus = 0.0;
  double S_minus = 0.0;
  double Delta = 0.0;
  double B = 0.0;
  double value = 0.0;
};

/// Assembles the quadrature error bound from 64-sample maxima of ‖G‖/(2π) on
/// the lines y = ±a.
RigorousBound rigorous_error_bound(const LaplaceProblem& problem, const ContourParams& p, double c,
                                   double t, int N, double tol);

/// Bound on ‖û z'‖ along the half-lines leaving Γ at ±π/2 with slope 1: 32-sample
/// maximum times 2.
double estimate_K_ell(const LaplaceProblem& problem, const ContourParams& p);

/// K_ℓ e^{z_l t}/(πt) + (1/2 - c) tol.
double truncation_bound(const ContourParams& p, double c, double t, double K_ell, double tol);

struct SolveOptions {
  std::optional<double> z_l;
  std::optional<double> z_r;
  double eps1 = 1e-9;
  double eps2 = 1e-13;
  int grid_points = 100;
  double y_max = 10.0;
  int m_ell = 1000;
  int n_max = 1024;
  double prec = 0.1;
  double K_init = 100.0;
  bool validate = false;              ///< stop on the measured error against the oracle
  bool override_feasibility = false;
  int extra_doublings = 0;            ///< keep doubling after convergence (stability studies)
  bool diagnostics = true;            ///< rigorous error bounds after the run
};

/// Output of the pseudospectral stage: box, curves, Φ and Γ₊.
struct EllipseSetup {
  double z_l = 0.0;
  double z_r = 0.0;
  std::vector<Complex> eigenvalues;
  PseudoGrid grid;
  LevelCurve weighted;    ///< ε₁ at time t
  LevelCurve unweighted;  ///< ε₂
  LevelCurve critical;
  SingularitySet phi;
  InnerEllipse inner;
};

/// z_l, z_r defaults, grid, critical curve and Γ₊ for time t.
EllipseSetup build_ellipse_setup(const LaplaceProblem& problem, double t, const SolveOptions& opts);

struct ConvergenceRow {
  int N = 0;
  double measured_error = 0.0;      ///< 2-norm against the oracle; NaN without one
  double measured_error_inf = 0.0;  ///< ∞-norm; NaN without one
  double model_error = 0.0;
  double B_term = 0.0;
};

struct SolveReport {
  std::string problem;
  double t = 0.0;
  double tol = 0.0;
  double z_l = 0.0;
  double z_r = 0.0;
  InnerEllipse inner;
  ContourParams contour;
  TruncationResult truncation;
  int predicted_nodes = 0;
  double stability = 0.0;
  FeasibilityVerdict feasibility;
  std::optional<QuadratureResult> result;
  std::optional<double> reference_error;
  std::optional<double> reference_error_inf;
  bool converged = false;
  double K_ell = 0.0;
  double truncation_bound = 0.0;
  std::optional<RigorousBound> bound;
  std::vector<ConvergenceRow> history;
  int resolvent_solves = 0;  ///< quadrature and fixed-point solves
  int reused_solves = 0;     ///< node values taken from a cache
  std::vector<std::string> warnings;
};

/// Full pipeline: pseudospectra → Γ₊ → a → (c, K) → feasibility → quadrature with
/// doubling until the stopping error meets tol or N would exceed n_max. Errors
/// are rethrown as StageError naming the failing stage. A failed feasibility
/// verdict without override returns a report with no result.
SolveReport solve(const LaplaceProblem& problem, double t, double tol,
                  const SolveOptions& opts = {});

/// Same pipeline from a prebuilt Γ₊.
SolveReport solve_with_ellipse(const LaplaceProblem& problem, const InnerEllipse& inner, double t,
                               double tol, const SolveOptions& opts = {});

/// Error table for an explicit list of N on a fixed contour and c; measured
/// columns need `reference` (NaN otherwise). B uses a Δ estimated per N.
std::vector<ConvergenceRow> convergence_table(const LaplaceProblem& problem,
                                              const ContourParams& p, double c, double t,
                                              const std::vector<int>& Ns,
                                              const std::optional<Vector>& reference);

/// Write-once cache of û(z(x)) z'(x) keyed by the exact abscissa. Thread safe.
class NodeCache {
 public:
  /// Returns the cached value or computes it; `computed` reports which.
  Vector get(const LaplaceProblem& problem, const ContourParams& p, double x, bool* computed);
  int solves() const;
  int hits() const;

 private:
  mutable std::mutex mutex_;
  std::map<double, Vector> values_;
  int solves_ = 0;
  int hits_ = 0;
};

/// One contour for all t in [t0, t1]. Nodes sit on the lattice x = m h shared by
/// every time, so resolvent solves are reused across times.
struct TimeWindowPlan {
  double t0 = 0.0;
  double t1 = 0.0;
  double tol = 0.0;
  double z_l = 0.0;
  double z_r = 0.0;
  InnerEllipse inner;
  ContourParams contour;
  TruncationResult at_t0;
  TruncationResult at_t1;
  int n_int = 0;  ///< ceil of the window objective at the optimum
  double h = 0.0; ///< π / n_int
  std::shared_ptr<NodeCache> cache;

  double K_at(double t) const;
  double c_at(double t) const;
};

/// Γ₊ at t0 (z_l from t0), a optimized against t1, fixed points at both ends.
TimeWindowPlan plan_window(const LaplaceProblem& problem, double t0, double t1, double tol,
                           const SolveOptions& opts = {});

/// Quadrature at t on the plan's lattice: M = ⌊c_t π/h⌋ nodes above zero, giving
/// N = 2(M+1) and c' = (M+1)h/π. In validate mode h is halved while the measured
/// error exceeds tol.
SolveReport solve_at(const TimeWindowPlan& plan, const LaplaceProblem& problem, double t,
                     const SolveOptions& opts = {});

/// Versioned key=value text followed by a [convergence] CSV block.
void write_report(const SolveReport& report, const std::string& path);

struct ParsedReport {
  std::map<std::string, std::string> values;
  std::vector<std::string> convergence_header;
  std::vector<std::vector<double>> convergence_rows;
};

ParsedReport read_report(const std::string& path);

}  // namespace lapinv
