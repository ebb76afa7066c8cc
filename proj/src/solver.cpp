#include "lapinv/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "lapinv/errors.hpp"
#include "parallel.hpp"

namespace lapinv {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename Fn>
auto run_stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

void guard_singularities(const LaplaceProblem& problem, Complex z) {
  for (const Complex& s : problem.singularities()) {
    if (std::abs(z - s) < kSingularityGuard) {
      throw SingularSystemError("contour point (" + std::to_string(z.real()) + ", " +
                                std::to_string(z.imag()) + ") lies on a source singularity");
    }
  }
}

// Resolvent solves through a Schur form computed once; used for the sampled
// diagnostics (Δ, K_ℓ, M±, S₋), where hundreds of shifts share one operator.
class DiagnosticSolver {
 public:
  explicit DiagnosticSolver(const LaplaceProblem& problem) : problem_(problem) {
    Eigen::ComplexSchur<Matrix> schur(problem.op.matrix(), true);
    if (schur.info() != Eigen::Success) throw ConvergenceError("complex Schur decomposition failed");
    q_ = schur.matrixU();
    t_ = schur.matrixT();
  }

  /// ‖û(z) z'‖.
  double transform_norm(Complex z, Complex dz) const {
    guard_singularities(problem_, z);
    Matrix r = -t_;
    r.diagonal().array() += z;
    const Vector rhs = q_.adjoint() * problem_.transformed_rhs(z);
    const Vector y = r.triangularView<Eigen::Upper>().solve(rhs);
    if (!y.allFinite()) throw SingularSystemError("diagnostic solve hit a singular shift");
    return y.norm() * std::abs(dz);
  }

 private:
  const LaplaceProblem& problem_;
  Matrix q_;
  Matrix t_;
};

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

double delta_from_solver(const DiagnosticSolver& ds, const ContourParams& p, double c, int N) {
  const double x = kPi / 2.0 - b_delta(c, N);
  const std::vector<double> ys = linspace(-p.a, p.a, 32);
  std::vector<double> vals(ys.size() * 2, 0.0);
  detail::parallel_for(vals.size(), [&](std::size_t k) {
    const double sign = k % 2 == 0 ? 1.0 : -1.0;
    const MappedPoint m = conformal_map(p, Complex(sign * x, ys[k / 2]));
    vals[k] = ds.transform_norm(m.z, m.dz);
  });
  return 2.0 * *std::max_element(vals.begin(), vals.end());
}

// max over x of ‖e^{z t} û z'‖/(2π) on the line Im w = y.
double line_max(const DiagnosticSolver& ds, const ContourParams& p, double t, double y,
                const std::vector<double>& xs) {
  std::vector<double> vals(xs.size(), 0.0);
  detail::parallel_for(xs.size(), [&](std::size_t k) {
    const MappedPoint m = conformal_map(p, Complex(xs[k], y));
    vals[k] = std::exp(m.z.real() * t) * ds.transform_norm(m.z, m.dz) / (2.0 * kPi);
  });
  return vals.empty() ? 0.0 : *std::max_element(vals.begin(), vals.end());
}

// Σ over evaluated nodes in ascending j.
Vector assemble(const ContourParams& p, double c, double t, int N, bool full_sum,
                const std::vector<int>& indices, const std::vector<double>& nodes,
                const std::vector<Vector>& values, Index dim) {
  if (full_sum) {
    Vector sum = Vector::Zero(dim);
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const Complex z = conformal_map(p, Complex(nodes[k], 0.0)).z;
      sum += std::exp(z * t) * values[k];
    }
    return Complex(0.0, -c / N) * sum;
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const Complex z = conformal_map(p, Complex(nodes[k], 0.0)).z;
    const double w = 2 * indices[k] == N ? 0.5 : 1.0;
    sum += w * (std::exp(z * t) * values[k]).imag();
  }
  return ((2.0 * c / N) * sum).cast<Complex>();
}

void evaluate_nodes(const LaplaceProblem& problem, const ContourParams& p,
                    const std::vector<double>& xs, std::vector<Vector>& out,
                    const std::vector<std::size_t>& which) {
  detail::parallel_for(which.size(), [&](std::size_t k) {
    out[which[k]] = node_value(problem, p, xs[which[k]]);
  });
}

double norm_inf(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

Vector node_value(const LaplaceProblem& problem, const ContourParams& p, double x) {
  const MappedPoint m = conformal_map(p, Complex(x, 0.0));
  guard_singularities(problem, m.z);
  return resolvent_solve(problem.op, m.z, problem.transformed_rhs(m.z)).x * m.dz;
}

Vector integrand(const LaplaceProblem& problem, const ContourParams& p, Complex w, double t) {
  const MappedPoint m = conformal_map(p, w);
  guard_singularities(problem, m.z);
  const Vector u = resolvent_solve(problem.op, m.z, problem.transformed_rhs(m.z)).x;
  return std::exp(m.z * t) * u * m.dz;
}

double node_abscissa(double c, int N, int j) {
  return c * kPi * (static_cast<double>(2 * j) / static_cast<double>(N) - 1.0);
}

QuadratureResult trapezoid_sum(const LaplaceProblem& problem, const ContourParams& p, double c,
                               double t, int N) {
  if (N < 2) throw std::invalid_argument("trapezoid_sum needs N >= 2");
  if (!(c > 0.0 && c <= 0.5)) throw std::invalid_argument("trapezoid_sum needs c in (0, 1/2]");
  QuadratureResult r;
  r.N = N;
  r.c = c;
  r.t = t;
  r.full_sum = !problem.is_real();
  const int first = r.full_sum ? 1 : (N + 1) / 2;
  for (int j = first; j <= N - 1; ++j) {
    r.indices.push_back(j);
    r.nodes.push_back(node_abscissa(c, N, j));
  }
  r.node_values.resize(r.nodes.size());
  std::vector<std::size_t> all(r.nodes.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  evaluate_nodes(problem, p, r.nodes, r.node_values, all);
  r.new_solves = static_cast<int>(all.size());
  r.approx = assemble(p, c, t, N, r.full_sum, r.indices, r.nodes, r.node_values, problem.dim());
  r.est_error = error_model(p, c, t, N);
  return r;
}

QuadratureResult refine_doubling(const QuadratureResult& prev, const LaplaceProblem& problem,
                                 const ContourParams& p) {
  if (prev.N < 2 || prev.indices.size() != prev.node_values.size()) {
    throw std::invalid_argument("refine_doubling needs a valid previous result");
  }
  QuadratureResult r;
  r.N = 2 * prev.N;
  r.c = prev.c;
  r.t = prev.t;
  r.full_sum = prev.full_sum;
  const int first = r.full_sum ? 1 : (r.N + 1) / 2;
  std::vector<std::size_t> fresh;
  std::size_t old = 0;
  while (old < prev.indices.size() && 2 * prev.indices[old] < first) ++old;
  for (int j = first; j <= r.N - 1; ++j) {
    r.indices.push_back(j);
    if (j % 2 == 0) {
      if (old >= prev.indices.size() || 2 * prev.indices[old] != j) {
        throw std::logic_error("refine_doubling: previous node set is incomplete");
      }
      r.nodes.push_back(prev.nodes[old]);
      r.node_values.push_back(prev.node_values[old]);
      ++old;
    } else {
      r.nodes.push_back(node_abscissa(r.c, r.N, j));
      r.node_values.emplace_back();
      fresh.push_back(r.nodes.size() - 1);
    }
  }
  evaluate_nodes(problem, p, r.nodes, r.node_values, fresh);
  r.new_solves = static_cast<int>(fresh.size());
  r.approx =
      assemble(p, r.c, r.t, r.N, r.full_sum, r.indices, r.nodes, r.node_values, problem.dim());
  r.est_error = error_model(p, r.c, r.t, r.N);
  return r;
}

double error_model(const ContourParams& p, double c, double t, int N) {
  return 2.0 * kPi * c * std::exp(p.D * t - (p.a / c) * N);
}

double b_delta(double c, int N) {
  const double xi = c * kPi;
  const double eta = xi / N;
  const double k = std::max(0.0, std::floor((kPi / 2.0 - xi - eta) / (2.0 * eta)));
  return kPi / 2.0 - (2.0 * k + 1.0) * eta - xi;
}

double b_term(const ContourParams& p, double c, double t, int N, double Delta) {
  const double delta = b_delta(c, N);
  const double outer = p.a1 * std::exp(-p.a) + p.a2 * std::exp(p.a);
  return Delta * (2.0 * c * std::log(2.0)) / (N * kPi) *
         std::exp((outer * std::cos(kPi / 2.0 - delta) + p.A3) * t);
}

double estimate_delta(const LaplaceProblem& problem, const ContourParams& p, double c, int N) {
  const DiagnosticSolver ds(problem);
  return delta_from_solver(ds, p, c, N);
}

RigorousBound rigorous_error_bound(const LaplaceProblem& problem, const ContourParams& p, double c,
                                   double t, int N, double tol) {
  const DiagnosticSolver ds(problem);
  const double edge = c * kPi + c * kPi / N;
  RigorousBound b;
  b.M_plus = line_max(ds, p, t, p.a, linspace(-kPi / 2.0, kPi / 2.0, 64));
  b.M_minus = line_max(ds, p, t, -p.a, linspace(-std::min(edge, kPi / 2.0), std::min(edge, kPi / 2.0), 64));
  if (edge < kPi / 2.0) {
    std::vector<double> xs = linspace(edge, kPi / 2.0, 32);
    for (int k = 0; k < 32; ++k) xs.push_back(-xs[static_cast<std::size_t>(k)]);
    b.S_minus = line_max(ds, p, t, -p.a, xs);
  }
  b.Delta = delta_from_solver(ds, p, c, N);
  b.B = b_term(p, c, t, N, b.Delta);
  const double head = 2.0 * kPi * c * (1.0 + 1.0 / N) * b.M_minus +
                      2.0 * std::max(0.0, kPi / 2.0 - c * kPi - c * kPi / N) * b.S_minus +
                      kPi * b.M_plus;
  b.value = head / std::expm1((p.a / c) * N) +
            4.0 * (kPi / 2.0 - c * kPi + c * kPi / (2.0 * N)) * tol + b.B;
  return b;
}

double estimate_K_ell(const LaplaceProblem& problem, const ContourParams& p) {
  const DiagnosticSolver ds(problem);
  std::vector<double> s{0.0};
  for (int k = 0; k < 31; ++k) s.push_back(std::pow(10.0, -2.0 + 6.0 * k / 30.0));
  std::vector<double> vals(s.size() * 2, 0.0);
  detail::parallel_for(vals.size(), [&](std::size_t k) {
    const double sk = s[k / 2];
    const double sign = k % 2 == 0 ? 1.0 : -1.0;
    // ℓ₂ leaves z(π/2) = A3 + iA2 up and to the left with slope 1; ℓ₁ is its mirror.
    const Complex z(p.A3 - sk, sign * (p.A2 + sk));
    const Complex dz(-1.0, sign);
    vals[k] = ds.transform_norm(z, dz);
  });
  return 2.0 * *std::max_element(vals.begin(), vals.end());
}

double truncation_bound(const ContourParams& p, double c, double t, double K_ell, double tol) {
  return K_ell * std::exp(p.A3 * t) / (kPi * t) + (0.5 - c) * tol;
}

EllipseSetup build_ellipse_setup(const LaplaceProblem& problem, double t, const SolveOptions& opts) {
  if (!(t > 0.0)) throw StageError("setup", "time must be positive");
  if (!(opts.eps1 > opts.eps2 && opts.eps2 > 0.0)) {
    throw StageError("setup", "need eps1 > eps2 > 0");
  }
  EllipseSetup s;
  const std::vector<Complex> sings = problem.singularities();
  s.eigenvalues = run_stage("eigenvalues", [&] { return eigenvalues(problem.op); });
  s.z_l = opts.z_l ? *opts.z_l : default_z_l(t);
  s.z_r = run_stage("pseudospectra", [&] {
    if (opts.z_r) return *opts.z_r;
    return default_z_r(rightmost_real_crossing(problem.op, s.eigenvalues, 1e-9), sings);
  });
  if (!(s.z_l < s.z_r)) {
    throw StageError("ellipse", "z_l = " + std::to_string(s.z_l) + " is not left of z_r = " +
                                    std::to_string(s.z_r));
  }
  run_stage("pseudospectra", [&] {
    GridSpec spec{s.z_l, s.z_r, -opts.y_max, opts.y_max, opts.grid_points};
    s.grid = compute_grid(problem.op, spec);
    s.weighted = level_curve(s.grid, opts.eps1, t);
    s.unweighted = level_curve(s.grid, opts.eps2, 0.0);
    s.critical = critical_curve(s.weighted, s.unweighted);
    return 0;
  });
  run_stage("ellipse", [&] {
    s.phi = assemble_singularities(s.critical, s.eigenvalues, sings, s.z_l);
    s.inner = build_inner_ellipse(s.phi, s.z_l, s.z_r, opts.m_ell);
    return 0;
  });
  return s;
}

SolveReport solve(const LaplaceProblem& problem, double t, double tol, const SolveOptions& opts) {
  run_stage("validate", [&] {
    problem.validate();
    if (!(t > 0.0) || !(tol > 0.0)) throw std::invalid_argument("need t > 0 and tol > 0");
    return 0;
  });
  const EllipseSetup setup = build_ellipse_setup(problem, t, opts);
  return solve_with_ellipse(problem, setup.inner, t, tol, opts);
}

SolveReport solve_with_ellipse(const LaplaceProblem& problem, const InnerEllipse& inner, double t,
                               double tol, const SolveOptions& opts) {
  SolveReport rep;
  rep.problem = problem.name;
  rep.t = t;
  rep.tol = tol;
  rep.z_l = inner.z_l;
  rep.z_r = inner.z_r;
  rep.inner = inner;
  rep.contour = run_stage("contour", [&] { return optimize_a(inner, t, tol); });
  rep.truncation = run_stage("truncation", [&] {
    return truncation_fixed_point(problem, rep.contour, t, tol, opts.prec, opts.K_init);
  });
  rep.resolvent_solves = rep.truncation.iterations;
  if (rep.truncation.c > 0.5) {
    rep.warnings.push_back("|G| stays above tol on the whole half ellipse (c = " +
                           std::to_string(rep.truncation.c) + "); c capped at 1/2");
  }
  const double c = std::min(rep.truncation.c, 0.5);
  rep.predicted_nodes = predicted_nodes(rep.contour.a, c, rep.contour.D, t, tol);
  rep.stability = stability_constant(rep.contour, c, t);
  rep.feasibility =
      run_stage("feasibility", [&] { return feasibility_check(problem, rep.contour, c, t, tol); });
  if (!rep.feasibility.pass) {
    rep.warnings.push_back("tol " + std::to_string(tol) + " is below the achievable precision " +
                           std::to_string(rep.feasibility.achievable) + "; increase tol");
    if (!opts.override_feasibility) return rep;
  }

  std::optional<Vector> reference;
  if (opts.validate) {
    reference = run_stage("reference", [&] { return reference_solution(problem, t); });
  }

  run_stage("quadrature", [&] {
    int N = std::max(5, (rep.predicted_nodes + 3) / 4);
    if (N > opts.n_max) N = std::max(2, opts.n_max);
    QuadratureResult res = trapezoid_sum(problem, rep.contour, c, t, N);
    std::optional<DiagnosticSolver> ds;
    if (opts.diagnostics) ds.emplace(problem);
    int remaining = opts.extra_doublings;
    while (true) {
      rep.resolvent_solves += res.new_solves;
      ConvergenceRow row;
      row.N = res.N;
      row.model_error = res.est_error;
      row.measured_error = kNaN;
      row.measured_error_inf = kNaN;
      if (reference) {
        row.measured_error = (res.approx - *reference).norm();
        row.measured_error_inf = norm_inf(res.approx - *reference);
      }
      if (ds) res.B_term = b_term(rep.contour, c, t, res.N, delta_from_solver(*ds, rep.contour, c, res.N));
      row.B_term = res.B_term;
      rep.history.push_back(row);
      const double stop = reference ? row.measured_error : row.model_error;
      if (!rep.converged && stop <= tol) {
        rep.converged = true;
      } else if (rep.converged) {
        --remaining;
      }
      if ((rep.converged && remaining <= 0) || 2 * res.N > opts.n_max) break;
      res = refine_doubling(res, problem, rep.contour);
    }
    if (reference) {
      rep.reference_error = rep.history.back().measured_error;
      rep.reference_error_inf = rep.history.back().measured_error_inf;
    }
    rep.result = std::move(res);
    return 0;
  });
  if (!rep.converged) {
    rep.warnings.push_back("tolerance not reached with N <= " + std::to_string(opts.n_max));
  }

  if (opts.diagnostics) {
    run_stage("diagnostics", [&] {
      rep.K_ell = estimate_K_ell(problem, rep.contour);
      rep.truncation_bound = truncation_bound(rep.contour, c, t, rep.K_ell, tol);
      rep.bound = rigorous_error_bound(problem, rep.contour, c, t, rep.result->N, tol);
      // The tail of Γ beyond ±cπ is assumed negligible; check a few points.
      const DiagnosticSolver ds(problem);
      for (double x : linspace(c * kPi, kPi / 2.0, 5)) {
        if (x == c * kPi) continue;
        for (double sign : {1.0, -1.0}) {
          const MappedPoint m = conformal_map(rep.contour, Complex(sign * x, 0.0));
          const double g = std::exp(m.z.real() * t) * ds.transform_norm(m.z, m.dz) / (2.0 * kPi);
          if (g > tol) {
            rep.warnings.push_back("|G(" + std::to_string(sign * x) + ")| = " + std::to_string(g) +
                                   " exceeds tol beyond the truncation point");
          }
        }
      }
      return 0;
    });
  }
  return rep;
}

std::vector<ConvergenceRow> convergence_table(const LaplaceProblem& problem,
                                              const ContourParams& p, double c, double t,
                                              const std::vector<int>& Ns,
                                              const std::optional<Vector>& reference) {
  const DiagnosticSolver ds(problem);
  std::vector<ConvergenceRow> rows;
  for (int N : Ns) {
    const QuadratureResult r = trapezoid_sum(problem, p, c, t, N);
    ConvergenceRow row;
    row.N = N;
    row.model_error = r.est_error;
    row.measured_error = reference ? (r.approx - *reference).norm() : kNaN;
    row.measured_error_inf = reference ? norm_inf(r.approx - *reference) : kNaN;
    row.B_term = b_term(p, c, t, N, delta_from_solver(ds, p, c, N));
    rows.push_back(row);
  }
  return rows;
}

Vector NodeCache::get(const LaplaceProblem& problem, const ContourParams& p, double x,
                      bool* computed) {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = values_.find(x);
    if (it != values_.end()) {
      ++hits_;
      if (computed) *computed = false;
      return it->second;
    }
  }
  Vector v = node_value(problem, p, x);
  std::lock_guard<std::mutex> lock(mutex_);
  const auto [it, inserted] = values_.emplace(x, std::move(v));
  if (inserted) {
    ++solves_;
  } else {
    ++hits_;
  }
  if (computed) *computed = inserted;
  return it->second;
}

int NodeCache::solves() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return solves_;
}

int NodeCache::hits() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return hits_;
}

double TimeWindowPlan::K_at(double t) const {
  if (t1 == t0) return at_t0.K;
  return at_t0.K + (at_t1.K - at_t0.K) * (t - t0) / (t1 - t0);
}

double TimeWindowPlan::c_at(double t) const {
  return truncation_c_from_K(contour, K_at(t), t, tol);
}

TimeWindowPlan plan_window(const LaplaceProblem& problem, double t0, double t1, double tol,
                           const SolveOptions& opts) {
  if (!(t0 > 0.0) || !(t1 >= t0)) throw StageError("window", "need 0 < t0 <= t1");
  if (!(tol > 0.0)) throw StageError("window", "need tol > 0");
  TimeWindowPlan plan;
  plan.t0 = t0;
  plan.t1 = t1;
  plan.tol = tol;
  const EllipseSetup setup = build_ellipse_setup(problem, t0, opts);
  plan.z_l = setup.z_l;
  plan.z_r = setup.z_r;
  plan.inner = setup.inner;
  plan.contour = run_stage("contour", [&] { return optimize_a(plan.inner, t1, tol); });
  run_stage("truncation", [&] {
    plan.at_t0 = truncation_fixed_point(problem, plan.contour, t0, tol, opts.prec, opts.K_init);
    plan.at_t1 = truncation_fixed_point(problem, plan.contour, t1, tol, opts.prec, opts.K_init);
    return 0;
  });
  plan.n_int = static_cast<int>(std::ceil(objective(plan.inner, plan.contour.a, t1, tol)));
  plan.h = kPi / plan.n_int;
  plan.cache = std::make_shared<NodeCache>();
  return plan;
}

SolveReport solve_at(const TimeWindowPlan& plan, const LaplaceProblem& problem, double t,
                     const SolveOptions& opts) {
  const double slack = 1e-12 * plan.t1;
  if (!(t >= plan.t0 - slack && t <= plan.t1 + slack)) {
    throw StageError("window", "t = " + std::to_string(t) + " outside [t0, t1]");
  }
  if (!plan.cache) throw StageError("window", "plan has no node cache");
  SolveReport rep;
  rep.problem = problem.name;
  rep.t = t;
  rep.tol = plan.tol;
  rep.z_l = plan.z_l;
  rep.z_r = plan.z_r;
  rep.inner = plan.inner;
  rep.contour = plan.contour;
  const double K_t = plan.K_at(t);
  const double c_t = run_stage("truncation", [&] { return plan.c_at(t); });
  rep.truncation = TruncationResult{c_t, K_t, 0};
  rep.predicted_nodes = predicted_nodes(plan.contour.a, c_t, plan.contour.D, t, plan.tol);
  rep.stability = stability_constant(plan.contour, c_t, t);
  rep.feasibility = run_stage(
      "feasibility", [&] { return feasibility_check(problem, plan.contour, c_t, t, plan.tol); });
  if (!rep.feasibility.pass) {
    rep.warnings.push_back("tol is below the achievable precision");
    if (!opts.override_feasibility) return rep;
  }
  std::optional<Vector> reference;
  if (opts.validate) {
    reference = run_stage("reference", [&] { return reference_solution(problem, t); });
  }
  const bool full = !problem.is_real();

  run_stage("quadrature", [&] {
    double h = plan.h;
    while (true) {
      int M = static_cast<int>(std::floor(c_t * kPi / h));
      M = std::min(M, static_cast<int>(std::floor(kPi / (2.0 * h))) - 1);
      M = std::max(M, 0);
      QuadratureResult r;
      r.N = 2 * (M + 1);
      r.c = (M + 1) * h / kPi;
      r.t = t;
      r.full_sum = full;
      for (int m = full ? -M : 0; m <= M; ++m) {
        r.indices.push_back(m + M + 1);
        r.nodes.push_back(m * h);
      }
      r.node_values.resize(r.nodes.size());
      std::vector<char> fresh(r.nodes.size(), 0);
      detail::parallel_for(r.nodes.size(), [&](std::size_t k) {
        bool computed = false;
        r.node_values[k] = plan.cache->get(problem, plan.contour, r.nodes[k], &computed);
        fresh[k] = computed ? 1 : 0;
      });
      r.new_solves = static_cast<int>(std::count(fresh.begin(), fresh.end(), 1));
      rep.resolvent_solves += r.new_solves;
      rep.reused_solves += static_cast<int>(r.nodes.size()) - r.new_solves;
      r.approx = assemble(plan.contour, r.c, t, r.N, full, r.indices, r.nodes, r.node_values,
                          problem.dim());
      r.est_error = error_model(plan.contour, r.c, t, r.N);
      ConvergenceRow row{r.N, kNaN, kNaN, r.est_error, 0.0};
      if (reference) {
        row.measured_error = (r.approx - *reference).norm();
        row.measured_error_inf = norm_inf(r.approx - *reference);
      }
      rep.history.push_back(row);
      const double stop = reference ? row.measured_error : row.model_error;
      rep.converged = stop <= plan.tol;
      const bool can_refine = 2 * r.N <= opts.n_max;
      rep.result = std::move(r);
      if (rep.converged || !can_refine) break;
      h *= 0.5;
    }
    if (reference) {
      rep.reference_error = rep.history.back().measured_error;
      rep.reference_error_inf = rep.history.back().measured_error_inf;
    }
    return 0;
  });
  if (opts.diagnostics) {
    run_stage("diagnostics", [&] {
      const double ce = rep.result->c;
      const int N = rep.result->N;
      rep.result->B_term = b_term(plan.contour, ce, t, N, estimate_delta(problem, plan.contour, ce, N));
      rep.history.back().B_term = rep.result->B_term;
      rep.K_ell = estimate_K_ell(problem, plan.contour);
      rep.truncation_bound = truncation_bound(plan.contour, ce, t, rep.K_ell, plan.tol);
      return 0;
    });
  }
  if (!rep.converged) rep.warnings.push_back("tolerance not reached on the window lattice");
  return rep;
}

}  // namespace lapinv
