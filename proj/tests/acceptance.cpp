// Acceptance run: one PASS/FAIL line per criterion, exit status = number of
// failures. Every check runs at its stated tolerance.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "lapinv/solver.hpp"

namespace {

using namespace lapinv;

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [violated]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string sci(double v) { return fmt("%.3e", v); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Run {
  std::string label;
  LaplaceProblem problem;
  double t = 0.0;
  double tol = 0.0;
  SolveReport report;
};

Run run_solve(std::string label, LaplaceProblem problem, double t, double tol, SolveOptions opts) {
  const auto t0 = std::chrono::steady_clock::now();
  Run r{std::move(label), std::move(problem), t, tol, {}};
  r.report = solve(r.problem, t, tol, opts);
  std::printf("  run %-10s N=%d a=%.4f c=%.4f K=%.4g err=%s bound=%s (%.1f s)\n", r.label.c_str(),
              r.report.result ? r.report.result->N : 0, r.report.contour.a, r.report.truncation.c,
              r.report.truncation.K, sci(r.report.reference_error.value_or(NAN)).c_str(),
              sci(r.report.bound ? r.report.bound->value : NAN).c_str(), seconds_since(t0));
  std::fflush(stdout);
  return r;
}

// |G(cπ)| = (1/2π)‖û(z(cπ)) z'(cπ)‖ e^{Re z(cπ) t}.
double g_at_truncation(const LaplaceProblem& p, const ContourParams& cp, double c, double t) {
  const double x = c * kPi;
  return scaled_transform_norm(p, cp, x) * std::exp(conformal_map(cp, Complex(x, 0.0)).z.real() * t);
}

// Least-squares slope of y against x.
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

SolveOptions box(double z_l, double z_r) {
  SolveOptions o;
  o.z_l = z_l;
  o.z_r = z_r;
  return o;
}

Outcome criterion1(const Run& cd, double runtime) {
  Outcome o;
  const SolveReport& r = cd.report;
  o.require(std::abs(r.contour.a - 0.4543) <= 0.05, "a=" + fmt("%.4f", r.contour.a) + " (0.4543±0.05)");
  o.require(std::abs(r.truncation.c - 0.3160) <= 0.05,
            "c=" + fmt("%.4f", r.truncation.c) + " (0.3160±0.05)");
  o.require(r.truncation.K >= 0.2251 / 1.5 && r.truncation.K <= 0.2251 * 1.5,
            "K=" + fmt("%.4f", r.truncation.K) + " (0.2251 x/÷1.5)");
  o.require(r.truncation.iterations <= 5, "iterations=" + std::to_string(r.truncation.iterations));
  int hit = -1;
  for (const ConvergenceRow& row : r.history) {
    if (row.N <= 35 && row.measured_error <= cd.tol) {
      hit = row.N;
      break;
    }
  }
  o.require(hit > 0, "error<=5e-8 at N=" + std::to_string(hit) + " (<=35)");
  o.require(runtime <= 60.0, "runtime=" + fmt("%.1f", runtime) + " s");
  return o;
}

Outcome criterion2(const std::vector<const Run*>& bs) {
  Outcome o;
  for (const Run* run : bs) {
    const SolveReport& r = run->report;
    int first = -1;
    std::size_t k0 = r.history.size();
    for (std::size_t k = 0; k < r.history.size(); ++k) {
      if (r.history[k].measured_error <= run->tol) {
        first = r.history[k].N;
        k0 = k;
        break;
      }
    }
    o.require(first > 0 && first <= 40, run->label + ": tol reached at N=" + std::to_string(first));
    double floor = INFINITY;
    bool stable = k0 + 3 < r.history.size();
    for (std::size_t k = k0; k < r.history.size(); ++k) {
      floor = std::min(floor, r.history[k].measured_error);
      if (k > k0 && r.history[k].measured_error >
                        r.history[k - 1].measured_error + r.feasibility.achievable) {
        stable = false;
      }
    }
    o.require(floor <= 1e-9, run->label + ": floor=" + sci(floor) + " (<=1e-9; feasibility " +
                                 sci(r.feasibility.achievable) + ")");
    o.require(stable, run->label + ": no increase over 3 doublings");
  }
  return o;
}

Outcome criterion3(const std::vector<const Run*>& runs) {
  Outcome o;
  for (const Run* run : runs) {
    const ContourParams& p = run->report.contour;
    const TruncationResult tr = truncation_fixed_point(run->problem, p, run->t, run->tol, 0.1, 100.0);
    const double g = g_at_truncation(run->problem, p, tr.c, run->t);
    o.require(tr.iterations <= 5 && g >= run->tol / 2 && g <= 2 * run->tol,
              run->label + ": it=" + std::to_string(tr.iterations) + " |G|/tol=" +
                  fmt("%.3f", g / run->tol));
  }
  return o;
}

Outcome criterion4(const Run& bs1, const std::vector<const Run*>& runs) {
  Outcome o;
  const double tol = 5e-3;
  const ContourParams p = optimize_a(bs1.report.inner, 1.0, tol);
  const TruncationResult tr = truncation_fixed_point(bs1.problem, p, 1.0, tol);
  const double b_unit = b_term(p, tr.c, 1.0, 5, 1.0);
  const double ratio = b_unit / 1.1431e-18;
  o.require(b_unit <= 1e-15 && ratio >= 1e-2 && ratio <= 1e2,
            "BS tol=5e-3 N=5: B=" + sci(b_unit) + " (reference 1.1431e-18, Δ=1; a=" +
                fmt("%.4f", p.a) + " c=" + fmt("%.4f", tr.c) + " δ=" + fmt("%.4f", b_delta(tr.c, 5)) + ")");
  for (const Run* run : runs) {
    const SolveReport& r = run->report;
    // The tabulated B carries no Δ factor; the Δ-weighted term is reported alongside.
    const double b = b_term(r.contour, r.truncation.c, run->t, 5, 1.0);
    const double delta = estimate_delta(run->problem, r.contour, r.truncation.c, 5);
    o.require(b < run->tol / 100, run->label + ": B(N=5)=" + sci(b) + " (Δ·B=" + sci(delta * b) +
                                      ", δ=" + fmt("%.4f", b_delta(r.truncation.c, 5)) + ")");
  }
  return o;
}

Outcome criterion5(const Run& coarse, const Run& fine) {
  Outcome o;
  const Vector diff = coarse.report.result->approx - fine.report.result->approx;
  const double d = diff.cwiseAbs().maxCoeff();
  o.require(d <= 1e-5, "|u25-u250|_inf=" + sci(d));
  o.require(coarse.report.converged && fine.report.converged, "both runs converged");
  return o;
}

Outcome criterion6(const std::vector<const Run*>& runs) {
  Outcome o;
  for (const Run* run : runs) {
    const SolveReport& r = run->report;
    const double c = r.truncation.c;
    std::vector<int> Ns;
    for (int N = 4; N <= 64; N += 2) Ns.push_back(N);
    const auto rows = convergence_table(run->problem, r.contour, c, run->t, Ns,
                                        reference_solution(run->problem, run->t));
    double floor = INFINITY;
    for (const ConvergenceRow& row : rows) floor = std::min(floor, row.measured_error);
    // Pre-plateau: from the first N to the first N within 100× of the floor.
    std::vector<double> xs, ys;
    for (const ConvergenceRow& row : rows) {
      if (row.measured_error <= 100.0 * floor) break;
      xs.push_back(row.N);
      ys.push_back(std::log10(row.measured_error));
    }
    const double expected = -(r.contour.a / c) / std::log(10.0);
    const double s = xs.size() >= 3 ? slope(xs, ys) : NAN;
    o.require(std::abs(s - expected) <= 0.3 * std::abs(expected),
              run->label + ": slope=" + fmt("%.4f", s) + " expected " + fmt("%.4f", expected) +
                  " over N<=" + std::to_string(xs.empty() ? 0 : static_cast<int>(xs.back())));
  }
  return o;
}

Outcome criterion7() {
  Outcome o;
  {
    const LaplaceProblem p = diagonal_problem({-1.0, -2.0}, {1.0, 1.0});
    const SolveReport r = solve(p, 1.0, 1e-11, SolveOptions{});
    const QuadratureResult q = trapezoid_sum(p, r.contour, r.truncation.c, 1.0, 40);
    const double e = std::max(std::abs(q.approx(0) - std::exp(-1.0)),
                              std::abs(q.approx(1) - std::exp(-2.0)));
    o.require(e <= 1e-10, "diag(-1,-2) N=40 err=" + sci(e));
  }
  for (const double lambda : {-0.5, -1.0, -3.0}) {
    const double u0 = 0.7, beta = 1.3, t = 1.0;
    const LaplaceProblem p = diagonal_problem({lambda}, {u0}, {beta});
    const SolveReport r = solve(p, t, 1e-11, SolveOptions{});
    const QuadratureResult q = trapezoid_sum(p, r.contour, r.truncation.c, t, 40);
    const double exact = u0 * std::exp(lambda * t) + beta * std::expm1(lambda * t) / lambda;
    const double e = std::abs(q.approx(0) - exact);
    o.require(e <= 1e-10, "scalar λ=" + fmt("%g", lambda) + " constant source err=" + sci(e));
  }
  return o;
}

Outcome criterion8(const std::vector<const Run*>& runs) {
  Outcome o;
  for (const Run* run : runs) {
    const SolveReport& r = run->report;
    for (const int N : {12, 13}) {
      const QuadratureResult coarse = trapezoid_sum(run->problem, r.contour, r.truncation.c, run->t, N);
      const QuadratureResult fine = refine_doubling(coarse, run->problem, r.contour);
      const QuadratureResult direct =
          trapezoid_sum(run->problem, r.contour, r.truncation.c, run->t, 2 * N);
      const double rel = (fine.approx - direct.approx).norm() / direct.approx.norm();
      bool identical = fine.nodes == direct.nodes;
      for (std::size_t k = 0; k < coarse.indices.size(); ++k) {
        const auto it = std::find(fine.indices.begin(), fine.indices.end(), 2 * coarse.indices[k]);
        identical = identical && it != fine.indices.end() &&
                    fine.node_values[static_cast<std::size_t>(it - fine.indices.begin())] ==
                        coarse.node_values[k];
      }
      // Conjugate symmetry halves the work on real data: N/2 new solves per doubling.
      const int expected = N / 2 + (N % 2 == 1 ? 1 : 0);
      o.require(rel <= 1e-14 && identical && fine.new_solves == expected,
                run->label + " N=" + std::to_string(N) + ": rel=" + sci(rel) + " new_solves=" +
                    std::to_string(fine.new_solves) + " (real data, expected " +
                    std::to_string(expected) + ")");
    }
  }
  // Complex data: the full sum is used and a doubling costs exactly N solves.
  const Run& base = *runs.front();
  const LaplaceProblem cplx = make_problem(base.problem.op, base.problem.u0 * Complex(1.0, 0.5) +
                                                                Vector::Constant(base.problem.dim(), Complex(0.0, 0.1)),
                                           base.problem.source, "complex-data");
  const SolveReport& r = base.report;
  const int N = 16;
  const QuadratureResult coarse = trapezoid_sum(cplx, r.contour, r.truncation.c, base.t, N);
  const QuadratureResult fine = refine_doubling(coarse, cplx, r.contour);
  const QuadratureResult direct = trapezoid_sum(cplx, r.contour, r.truncation.c, base.t, 2 * N);
  const double rel = (fine.approx - direct.approx).norm() / direct.approx.norm();
  o.require(rel <= 1e-14 && fine.new_solves == N,
            "complex data N=16: rel=" + sci(rel) + " new_solves=" + std::to_string(fine.new_solves));
  return o;
}

Outcome criterion9() {
  Outcome o;
  const LaplaceProblem p = black_scholes_problem({});
  SolveOptions opts = box(-40.0, 0.01);
  opts.validate = true;
  const double tol = 5e-8;
  const TimeWindowPlan plan = plan_window(p, 1.0, 10.0, tol, opts);
  int uses = 0;
  for (const double t : {1.0, 2.0, 5.0, 10.0}) {
    const SolveReport r = solve_at(plan, p, t, opts);
    const double err = r.reference_error.value_or(INFINITY);
    uses += r.result ? static_cast<int>(r.result->nodes.size()) : 0;
    const double k_lin = plan.at_t0.K + (plan.at_t1.K - plan.at_t0.K) * (t - 1.0) / 9.0;
    const double c_eq = truncation_c_from_K(plan.contour, k_lin, t, tol, true);
    o.require(err <= tol && std::abs(plan.K_at(t) - k_lin) <= 1e-12 * k_lin &&
                  std::abs(plan.c_at(t) - c_eq) <= 1e-14,
              "t=" + fmt("%g", t) + " err=" + sci(err) + " c_t=" + fmt("%.4f", plan.c_at(t)) +
                  " N=" + std::to_string(r.result ? r.result->N : 0));
  }
  const int unique = plan.cache->solves();
  o.require(unique + plan.cache->hits() == uses && plan.cache->hits() > 0,
            "unique solves=" + std::to_string(unique) + " reused=" +
                std::to_string(plan.cache->hits()) + " node uses=" + std::to_string(uses));
  return o;
}

Outcome criterion10(const std::vector<const Run*>& runs) {
  Outcome o;
  for (const Run* run : runs) {
    const SolveReport& r = run->report;
    bool valid = true;
    double worst = 0.0;
    for (const ConvergenceRow& row : r.history) {
      const double b = rigorous_error_bound(run->problem, r.contour, r.truncation.c, run->t, row.N,
                                            run->tol)
                           .value;
      valid = valid && b >= row.measured_error;
      worst = std::max(worst, row.measured_error / b);
    }
    const double tb = r.truncation_bound;
    o.require(valid && tb < run->tol, run->label + ": max err/bound=" + fmt("%.3f", worst) +
                                          " trunc bound=" + sci(tb));
  }
  return o;
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  std::printf("lapinv acceptance\n");

  auto t0 = clock::now();
  SolveOptions cd_opts = box(-40.0, 0.09);
  cd_opts.prec = 1e-2;
  cd_opts.validate = true;
  const Run cd = run_solve("cd", canonical_cd_problem(400.0, 63), 1.0, 5e-8, cd_opts);
  const double cd_runtime = seconds_since(t0);

  SolveOptions bs_opts = box(-40.0, 0.05);
  bs_opts.validate = true;
  bs_opts.extra_doublings = 3;
  const Run bs1 = run_solve("bs-t1", black_scholes_problem({}), 1.0, 5e-6, bs_opts);
  bs_opts = box(-4.0, 0.01);
  bs_opts.validate = true;
  bs_opts.extra_doublings = 3;
  const Run bs10 = run_solve("bs-t10", black_scholes_problem({}), 10.0, 5e-6, bs_opts);

  SolveOptions diag_opts;
  diag_opts.validate = true;
  const Run diag = run_solve("diag", diagonal_problem({-1.0, -2.0}, {1.0, 1.0}), 1.0, 1e-10, diag_opts);

  SolveOptions grid_opts = box(-40.0, 0.05);
  grid_opts.grid_points = 25;
  const Run g25 = run_solve("bs-grid25", black_scholes_problem({}), 1.0, 5e-6, grid_opts);
  grid_opts.grid_points = 250;
  const Run g250 = run_solve("bs-grid250", black_scholes_problem({}), 1.0, 5e-6, grid_opts);

  const std::vector<const Run*> all{&cd, &bs1, &bs10, &diag};
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"canonical CD reproduction", [&] { return criterion1(cd, cd_runtime); }},
      {"Black-Scholes t=1 and t=10", [&] { return criterion2({&bs1, &bs10}); }},
      {"Algorithm 1 convergence", [&] { return criterion3(all); }},
      {"term B", [&] { return criterion4(bs1, all); }},
      {"grid robustness", [&] { return criterion5(g25, g250); }},
      {"spectral rate", [&] { return criterion6({&cd, &bs1, &bs10}); }},
      {"oracle equivalence", [&] { return criterion7(); }},
      {"doubling reuse", [&] { return criterion8({&cd, &bs1}); }},
      {"time window", [&] { return criterion9(); }},
      {"bound validity", [&] { return criterion10(all); }},
  };

  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %2zu %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", k + 1,
                criteria[k].first.c_str(), seconds_since(start), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed (total %.1f s)\n", failures, criteria.size(),
              seconds_since(t0));
  return failures;
}
