#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>

#include <CLI11.hpp>

#include "lapinv/contour.hpp"
#include "lapinv/errors.hpp"
#include "lapinv/pseudospectra.hpp"

namespace lapinv::cli {

namespace {

std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string out_path(const RunConfig& c, const std::string& name) {
  std::filesystem::create_directories(c.out);
  return (std::filesystem::path(c.out) / name).string();
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

void write_solution(const RunConfig& config, const Vector& u, const std::string& path) {
  const std::vector<double> x = problem_coordinates(config, u.size());
  auto out = open_csv(path);
  out << "x,re,im\n";
  for (Index i = 0; i < u.size(); ++i) {
    out << sci(x[static_cast<std::size_t>(i)]) << ',' << sci(u(i).real()) << ','
        << sci(u(i).imag()) << '\n';
  }
}

void write_rows(const std::vector<ConvergenceRow>& rows, const std::string& path) {
  auto out = open_csv(path);
  out << "N,measured_error,model_error,B_term,measured_error_inf\n";
  for (const ConvergenceRow& r : rows) {
    out << r.N << ',' << sci(r.measured_error) << ',' << sci(r.model_error) << ','
        << sci(r.B_term) << ',' << sci(r.measured_error_inf) << '\n';
  }
}

double require_t(const RunConfig& c) {
  if (!c.t) throw std::invalid_argument("--t is required");
  if (!(*c.t > 0.0)) throw std::invalid_argument("--t must be positive");
  return *c.t;
}

}  // namespace

void RunConfig::validate_common() const {
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (!(eps1 > eps2 && eps2 > 0.0)) throw std::invalid_argument("need eps1 > eps2 > 0");
  if (grid < 8) throw std::invalid_argument("grid must be at least 8");
  if (n_max < 2) throw std::invalid_argument("nmax must be at least 2");
  if (!(y_max > 0.0)) throw std::invalid_argument("ymax must be positive");
}

SolveOptions RunConfig::solve_options() const {
  SolveOptions o;
  o.z_l = z_l;
  o.z_r = z_r;
  o.eps1 = eps1;
  o.eps2 = eps2;
  o.grid_points = grid;
  o.y_max = y_max;
  o.n_max = n_max;
  o.validate = validate;
  o.override_feasibility = override_feasibility;
  o.extra_doublings = extra_doublings;
  return o;
}

namespace {

LaplaceProblem make_builtin_or_file(const RunConfig& c) {
  if (c.problem == "canonical-cd") return canonical_cd_problem(c.cd_length, c.cd_degree);
  if (c.problem == "black-scholes") return black_scholes_problem(c.bs);
  if (c.problem == "diagonal") return diagonal_problem(c.diag_values, c.diag_u0, c.diag_source);
  if (c.problem == "file") {
    if (c.matrix.empty() || c.u0.empty()) {
      throw std::invalid_argument("problem 'file' needs --matrix and --u0");
    }
    return load_problem(c.matrix, c.u0, c.source);
  }
  throw std::invalid_argument("unknown problem '" + c.problem + "'");
}

}  // namespace

LaplaceProblem build_problem(const RunConfig& c) {
  try {
    return make_builtin_or_file(c);
  } catch (const std::exception& e) {
    throw StageError("parse", e.what());
  }
}

std::vector<double> problem_coordinates(const RunConfig& c, Index dim) {
  Eigen::VectorXd x;
  if (c.problem == "canonical-cd") x = canonical_cd_grid(c.cd_length, c.cd_degree);
  if (c.problem == "black-scholes") x = black_scholes_grid(c.bs);
  std::vector<double> out(static_cast<std::size_t>(dim));
  for (Index i = 0; i < dim; ++i) out[static_cast<std::size_t>(i)] = x.size() == dim ? x(i) : i;
  return out;
}

int cmd_solve(const RunConfig& config) {
  config.validate_common();
  const double t = require_t(config);
  const LaplaceProblem problem = build_problem(config);
  const SolveReport rep = solve(problem, t, config.tol, config.solve_options());
  write_report(rep, out_path(config, "report.txt"));
  write_rows(rep.history, out_path(config, "convergence.csv"));
  if (!rep.feasibility.pass && !config.override_feasibility) {
    std::cerr << "infeasible: tol = " << config.tol << " is below the achievable precision "
              << rep.feasibility.achievable << "; adjust tol or pass --override-feasibility\n";
    return kExitInfeasible;
  }
  write_solution(config, rep.result->approx, out_path(config, "solution.csv"));
  for (const std::string& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "N = " << rep.result->N << ", est_error = " << rep.result->est_error;
  if (rep.reference_error) std::cout << ", reference_error = " << *rep.reference_error;
  std::cout << '\n';
  if (!rep.converged) {
    std::cerr << "error: tolerance not reached\n";
    return kExitError;
  }
  return kExitOk;
}

int cmd_pseudo(const RunConfig& config) {
  config.validate_common();
  const double t = require_t(config);
  const LaplaceProblem problem = build_problem(config);
  const EllipseSetup s = build_ellipse_setup(problem, t, config.solve_options());
  write_grid_csv(s.grid, out_path(config, "grid.csv"));
  write_curve_csv(s.weighted, out_path(config, "curve_c1.csv"));
  write_curve_csv(s.unweighted, out_path(config, "curve_c2.csv"));
  write_curve_csv(s.critical, out_path(config, "critical.csv"));
  const ContourParams p = optimize_a(s.inner, t, config.tol);
  constexpr double half_pi = std::numbers::pi / 2.0;
  write_contour_csv(p, p.a, -half_pi, half_pi, 201, out_path(config, "gamma_plus.csv"));
  write_contour_csv(p, 0.0, -half_pi, half_pi, 201, out_path(config, "gamma.csv"));
  auto out = open_csv(out_path(config, "ellipse.txt"));
  out << "z_l=" << sci(s.z_l) << "\nz_r=" << sci(s.z_r) << "\nd=" << sci(s.inner.d)
      << "\nr=" << sci(s.inner.r) << "\ncase=" << to_string(s.inner.which)
      << "\nstop_index=" << s.inner.stop_index << "\na=" << sci(p.a) << '\n';
  std::cout << "d + ir = " << s.inner.d << " + " << s.inner.r << "i, a = " << p.a << '\n';
  return kExitOk;
}

int cmd_convergence(const RunConfig& config) {
  config.validate_common();
  const double t = require_t(config);
  const LaplaceProblem problem = build_problem(config);
  SolveOptions opts = config.solve_options();
  opts.diagnostics = false;
  opts.validate = false;
  const EllipseSetup s = build_ellipse_setup(problem, t, opts);
  const ContourParams p = optimize_a(s.inner, t, config.tol);
  const TruncationResult tr = truncation_fixed_point(problem, p, t, config.tol);
  std::vector<int> Ns = config.schedule;
  if (Ns.empty()) {
    for (int N = 5; N <= config.n_max; N *= 2) Ns.push_back(N);
  }
  std::optional<Vector> reference;
  if (config.validate) reference = reference_solution(problem, t);
  const auto rows = convergence_table(problem, p, tr.c, t, Ns, reference);
  write_rows(rows, out_path(config, "convergence.csv"));
  std::cout << "a = " << p.a << ", c = " << tr.c << ", K = " << tr.K << ", rows = " << rows.size()
            << '\n';
  return kExitOk;
}

int cmd_window(const RunConfig& config) {
  config.validate_common();
  if (!config.t0 || !config.t1) throw std::invalid_argument("--t0 and --t1 are required");
  if (!(*config.t0 > 0.0 && *config.t0 < *config.t1)) {
    throw std::invalid_argument("window needs 0 < t0 < t1");
  }
  const LaplaceProblem problem = build_problem(config);
  const SolveOptions opts = config.solve_options();
  const TimeWindowPlan plan = plan_window(problem, *config.t0, *config.t1, config.tol, opts);
  std::vector<double> times = config.times;
  if (times.empty()) times = {*config.t0, *config.t1};

  auto out = open_csv(out_path(config, "window.csv"));
  out << "t,c_t,K_t,N_used,error,error_inf,model_error,new_solves\n";
  int node_uses = 0;
  bool all_ok = true;
  for (double t : times) {
    const SolveReport rep = solve_at(plan, problem, t, opts);
    if (!rep.result) {
      std::cerr << "infeasible at t = " << t << '\n';
      return kExitInfeasible;
    }
    node_uses += static_cast<int>(rep.result->nodes.size());
    all_ok = all_ok && rep.converged;
    out << sci(t) << ',' << sci(rep.truncation.c) << ',' << sci(rep.truncation.K) << ','
        << rep.result->N << ',' << sci(rep.reference_error.value_or(std::nan(""))) << ','
        << sci(rep.reference_error_inf.value_or(std::nan(""))) << ',' << sci(rep.result->est_error)
        << ',' << rep.result->new_solves << '\n';
  }
  const int unique = plan.cache->solves();
  auto summary = open_csv(out_path(config, "window_summary.txt"));
  summary << "a=" << sci(plan.contour.a) << "\nh=" << sci(plan.h) << "\nn_int=" << plan.n_int
          << "\nK0=" << sci(plan.at_t0.K) << "\nK1=" << sci(plan.at_t1.K)
          << "\nunique_solves=" << unique << "\nnode_uses=" << node_uses
          << "\nreused_solves=" << node_uses - unique
          << "\nfixed_point_solves=" << plan.at_t0.iterations + plan.at_t1.iterations << '\n';
  std::cout << "unique solves = " << unique << ", reused = " << node_uses - unique << '\n';
  if (!all_ok) {
    std::cerr << "error: tolerance not reached at every time\n";
    return kExitError;
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  RunConfig c;
  CLI::App app{"Laplace-transform inversion of u' = Au + b(t) on elliptic contours"};
  app.set_config("--config", "", "key=value configuration file; flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--problem", c.problem, "canonical-cd | black-scholes | diagonal | file")
      ->check(CLI::IsMember({"canonical-cd", "black-scholes", "diagonal", "file"}));
  app.add_option("--matrix", c.matrix, "MatrixMarket operator file");
  app.add_option("--u0", c.u0, "initial vector file");
  app.add_option("--source", c.source, "'none' or comma-separated pole:path items");
  app.add_option("--cd-length", c.cd_length, "convection-diffusion domain length");
  app.add_option("--cd-degree", c.cd_degree, "Chebyshev degree");
  app.add_option("--bs-n", c.bs.n, "Black-Scholes interior points");
  app.add_option("--bs-strike", c.bs.strike);
  app.add_option("--bs-rate", c.bs.rate);
  app.add_option("--bs-sigma", c.bs.sigma);
  app.add_option("--bs-upper", c.bs.upper);
  app.add_option("--diag", c.diag_values, "diagonal entries")->delimiter(',');
  app.add_option("--diag-u0", c.diag_u0)->delimiter(',');
  app.add_option("--diag-source", c.diag_source, "constant source")->delimiter(',');
  app.add_option("--t", c.t, "time");
  app.add_option("--t0", c.t0, "window start");
  app.add_option("--t1", c.t1, "window end");
  app.add_option("--times", c.times, "window sample times")->delimiter(',');
  app.add_option("--tol", c.tol, "target accuracy");
  app.add_option("--zl", c.z_l, "ellipse centre");
  app.add_option("--zr", c.z_r, "ellipse right vertex");
  app.add_option("--eps1", c.eps1, "weighted level");
  app.add_option("--eps2", c.eps2, "unweighted level");
  app.add_option("--grid", c.grid, "pseudospectral grid points per axis");
  app.add_option("--ymax", c.y_max, "grid half-height");
  app.add_option("--nmax", c.n_max, "largest node count");
  app.add_flag("--validate", c.validate, "compare against the matrix-exponential oracle");
  app.add_flag("--override-feasibility", c.override_feasibility);
  app.add_option("--extra-doublings", c.extra_doublings);
  app.add_option("--schedule", c.schedule, "node counts for convergence")->delimiter(',');
  app.add_option("--out", c.out, "output directory");

  auto* solve_cmd = app.add_subcommand("solve", "approximate u(t)");
  auto* pseudo_cmd = app.add_subcommand("pseudo", "grid, level curves and contours as CSV");
  auto* conv_cmd = app.add_subcommand("convergence", "error table over node counts");
  auto* window_cmd = app.add_subcommand("window", "one contour for a time interval");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*solve_cmd) return cmd_solve(c);
    if (*pseudo_cmd) return cmd_pseudo(c);
    if (*conv_cmd) return cmd_convergence(c);
    if (*window_cmd) return cmd_window(c);
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace lapinv::cli
