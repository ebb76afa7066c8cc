#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lapinv/problem.hpp"
#include "lapinv/solver.hpp"

namespace lapinv::cli {

/// Exit codes of every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitInfeasible = 2;

struct RunConfig {
  std::string problem = "canonical-cd";  ///< canonical-cd | black-scholes | diagonal | file
  std::string matrix;
  std::string u0;
  std::string source = "none";
  double cd_length = 400.0;
  int cd_degree = 63;
  BlackScholesParams bs;
  std::vector<double> diag_values{-1.0, -2.0};
  std::vector<double> diag_u0{1.0, 1.0};
  std::vector<double> diag_source;

  std::optional<double> t;
  std::optional<double> t0;
  std::optional<double> t1;
  std::vector<double> times;
  double tol = 1e-6;
  std::optional<double> z_l;
  std::optional<double> z_r;
  double eps1 = 1e-9;
  double eps2 = 1e-13;
  int grid = 100;
  double y_max = 10.0;
  int n_max = 1024;
  bool validate = false;
  bool override_feasibility = false;
  int extra_doublings = 0;
  std::vector<int> schedule;
  std::string out = ".";

  /// Throws std::invalid_argument on violated invariants.
  void validate_common() const;
  SolveOptions solve_options() const;
};

LaplaceProblem build_problem(const RunConfig& config);

/// Grid abscissae for built-in problems, unknown index otherwise.
std::vector<double> problem_coordinates(const RunConfig& config, Index dim);

int cmd_solve(const RunConfig& config);
int cmd_pseudo(const RunConfig& config);
int cmd_convergence(const RunConfig& config);
int cmd_window(const RunConfig& config);

/// Parses argv (subcommand, flags, optional --config file where flags win) and
/// dispatches.
int run(int argc, char** argv);

}  // namespace lapinv::cli
