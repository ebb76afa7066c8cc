#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lapinv/errors.hpp"
#include "lapinv/problem.hpp"
#include "lapinv/pseudospectra.hpp"
#include "lapinv/solver.hpp"

namespace py = pybind11;
using namespace lapinv;

namespace {

SourceTransform source_from_terms(const std::vector<std::pair<Vector, Complex>>& terms) {
  std::vector<SourceTerm> out;
  out.reserve(terms.size());
  for (const auto& [coefficient, pole] : terms) out.push_back({coefficient, pole});
  return SourceTransform(std::move(out));
}

// σ_min reshaped to (ny, nx) so that grid[iy, ix] sits at (x[ix], y[iy]).
Eigen::MatrixXd grid_matrix(const PseudoGrid& g) {
  Eigen::MatrixXd m(g.y.size(), g.x.size());
  for (std::size_t iy = 0; iy < g.y.size(); ++iy)
    for (std::size_t ix = 0; ix < g.x.size(); ++ix)
      m(static_cast<Index>(iy), static_cast<Index>(ix)) = g.at(iy, ix);
  return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Laplace-transform inversion on elliptic contours";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<SingularSystemError>(m, "SingularSystemError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
  py::register_exception<GeometryError>(m, "GeometryError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<UnsupportedSourceError>(m, "UnsupportedSourceError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<StageError>(m, "StageError", base.ptr());

  py::class_<LaplaceProblem>(m, "Problem")
      .def_property_readonly("dim", &LaplaceProblem::dim)
      .def_property_readonly("is_real", &LaplaceProblem::is_real)
      .def_readonly("name", &LaplaceProblem::name)
      .def_property_readonly("A", [](const LaplaceProblem& p) { return p.op.matrix(); })
      .def_readonly("u0", &LaplaceProblem::u0)
      .def_property_readonly("singularities", &LaplaceProblem::singularities);

  m.def(
      "make_problem",
      [](const Matrix& A, const Vector& u0, const std::vector<std::pair<Vector, Complex>>& source,
         const std::string& name) {
        return make_problem(Operator(A), u0, source_from_terms(source), name);
      },
      py::arg("A"), py::arg("u0"), py::arg("source") = std::vector<std::pair<Vector, Complex>>{},
      py::arg("name") = "custom",
      "Problem u' = Au + b(t) with b(t) = sum of coefficient * exp(pole * t).");
  m.def("diagonal_problem", &diagonal_problem, py::arg("values"), py::arg("u0"),
        py::arg("constant_source") = std::vector<double>{});
  m.def("canonical_cd_problem", &canonical_cd_problem, py::arg("d") = 400.0, py::arg("n") = 63);
  m.def("canonical_cd_grid", &canonical_cd_grid, py::arg("d") = 400.0, py::arg("n") = 63);
  m.def(
      "black_scholes_problem",
      [](double lower, double upper, double strike, double rate, double sigma, int n) {
        return black_scholes_problem({lower, upper, strike, rate, sigma, n});
      },
      py::arg("lower") = 0.0, py::arg("upper") = 200.0, py::arg("strike") = 80.0,
      py::arg("rate") = 0.06, py::arg("sigma") = 0.05, py::arg("n") = 200);
  m.def(
      "black_scholes_grid",
      [](double lower, double upper, int n) {
        BlackScholesParams p;
        p.lower = lower;
        p.upper = upper;
        p.n = n;
        return black_scholes_grid(p);
      },
      py::arg("lower") = 0.0, py::arg("upper") = 200.0, py::arg("n") = 200);
  m.def("load_problem", &load_problem, py::arg("matrix_path"), py::arg("u0_path"),
        py::arg("source_spec") = "none");
  m.def("reference_solution", &reference_solution, py::arg("problem"), py::arg("t"));

  py::class_<SolveOptions>(m, "SolveOptions")
      .def(py::init<>())
      .def_readwrite("z_l", &SolveOptions::z_l)
      .def_readwrite("z_r", &SolveOptions::z_r)
      .def_readwrite("eps1", &SolveOptions::eps1)
      .def_readwrite("eps2", &SolveOptions::eps2)
      .def_readwrite("grid_points", &SolveOptions::grid_points)
      .def_readwrite("y_max", &SolveOptions::y_max)
      .def_readwrite("m_ell", &SolveOptions::m_ell)
      .def_readwrite("n_max", &SolveOptions::n_max)
      .def_readwrite("prec", &SolveOptions::prec)
      .def_readwrite("K_init", &SolveOptions::K_init)
      .def_readwrite("validate", &SolveOptions::validate)
      .def_readwrite("override_feasibility", &SolveOptions::override_feasibility)
      .def_readwrite("extra_doublings", &SolveOptions::extra_doublings)
      .def_readwrite("diagnostics", &SolveOptions::diagnostics);

  py::class_<ContourParams>(m, "ContourParams")
      .def_readonly("a", &ContourParams::a)
      .def_readonly("a1", &ContourParams::a1)
      .def_readonly("a2", &ContourParams::a2)
      .def_readonly("A1", &ContourParams::A1)
      .def_readonly("A2", &ContourParams::A2)
      .def_readonly("A3", &ContourParams::A3)
      .def_readonly("D", &ContourParams::D);

  py::class_<TruncationResult>(m, "TruncationResult")
      .def_readonly("c", &TruncationResult::c)
      .def_readonly("K", &TruncationResult::K)
      .def_readonly("iterations", &TruncationResult::iterations);

  py::class_<FeasibilityVerdict>(m, "FeasibilityVerdict")
      .def_readonly("passed", &FeasibilityVerdict::pass)
      .def_readonly("achievable", &FeasibilityVerdict::achievable)
      .def_readonly("max_condition", &FeasibilityVerdict::max_condition)
      .def_readonly("stability", &FeasibilityVerdict::stability);

  py::class_<ConvergenceRow>(m, "ConvergenceRow")
      .def_readonly("N", &ConvergenceRow::N)
      .def_readonly("measured_error", &ConvergenceRow::measured_error)
      .def_readonly("measured_error_inf", &ConvergenceRow::measured_error_inf)
      .def_readonly("model_error", &ConvergenceRow::model_error)
      .def_readonly("B_term", &ConvergenceRow::B_term);

  py::class_<SolveReport>(m, "SolveReport")
      .def_readonly("problem", &SolveReport::problem)
      .def_readonly("t", &SolveReport::t)
      .def_readonly("tol", &SolveReport::tol)
      .def_readonly("z_l", &SolveReport::z_l)
      .def_readonly("z_r", &SolveReport::z_r)
      .def_readonly("contour", &SolveReport::contour)
      .def_readonly("truncation", &SolveReport::truncation)
      .def_readonly("feasibility", &SolveReport::feasibility)
      .def_readonly("predicted_nodes", &SolveReport::predicted_nodes)
      .def_readonly("converged", &SolveReport::converged)
      .def_readonly("reference_error", &SolveReport::reference_error)
      .def_readonly("truncation_bound", &SolveReport::truncation_bound)
      .def_readonly("history", &SolveReport::history)
      .def_readonly("resolvent_solves", &SolveReport::resolvent_solves)
      .def_readonly("warnings", &SolveReport::warnings)
      .def_property_readonly("N", [](const SolveReport& r) -> std::optional<int> {
        if (!r.result) return std::nullopt;
        return r.result->N;
      })
      .def_property_readonly("u", [](const SolveReport& r) -> std::optional<Vector> {
        if (!r.result) return std::nullopt;
        return r.result->approx;
      })
      .def_property_readonly("est_error", [](const SolveReport& r) -> std::optional<double> {
        if (!r.result) return std::nullopt;
        return r.result->est_error;
      })
      .def("write", &write_report, py::arg("path"));

  m.def(
      "solve",
      [](const LaplaceProblem& problem, double t, double tol, const SolveOptions& opts) {
        py::gil_scoped_release release;
        return solve(problem, t, tol, opts);
      },
      py::arg("problem"), py::arg("t"), py::arg("tol"), py::arg("options") = SolveOptions{});

  m.def(
      "pseudospectrum",
      [](const LaplaceProblem& problem, double x_min, double x_max, double y_min, double y_max,
         int n_pts) {
        PseudoGrid g;
        {
          py::gil_scoped_release release;
          g = compute_grid(problem.op, {x_min, x_max, y_min, y_max, n_pts});
        }
        return py::make_tuple(g.x, g.y, grid_matrix(g));
      },
      py::arg("problem"), py::arg("x_min"), py::arg("x_max"), py::arg("y_min"), py::arg("y_max"),
      py::arg("n_pts") = 100, "Returns (x, y, sigma_min) with sigma_min[iy, ix].");
}
