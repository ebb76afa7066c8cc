#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "csv.hpp"
#include "lapinv/errors.hpp"
#include "lapinv/solver.hpp"

namespace lapinv {

namespace {

constexpr int kReportVersion = 1;

class KeyWriter {
 public:
  explicit KeyWriter(std::ostream& out) : out_(out) {}
  void put(const std::string& key, const std::string& value) { out_ << key << '=' << value << '\n'; }
  void put(const std::string& key, double value) { put(key, detail::sci(value)); }
  void put(const std::string& key, int value) { put(key, std::to_string(value)); }
  void put(const std::string& key, bool value) { put(key, std::string(value ? "true" : "false")); }

 private:
  std::ostream& out_;
};

}  // namespace

void write_report(const SolveReport& r, const std::string& path) {
  auto out = detail::open_output(path);
  KeyWriter w(out);
  w.put("format", std::string("lapinv-report"));
  w.put("version", kReportVersion);
  w.put("problem", r.problem);
  w.put("t", r.t);
  w.put("tol", r.tol);
  w.put("z_l", r.z_l);
  w.put("z_r", r.z_r);
  w.put("ellipse.d", r.inner.d);
  w.put("ellipse.r", r.inner.r);
  w.put("ellipse.w_tilde", r.inner.w_tilde);
  w.put("ellipse.case", std::string(to_string(r.inner.which)));
  w.put("ellipse.stop_index", r.inner.stop_index);
  w.put("contour.a", r.contour.a);
  w.put("contour.a1", r.contour.a1);
  w.put("contour.a2", r.contour.a2);
  w.put("contour.A1", r.contour.A1);
  w.put("contour.A2", r.contour.A2);
  w.put("contour.A3", r.contour.A3);
  w.put("contour.D", r.contour.D);
  w.put("truncation.c", r.truncation.c);
  w.put("truncation.K", r.truncation.K);
  w.put("truncation.iterations", r.truncation.iterations);
  w.put("predicted_nodes", r.predicted_nodes);
  w.put("stability", r.stability);
  w.put("feasibility.pass", r.feasibility.pass);
  w.put("feasibility.achievable", r.feasibility.achievable);
  w.put("feasibility.max_condition", r.feasibility.max_condition);
  w.put("converged", r.converged);
  if (r.result) {
    w.put("N", r.result->N);
    w.put("c_used", r.result->c);
    w.put("est_error", r.result->est_error);
    w.put("B_term", r.result->B_term);
  }
  if (r.reference_error) w.put("reference_error", *r.reference_error);
  if (r.reference_error_inf) w.put("reference_error_inf", *r.reference_error_inf);
  w.put("K_ell", r.K_ell);
  w.put("truncation_bound", r.truncation_bound);
  if (r.bound) {
    w.put("bound.M_plus", r.bound->M_plus);
    w.put("bound.M_minus", r.bound->M_minus);
    w.put("bound.S_minus", r.bound->S_minus);
    w.put("bound.Delta", r.bound->Delta);
    w.put("bound.B", r.bound->B);
    w.put("bound.value", r.bound->value);
  }
  w.put("resolvent_solves", r.resolvent_solves);
  w.put("reused_solves", r.reused_solves);
  for (std::size_t i = 0; i < r.warnings.size(); ++i) {
    w.put("warning." + std::to_string(i), r.warnings[i]);
  }
  out << "\n[convergence]\n";
  out << "N,measured_error,model_error,B_term,measured_error_inf\n";
  for (const ConvergenceRow& row : r.history) {
    out << row.N << ',' << detail::sci(row.measured_error) << ',' << detail::sci(row.model_error)
        << ',' << detail::sci(row.B_term) << ',' << detail::sci(row.measured_error_inf) << '\n';
  }
  if (!out) throw Error("write failed for '" + path + "'");
}

ParsedReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open report");
  ParsedReport rep;
  std::string line;
  std::size_t line_no = 0;
  bool table = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line == "[convergence]") {
      table = true;
      continue;
    }
    if (!table) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError(path, line_no, "expected key=value");
      rep.values[line.substr(0, eq)] = line.substr(eq + 1);
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (rep.convergence_header.empty()) {
      rep.convergence_header = cells;
      continue;
    }
    std::vector<double> row;
    for (const std::string& c : cells) {
      try {
        row.push_back(std::stod(c));
      } catch (const std::exception&) {
        if (c == "nan" || c == "-nan") {
          row.push_back(std::nan(""));
        } else {
          throw ParseError(path, line_no, "bad number '" + c + "'");
        }
      }
    }
    rep.convergence_rows.push_back(std::move(row));
  }
  const auto it = rep.values.find("format");
  if (it == rep.values.end() || it->second != "lapinv-report") {
    throw ParseError(path, 1, "not a lapinv report");
  }
  return rep;
}

}  // namespace lapinv
