#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lapinv/errors.hpp"
#include "lapinv/problem.hpp"

namespace lapinv {

namespace {

std::string lowercase(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool is_comment_or_blank(const std::string& line) {
  const std::string t = trim(line);
  return t.empty() || t[0] == '%' || t[0] == '#';
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Operator load_operator(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open matrix file");

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(path, 1, "empty file");
  ++line_no;

  std::istringstream banner(lowercase(line));
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%matrixmarket" || object != "matrix") {
    throw ParseError(path, line_no, "missing '%%MatrixMarket matrix' banner");
  }
  if (format != "coordinate") throw ParseError(path, line_no, "only coordinate format is supported");
  const bool is_complex = field == "complex";
  if (!(field == "real" || field == "integer" || is_complex)) {
    throw ParseError(path, line_no, "unsupported field '" + field + "'");
  }
  if (!(symmetry == "general" || symmetry == "symmetric")) {
    throw ParseError(path, line_no, "unsupported symmetry '" + symmetry + "'");
  }

  long rows = -1, cols = -1, nnz = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_comment_or_blank(line)) continue;
    std::istringstream size_line(line);
    if (!(size_line >> rows >> cols >> nnz)) throw ParseError(path, line_no, "bad size line");
    break;
  }
  if (rows < 0) throw ParseError(path, line_no, "missing size line");
  if (rows != cols) {
    throw DimensionError(path + ": matrix is " + std::to_string(rows) + "x" + std::to_string(cols) +
                         ", operator must be square");
  }
  if (rows == 0) throw DimensionError(path + ": empty matrix");
  if (rows > kMaxFileDimension) {
    throw DimensionError(path + ": dimension " + std::to_string(rows) + " exceeds the dense limit " +
                         std::to_string(kMaxFileDimension));
  }

  Matrix a = Matrix::Zero(rows, cols);
  long read = 0;
  while (read < nnz && std::getline(in, line)) {
    ++line_no;
    if (is_comment_or_blank(line)) continue;
    std::istringstream entry(line);
    long i = 0, j = 0;
    double re = 0.0, im = 0.0;
    if (!(entry >> i >> j >> re)) throw ParseError(path, line_no, "bad entry '" + trim(line) + "'");
    if (is_complex && !(entry >> im)) throw ParseError(path, line_no, "missing imaginary part");
    if (i < 1 || i > rows || j < 1 || j > cols) {
      throw ParseError(path, line_no, "index (" + std::to_string(i) + "," + std::to_string(j) +
                                          ") out of range");
    }
    a(i - 1, j - 1) += Complex(re, im);
    if (symmetry == "symmetric" && i != j) a(j - 1, i - 1) += Complex(re, im);
    ++read;
  }
  if (read < nnz) {
    throw ParseError(path, line_no, "expected " + std::to_string(nnz) + " entries, found " +
                                        std::to_string(read));
  }
  if (!a.allFinite()) throw ParseError(path, 0, "non-finite matrix entry");
  return Operator(std::move(a), path);
}

void save_operator(const Operator& op, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path, 0, "cannot open for writing");
  const Matrix& a = op.matrix();
  const bool real = op.is_real();
  long nnz = 0;
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (a(i, j) != Complex(0.0, 0.0)) ++nnz;
  out << "%%MatrixMarket matrix coordinate " << (real ? "real" : "complex") << " general\n";
  if (!op.source_tag().empty()) out << "% " << op.source_tag() << "\n";
  out << a.rows() << " " << a.cols() << " " << nnz << "\n";
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      const Complex v = a(i, j);
      if (v == Complex(0.0, 0.0)) continue;
      out << (i + 1) << " " << (j + 1) << " " << format_double(v.real());
      if (!real) out << " " << format_double(v.imag());
      out << "\n";
    }
  }
  if (!out) throw ParseError(path, 0, "write failed");
}

Vector load_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open vector file");
  std::vector<Complex> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_comment_or_blank(line)) continue;
    std::istringstream entry(line);
    double re = 0.0, im = 0.0;
    if (!(entry >> re)) throw ParseError(path, line_no, "bad value '" + trim(line) + "'");
    if (!(entry >> im)) im = 0.0;
    values.emplace_back(re, im);
  }
  if (values.empty()) throw ParseError(path, 0, "vector file has no values");
  Vector v(static_cast<Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Index>(i)) = values[i];
  return v;
}

void save_vector(const Vector& v, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError(path, 0, "cannot open for writing");
  const bool real = v.imag().isZero(0.0);
  for (Index i = 0; i < v.size(); ++i) {
    out << format_double(v(i).real());
    if (!real) out << " " << format_double(v(i).imag());
    out << "\n";
  }
}

SourceTransform parse_source_spec(const std::string& spec, Index dim) {
  const std::string s = trim(spec);
  if (s.empty() || lowercase(s) == "none") return {};
  std::vector<SourceTerm> terms;
  std::istringstream items(s);
  std::string item;
  while (std::getline(items, item, ',')) {
    item = trim(item);
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw ParseError("source-spec", 0, "item '" + item + "' is not of the form pole:path");
    }
    const std::string pole_text = trim(item.substr(0, colon));
    double pole = 0.0;
    const auto [ptr, ec] = std::from_chars(pole_text.data(), pole_text.data() + pole_text.size(), pole);
    if (ec != std::errc() || ptr != pole_text.data() + pole_text.size()) {
      throw ParseError("source-spec", 0, "bad pole '" + pole_text + "'");
    }
    Vector coeff = load_vector(trim(item.substr(colon + 1)));
    if (coeff.size() != dim) {
      throw DimensionError("source vector " + item.substr(colon + 1) + " has length " +
                           std::to_string(coeff.size()) + ", expected " + std::to_string(dim));
    }
    terms.push_back(SourceTerm{std::move(coeff), Complex(pole, 0.0)});
  }
  return SourceTransform(std::move(terms));
}

LaplaceProblem load_problem(const std::string& matrix_path, const std::string& u0_path,
                            const std::string& source_spec) {
  Operator op = load_operator(matrix_path);
  Vector u0 = load_vector(u0_path);
  if (u0.size() != op.dim()) {
    throw DimensionError(u0_path + ": u0 has length " + std::to_string(u0.size()) +
                         ", operator has dimension " + std::to_string(op.dim()));
  }
  SourceTransform source = parse_source_spec(source_spec, op.dim());
  return make_problem(std::move(op), std::move(u0), std::move(source), "file:" + matrix_path);
}

}  // namespace lapinv
