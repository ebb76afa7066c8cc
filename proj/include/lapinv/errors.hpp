#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lapinv {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The factorization of a shifted operator detected numerical singularity.
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

/// An iterative kernel (eigen-solver, fixed point) did not converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Contour or ellipse parameters violate a geometric invariant.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// arccos argument left [-1, 1] while computing the truncation parameter.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, double argument)
      : Error(what), argument_(argument) {}
  double argument() const noexcept { return argument_; }

 private:
  double argument_;
};

/// The source term has no closed time-domain form usable by the reference oracle.
class UnsupportedSourceError : public Error {
 public:
  using Error::Error;
};

/// Operator, vector, or problem dimensions disagree or exceed supported limits.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Line numbers are 1-based; 0 means "not line specific".
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + (line > 0 ? ":" + std::to_string(line) : std::string()) +
              ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Wraps an error raised inside one stage of the solve pipeline.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace lapinv
