#pragma once

#include <stdexcept>
#include <string>

namespace polyspec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structural violation of a simplicial complex (arity, duplicates,
/// non-manifold facets, ...).
class ComplexError : public Error {
 public:
  using Error::Error;
};

/// Metric not symmetric positive definite, or a geometric query that
/// leaves its simplex.
class MetricError : public Error {
 public:
  using Error::Error;
};

/// Interface chart construction failed (normal-coordinate fold, normal
/// geodesic leaving the simplex).
class ChartError : public Error {
 public:
  using Error::Error;
};

/// Shortest-path graph has no route between the requested points.
class DisconnectedError : public Error {
 public:
  using Error::Error;
};

/// Mesh generation or FEM assembly failure.
class MeshError : public Error {
 public:
  using Error::Error;
};

/// Eigen solver or time stepper did not converge / was under-resolved.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Boundary spectral data cannot be compared (cluster structure differs,
/// bad correspondence).
class BsdError : public Error {
 public:
  using Error::Error;
};

/// Gaussian beam propagation or interface event failure.
class BeamError : public Error {
 public:
  using Error::Error;
};

/// Polyhedron document syntax or validation error with a position.
class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& what)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace polyspec
