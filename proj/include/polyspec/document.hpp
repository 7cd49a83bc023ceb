#pragma once

#include <map>
#include <string>
#include <vector>

#include "polyspec/complex.hpp"
#include "polyspec/metric.hpp"

namespace polyspec {

/// A parsed polyhedron: complex, metric and named sets of boundary facets.
struct Polyhedron {
  SimplicialComplex complex;
  std::map<VertexId, Eigen::VectorXd> coordinates;
  PiecewiseMetric metric;
  std::map<std::string, std::vector<int>> subsets;  // facet indices, ascending
};

/// Parses the text format:
///
///   polyhedron 1
///   dim 2
///   vertex <id> <x> <y>
///   simplex <v0> <v1> <v2>            (fewer ids: a lower-dimensional simplex)
///   chart <k> <x0> <y0> <x1> <y1> <x2> <y2>
///   metric <k|*> <i> <j> <e1> <e2> <coeff>
///   boundary <name> <v0> <v1>
///   end
///
/// k counts n-simplex lines from 0. A simplex without metric lines gets the
/// identity metric. '#' starts a comment. Throws ParseError with the line and
/// column of the offending token.
Polyhedron parse_polyhedron(const std::string& text);

/// Canonical text: sorted vertices and simplices, charts only where they
/// differ from the vertex coordinates, metric terms in canonical order,
/// numbers with 17 significant digits.
std::string emit_polyhedron(const Polyhedron& p);

Polyhedron load_polyhedron(const std::string& path);

}  // namespace polyspec
