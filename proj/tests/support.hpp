#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polyspec/complex.hpp"
#include "polyspec/distance.hpp"
#include "polyspec/document.hpp"
#include "polyspec/metric.hpp"

namespace testing {

using namespace polyspec;

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) x(i++) = a;
  return x;
}

inline Eigen::MatrixXd diag2(double a, double b) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, 2);
  g(0, 0) = a;
  g(1, 1) = b;
  return g;
}

/// Axis-aligned rectangles [x_k, x_{k+1}] x [0, height], each split into two
/// triangles along its diagonal. Vertex ids: bottom row 0..k, top row k+1...
inline ComplexInput strip_input(const std::vector<double>& xs, double height) {
  ComplexInput in;
  in.dim = 2;
  const int cols = static_cast<int>(xs.size());
  for (int i = 0; i < cols; ++i) {
    in.coordinates[i] = vec({xs[static_cast<std::size_t>(i)], 0.0});
    in.coordinates[cols + i] = vec({xs[static_cast<std::size_t>(i)], height});
  }
  for (int i = 0; i + 1 < cols; ++i) {
    in.simplices.push_back({i, i + 1, cols + i + 1});
    in.simplices.push_back({i, cols + i + 1, cols + i});
  }
  return in;
}

inline SimplicialComplex unit_square() { return build_complex(strip_input({0.0, 1.0}, 1.0)); }

/// Piecewise-constant metric: g_left on simplices whose centroid has x < split.
inline PiecewiseMetric split_metric(const SimplicialComplex& c, double split, const Eigen::MatrixXd& left,
                                    const Eigen::MatrixXd& right) {
  PiecewiseMetric m;
  m.dim = 2;
  for (std::size_t t = 0; t < c.count(2); ++t) {
    const Eigen::VectorXd centre = c.chart(static_cast<int>(t)).rowwise().mean();
    m.fields.push_back(MetricField::constant(centre(0) < split ? left : right));
  }
  return m;
}

/// Edge index from two vertex ids.
inline int edge(const SimplicialComplex& c, VertexId a, VertexId b) {
  return c.index_of(a < b ? Simplex{a, b} : Simplex{b, a});
}

inline std::string fixture_path(const std::string& name) { return std::string(POLYSPEC_FIXTURES) + "/" + name; }

}  // namespace testing

namespace testing {

/// Top simplex containing chart point x (charts are assumed coherent).
inline PolyPoint locate(const SimplicialComplex& c, const Eigen::VectorXd& x) {
  int best = -1;
  double best_min = -1e300;
  for (std::size_t t = 0; t < c.count(c.dim()); ++t) {
    const double lo = c.barycentric(static_cast<int>(t), x).minCoeff();
    if (lo > best_min) {
      best_min = lo;
      best = static_cast<int>(t);
    }
  }
  return PolyPoint{best, x};
}

}  // namespace testing
