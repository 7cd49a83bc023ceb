#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "polyspec/complex.hpp"
#include "polyspec/distance.hpp"
#include "polyspec/mesh.hpp"
#include "polyspec/metric.hpp"

namespace polyspec {

/// Dirichlet data on the observation set: f(t, point).
using BoundaryData = std::function<double(double, const PolyPoint&)>;

struct DtnOptions {
  int steps = 2048;                  // dt = T / steps
  int stride = 1;                    // keep every stride-th step
  std::vector<int> neumann_facets;   // boundary edges left free instead of clamped to 0
};

struct DtnResult {
  std::vector<double> times;
  std::vector<int> nodes;            // mesh nodes on the observation set
  Eigen::MatrixXd flux;              // times x nodes, outward normal derivative
  Eigen::MatrixXd boundary_mass;     // P1 mass matrix of the observation set (metric arclength)
  double dt = 0.0;
};

/// Solves u_tt = Lap u with u = f on gamma, u = 0 on the other boundary
/// edges (except neumann_facets) and zero initial data, by average
/// acceleration Newmark steps, and returns the normal derivative on gamma
/// from the discrete reaction M_gamma^{-1} (K u + M u_tt). Throws SolverError
/// when dt exceeds the mesh size or gamma is not on the boundary.
DtnResult dtn_map(const SimplicialComplex& c, const PiecewiseMetric& m, const Mesh& mesh, const std::vector<int>& gamma,
                  const BoundaryData& f, double T, const DtnOptions& opt = {});

/// int_0^T int_gamma (Lambda f) g dl dt by the trapezoid rule in time.
double dtn_pairing(const DtnResult& r, const Eigen::MatrixXd& g_values);

/// Samples of boundary data at the result's times and nodes (times x nodes).
Eigen::MatrixXd sample_boundary_data(const Mesh& mesh, const DtnResult& r, const BoundaryData& g);

}  // namespace polyspec
