#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "polyspec/complex.hpp"
#include "polyspec/metric.hpp"

namespace polyspec {

/// A point of the polyhedron: a top simplex and chart coordinates in it.
struct PolyPoint {
  int simplex = -1;
  Eigen::VectorXd x;
};

/// Polyline through the polyhedron. Consecutive nodes either share a simplex
/// (a straight chart segment) or are the same point seen from the two sides
/// of a facet (zero length).
struct AdmissiblePath {
  std::vector<PolyPoint> nodes;
  double length = 0.0;
};

/// Arclength of the chart segment a->b under one metric field, by composite
/// Gauss-Legendre quadrature with `panels` panels of `points` nodes.
double segment_length(const MetricField& g, const Eigen::VectorXd& a, const Eigen::VectorXd& b, int points = 3,
                      int panels = 1);

/// Sum of per-segment arclengths. Throws MetricError when a segment leaves
/// its simplex or a cross-simplex step is not a shared facet point.
double path_length(const SimplicialComplex& c, const PiecewiseMetric& m, const AdmissiblePath& p);

struct DistanceResult {
  double distance = 0.0;
  AdmissiblePath path;
};

/// Shortest-path graph over facet samples at pitch h (n = 2). Nodes are the
/// complex vertices plus edge-interior samples; every pair of nodes on the
/// boundary of a simplex is joined by a chord weighted with 3-point Gauss
/// quadrature of the arclength.
class DistanceGraph {
 public:
  DistanceGraph(const SimplicialComplex& c, const PiecewiseMetric& m, double h);

  double pitch() const { return h_; }
  std::size_t node_count() const { return node_edge_.size(); }
  std::size_t edge_count() const { return edge_to_.size(); }

  /// Shortest path; when rho > 0, graph nodes within metric distance rho of
  /// a vertex (the (n-2)-skeleton) are removed, endpoints exempt. Returns
  /// +inf distance with an empty path when no route exists.
  DistanceResult query(const PolyPoint& p, const PolyPoint& q, double rho = 0.0) const;

  /// Chart coordinates of graph node `node` in top simplex `top`.
  Eigen::VectorXd node_coords(int node, int top) const;

 private:
  struct Arc {
    int to;
    double w;
    int simplex;
  };
  void attach(const PolyPoint& p, int id, std::vector<std::vector<Arc>>& extra,
              std::vector<std::pair<int, Eigen::VectorXd>>& placements) const;
  double vertex_clearance(int node) const;

  const SimplicialComplex* c_;
  const PiecewiseMetric* m_;
  double h_;
  // Node i lies on edge node_edge_[i] (or is vertex node_vertex_[i]) at parameter node_t_[i].
  std::vector<int> node_edge_;
  std::vector<int> node_vertex_;
  std::vector<double> node_t_;
  std::vector<std::vector<int>> simplex_nodes_;
  std::vector<double> clearance_;
  // CSR adjacency.
  std::vector<std::size_t> offset_;
  std::vector<int> edge_to_;
  std::vector<double> edge_w_;
  std::vector<int> edge_simplex_;
};

/// Graph approximation of d(p, q). Throws DisconnectedError when unreachable.
DistanceResult distance(const SimplicialComplex& c, const PiecewiseMetric& m, const PolyPoint& p, const PolyPoint& q,
                        double h);

/// Distance over paths avoiding the rho-neighbourhood of the (n-2)-skeleton.
/// rho <= 0 selects the default 2h. Returns +inf when disconnected.
double restricted_distance(const SimplicialComplex& c, const PiecewiseMetric& m, const PolyPoint& p,
                           const PolyPoint& q, double h, double rho = -1.0);

struct AdmissibilityVerdict {
  bool admissible = true;
  double worst_excess = 0.0;  // max(restricted - distance)
  PolyPoint worst_p;
  PolyPoint worst_q;
  std::size_t pairs_checked = 0;
};

/// Deterministic sample of point pairs spread over all simplices.
std::vector<std::pair<PolyPoint, PolyPoint>> sample_point_pairs(const SimplicialComplex& c, std::size_t count,
                                                                std::uint64_t seed);

/// Admissible iff restricted_distance <= distance + tol on every pair, with
/// exclusion radius rho (default 2h). tol <= 0 selects 2 * rho.
AdmissibilityVerdict check_admissibility_metric(const SimplicialComplex& c, const PiecewiseMetric& m, double h,
                                                const std::vector<std::pair<PolyPoint, PolyPoint>>& pairs,
                                                double tol = -1.0, double rho = -1.0);

}  // namespace polyspec
