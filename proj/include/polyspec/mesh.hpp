#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "polyspec/complex.hpp"
#include "polyspec/distance.hpp"
#include "polyspec/metric.hpp"

namespace polyspec {

/// Where a point sits in the mesh: element and its barycentric weights.
struct MeshLocation {
  int element = -1;
  Eigen::Vector3d weights;
};

/// Uniform barycentric subdivision of every triangle of a 2-complex into
/// N^2 elements. Nodes on a shared edge are shared, so the refinement is
/// conforming across interfaces.
class Mesh {
 public:
  int subdivisions() const { return n_; }
  double size() const { return h_; }
  std::size_t node_count() const { return node_points_.size(); }
  std::size_t element_count() const { return elements_.size(); }

  const std::array<int, 3>& element(int e) const { return elements_[static_cast<std::size_t>(e)]; }
  int parent(int e) const { return parent_[static_cast<std::size_t>(e)]; }
  /// Vertex coordinates of element e in the chart of its parent simplex.
  const std::array<Eigen::Vector2d, 3>& element_coords(int e) const { return coords_[static_cast<std::size_t>(e)]; }

  /// A representative (simplex, chart point) per node.
  const PolyPoint& node_point(int node) const { return node_points_[static_cast<std::size_t>(node)]; }

  /// Nodes of complex edge `facet` ordered from its lower vertex id (N + 1 nodes).
  const std::vector<int>& facet_nodes(int facet) const { return facet_nodes_[static_cast<std::size_t>(facet)]; }

  /// Mesh elements adjacent to segment k of `facet` from the side of `top`.
  int facet_element(int facet, int k, int top) const;

  /// Element containing a point of top simplex p.simplex.
  MeshLocation locate(const PolyPoint& p) const;

  /// Chart gradients of the three hat functions of element e.
  std::array<Eigen::Vector2d, 3> gradients(int e) const;

  /// Worst element aspect ratio in the metric (1 for equilateral).
  double max_aspect_ratio() const { return max_aspect_; }

 private:
  friend Mesh refine(const SimplicialComplex& c, const PiecewiseMetric& m, double target_h);

  int n_ = 0;
  double h_ = 0.0;
  double max_aspect_ = 0.0;
  std::vector<std::array<int, 3>> elements_;
  std::vector<int> parent_;
  std::vector<std::array<Eigen::Vector2d, 3>> coords_;
  std::vector<PolyPoint> node_points_;
  std::vector<std::vector<int>> facet_nodes_;
  // element_at_[top][cell]: up cells then down cells of the lattice.
  std::vector<std::vector<int>> element_at_;
  std::vector<std::vector<std::array<int, 2>>> facet_elements_;  // per facet, per segment: element per coface
};

/// Refines every triangle with N = ceil(longest chart edge / target_h)
/// subdivisions. Throws MeshError for n != 2 or elements with metric aspect
/// ratio above 50.
Mesh refine(const SimplicialComplex& c, const PiecewiseMetric& m, double target_h);

}  // namespace polyspec
