#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "polyspec/execution.hpp"
#include "polyspec/mesh.hpp"
#include "polyspec/metric.hpp"

namespace polyspec {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Symmetric quadrature rule on the reference triangle; weights sum to 1.
struct TriangleRule {
  std::vector<Eigen::Vector3d> points;  // barycentric
  std::vector<double> weights;
};

/// Seven-point rule exact for polynomials of degree 5.
const TriangleRule& degree5_rule();

struct ElementMatrices {
  Eigen::Matrix3d stiffness;
  Eigen::Matrix3d mass;
};

/// P1 element matrices of the gradient-only Dirichlet form
/// int <grad u, grad v>_g dV_g and of the L2 product int u v dV_g.
/// Throws MetricError if the metric is not positive definite at a quadrature point.
std::vector<ElementMatrices> element_matrices(const Mesh& mesh, const PiecewiseMetric& m,
                                              Execution exec = Execution::Parallel);

struct Forms {
  SparseMatrix stiffness;
  SparseMatrix mass;
};

/// Global stiffness and mass matrices. Element contributions are scattered
/// in element order, so the result does not depend on the thread count.
Forms assemble_forms(const Mesh& mesh, const PiecewiseMetric& m, Execution exec = Execution::Parallel);

/// Value of the P1 function u at p.
double evaluate(const Mesh& mesh, const Eigen::VectorXd& u, const PolyPoint& p);

/// Chart gradient of u on element e.
Eigen::Vector2d element_gradient(const Mesh& mesh, const Eigen::VectorXd& u, int e);

/// Mask of free nodes: nodes on the listed complex edges are fixed.
std::vector<char> free_nodes(const Mesh& mesh, const std::vector<int>& dirichlet_facets);

}  // namespace polyspec
