#include "polyspec/fem.hpp"

#include <cmath>
#include <string>

#include "polyspec/error.hpp"

namespace polyspec {

const TriangleRule& degree5_rule() {
  static const TriangleRule rule = [] {
    TriangleRule r;
    const double s15 = std::sqrt(15.0);
    const double a1 = (6.0 - s15) / 21.0, a2 = (6.0 + s15) / 21.0;
    const double w1 = (155.0 - s15) / 1200.0, w2 = (155.0 + s15) / 1200.0;
    r.points.push_back(Eigen::Vector3d::Constant(1.0 / 3.0));
    r.weights.push_back(9.0 / 40.0);
    for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
      const double b = 1.0 - 2.0 * a;
      r.points.emplace_back(b, a, a);
      r.points.emplace_back(a, b, a);
      r.points.emplace_back(a, a, b);
      for (int i = 0; i < 3; ++i) r.weights.push_back(w);
    }
    return r;
  }();
  return rule;
}

namespace {

ElementMatrices element_matrix(const Mesh& mesh, const PiecewiseMetric& m, int e) {
  const auto& p = mesh.element_coords(e);
  const auto grads = mesh.gradients(e);
  const Eigen::Vector2d a = p[1] - p[0], b = p[2] - p[0];
  const double area = 0.5 * std::abs(a(0) * b(1) - a(1) * b(0));
  Eigen::Matrix<double, 2, 3> dphi;
  for (int i = 0; i < 3; ++i) dphi.col(i) = grads[static_cast<std::size_t>(i)];
  const MetricField& g = m.on(mesh.parent(e));
  const TriangleRule& rule = degree5_rule();
  ElementMatrices out;
  out.stiffness.setZero();
  out.mass.setZero();
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const Eigen::Vector3d& l = rule.points[q];
    const Eigen::Vector2d x = l(0) * p[0] + l(1) * p[1] + l(2) * p[2];
    const Eigen::Matrix2d gx = g.value(x);
    const double det = gx.determinant();
    if (!(det > 0.0) || !(gx(0, 0) > 0.0))
      throw MetricError("metric is not positive definite in simplex " + std::to_string(mesh.parent(e)));
    const double vol = std::sqrt(det) * area * rule.weights[q];
    out.stiffness += vol * dphi.transpose() * gx.inverse() * dphi;
    out.mass += vol * l * l.transpose();
  }
  return out;
}

}  // namespace

std::vector<ElementMatrices> element_matrices(const Mesh& mesh, const PiecewiseMetric& m, Execution exec) {
  const int ne = static_cast<int>(mesh.element_count());
  std::vector<ElementMatrices> out(static_cast<std::size_t>(ne));
  if (exec == Execution::Serial) {
    for (int e = 0; e < ne; ++e) out[static_cast<std::size_t>(e)] = element_matrix(mesh, m, e);
    return out;
  }
  std::string failure;
#pragma omp parallel for schedule(static)
  for (int e = 0; e < ne; ++e) {
    try {
      out[static_cast<std::size_t>(e)] = element_matrix(mesh, m, e);
    } catch (const std::exception& ex) {
#pragma omp critical(polyspec_fem_error)
      if (failure.empty()) failure = ex.what();
    }
  }
  if (!failure.empty()) throw MetricError(failure);
  return out;
}

Forms assemble_forms(const Mesh& mesh, const PiecewiseMetric& m, Execution exec) {
  const auto mats = element_matrices(mesh, m, exec);
  std::vector<Eigen::Triplet<double>> kt, mt;
  kt.reserve(mats.size() * 9);
  mt.reserve(mats.size() * 9);
  for (std::size_t e = 0; e < mats.size(); ++e) {
    const auto& nodes = mesh.element(static_cast<int>(e));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        kt.emplace_back(nodes[static_cast<std::size_t>(i)], nodes[static_cast<std::size_t>(j)], mats[e].stiffness(i, j));
        mt.emplace_back(nodes[static_cast<std::size_t>(i)], nodes[static_cast<std::size_t>(j)], mats[e].mass(i, j));
      }
  }
  const auto n = static_cast<Eigen::Index>(mesh.node_count());
  Forms f;
  f.stiffness.resize(n, n);
  f.mass.resize(n, n);
  f.stiffness.setFromTriplets(kt.begin(), kt.end());
  f.mass.setFromTriplets(mt.begin(), mt.end());
  return f;
}

double evaluate(const Mesh& mesh, const Eigen::VectorXd& u, const PolyPoint& p) {
  const MeshLocation loc = mesh.locate(p);
  const auto& nodes = mesh.element(loc.element);
  double v = 0.0;
  for (int i = 0; i < 3; ++i) v += loc.weights(i) * u(nodes[static_cast<std::size_t>(i)]);
  return v;
}

Eigen::Vector2d element_gradient(const Mesh& mesh, const Eigen::VectorXd& u, int e) {
  const auto grads = mesh.gradients(e);
  const auto& nodes = mesh.element(e);
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (int i = 0; i < 3; ++i) g += u(nodes[static_cast<std::size_t>(i)]) * grads[static_cast<std::size_t>(i)];
  return g;
}

std::vector<char> free_nodes(const Mesh& mesh, const std::vector<int>& dirichlet_facets) {
  std::vector<char> mask(mesh.node_count(), 1);
  for (int f : dirichlet_facets)
    for (int node : mesh.facet_nodes(f)) mask[static_cast<std::size_t>(node)] = 0;
  return mask;
}

}  // namespace polyspec
