#include "polyspec/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "polyspec/error.hpp"

namespace polyspec {

namespace {

double aspect_ratio(const std::array<Eigen::Vector2d, 3>& p, const Eigen::Matrix2d& g) {
  const Eigen::LLT<Eigen::Matrix2d> llt(g);
  const Eigen::Matrix2d lt = llt.matrixL().transpose();
  double lmax = 0.0, perim = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double l = (lt * (p[static_cast<std::size_t>((i + 1) % 3)] - p[static_cast<std::size_t>(i)])).norm();
    lmax = std::max(lmax, l);
    perim += l;
  }
  const Eigen::Vector2d a = p[1] - p[0], b = p[2] - p[0];
  const double area = 0.5 * std::abs(a(0) * b(1) - a(1) * b(0)) * std::sqrt(g.determinant());
  if (!(area > 0.0)) return std::numeric_limits<double>::infinity();
  return lmax * perim / (4.0 * std::sqrt(3.0) * area);
}

}  // namespace

int Mesh::facet_element(int facet, int k, int top) const {
  const auto& seg = facet_elements_.at(static_cast<std::size_t>(facet)).at(static_cast<std::size_t>(k));
  for (int e : seg)
    if (e >= 0 && parent_[static_cast<std::size_t>(e)] == top) return e;
  throw MeshError("simplex " + std::to_string(top) + " is not adjacent to facet " + std::to_string(facet));
}

MeshLocation Mesh::locate(const PolyPoint& p) const {
  if (p.simplex < 0 || p.simplex >= static_cast<int>(element_at_.size())) throw MeshError("point has invalid simplex");
  const auto& cells = element_at_[static_cast<std::size_t>(p.simplex)];
  // Barycentric weights of p in its parent: recover from the first lattice cell.
  const int e0 = cells[0];
  const auto& q = coords_[static_cast<std::size_t>(e0)];
  // q[0] = parent vertex 0, q[1] = q[0] + (P1 - P0)/N, q[2] = q[0] + (P2 - P0)/N.
  Eigen::Matrix2d basis;
  basis.col(0) = (q[1] - q[0]) * n_;
  basis.col(1) = (q[2] - q[0]) * n_;
  const Eigen::Vector2d ab = basis.partialPivLu().solve(p.x - q[0]) * n_;
  const double nn = n_;
  const double fa_all = std::clamp(ab(0), 0.0, nn), fb_all = std::clamp(ab(1), 0.0, nn);
  int a = std::min(static_cast<int>(std::floor(fa_all)), n_ - 1);
  int b = std::min(static_cast<int>(std::floor(fb_all)), n_ - 1);
  if (a + b > n_ - 1) b = n_ - 1 - a;
  const double fa = ab(0) - a, fb = ab(1) - b;
  MeshLocation loc;
  if (fa + fb <= 1.0 || a + b == n_ - 1) {
    loc.element = cells[static_cast<std::size_t>(a * n_ + b)];
    loc.weights << 1.0 - fa - fb, fa, fb;
  } else {
    loc.element = cells[static_cast<std::size_t>(n_ * n_ + a * n_ + b)];
    loc.weights << 1.0 - fb, fa + fb - 1.0, 1.0 - fa;
  }
  return loc;
}

std::array<Eigen::Vector2d, 3> Mesh::gradients(int e) const {
  const auto& p = coords_[static_cast<std::size_t>(e)];
  const Eigen::Vector2d a = p[1] - p[0], b = p[2] - p[0];
  const double d = a(0) * b(1) - a(1) * b(0);
  return {Eigen::Vector2d(p[1](1) - p[2](1), p[2](0) - p[1](0)) / d,
          Eigen::Vector2d(p[2](1) - p[0](1), p[0](0) - p[2](0)) / d,
          Eigen::Vector2d(p[0](1) - p[1](1), p[1](0) - p[0](0)) / d};
}

Mesh refine(const SimplicialComplex& c, const PiecewiseMetric& m, double target_h) {
  if (c.dim() != 2) throw MeshError("refinement is implemented for n = 2");
  if (!(target_h > 0.0)) throw MeshError("target mesh size must be positive");
  const auto& tops = c.simplices(2);
  double longest = 0.0;
  for (std::size_t t = 0; t < tops.size(); ++t) {
    const Eigen::MatrixXd& ch = c.chart(static_cast<int>(t));
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) longest = std::max(longest, (ch.col(i) - ch.col(j)).norm());
  }
  Mesh mesh;
  const int n = std::max(1, static_cast<int>(std::ceil(longest / target_h - 1e-9)));
  mesh.n_ = n;
  mesh.h_ = longest / n;

  const std::size_t nv = c.count(0);
  mesh.node_points_.assign(nv, PolyPoint{});
  std::vector<char> vertex_seen(nv, 0);
  std::vector<int> edge_base(c.count(1), -1);
  mesh.facet_nodes_.assign(c.count(1), {});
  mesh.facet_elements_.assign(c.count(1), std::vector<std::array<int, 2>>(static_cast<std::size_t>(n), {-1, -1}));
  mesh.element_at_.assign(tops.size(), std::vector<int>(static_cast<std::size_t>(2 * n * n), -1));

  for (std::size_t t = 0; t < tops.size(); ++t) {
    const int top = static_cast<int>(t);
    const Simplex& s = tops[t];
    const Eigen::MatrixXd& ch = c.chart(top);
    const Eigen::Vector2d p0 = ch.col(0), d1 = (ch.col(1) - ch.col(0)) / n, d2 = (ch.col(2) - ch.col(0)) / n;
    auto point = [&](int a, int b) -> Eigen::Vector2d { return p0 + a * d1 + b * d2; };
    const int e01 = c.index_of({s[0], s[1]}), e02 = c.index_of({s[0], s[2]}), e12 = c.index_of({s[1], s[2]});
    for (int e : {e01, e02, e12})
      if (edge_base[static_cast<std::size_t>(e)] < 0) {
        edge_base[static_cast<std::size_t>(e)] = static_cast<int>(mesh.node_points_.size());
        const Simplex& es = c.simplices(1)[static_cast<std::size_t>(e)];
        const int la = c.local_vertex(top, es[0]), lb = c.local_vertex(top, es[1]);
        auto& fn = mesh.facet_nodes_[static_cast<std::size_t>(e)];
        fn.push_back(c.index_of({es[0]}));
        for (int j = 1; j < n; ++j) {
          fn.push_back(static_cast<int>(mesh.node_points_.size()));
          const double w = static_cast<double>(j) / n;
          mesh.node_points_.push_back({top, Eigen::VectorXd((1.0 - w) * ch.col(la) + w * ch.col(lb))});
        }
        fn.push_back(c.index_of({es[1]}));
      }
    for (int i = 0; i < 3; ++i) {
      const int vi = c.index_of({s[static_cast<std::size_t>(i)]});
      if (!vertex_seen[static_cast<std::size_t>(vi)]) {
        vertex_seen[static_cast<std::size_t>(vi)] = 1;
        mesh.node_points_[static_cast<std::size_t>(vi)] = {top, Eigen::VectorXd(ch.col(i))};
      }
    }
    std::vector<int> interior_index(static_cast<std::size_t>((n + 1) * (n + 1)), -1);
    for (int a = 1; a < n; ++a)
      for (int b = 1; a + b < n; ++b) {
        interior_index[static_cast<std::size_t>(a * (n + 1) + b)] = static_cast<int>(mesh.node_points_.size());
        mesh.node_points_.push_back({top, Eigen::VectorXd(point(a, b))});
      }
    auto node = [&](int a, int b) -> int {
      const int i = n - a - b;
      if (a == 0 && b == 0) return c.index_of({s[0]});
      if (a == n) return c.index_of({s[1]});
      if (b == n) return c.index_of({s[2]});
      if (b == 0) return edge_base[static_cast<std::size_t>(e01)] + a - 1;
      if (a == 0) return edge_base[static_cast<std::size_t>(e02)] + b - 1;
      if (i == 0) return edge_base[static_cast<std::size_t>(e12)] + b - 1;
      return interior_index[static_cast<std::size_t>(a * (n + 1) + b)];
    };
    auto add = [&](std::array<int, 2> p, std::array<int, 2> q, std::array<int, 2> r, std::size_t slot) {
      const int id = static_cast<int>(mesh.elements_.size());
      mesh.elements_.push_back({node(p[0], p[1]), node(q[0], q[1]), node(r[0], r[1])});
      mesh.parent_.push_back(top);
      mesh.coords_.push_back({point(p[0], p[1]), point(q[0], q[1]), point(r[0], r[1])});
      mesh.element_at_[t][slot] = id;
      return id;
    };
    for (int a = 0; a < n; ++a)
      for (int b = 0; a + b < n; ++b) {
        add({a, b}, {a + 1, b}, {a, b + 1}, static_cast<std::size_t>(a * n + b));
        if (a + b < n - 1) add({a + 1, b}, {a + 1, b + 1}, {a, b + 1}, static_cast<std::size_t>(n * n + a * n + b));
      }
    auto record_facet = [&](int e, int k, int elem) {
      auto& slot = mesh.facet_elements_[static_cast<std::size_t>(e)][static_cast<std::size_t>(k)];
      (slot[0] < 0 ? slot[0] : slot[1]) = elem;
    };
    for (int k = 0; k < n; ++k) {
      record_facet(e01, k, mesh.element_at_[t][static_cast<std::size_t>(k * n)]);
      record_facet(e02, k, mesh.element_at_[t][static_cast<std::size_t>(k)]);
      record_facet(e12, k, mesh.element_at_[t][static_cast<std::size_t>((n - k - 1) * n + k)]);
    }
  }

  for (std::size_t v = 0; v < nv; ++v)
    if (!vertex_seen[v])
      throw MeshError("vertex " + std::to_string(c.simplices(0)[v][0]) +
                      " lies in no triangle; the complex is not dimensionally homogeneous");
  for (std::size_t e = 0; e < mesh.elements_.size(); ++e) {
    const auto& p = mesh.coords_[e];
    const Eigen::Vector2d centroid = (p[0] + p[1] + p[2]) / 3.0;
    const Eigen::Matrix2d g = m.on(mesh.parent_[e]).value(centroid);
    const double ar = aspect_ratio(p, g);
    mesh.max_aspect_ = std::max(mesh.max_aspect_, ar);
    if (ar > 50.0)
      throw MeshError("degenerate element in simplex " + std::to_string(mesh.parent_[e]) + " (aspect ratio " +
                      std::to_string(ar) + " > 50)");
  }
  return mesh;
}

}  // namespace polyspec
