#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "polyspec/eigensolver.hpp"
#include "polyspec/error.hpp"
#include "polyspec/fem.hpp"
#include "polyspec/mesh.hpp"
#include "support.hpp"

using namespace polyspec;
using testing::vec;

TEST_CASE("refinement is conforming across interfaces") {
  const auto poly = load_polyhedron(testing::fixture_path("two_rectangle.poly"));
  const auto& c = poly.complex;
  const Mesh mesh = refine(c, poly.metric, 0.1);
  for (const auto& f : classify_facets(c)) {
    const auto& nodes = mesh.facet_nodes(f.facet);
    CHECK(static_cast<int>(nodes.size()) == mesh.subdivisions() + 1);
    if (f.kind != FacetKind::Interface) continue;
    for (int k = 0; k < mesh.subdivisions(); ++k) {
      const int a = mesh.facet_element(f.facet, k, f.minus), b = mesh.facet_element(f.facet, k, f.plus);
      CHECK(mesh.parent(a) == f.minus);
      CHECK(mesh.parent(b) == f.plus);
      // Both elements carry the same segment endpoints.
      auto has = [&](int e, int node) {
        const auto& el = mesh.element(e);
        return std::find(el.begin(), el.end(), node) != el.end();
      };
      const int n0 = nodes[static_cast<std::size_t>(k)], n1 = nodes[static_cast<std::size_t>(k + 1)];
      CHECK((has(a, n0) && has(a, n1) && has(b, n0) && has(b, n1)));
    }
  }
  // Every element lies inside its parent simplex.
  for (std::size_t e = 0; e < mesh.element_count(); ++e)
    for (const auto& x : mesh.element_coords(static_cast<int>(e)))
      CHECK(c.barycentric(mesh.parent(static_cast<int>(e)), x).minCoeff() > -1e-12);
}

TEST_CASE("halving h quadruples the element count") {
  const auto c = testing::unit_square();
  const auto m = PiecewiseMetric::uniform(c, Eigen::MatrixXd::Identity(2, 2));
  const Mesh a = refine(c, m, 0.1), b = refine(c, m, 0.05);
  const double ratio = static_cast<double>(b.element_count()) / static_cast<double>(a.element_count());
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("degenerate elements are rejected") {
  ComplexInput in;
  in.dim = 2;
  in.coordinates = {{0, vec({0, 0})}, {1, vec({1, 0})}, {2, vec({0.5, 0.005})}};
  in.simplices = {{0, 1, 2}};
  const auto c = build_complex(in);
  CHECK_THROWS_AS(refine(c, PiecewiseMetric::uniform(c, Eigen::MatrixXd::Identity(2, 2)), 0.1), MeshError);
}

TEST_CASE("assembled forms") {
  const auto poly = load_polyhedron(testing::fixture_path("two_rectangle.poly"));
  const Mesh mesh = refine(poly.complex, poly.metric, 0.1);
  const Forms f = assemble_forms(mesh, poly.metric);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(mesh.node_count()));
  CHECK((f.stiffness * ones).cwiseAbs().maxCoeff() < 1e-12);
  // Area: 1 on the left, sqrt(det diag(1,4)) = 2 on the right.
  CHECK(ones.dot(f.mass * ones) == doctest::Approx(3.0).epsilon(1e-12));
  const SparseMatrix kt = f.stiffness.transpose(), mt = f.mass.transpose();
  CHECK((f.stiffness - kt).norm() < 1e-12);
  CHECK((f.mass - mt).norm() < 1e-12);

  SUBCASE("scaling g by c keeps K and scales M by c in 2D") {
    PiecewiseMetric scaled = poly.metric;
    for (auto& fld : scaled.fields) {
      MetricField s(2);
      for (int i = 0; i < 2; ++i)
        for (int j = i; j < 2; ++j)
          for (const auto& [e, v] : fld.entry(i, j).terms()) s.add_term(i, j, e, 3.0 * v);
      fld = s;
    }
    const Forms g = assemble_forms(mesh, scaled);
    CHECK((g.stiffness - f.stiffness).norm() < 1e-10 * f.stiffness.norm());
    CHECK((g.mass - 3.0 * f.mass).norm() < 1e-12 * f.mass.norm());
  }
  SUBCASE("serial and parallel element kernels agree exactly") {
    const auto a = element_matrices(mesh, poly.metric, Execution::Serial);
    const auto b = element_matrices(mesh, poly.metric, Execution::Parallel);
    REQUIRE(a.size() == b.size());
    bool same = true;
    for (std::size_t e = 0; e < a.size(); ++e)
      same = same && a[e].stiffness == b[e].stiffness && a[e].mass == b[e].mass;
    CHECK(same);
  }
}

TEST_CASE("flat square Neumann spectrum") {
  const auto c = testing::unit_square();
  const auto m = PiecewiseMetric::uniform(c, Eigen::MatrixXd::Identity(2, 2));
  const Mesh mesh = refine(c, m, 0.05);
  const Forms f = assemble_forms(mesh, m);
  const auto es = solve_eigen(f, 8);
  const double pi2 = M_PI * M_PI;
  const std::vector<double> exact = {0, pi2, pi2, 2 * pi2, 4 * pi2, 4 * pi2, 5 * pi2, 5 * pi2};
  CHECK(std::abs(es.values(0)) < 1e-8);
  for (int k = 1; k < 8; ++k) CHECK(std::abs(es.values(k) - exact[static_cast<std::size_t>(k)]) / exact[static_cast<std::size_t>(k)] < 0.02);
  const Eigen::VectorXd v0 = es.vectors.col(0);
  CHECK((v0.array() - v0.mean()).abs().maxCoeff() / std::abs(v0.mean()) < 1e-6);
  CHECK(es.gram_error < 1e-8);
}

TEST_CASE("dense and Lanczos paths agree") {
  const auto poly = load_polyhedron(testing::fixture_path("two_rectangle.poly"));
  const Mesh mesh = refine(poly.complex, poly.metric, 0.08);
  const Forms f = assemble_forms(mesh, poly.metric);
  EigenOptions dense, lanczos;
  lanczos.dense_limit = 10;
  const auto a = solve_eigen(f, 12, dense), b = solve_eigen(f, 12, lanczos);
  CHECK(a.method == "dense");
  CHECK(b.method == "lanczos");
  for (int k = 0; k < 12; ++k) CHECK(std::abs(a.values(k) - b.values(k)) < 1e-8 * (1 + a.values(k)));
}

TEST_CASE("spectral convergence on the flat square") {
  const auto c = testing::unit_square();
  const auto m = PiecewiseMetric::uniform(c, Eigen::MatrixXd::Identity(2, 2));
  const double pi2 = M_PI * M_PI;
  std::vector<double> exact;
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) exact.push_back(pi2 * (a * a + b * b));
  std::sort(exact.begin(), exact.end());
  Eigen::VectorXd previous;
  for (double h : {0.2, 0.1, 0.05}) {
    const Mesh mesh = refine(c, m, h);
    const auto es = solve_eigen(assemble_forms(mesh, m), 10);
    if (previous.size())
      for (int k = 1; k < 10; ++k)
        CHECK(std::abs(es.values(k) - exact[static_cast<std::size_t>(k)]) <
              std::abs(previous(k) - exact[static_cast<std::size_t>(k)]));
    previous = es.values;
  }
}
