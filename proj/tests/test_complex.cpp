#include <doctest.h>

#include <algorithm>
#include <queue>
#include <random>

#include "polyspec/error.hpp"
#include "support.hpp"

using namespace polyspec;
using testing::vec;

namespace {

ComplexInput fan(int blades) {
  ComplexInput in;
  in.dim = 2;
  in.coordinates[0] = vec({0.0, 0.0});
  for (int k = 0; k < blades; ++k) {
    const double a = 2.0 * M_PI * k / blades;
    in.coordinates[k + 1] = vec({std::cos(a), std::sin(a)});
  }
  for (int k = 0; k < blades; ++k) in.simplices.push_back({0, k + 1, (k + 1) % blades + 1});
  return in;
}

// Reference dual-graph connectivity by breadth-first search over shared facets.
bool bfs_connected(const SimplicialComplex& c, const std::vector<int>& removed) {
  const auto& tops = c.simplices(c.dim());
  auto shares_facet = [&](const Simplex& a, const Simplex& b) {
    Simplex common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    if (static_cast<int>(common.size()) != c.dim()) return false;
    return std::find(removed.begin(), removed.end(), c.index_of(common)) == removed.end();
  };
  std::vector<char> seen(tops.size(), 0);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = 1;
  while (!q.empty()) {
    const std::size_t a = q.front();
    q.pop();
    for (std::size_t b = 0; b < tops.size(); ++b)
      if (!seen[b] && shares_facet(tops[a], tops[b])) {
        seen[b] = 1;
        q.push(b);
      }
  }
  return std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; });
}

}  // namespace

TEST_CASE("two glued triangles: one interface, four boundary edges") {
  const auto c = testing::unit_square();
  const auto classes = classify_facets(c);
  CHECK(classes.size() == 5);
  const auto interfaces = std::count_if(classes.begin(), classes.end(), [](const FacetClass& f) {
    return f.kind == FacetKind::Interface;
  });
  CHECK(interfaces == 1);
  CHECK(skeleton(c, 0).size() == 4);
  CHECK(skeleton(c, 2).size() == 2);
  CHECK_THROWS_AS(skeleton(c, 3), ComplexError);
  CHECK_THROWS_AS(skeleton(c, -1), ComplexError);
}

TEST_CASE("single triangle has only boundary edges") {
  ComplexInput in;
  in.dim = 2;
  in.coordinates = {{0, vec({0, 0})}, {1, vec({1, 0})}, {2, vec({0, 1})}};
  in.simplices = {{0, 1, 2}};
  const auto c = build_complex(in);
  for (const auto& f : classify_facets(c)) CHECK(f.kind == FacetKind::Boundary);
  CHECK(check_chainability(c));
  CHECK(check_dimensional_homogeneity(c).homogeneous);
}

TEST_CASE("build_complex rejects bad input") {
  ComplexInput in;
  in.dim = 2;
  in.coordinates = {{0, vec({0, 0})}, {1, vec({1, 0})}, {2, vec({0, 1})}, {3, vec({1, 1})}};
  SUBCASE("wrong arity") {
    in.simplices = {{0, 1}};
    CHECK_THROWS_AS(build_complex(in), ComplexError);
  }
  SUBCASE("duplicate simplex under reordering") {
    in.simplices = {{0, 1, 2}, {2, 0, 1}};
    CHECK_THROWS_AS(build_complex(in), ComplexError);
  }
  SUBCASE("repeated vertex") {
    in.simplices = {{0, 0, 2}};
    CHECK_THROWS_AS(build_complex(in), ComplexError);
  }
  SUBCASE("degenerate chart") {
    in.coordinates[2] = vec({2, 0});
    in.simplices = {{0, 1, 2}};
    CHECK_THROWS_AS(build_complex(in), ComplexError);
  }
}

TEST_CASE("facet with three cofaces is non-manifold") {
  ComplexInput in;
  in.dim = 2;
  in.coordinates = {{0, vec({0, 0})}, {1, vec({1, 0})}, {2, vec({0.5, 1})}, {3, vec({0.5, -1})}, {4, vec({0.2, 0.5})}};
  in.simplices = {{0, 1, 2}, {0, 1, 3}, {0, 1, 4}};
  const auto c = build_complex(in);
  // Brute-force coface count of edge {0,1}.
  int count = 0;
  for (const auto& t : c.simplices(2)) count += (std::find(t.begin(), t.end(), 0) != t.end() &&
                                                 std::find(t.begin(), t.end(), 1) != t.end());
  CHECK(count == 3);
  CHECK_THROWS_WITH_AS(classify_facets(c), doctest::Contains("non-manifold"), ComplexError);
}

TEST_CASE("dangling edge breaks dimensional homogeneity") {
  ComplexInput in;
  in.dim = 2;
  in.coordinates = {{0, vec({0, 0})}, {1, vec({1, 0})}, {2, vec({0, 1})}, {3, vec({-1, 2})}};
  in.simplices = {{0, 1, 2}};
  in.lower = {{3, 2}};
  const auto c = build_complex(in);
  const auto v = check_dimensional_homogeneity(c);
  CHECK_FALSE(v.homogeneous);
  REQUIRE(!v.offenders.empty());
  CHECK(std::find(v.offenders.begin(), v.offenders.end(), Simplex{2, 3}) != v.offenders.end());
}

TEST_CASE("chainability") {
  SUBCASE("vertex-pinched pair is not chainable") {
    ComplexInput in;
    in.dim = 2;
    in.coordinates = {{0, vec({0, 0})}, {1, vec({1, 0})}, {2, vec({0.5, 1})}, {3, vec({1, 2})}, {4, vec({0, 2})}};
    in.simplices = {{0, 1, 2}, {2, 3, 4}};
    CHECK_FALSE(check_chainability(build_complex(in)));
  }
  SUBCASE("ten-blade fan matches breadth-first search") {
    const auto c = build_complex(fan(10));
    CHECK(check_chainability(c));
    CHECK(check_chainability(c) == bfs_connected(c, {}));
  }
  SUBCASE("removing interfaces never reconnects") {
    const auto c = build_complex(fan(10));
    std::vector<int> interfaces;
    for (const auto& f : classify_facets(c))
      if (f.kind == FacetKind::Interface) interfaces.push_back(f.facet);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<int> removed;
      bool previous = true;
      auto pool = interfaces;
      std::shuffle(pool.begin(), pool.end(), rng);
      for (int f : pool) {
        removed.push_back(f);
        const bool now = check_chainability(c, removed);
        CHECK(now == bfs_connected(c, removed));
        CHECK(!(now && !previous));
        previous = now;
      }
    }
  }
}

TEST_CASE("facet classification partitions the facets") {
  const auto c = build_complex(fan(7));
  const auto classes = classify_facets(c);
  CHECK(classes.size() == c.count(1));
  for (const auto& f : classes) {
    CHECK((f.kind == FacetKind::Interface) == (c.cofaces(f.facet).size() == 2));
    CHECK((f.kind == FacetKind::Boundary) == (c.cofaces(f.facet).size() == 1));
  }
}

TEST_CASE("build_complex is invariant under reordering the input") {
  auto in = fan(6);
  const auto a = build_complex(in);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto shuffled = in;
    std::shuffle(shuffled.simplices.begin(), shuffled.simplices.end(), rng);
    for (auto& s : shuffled.simplices) std::shuffle(s.begin(), s.end(), rng);
    const auto b = build_complex(shuffled);
    for (int k = 0; k <= 2; ++k) CHECK(a.simplices(k) == b.simplices(k));
    for (std::size_t t = 0; t < a.count(2); ++t)
      CHECK((a.chart(static_cast<int>(t)) - b.chart(static_cast<int>(t))).norm() == 0.0);
  }
}

TEST_CASE("stored simplices are closed under faces") {
  const auto c = build_complex(fan(5));
  for (int k = 1; k <= 2; ++k)
    for (const auto& s : c.simplices(k))
      for (std::size_t drop = 0; drop < s.size(); ++drop) {
        Simplex f;
        for (std::size_t i = 0; i < s.size(); ++i)
          if (i != drop) f.push_back(s[i]);
        CHECK(c.index_of(f) >= 0);
      }
}

TEST_CASE("barycentric round trip and facet points") {
  const auto c = testing::unit_square();
  const Eigen::VectorXd x = vec({0.6, 0.3});
  const auto b = c.barycentric(0, x);
  CHECK(b.sum() == doctest::Approx(1.0));
  CHECK((c.from_barycentric(0, b) - x).norm() < 1e-14);
  const int diag = testing::edge(c, 0, 3);
  const auto p = c.facet_point(0, diag, vec({0.25, 0.75}));
  CHECK((p - vec({0.75, 0.75})).norm() < 1e-14);
  CHECK((c.facet_weights(1, diag, p) - vec({0.25, 0.75})).norm() < 1e-14);
  CHECK(c.neighbor(0, diag) == 1);
  CHECK(c.neighbor(0, testing::edge(c, 0, 1)) == -1);
}
