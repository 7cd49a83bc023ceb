#include <doctest.h>

#include "polyspec/error.hpp"
#include <cstring>

#include "polyspec/io.hpp"
#include "support.hpp"

using namespace polyspec;

namespace {

int error_line(const std::string& text) {
  try {
    parse_polyhedron(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

const char* kHeader = "polyhedron 1\ndim 2\nvertex 0 0 0\nvertex 1 1 0\nvertex 2 0 1\n";

}  // namespace

TEST_CASE("two-triangle fixture parses with one interface") {
  const auto p = load_polyhedron(testing::fixture_path("flat_square.poly"));
  const auto classes = classify_facets(p.complex);
  CHECK(std::count_if(classes.begin(), classes.end(),
                      [](const FacetClass& f) { return f.kind == FacetKind::Interface; }) == 1);
  CHECK(p.subsets.at("bottom") == std::vector<int>{testing::edge(p.complex, 0, 1)});
  CHECK(p.metric.on(0) == MetricField::constant(Eigen::MatrixXd::Identity(2, 2)));
}

TEST_CASE("positioned errors") {
  const std::string h = kHeader;
  CHECK(error_line(h + "simplex 0 1 2\nmetric 0 1 1 0 0 -1\nend\n") == 7);
  CHECK(error_line(h + "simplex 0 1 7\nend\n") == 6);
  CHECK(error_line(h + "simplex 0 1\nsimplex 0 1 2 2\nend\n") == 7);
  CHECK(error_line(h + "simplex 0 1 2\nsimplex 2 1 0\nend\n") == 7);
  CHECK(error_line(h + "vertex 1 3 3\nend\n") == 6);
  CHECK(error_line(h + "simplex 0 1 2\nfrobnicate\nend\n") == 7);
  CHECK(error_line(h + "simplex 0 1 2\nmetric 0 0 0 0 x 1\nend\n") == 7);
  CHECK(error_line(h + "simplex 0 1 2\n") == 6);
  CHECK(error_line("polyhedron 2\ndim 2\nend\n") == 1);
  CHECK(error_line(h + "simplex 0 1 2\nboundary b 0 2\nboundary c 1 5\nend\n") == 8);
  try {
    parse_polyhedron(h + "simplex 0 1 2\nmetric 0 0 0 0 x 1\nend\n");
  } catch (const ParseError& e) {
    CHECK(e.column() == 16);
  }
}

TEST_CASE("emit(parse(doc)) is the canonical form") {
  const std::string messy =
      "# comment\npolyhedron 1\ndim 2\nvertex 3 1 1\nvertex 0 0 0\nvertex 2 0 1\nvertex 1 1 0\n"
      "simplex 3 2 0   # reversed\nsimplex 1 3 0\n"
      "metric 1 1 1 0 0 2.5\nmetric 1 0 0 0 0 1\nmetric 1 0 1 1 0 0.1\n"
      "boundary left 2 0\nend\n";
  const auto p = parse_polyhedron(messy);
  const std::string canonical = emit_polyhedron(p);
  CHECK(emit_polyhedron(parse_polyhedron(canonical)) == canonical);
  const auto q = parse_polyhedron(canonical);
  CHECK(q.complex.simplices(2) == p.complex.simplices(2));
  CHECK(q.metric.fields == p.metric.fields);
  CHECK(q.subsets == p.subsets);
  // Input simplex 1 (1 3 0) is canonical simplex {0,1,3}; it carries the metric.
  const int top = p.complex.index_of({0, 1, 3});
  CHECK(p.metric.on(top).value(testing::vec({0.5, 0.5}))(1, 1) == doctest::Approx(2.5));
  CHECK(canonical.find("simplex 0 1 3\n") != std::string::npos);
}

TEST_CASE("fixtures round trip") {
  for (const char* name : {"fig1_a.poly", "fig1_b.poly", "fig1_c.poly", "two_rectangle.poly", "smooth_rectangle.poly"}) {
    const auto p = load_polyhedron(testing::fixture_path(name));
    const std::string once = emit_polyhedron(p);
    CHECK(emit_polyhedron(parse_polyhedron(once)) == once);
  }
}

TEST_CASE("chart overrides survive emit") {
  const std::string doc = std::string(kHeader) + "simplex 0 1 2\nchart 0 0 0 2 0 0 2\nend\n";
  const auto p = parse_polyhedron(doc);
  CHECK(p.complex.chart(0)(0, 1) == 2.0);
  const std::string out = emit_polyhedron(p);
  CHECK(out.find("chart 0 0 0 2 0 0 2\n") != std::string::npos);
  CHECK(emit_polyhedron(parse_polyhedron(out)) == out);
}

TEST_CASE("binary matrix encoding round trips bit-exactly") {
  Eigen::MatrixXd a(3, 2);
  a << 1.0, -0.0, 1e-300, 3.141592653589793, -2.5e17, 0.1;
  const Eigen::MatrixXd b = decode_matrix(encode_matrix(a));
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * 6) == 0);
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(-0.0) == "0");
}
