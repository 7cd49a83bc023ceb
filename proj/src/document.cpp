#include "polyspec/document.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>

#include "polyspec/error.hpp"
#include "polyspec/io.hpp"

namespace polyspec {

namespace {

struct Token {
  std::string text;
  int column = 0;
};

struct Line {
  int number = 0;
  std::vector<Token> tokens;
};

std::vector<Line> tokenize(const std::string& text) {
  std::vector<Line> out;
  std::istringstream in(text);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    Line line{number, {}};
    std::size_t i = 0;
    while (i < raw.size()) {
      while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
      if (i >= raw.size()) break;
      const std::size_t start = i;
      while (i < raw.size() && !std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
      line.tokens.push_back({raw.substr(start, i - start), static_cast<int>(start) + 1});
    }
    if (!line.tokens.empty()) out.push_back(std::move(line));
  }
  return out;
}

double to_double(const Line& l, const Token& t) {
  char* end = nullptr;
  const double v = std::strtod(t.text.c_str(), &end);
  if (t.text.empty() || *end != '\0' || !std::isfinite(v))
    throw ParseError(l.number, t.column, "expected a number, got '" + t.text + "'");
  return v;
}

long long to_int(const Line& l, const Token& t) {
  char* end = nullptr;
  const long long v = std::strtoll(t.text.c_str(), &end, 10);
  if (t.text.empty() || *end != '\0') throw ParseError(l.number, t.column, "expected an integer, got '" + t.text + "'");
  return v;
}

void expect_count(const Line& l, std::size_t n, const std::string& what) {
  if (l.tokens.size() != n)
    throw ParseError(l.number, l.tokens.back().column,
                     what + " expects " + std::to_string(n - 1) + " fields, got " + std::to_string(l.tokens.size() - 1));
}

struct MetricLine {
  int line = 0;
  long long simplex = -1;  // -1 for '*'
  int i = 0, j = 0;
  std::vector<int> exps;
  double coeff = 0.0;
};

bool is_default_chart(const SimplicialComplex& c, const std::map<VertexId, Eigen::VectorXd>& coords, int top) {
  const Simplex& s = c.simplices(c.dim())[static_cast<std::size_t>(top)];
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto it = coords.find(s[i]);
    if (it == coords.end() || it->second != c.chart(top).col(static_cast<Eigen::Index>(i))) return false;
  }
  return true;
}

}  // namespace

Polyhedron parse_polyhedron(const std::string& text) {
  const auto lines = tokenize(text);
  if (lines.empty()) throw ParseError(1, 1, "empty document");
  {
    const Line& h = lines.front();
    if (h.tokens[0].text != "polyhedron") throw ParseError(h.number, 1, "document must start with 'polyhedron <version>'");
    expect_count(h, 2, "polyhedron");
    if (h.tokens[1].text != "1") throw ParseError(h.number, h.tokens[1].column, "unsupported version " + h.tokens[1].text);
  }
  int dim = 0;
  ComplexInput input;
  std::map<VertexId, int> vertex_line;
  std::vector<int> top_line;
  std::set<Simplex> seen_tops;
  std::vector<std::pair<Line, long long>> chart_lines;
  std::vector<MetricLine> metric_lines;
  std::vector<std::pair<Line, std::string>> boundary_lines;
  bool ended = false;

  auto vertex_ids = [&](const Line& l, std::size_t from) {
    Simplex s;
    for (std::size_t k = from; k < l.tokens.size(); ++k) {
      const long long id = to_int(l, l.tokens[k]);
      if (!input.coordinates.count(static_cast<VertexId>(id)))
        throw ParseError(l.number, l.tokens[k].column, "unknown vertex " + l.tokens[k].text);
      if (std::find(s.begin(), s.end(), static_cast<VertexId>(id)) != s.end())
        throw ParseError(l.number, l.tokens[k].column, "vertex " + l.tokens[k].text + " repeated in simplex");
      s.push_back(static_cast<VertexId>(id));
    }
    return s;
  };

  for (std::size_t li = 1; li < lines.size(); ++li) {
    const Line& l = lines[li];
    const std::string& kw = l.tokens[0].text;
    if (ended) throw ParseError(l.number, 1, "content after 'end'");
    if (kw == "end") {
      expect_count(l, 1, "end");
      ended = true;
    } else if (kw == "dim") {
      expect_count(l, 2, "dim");
      if (dim != 0) throw ParseError(l.number, 1, "dim given twice");
      const long long d = to_int(l, l.tokens[1]);
      if (d < 1 || d > 8) throw ParseError(l.number, l.tokens[1].column, "dimension must be between 1 and 8");
      dim = static_cast<int>(d);
    } else if (dim == 0) {
      throw ParseError(l.number, 1, "'dim' must precede '" + kw + "'");
    } else if (kw == "vertex") {
      expect_count(l, static_cast<std::size_t>(2 + dim), "vertex");
      const auto id = static_cast<VertexId>(to_int(l, l.tokens[1]));
      if (input.coordinates.count(id)) throw ParseError(l.number, l.tokens[1].column, "duplicate vertex " + l.tokens[1].text);
      Eigen::VectorXd x(dim);
      for (int k = 0; k < dim; ++k) x(k) = to_double(l, l.tokens[static_cast<std::size_t>(2 + k)]);
      input.coordinates[id] = x;
      vertex_line[id] = l.number;
    } else if (kw == "simplex") {
      if (l.tokens.size() < 2 || l.tokens.size() > static_cast<std::size_t>(dim + 2))
        throw ParseError(l.number, 1, "simplex must list 1 to " + std::to_string(dim + 1) + " vertices");
      Simplex s = vertex_ids(l, 1);
      if (static_cast<int>(s.size()) == dim + 1) {
        Simplex sorted = s;
        std::sort(sorted.begin(), sorted.end());
        if (!seen_tops.insert(sorted).second) throw ParseError(l.number, 1, "duplicate n-simplex");
        ComplexInput single;
        single.dim = dim;
        single.simplices = {s};
        single.coordinates = input.coordinates;
        try {
          build_complex(single);
        } catch (const ComplexError& e) {
          throw ParseError(l.number, 1, e.what());
        }
        input.simplices.push_back(s);
        top_line.push_back(l.number);
      } else {
        input.lower.push_back(s);
      }
    } else if (kw == "chart") {
      expect_count(l, static_cast<std::size_t>(2 + dim * (dim + 1)), "chart");
      chart_lines.emplace_back(l, to_int(l, l.tokens[1]));
    } else if (kw == "metric") {
      expect_count(l, static_cast<std::size_t>(5 + dim), "metric");
      MetricLine ml;
      ml.line = l.number;
      ml.simplex = l.tokens[1].text == "*" ? -1 : to_int(l, l.tokens[1]);
      if (ml.simplex < -1) throw ParseError(l.number, l.tokens[1].column, "negative simplex index");
      ml.i = static_cast<int>(to_int(l, l.tokens[2]));
      ml.j = static_cast<int>(to_int(l, l.tokens[3]));
      if (ml.i < 0 || ml.i >= dim) throw ParseError(l.number, l.tokens[2].column, "metric row out of range");
      if (ml.j < 0 || ml.j >= dim) throw ParseError(l.number, l.tokens[3].column, "metric column out of range");
      int degree = 0;
      for (int k = 0; k < dim; ++k) {
        const long long e = to_int(l, l.tokens[static_cast<std::size_t>(4 + k)]);
        if (e < 0) throw ParseError(l.number, l.tokens[static_cast<std::size_t>(4 + k)].column, "negative exponent");
        ml.exps.push_back(static_cast<int>(e));
        degree += static_cast<int>(e);
      }
      if (degree > 4) throw ParseError(l.number, l.tokens[4].column, "metric monomials are limited to degree 4");
      ml.coeff = to_double(l, l.tokens.back());
      metric_lines.push_back(ml);
    } else if (kw == "boundary") {
      expect_count(l, static_cast<std::size_t>(2 + dim), "boundary");
      boundary_lines.emplace_back(l, l.tokens[1].text);
    } else {
      throw ParseError(l.number, 1, "unknown keyword '" + kw + "'");
    }
  }
  if (!ended) throw ParseError(lines.back().number, 1, "missing 'end'");
  if (input.simplices.empty()) throw ParseError(lines.back().number, 1, "no n-simplices");
  input.dim = dim;

  for (const auto& [l, k] : chart_lines) {
    if (k < 0 || k >= static_cast<long long>(input.simplices.size()))
      throw ParseError(l.number, l.tokens[1].column, "chart refers to unknown simplex " + l.tokens[1].text);
    Eigen::MatrixXd ch(dim, dim + 1);
    for (int col = 0; col <= dim; ++col)
      for (int row = 0; row < dim; ++row) ch(row, col) = to_double(l, l.tokens[static_cast<std::size_t>(2 + col * dim + row)]);
    input.chart_overrides[static_cast<std::size_t>(k)] = ch;
  }

  Polyhedron p;
  try {
    p.complex = build_complex(input);
  } catch (const ComplexError& e) {
    throw ParseError(lines.back().number, 1, e.what());
  }
  p.coordinates = input.coordinates;
  const SimplicialComplex& c = p.complex;
  const std::size_t ntop = c.count(dim);

  p.metric.dim = dim;
  p.metric.fields.assign(ntop, MetricField(dim));
  std::vector<int> first_metric_line(ntop, 0);
  for (const MetricLine& ml : metric_lines) {
    if (ml.simplex >= static_cast<long long>(ntop))
      throw ParseError(ml.line, 8, "metric refers to unknown simplex " + std::to_string(ml.simplex));
    std::vector<int> targets;
    if (ml.simplex < 0)
      for (std::size_t t = 0; t < ntop; ++t) targets.push_back(static_cast<int>(t));
    else
      targets.push_back(c.canonical_index(static_cast<std::size_t>(ml.simplex)));
    for (int t : targets) {
      p.metric.fields[static_cast<std::size_t>(t)].add_term(ml.i, ml.j, ml.exps, ml.coeff);
      if (!first_metric_line[static_cast<std::size_t>(t)]) first_metric_line[static_cast<std::size_t>(t)] = ml.line;
    }
  }
  for (std::size_t t = 0; t < ntop; ++t) {
    MetricField& f = p.metric.fields[t];
    bool empty = true;
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j) empty = empty && f.entry(i, j).is_zero();
    if (empty && !first_metric_line[t]) f = MetricField::constant(Eigen::MatrixXd::Identity(dim, dim));
    const double lo = min_metric_eigenvalue(c, f, static_cast<int>(t));
    if (!(lo > 1e-10)) {
      const int line = first_metric_line[t] ? first_metric_line[t] : lines.back().number;
      throw ParseError(line, 1, "metric on simplex " + std::to_string(t) +
                                    " is not positive definite (min eigenvalue " + format_double(lo) + ")");
    }
  }

  for (const auto& [l, name] : boundary_lines) {
    Simplex s = vertex_ids(l, 2);
    std::sort(s.begin(), s.end());
    const int f = c.index_of(s);
    if (f < 0 || static_cast<int>(s.size()) != dim) throw ParseError(l.number, l.tokens[2].column, "boundary entry is not a facet");
    if (c.cofaces(f).size() != 1) throw ParseError(l.number, l.tokens[2].column, "facet is not on the boundary");
    auto& set = p.subsets[name];
    if (std::find(set.begin(), set.end(), f) == set.end()) set.push_back(f);
  }
  for (auto& [name, set] : p.subsets) std::sort(set.begin(), set.end());
  return p;
}

std::string emit_polyhedron(const Polyhedron& p) {
  const SimplicialComplex& c = p.complex;
  const int n = c.dim();
  std::string out = "polyhedron 1\ndim " + std::to_string(n) + "\n";
  for (const auto& [id, x] : p.coordinates) {
    out += "vertex " + std::to_string(id);
    for (Eigen::Index k = 0; k < x.size(); ++k) out += " " + format_double(x(k));
    out += "\n";
  }
  auto ids = [](const Simplex& s) {
    std::string r;
    for (VertexId v : s) r += " " + std::to_string(v);
    return r;
  };
  for (const Simplex& s : c.simplices(n)) out += "simplex" + ids(s) + "\n";
  // Maximal simplices not covered by any n-simplex.
  const auto offenders = check_dimensional_homogeneity(c).offenders;
  for (const Simplex& s : offenders) {
    bool maximal = true;
    for (const Simplex& o : offenders)
      if (o.size() > s.size() && std::includes(o.begin(), o.end(), s.begin(), s.end())) maximal = false;
    if (maximal) out += "simplex" + ids(s) + "\n";
  }
  for (std::size_t t = 0; t < c.count(n); ++t) {
    if (is_default_chart(c, p.coordinates, static_cast<int>(t))) continue;
    out += "chart " + std::to_string(t);
    const Eigen::MatrixXd& ch = c.chart(static_cast<int>(t));
    for (Eigen::Index col = 0; col < ch.cols(); ++col)
      for (Eigen::Index row = 0; row < ch.rows(); ++row) out += " " + format_double(ch(row, col));
    out += "\n";
  }
  for (std::size_t t = 0; t < p.metric.fields.size(); ++t)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        for (const auto& [exps, coeff] : p.metric.fields[t].entry(i, j).terms()) {
          out += "metric " + std::to_string(t) + " " + std::to_string(i) + " " + std::to_string(j);
          for (int e : exps) out += " " + std::to_string(e);
          out += " " + format_double(coeff) + "\n";
        }
  for (const auto& [name, facets] : p.subsets)
    for (int f : facets) out += "boundary " + name + ids(c.simplices(n - 1)[static_cast<std::size_t>(f)]) + "\n";
  out += "end\n";
  return out;
}

Polyhedron load_polyhedron(const std::string& path) { return parse_polyhedron(read_file(path)); }

}  // namespace polyspec
