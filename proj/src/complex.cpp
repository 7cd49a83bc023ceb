#include "polyspec/complex.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <string>

#include "polyspec/error.hpp"

namespace polyspec {

namespace {

std::string describe(const Simplex& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

// All non-empty subsets of s, each sorted because s is.
void insert_faces(const Simplex& s, std::vector<std::set<Simplex>>& by_dim) {
  const std::size_t m = s.size();
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    Simplex face;
    for (std::size_t i = 0; i < m; ++i)
      if (mask & (1u << i)) face.push_back(s[i]);
    by_dim[face.size() - 1].insert(std::move(face));
  }
}

}  // namespace

const std::vector<Simplex>& SimplicialComplex::simplices(int k) const {
  if (k < 0 || k > dim_) throw ComplexError("skeleton dimension " + std::to_string(k) + " out of range");
  return simplices_[static_cast<std::size_t>(k)];
}

int SimplicialComplex::index_of(const Simplex& s) const {
  auto it = index_.find(s);
  return it == index_.end() ? -1 : it->second;
}

int SimplicialComplex::local_vertex(int top, VertexId v) const {
  const Simplex& s = simplices_[static_cast<std::size_t>(dim_)][static_cast<std::size_t>(top)];
  auto it = std::find(s.begin(), s.end(), v);
  return it == s.end() ? -1 : static_cast<int>(it - s.begin());
}

Eigen::VectorXd SimplicialComplex::barycentric(int top, const Eigen::VectorXd& x) const {
  Eigen::VectorXd rhs(dim_ + 1);
  rhs.head(dim_) = x;
  rhs(dim_) = 1.0;
  return bary_inverse_[static_cast<std::size_t>(top)] * rhs;
}

Eigen::VectorXd SimplicialComplex::from_barycentric(int top, const Eigen::VectorXd& bary) const {
  return charts_[static_cast<std::size_t>(top)] * bary;
}

Eigen::VectorXd SimplicialComplex::facet_point(int top, int facet, const Eigen::VectorXd& facet_bary) const {
  const Simplex& f = simplices_[static_cast<std::size_t>(dim_ - 1)][static_cast<std::size_t>(facet)];
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim_);
  for (std::size_t i = 0; i < f.size(); ++i) {
    int lv = local_vertex(top, f[i]);
    if (lv < 0) throw ComplexError("facet " + describe(f) + " is not a face of the given simplex");
    x += facet_bary(static_cast<Eigen::Index>(i)) * charts_[static_cast<std::size_t>(top)].col(lv);
  }
  return x;
}

Eigen::VectorXd SimplicialComplex::facet_weights(int top, int facet, const Eigen::VectorXd& x) const {
  const Simplex& f = simplices_[static_cast<std::size_t>(dim_ - 1)][static_cast<std::size_t>(facet)];
  Eigen::VectorXd bary = barycentric(top, x);
  Eigen::VectorXd w(static_cast<Eigen::Index>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) {
    int lv = local_vertex(top, f[i]);
    if (lv < 0) throw ComplexError("facet " + describe(f) + " is not a face of the given simplex");
    w(static_cast<Eigen::Index>(i)) = bary(lv);
  }
  return w;
}

int SimplicialComplex::neighbor(int top, int facet) const {
  for (int t : cofaces(facet))
    if (t != top) return t;
  return -1;
}

SimplicialComplex build_complex(const ComplexInput& input) {
  const int n = input.dim;
  if (n < 1) throw ComplexError("complex dimension must be >= 1");

  SimplicialComplex c;
  c.dim_ = n;

  // Canonicalize the n-simplices, remembering how columns permute.
  struct Top {
    Simplex sorted;
    std::size_t input_pos;
    std::vector<int> perm;  // perm[i] = input column of sorted vertex i
  };
  std::vector<Top> tops;
  tops.reserve(input.simplices.size());
  for (std::size_t p = 0; p < input.simplices.size(); ++p) {
    const Simplex& raw = input.simplices[p];
    if (static_cast<int>(raw.size()) != n + 1)
      throw ComplexError("simplex " + describe(raw) + " has arity " + std::to_string(raw.size()) + ", expected " +
                         std::to_string(n + 1));
    std::vector<int> order(raw.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return raw[a] < raw[b]; });
    Simplex sorted;
    for (int i : order) sorted.push_back(raw[static_cast<std::size_t>(i)]);
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ComplexError("simplex " + describe(raw) + " repeats a vertex");
    tops.push_back({std::move(sorted), p, std::move(order)});
  }
  std::sort(tops.begin(), tops.end(), [](const Top& a, const Top& b) { return a.sorted < b.sorted; });
  for (std::size_t i = 1; i < tops.size(); ++i)
    if (tops[i].sorted == tops[i - 1].sorted) throw ComplexError("duplicate n-simplex " + describe(tops[i].sorted));

  std::vector<std::set<Simplex>> by_dim(static_cast<std::size_t>(n + 1));
  for (const Top& t : tops) insert_faces(t.sorted, by_dim);
  for (const Simplex& raw : input.lower) {
    if (raw.empty() || static_cast<int>(raw.size()) > n)
      throw ComplexError("lower simplex " + describe(raw) + " has invalid arity");
    Simplex s = raw;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end())
      throw ComplexError("simplex " + describe(raw) + " repeats a vertex");
    insert_faces(s, by_dim);
  }

  c.simplices_.resize(static_cast<std::size_t>(n + 1));
  for (int k = 0; k <= n; ++k) {
    auto& list = c.simplices_[static_cast<std::size_t>(k)];
    list.assign(by_dim[static_cast<std::size_t>(k)].begin(), by_dim[static_cast<std::size_t>(k)].end());
    for (std::size_t i = 0; i < list.size(); ++i) c.index_[list[i]] = static_cast<int>(i);
  }

  c.input_to_canonical_.assign(tops.size(), -1);
  for (std::size_t i = 0; i < tops.size(); ++i) c.input_to_canonical_[tops[i].input_pos] = static_cast<int>(i);

  // Charts.
  c.charts_.resize(tops.size());
  c.bary_inverse_.resize(tops.size());
  for (std::size_t i = 0; i < tops.size(); ++i) {
    const Top& t = tops[i];
    Eigen::MatrixXd chart(n, n + 1);
    auto ov = input.chart_overrides.find(t.input_pos);
    for (int j = 0; j <= n; ++j) {
      if (ov != input.chart_overrides.end()) {
        if (ov->second.rows() != n || ov->second.cols() != n + 1)
          throw ComplexError("chart override for " + describe(t.sorted) + " has wrong shape");
        chart.col(j) = ov->second.col(t.perm[static_cast<std::size_t>(j)]);
      } else {
        auto it = input.coordinates.find(t.sorted[static_cast<std::size_t>(j)]);
        if (it == input.coordinates.end())
          throw ComplexError("vertex " + std::to_string(t.sorted[static_cast<std::size_t>(j)]) + " has no coordinates");
        if (it->second.size() != n)
          throw ComplexError("vertex " + std::to_string(t.sorted[static_cast<std::size_t>(j)]) +
                             " coordinates have wrong dimension");
        chart.col(j) = it->second;
      }
    }
    Eigen::MatrixXd aug(n + 1, n + 1);
    aug.topRows(n) = chart;
    aug.row(n).setOnes();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(aug);
    double scale = chart.cwiseAbs().maxCoeff() + 1.0;
    if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-14 * std::pow(scale, n))
      throw ComplexError("simplex " + describe(t.sorted) + " has a degenerate chart");
    c.charts_[i] = chart;
    c.bary_inverse_[i] = lu.inverse();
  }

  // Cofaces and facets-of.
  const auto& facets = c.simplices_[static_cast<std::size_t>(n - 1)];
  c.cofaces_.assign(facets.size(), {});
  c.facets_of_.assign(tops.size(), std::vector<int>(static_cast<std::size_t>(n + 1), -1));
  for (std::size_t i = 0; i < tops.size(); ++i) {
    const Simplex& s = tops[i].sorted;
    for (int j = 0; j <= n; ++j) {
      Simplex f;
      for (int m = 0; m <= n; ++m)
        if (m != j) f.push_back(s[static_cast<std::size_t>(m)]);
      int fi = c.index_.at(f);
      c.facets_of_[i][static_cast<std::size_t>(j)] = fi;
      c.cofaces_[static_cast<std::size_t>(fi)].push_back(static_cast<int>(i));
    }
  }
  return c;
}

std::vector<FacetClass> classify_facets(const SimplicialComplex& c) {
  const int n = c.dim();
  const auto& facets = c.simplices(n - 1);
  std::vector<FacetClass> out;
  out.reserve(facets.size());
  for (std::size_t f = 0; f < facets.size(); ++f) {
    const auto& co = c.cofaces(static_cast<int>(f));
    if (co.size() == 1) {
      out.push_back({static_cast<int>(f), FacetKind::Boundary, co[0], -1});
    } else if (co.size() == 2) {
      out.push_back({static_cast<int>(f), FacetKind::Interface, co[0], co[1]});
    } else {
      throw ComplexError("non-manifold facet " + describe(facets[f]) + " with " + std::to_string(co.size()) +
                         " cofaces");
    }
  }
  return out;
}

HomogeneityVerdict check_dimensional_homogeneity(const SimplicialComplex& c) {
  const int n = c.dim();
  std::set<Simplex> covered;
  for (const Simplex& s : c.simplices(n)) {
    std::vector<std::set<Simplex>> by_dim(static_cast<std::size_t>(n + 1));
    insert_faces(s, by_dim);
    for (auto& layer : by_dim) covered.insert(layer.begin(), layer.end());
  }
  HomogeneityVerdict v;
  for (int k = 0; k < n; ++k)
    for (const Simplex& s : c.simplices(k))
      if (!covered.count(s)) v.offenders.push_back(s);
  v.homogeneous = v.offenders.empty();
  return v;
}

bool check_chainability(const SimplicialComplex& c, const std::vector<int>& removed) {
  const int n = c.dim();
  const std::size_t tops = c.count(n);
  if (tops == 0) return false;
  std::set<int> skip(removed.begin(), removed.end());
  std::vector<std::vector<int>> adj(tops);
  for (std::size_t f = 0; f < c.count(n - 1); ++f) {
    if (skip.count(static_cast<int>(f))) continue;
    const auto& co = c.cofaces(static_cast<int>(f));
    for (std::size_t a = 0; a < co.size(); ++a)
      for (std::size_t b = a + 1; b < co.size(); ++b) {
        adj[static_cast<std::size_t>(co[a])].push_back(co[b]);
        adj[static_cast<std::size_t>(co[b])].push_back(co[a]);
      }
  }
  std::vector<char> seen(tops, 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    int t = queue.front();
    queue.pop_front();
    for (int u : adj[static_cast<std::size_t>(t)])
      if (!seen[static_cast<std::size_t>(u)]) {
        seen[static_cast<std::size_t>(u)] = 1;
        ++reached;
        queue.push_back(u);
      }
  }
  return reached == tops;
}

std::vector<Simplex> skeleton(const SimplicialComplex& c, int k) { return c.simplices(k); }

}  // namespace polyspec
