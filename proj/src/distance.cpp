#include "polyspec/distance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <string>

#include "polyspec/error.hpp"

namespace polyspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kOnFacetTol = 1e-10;

struct GaussRule {
  std::vector<double> x;  // on [0, 1]
  std::vector<double> w;
};

GaussRule gauss_rule(int points) {
  switch (points) {
    case 1:
      return {{0.5}, {1.0}};
    case 2: {
      const double a = 0.5 / std::sqrt(3.0);
      return {{0.5 - a, 0.5 + a}, {0.5, 0.5}};
    }
    case 3: {
      const double a = 0.5 * std::sqrt(0.6);
      return {{0.5 - a, 0.5, 0.5 + a}, {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0}};
    }
    case 4: {
      const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(1.2));
      const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(1.2));
      const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
      const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
      return {{0.5 - 0.5 * b, 0.5 - 0.5 * a, 0.5 + 0.5 * a, 0.5 + 0.5 * b}, {wb / 2, wa / 2, wa / 2, wb / 2}};
    }
    default:
      throw MetricError("unsupported Gauss rule size " + std::to_string(points));
  }
}

// Uniform double in [0, 1) from the top 53 bits; independent of the
// standard library's distribution implementation.
double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

double segment_length(const MetricField& g, const Eigen::VectorXd& a, const Eigen::VectorXd& b, int points,
                      int panels) {
  const GaussRule rule = gauss_rule(points);
  const Eigen::VectorXd v = b - a;
  if (v.squaredNorm() == 0.0) return 0.0;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
      const double t = (p + rule.x[i]) / panels;
      const Eigen::VectorXd x = a + t * v;
      const double q = v.dot(g.value(x) * v);
      if (!(q >= 0.0)) throw MetricError("metric not positive along segment");
      total += rule.w[i] / panels * std::sqrt(q);
    }
  }
  return total;
}

double path_length(const SimplicialComplex& c, const PiecewiseMetric& m, const AdmissiblePath& path) {
  double total = 0.0;
  const auto& nodes = path.nodes;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const PolyPoint& a = nodes[i];
    const PolyPoint& b = nodes[i + 1];
    if (a.simplex == b.simplex) {
      for (const PolyPoint* p : {&a, &b}) {
        if (c.barycentric(p->simplex, p->x).minCoeff() < -1e-9)
          throw MetricError("path segment " + std::to_string(i) + " leaves simplex " + std::to_string(a.simplex));
      }
      const MetricField& g = m.on(a.simplex);
      double prev = segment_length(g, a.x, b.x, 3, 1);
      for (int panels = 2; panels <= 512; panels *= 2) {
        double cur = segment_length(g, a.x, b.x, 3, panels);
        bool done = std::abs(cur - prev) <= 1e-13 * std::max(1.0, cur);
        prev = cur;
        if (done) break;
      }
      total += prev;
      continue;
    }
    // Crossing: same point seen from both sides of a shared facet.
    bool ok = false;
    for (int f : c.facets_of(a.simplex)) {
      const auto& co = c.cofaces(f);
      if (std::find(co.begin(), co.end(), b.simplex) == co.end()) continue;
      Eigen::VectorXd wa = c.facet_weights(a.simplex, f, a.x);
      Eigen::VectorXd wb = c.facet_weights(b.simplex, f, b.x);
      if (std::abs(wa.sum() - 1.0) < 1e-9 && wa.minCoeff() > -1e-9 && (wa - wb).cwiseAbs().maxCoeff() < 1e-9) {
        ok = true;
        break;
      }
    }
    if (!ok)
      throw MetricError("path step " + std::to_string(i) + " jumps between simplices " + std::to_string(a.simplex) +
                        " and " + std::to_string(b.simplex) + " away from a shared facet");
  }
  return total;
}

DistanceGraph::DistanceGraph(const SimplicialComplex& c, const PiecewiseMetric& m, double h)
    : c_(&c), m_(&m), h_(h) {
  if (c.dim() != 2) throw MetricError("distance graph is implemented for n = 2");
  if (!(h > 0.0)) throw MetricError("graph pitch must be positive");

  const auto& verts = c.simplices(0);
  const auto& edges = c.simplices(1);
  const std::size_t nv = verts.size();
  for (std::size_t i = 0; i < nv; ++i) {
    node_edge_.push_back(-1);
    node_vertex_.push_back(static_cast<int>(i));
    node_t_.push_back(0.0);
  }

  // Interior samples per edge; edge_nodes[e] lists nodes from lower to higher vertex.
  std::vector<std::vector<int>> edge_nodes(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& co = c.cofaces(static_cast<int>(e));
    const int va = c.index_of({edges[e][0]});
    const int vb = c.index_of({edges[e][1]});
    edge_nodes[e].push_back(va);
    if (!co.empty()) {
      double len = 0.0;
      for (int t : co) {
        Eigen::Vector2d wa(1.0, 0.0), wb(0.0, 1.0);
        len = std::max(len, segment_length(m.on(t), c.facet_point(t, static_cast<int>(e), wa),
                                           c.facet_point(t, static_cast<int>(e), wb), 3, 4));
      }
      const int k = std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
      for (int j = 1; j < k; ++j) {
        edge_nodes[e].push_back(static_cast<int>(node_edge_.size()));
        node_edge_.push_back(static_cast<int>(e));
        node_vertex_.push_back(-1);
        node_t_.push_back(static_cast<double>(j) / k);
      }
    }
    edge_nodes[e].push_back(vb);
  }

  const std::size_t nt = c.count(2);
  simplex_nodes_.assign(nt, {});
  std::vector<std::vector<Arc>> local(nt);
  std::vector<std::vector<int>> local_from(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    std::vector<int> nodes;
    for (int f : c.facets_of(static_cast<int>(t)))
      for (int id : edge_nodes[static_cast<std::size_t>(f)]) nodes.push_back(id);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    simplex_nodes_[t] = nodes;
  }

#pragma omp parallel for schedule(dynamic)
  for (std::size_t t = 0; t < nt; ++t) {
    const int top = static_cast<int>(t);
    const auto& nodes = simplex_nodes_[t];
    std::vector<Eigen::VectorXd> xs;
    xs.reserve(nodes.size());
    for (int id : nodes) xs.push_back(node_coords(id, top));
    // Position of each node along each of the three edges (-1 if not on it).
    std::vector<std::array<int, 3>> pos(nodes.size(), {-1, -1, -1});
    const auto& fs = c.facets_of(top);
    for (int k = 0; k < 3; ++k) {
      const auto& en = edge_nodes[static_cast<std::size_t>(fs[static_cast<std::size_t>(k)])];
      for (std::size_t j = 0; j < en.size(); ++j) {
        auto it = std::lower_bound(nodes.begin(), nodes.end(), en[j]);
        pos[static_cast<std::size_t>(it - nodes.begin())][static_cast<std::size_t>(k)] = static_cast<int>(j);
      }
    }
    for (std::size_t a = 0; a < nodes.size(); ++a)
      for (std::size_t b = a + 1; b < nodes.size(); ++b) {
        bool skip = false;
        for (int k = 0; k < 3; ++k) {
          const int pa = pos[a][static_cast<std::size_t>(k)];
          const int pb = pos[b][static_cast<std::size_t>(k)];
          if (pa >= 0 && pb >= 0 && std::abs(pa - pb) > 1) skip = true;
        }
        if (skip) continue;
        const double w = segment_length(m.on(top), xs[a], xs[b], 3, 1);
        local[t].push_back({nodes[b], w, top});
        local_from[t].push_back(nodes[a]);
      }
  }

  struct Entry {
    int from, to;
    double w;
    int simplex;
  };
  std::vector<Entry> all;
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t i = 0; i < local[t].size(); ++i) {
      const Arc& arc = local[t][i];
      all.push_back({local_from[t][i], arc.to, arc.w, arc.simplex});
      all.push_back({arc.to, local_from[t][i], arc.w, arc.simplex});
    }
  std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
    if (a.from != b.from) return a.from < b.from;
    if (a.to != b.to) return a.to < b.to;
    if (a.w != b.w) return a.w < b.w;
    return a.simplex < b.simplex;
  });
  const std::size_t nn = node_edge_.size();
  offset_.assign(nn + 1, 0);
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (i > 0 && all[i].from == all[i - 1].from && all[i].to == all[i - 1].to) continue;
    edge_to_.push_back(all[i].to);
    edge_w_.push_back(all[i].w);
    edge_simplex_.push_back(all[i].simplex);
    offset_[static_cast<std::size_t>(all[i].from) + 1]++;
  }
  for (std::size_t i = 0; i < nn; ++i) offset_[i + 1] += offset_[i];

  clearance_.assign(nn, kInf);
  for (std::size_t i = 0; i < nn; ++i) clearance_[i] = vertex_clearance(static_cast<int>(i));
}

Eigen::VectorXd DistanceGraph::node_coords(int node, int top) const {
  const auto idx = static_cast<std::size_t>(node);
  if (node_vertex_[idx] >= 0) {
    const VertexId v = c_->simplices(0)[static_cast<std::size_t>(node_vertex_[idx])][0];
    return c_->chart(top).col(c_->local_vertex(top, v));
  }
  Eigen::Vector2d w(1.0 - node_t_[idx], node_t_[idx]);
  return c_->facet_point(top, node_edge_[idx], w);
}

double DistanceGraph::vertex_clearance(int node) const {
  const auto idx = static_cast<std::size_t>(node);
  if (node_vertex_[idx] >= 0) return 0.0;
  double best = kInf;
  for (int top : c_->cofaces(node_edge_[idx])) {
    const Eigen::VectorXd x = node_coords(node, top);
    const Eigen::MatrixXd g = m_->on(top).value(x);
    for (int j = 0; j < 3; ++j) {
      const Eigen::VectorXd d = x - c_->chart(top).col(j);
      best = std::min(best, std::sqrt(d.dot(g * d)));
    }
  }
  return best;
}

void DistanceGraph::attach(const PolyPoint& p, int id, std::vector<std::vector<Arc>>& extra,
                           std::vector<std::pair<int, Eigen::VectorXd>>& placements) const {
  if (p.simplex < 0 || p.simplex >= static_cast<int>(c_->count(2))) throw MetricError("point has invalid simplex");
  const Eigen::VectorXd bary = c_->barycentric(p.simplex, p.x);
  if (bary.minCoeff() < -1e-9) throw MetricError("point lies outside its simplex");
  placements.emplace_back(p.simplex, p.x);
  for (int j = 0; j < 3; ++j) {
    if (std::abs(bary(j)) > kOnFacetTol) continue;
    const int f = c_->facets_of(p.simplex)[static_cast<std::size_t>(j)];
    const int other = c_->neighbor(p.simplex, f);
    if (other < 0) continue;
    const Eigen::VectorXd w = c_->facet_weights(p.simplex, f, p.x);
    placements.emplace_back(other, c_->facet_point(other, f, w / w.sum()));
  }
  for (const auto& [top, x] : placements) {
    for (int node : simplex_nodes_[static_cast<std::size_t>(top)]) {
      const double w = segment_length(m_->on(top), x, node_coords(node, top), 3, 1);
      extra[static_cast<std::size_t>(id)].push_back({node, w, top});
      extra[static_cast<std::size_t>(node)].push_back({id, w, top});
    }
  }
}

DistanceResult DistanceGraph::query(const PolyPoint& p, const PolyPoint& q, double rho) const {
  const int n = static_cast<int>(node_count());
  const int ip = n, iq = n + 1;
  std::vector<std::vector<Arc>> extra(static_cast<std::size_t>(n + 2));
  std::vector<std::pair<int, Eigen::VectorXd>> place_p, place_q;
  attach(p, ip, extra, place_p);
  attach(q, iq, extra, place_q);
  for (const auto& [tp, xp] : place_p)
    for (const auto& [tq, xq] : place_q)
      if (tp == tq) {
        const double w = segment_length(m_->on(tp), xp, xq, 3, 1);
        extra[static_cast<std::size_t>(ip)].push_back({iq, w, tp});
        extra[static_cast<std::size_t>(iq)].push_back({ip, w, tp});
      }

  auto allowed = [&](int v) { return v >= n || rho <= 0.0 || clearance_[static_cast<std::size_t>(v)] >= rho; };

  std::vector<double> dist(static_cast<std::size_t>(n + 2), kInf);
  std::vector<int> pred(static_cast<std::size_t>(n + 2), -1), pred_simplex(static_cast<std::size_t>(n + 2), -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[static_cast<std::size_t>(ip)] = 0.0;
  heap.push({0.0, ip});
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    if (u == iq) break;
    auto relax = [&](int v, double w, int s) {
      if (!allowed(v)) return;
      const double nd = d + w;
      if (nd < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = nd;
        pred[static_cast<std::size_t>(v)] = u;
        pred_simplex[static_cast<std::size_t>(v)] = s;
        heap.push({nd, v});
      }
    };
    if (u < n)
      for (std::size_t k = offset_[static_cast<std::size_t>(u)]; k < offset_[static_cast<std::size_t>(u) + 1]; ++k)
        relax(edge_to_[k], edge_w_[k], edge_simplex_[k]);
    for (const Arc& a : extra[static_cast<std::size_t>(u)]) relax(a.to, a.w, a.simplex);
  }

  DistanceResult out;
  out.distance = dist[static_cast<std::size_t>(iq)];
  if (!std::isfinite(out.distance)) return out;

  auto coords = [&](int node, int top) -> Eigen::VectorXd {
    if (node < n) return node_coords(node, top);
    const auto& places = node == ip ? place_p : place_q;
    for (const auto& [t, x] : places)
      if (t == top) return x;
    throw MetricError("internal: endpoint placement missing");
  };
  std::vector<int> chain{iq};
  while (chain.back() != ip) chain.push_back(pred[static_cast<std::size_t>(chain.back())]);
  std::reverse(chain.begin(), chain.end());
  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    const int s = pred_simplex[static_cast<std::size_t>(chain[i + 1])];
    out.path.nodes.push_back({s, coords(chain[i], s)});
    out.path.nodes.push_back({s, coords(chain[i + 1], s)});
  }
  out.path.length = out.distance;
  return out;
}

DistanceResult distance(const SimplicialComplex& c, const PiecewiseMetric& m, const PolyPoint& p, const PolyPoint& q,
                        double h) {
  if (p.simplex == q.simplex && (p.x - q.x).norm() == 0.0) return {};
  DistanceGraph graph(c, m, h);
  DistanceResult r = graph.query(p, q);
  if (!std::isfinite(r.distance)) throw DisconnectedError("no admissible path between the points");
  return r;
}

double restricted_distance(const SimplicialComplex& c, const PiecewiseMetric& m, const PolyPoint& p,
                           const PolyPoint& q, double h, double rho) {
  if (rho <= 0.0) rho = 2.0 * h;
  DistanceGraph graph(c, m, h);
  return graph.query(p, q, rho).distance;
}

std::vector<std::pair<PolyPoint, PolyPoint>> sample_point_pairs(const SimplicialComplex& c, std::size_t count,
                                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int n = c.dim();
  const std::size_t tops = c.count(n);
  auto draw = [&](std::size_t slot) {
    const int top = static_cast<int>(slot % tops);
    Eigen::VectorXd b(n + 1);
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
      b(i) = -std::log(1.0 - unit_draw(rng)) + 0.05;
      sum += b(i);
    }
    return PolyPoint{top, c.from_barycentric(top, b / sum)};
  };
  std::vector<std::pair<PolyPoint, PolyPoint>> out;
  for (std::size_t i = 0; i < count; ++i) {
    PolyPoint a = draw(i);
    PolyPoint b = draw(i + 1 + static_cast<std::size_t>(rng() % std::max<std::size_t>(1, tops)));
    out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

AdmissibilityVerdict check_admissibility_metric(const SimplicialComplex& c, const PiecewiseMetric& m, double h,
                                                const std::vector<std::pair<PolyPoint, PolyPoint>>& pairs,
                                                double tol, double rho) {
  if (rho <= 0.0) rho = 2.0 * h;
  if (tol <= 0.0) tol = 2.0 * rho;
  DistanceGraph graph(c, m, h);
  AdmissibilityVerdict v;
  v.worst_excess = -kInf;
  for (const auto& [p, q] : pairs) {
    const double d = graph.query(p, q).distance;
    const double r = graph.query(p, q, rho).distance;
    const double excess = (std::isinf(r) && std::isinf(d)) ? 0.0 : r - d;
    ++v.pairs_checked;
    if (excess > v.worst_excess) {
      v.worst_excess = excess;
      v.worst_p = p;
      v.worst_q = q;
    }
    if (!(excess <= tol)) v.admissible = false;
  }
  if (pairs.empty()) v.worst_excess = 0.0;
  return v;
}

}  // namespace polyspec
