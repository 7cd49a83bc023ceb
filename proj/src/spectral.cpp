#include "polyspec/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "polyspec/error.hpp"
#include "polyspec/fem.hpp"
#include "polyspec/geodesic.hpp"
#include "polyspec/io.hpp"

namespace polyspec {

namespace {

// Three-point Gauss-Legendre on [0, 1].
constexpr double kGaussX[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
constexpr double kGaussW[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

Eigen::Vector3d element_weights(const Mesh& mesh, int e, const Eigen::Vector2d& x) {
  const auto& p = mesh.element_coords(e);
  Eigen::Matrix2d a;
  a.col(0) = p[1] - p[0];
  a.col(1) = p[2] - p[0];
  const Eigen::Vector2d ab = a.partialPivLu().solve(x - p[0]);
  return Eigen::Vector3d(1.0 - ab(0) - ab(1), ab(0), ab(1));
}

double value_in_element(const Mesh& mesh, const Eigen::VectorXd& u, int e, const Eigen::Vector2d& x) {
  const Eigen::Vector3d w = element_weights(mesh, e, x);
  const auto& nodes = mesh.element(e);
  return w(0) * u(nodes[0]) + w(1) * u(nodes[1]) + w(2) * u(nodes[2]);
}

}  // namespace

std::vector<TransmissionResidual> transmission_residual(const SimplicialComplex& c, const PiecewiseMetric& m,
                                                        const Mesh& mesh, const EigenSystem& es, int facet) {
  if (facet < 0 || facet >= static_cast<int>(c.count(1)) || c.cofaces(facet).size() != 2)
    throw MeshError("transmission residual needs an interface edge");
  const int minus = c.cofaces(facet)[0], plus = c.cofaces(facet)[1];
  const int count = static_cast<int>(es.values.size());
  std::vector<TransmissionResidual> out(static_cast<std::size_t>(count));
  std::vector<double> trace2(static_cast<std::size_t>(count), 0.0), flux2(static_cast<std::size_t>(count), 0.0);
  const int segments = mesh.subdivisions();
  const Eigen::VectorXd tm = facet_tangent(c, minus, facet), tp = facet_tangent(c, plus, facet);
  for (int k = 0; k < segments; ++k) {
    const int em = mesh.facet_element(facet, k, minus), ep = mesh.facet_element(facet, k, plus);
    for (int q = 0; q < 3; ++q) {
      const double s = (k + kGaussX[q]) / segments;
      Eigen::VectorXd w(2);
      w << 1.0 - s, s;
      const Eigen::Vector2d xm = c.facet_point(minus, facet, w), xp = c.facet_point(plus, facet, w);
      const Eigen::MatrixXd gm = m.on(minus).value(xm), gp = m.on(plus).value(xp);
      const double wm = std::sqrt(tm.dot(gm * tm)), wp = std::sqrt(tp.dot(gp * tp));
      // Unit normal vectors pointing into each side.
      const Eigen::Vector2d nm = gm.inverse() * inward_normal_covector(c, m.on(minus), minus, facet, xm);
      const Eigen::Vector2d np = gp.inverse() * inward_normal_covector(c, m.on(plus), plus, facet, xp);
      const double dl = wm * kGaussW[q] / segments;
      for (int j = 0; j < count; ++j) {
        const Eigen::VectorXd u = es.vectors.col(j);
        const double jump = value_in_element(mesh, u, ep, xp) - value_in_element(mesh, u, em, xm);
        // sigma grows from minus into plus.
        const double dm = -element_gradient(mesh, u, em).dot(nm);
        const double dp = element_gradient(mesh, u, ep).dot(np);
        const double fj = wp * dp - wm * dm;
        trace2[static_cast<std::size_t>(j)] += jump * jump * dl;
        flux2[static_cast<std::size_t>(j)] += fj * fj * dl;
      }
    }
  }
  for (int j = 0; j < count; ++j)
    out[static_cast<std::size_t>(j)] = {std::sqrt(trace2[static_cast<std::size_t>(j)]),
                                        std::sqrt(flux2[static_cast<std::size_t>(j)])};
  return out;
}

BoundarySpectralData extract_bsd(const SimplicialComplex& c, const PiecewiseMetric&, const Mesh& mesh,
                                 const EigenSystem& es, const std::vector<int>& gamma, double pitch) {
  if (gamma.empty()) throw BsdError("empty observation set");
  std::vector<int> facets = gamma;
  std::sort(facets.begin(), facets.end());
  facets.erase(std::unique(facets.begin(), facets.end()), facets.end());
  for (int f : facets)
    if (f < 0 || f >= static_cast<int>(c.count(c.dim() - 1)) || c.cofaces(f).size() != 1)
      throw BsdError("observation facet " + std::to_string(f) + " is not on the boundary");
  if (facets.size() != 1) throw BsdError("observation set must lie in a single boundary edge");
  if (!(pitch > 0.0)) throw BsdError("sample pitch must be positive");
  const int facet = facets[0];
  const int top = c.cofaces(facet)[0];
  const Eigen::VectorXd t = facet_tangent(c, top, facet);
  // Chart length, so that two metrics on the same complex sample the same points.
  const double length = t.norm();
  const int samples = std::max(1, static_cast<int>(std::ceil(length / pitch)));

  BoundarySpectralData d;
  d.facets = facets;
  d.s.resize(samples);
  d.points.resize(2, samples);
  d.eigenvalues = es.values;
  d.cluster_tolerance = es.cluster_tolerance;
  d.traces.resize(samples, es.vectors.cols());
  for (int i = 0; i < samples; ++i) {
    const double s = (i + 0.5) / samples;
    Eigen::VectorXd w(2);
    w << 1.0 - s, s;
    const Eigen::VectorXd x = c.facet_point(top, facet, w);
    d.s(i) = s;
    d.points.col(i) = x;
    const MeshLocation loc = mesh.locate(PolyPoint{top, x});
    const auto& nodes = mesh.element(loc.element);
    d.traces.row(i).setZero();
    for (int k = 0; k < 3; ++k) d.traces.row(i) += loc.weights(k) * es.vectors.row(nodes[static_cast<std::size_t>(k)]);
  }
  return d;
}

std::string encode_bsd(const BoundarySpectralData& d) {
  BinaryWriter w;
  w.bytes("BSD1");
  w.u32(1);
  w.u64(d.facets.size());
  for (int f : d.facets) w.u64(static_cast<std::uint64_t>(f));
  w.u64(static_cast<std::uint64_t>(d.s.size()));
  for (Eigen::Index i = 0; i < d.s.size(); ++i) {
    w.f64(d.s(i));
    w.f64(d.points(0, i));
    w.f64(d.points(1, i));
  }
  w.u64(static_cast<std::uint64_t>(d.eigenvalues.size()));
  for (Eigen::Index k = 0; k < d.eigenvalues.size(); ++k) w.f64(d.eigenvalues(k));
  for (Eigen::Index k = 0; k < d.traces.cols(); ++k)
    for (Eigen::Index i = 0; i < d.traces.rows(); ++i) w.f64(d.traces(i, k));
  return w.str();
}

BoundarySpectralData decode_bsd(const std::string& data) {
  try {
    BinaryReader r(data);
    if (r.bytes(4) != "BSD1") throw BsdError("not a boundary spectral data file");
    if (r.u32() != 1) throw BsdError("unsupported boundary spectral data version");
    BoundarySpectralData d;
    const auto nf = r.u64();
    for (std::uint64_t i = 0; i < nf; ++i) d.facets.push_back(static_cast<int>(r.u64()));
    const auto ns = static_cast<Eigen::Index>(r.u64());
    d.s.resize(ns);
    d.points.resize(2, ns);
    for (Eigen::Index i = 0; i < ns; ++i) {
      d.s(i) = r.f64();
      d.points(0, i) = r.f64();
      d.points(1, i) = r.f64();
    }
    const auto ne = static_cast<Eigen::Index>(r.u64());
    d.eigenvalues.resize(ne);
    for (Eigen::Index k = 0; k < ne; ++k) d.eigenvalues(k) = r.f64();
    d.traces.resize(ns, ne);
    for (Eigen::Index k = 0; k < ne; ++k)
      for (Eigen::Index i = 0; i < ns; ++i) d.traces(i, k) = r.f64();
    if (!r.at_end()) throw BsdError("trailing bytes in boundary spectral data file");
    return d;
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const BsdError*>(&e)) throw;
    throw BsdError(e.what());
  }
}

std::vector<int> match_samples(const BoundarySpectralData& a, const BoundarySpectralData& b, double tol) {
  if (a.points.cols() != b.points.cols()) throw BsdError("sample counts differ");
  const Eigen::Index n = a.points.cols();
  std::vector<int> kappa(static_cast<std::size_t>(n), -1);
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = -1;
    double best_d = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = (a.points.col(i) - b.points.col(j)).norm();
      if (d <= best_d && !used[static_cast<std::size_t>(j)]) {
        best_d = d;
        best = j;
      }
    }
    if (best < 0) throw BsdError("sample " + std::to_string(i) + " has no counterpart");
    used[static_cast<std::size_t>(best)] = 1;
    kappa[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return kappa;
}

std::vector<std::pair<int, int>> eigen_clusters(const Eigen::VectorXd& values, double tol) {
  std::vector<std::pair<int, int>> out;
  const int n = static_cast<int>(values.size());
  int start = 0;
  for (int i = 1; i <= n; ++i)
    if (i == n || std::abs(values(i) - values(i - 1)) > tol * (1.0 + std::abs(values(i - 1)))) {
      out.emplace_back(start, i - start);
      start = i;
    }
  return out;
}

BsdComparison bsd_equivalent(const BoundarySpectralData& a, const BoundarySpectralData& b,
                             const std::vector<int>& kappa, double tol_lambda, double tol_trace) {
  if (!(tol_lambda > 0.0) || !(tol_trace > 0.0)) throw BsdError("tolerances must be positive");
  if (a.eigenvalues.size() != b.eigenvalues.size()) throw BsdError("eigenvalue counts differ");
  if (a.traces.cols() != a.eigenvalues.size() || b.traces.cols() != b.eigenvalues.size())
    throw BsdError("trace matrix does not match the eigenvalue list");
  const Eigen::Index ns = a.traces.rows();
  if (static_cast<Eigen::Index>(kappa.size()) != ns || b.traces.rows() != ns)
    throw BsdError("sample correspondence has the wrong size");
  {
    std::vector<char> hit(static_cast<std::size_t>(ns), 0);
    for (int k : kappa) {
      if (k < 0 || k >= ns || hit[static_cast<std::size_t>(k)]) throw BsdError("sample correspondence is not a bijection");
      hit[static_cast<std::size_t>(k)] = 1;
    }
  }
  BsdComparison out;
  for (Eigen::Index k = 0; k < a.eigenvalues.size(); ++k)
    out.max_eigenvalue_mismatch = std::max(out.max_eigenvalue_mismatch, std::abs(a.eigenvalues(k) - b.eigenvalues(k)) /
                                                                            (1.0 + std::abs(a.eigenvalues(k))));
  if (out.max_eigenvalue_mismatch > tol_lambda) {
    out.reason = "eigenvalues differ (relative mismatch " + format_double(out.max_eigenvalue_mismatch) + ")";
    return out;
  }
  const auto ca = eigen_clusters(a.eigenvalues, tol_lambda), cb = eigen_clusters(b.eigenvalues, tol_lambda);
  if (ca != cb) throw BsdError("eigenvalue clusters differ in size");

  Eigen::MatrixXd bk(ns, b.traces.cols());
  for (Eigen::Index i = 0; i < ns; ++i) bk.row(i) = b.traces.row(kappa[static_cast<std::size_t>(i)]);
  out.equivalent = true;
  for (const auto& [first, size] : ca) {
    const Eigen::MatrixXd fa = a.traces.middleCols(first, size), fb = bk.middleCols(first, size);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(fa.transpose() * fb, Eigen::ComputeFullU | Eigen::ComputeFullV);
    ClusterMatch cm;
    cm.first = first;
    cm.size = size;
    cm.unitary = svd.matrixU() * svd.matrixV().transpose();
    const double scale = std::max({fa.norm(), fb.norm(), 1e-300});
    cm.residual = (fa * cm.unitary - fb).norm() / scale;
    out.max_residual = std::max(out.max_residual, cm.residual);
    if (cm.residual > tol_trace) out.equivalent = false;
    out.clusters.push_back(std::move(cm));
  }
  out.reason = out.equivalent ? "equivalent" : "traces differ (relative residual " + format_double(out.max_residual) + ")";
  return out;
}

EigenmapRank eigenmap_rank(const Mesh& mesh, const EigenSystem& es, const PolyPoint& p, const std::vector<int>& indices,
                           double tolerance) {
  if (indices.empty()) throw SolverError("no eigenfunction indices given");
  const MeshLocation loc = mesh.locate(p);
  if (loc.weights.minCoeff() < 1e-9) throw MeshError("point lies on an element edge; gradients are not defined there");
  const int n = static_cast<int>(indices.size());
  Eigen::MatrixXd grads(2, n);
  double lambda_max = 0.0;
  for (int j = 0; j < n; ++j) {
    const int k = indices[static_cast<std::size_t>(j)];
    if (k < 0 || k >= es.vectors.cols()) throw SolverError("eigenfunction index " + std::to_string(k) + " out of range");
    const Eigen::VectorXd u = es.vectors.col(k);
    const double lam = std::max(es.values(k), 0.0);
    lambda_max = std::max(lambda_max, lam);
    const double scale = std::sqrt(lam) * u.cwiseAbs().maxCoeff();
    grads.col(j) = scale > 0.0 ? Eigen::Vector2d(element_gradient(mesh, u, loc.element) / scale) : Eigen::Vector2d::Zero();
  }
  EigenmapRank r;
  r.threshold = tolerance > 0.0 ? tolerance : 2.0 * mesh.size() * std::sqrt(lambda_max);
  r.singular_values = Eigen::JacobiSVD<Eigen::MatrixXd>(grads).singularValues();
  for (Eigen::Index i = 0; i < r.singular_values.size(); ++i) r.rank += r.singular_values(i) > r.threshold;
  return r;
}

}  // namespace polyspec
