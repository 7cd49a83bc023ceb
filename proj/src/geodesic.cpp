#include "polyspec/geodesic.hpp"

#include <cmath>
#include <string>

#include "polyspec/error.hpp"

namespace polyspec {

InverseMetricJet inverse_metric_jet(const MetricField& g, const Eigen::VectorXd& x) {
  const int n = g.dim();
  const MetricJet j = g.jet(x);
  InverseMetricJet out;
  out.ginv = j.g.inverse();
  const Eigen::MatrixXd& a = out.ginv;
  out.d.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out.d[static_cast<std::size_t>(k)] = -a * j.dg[static_cast<std::size_t>(k)] * a;
  out.dd.resize(static_cast<std::size_t>(n * n));
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      const auto& gk = j.dg[static_cast<std::size_t>(k)];
      const auto& gl = j.dg[static_cast<std::size_t>(l)];
      out.dd[static_cast<std::size_t>(k * n + l)] =
          a * (gk * a * gl + gl * a * gk - j.ddg[static_cast<std::size_t>(k * n + l)]) * a;
    }
  return out;
}

HamiltonianJet hamiltonian_jet(const MetricField& g, const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
  const int n = g.dim();
  const InverseMetricJet j = inverse_metric_jet(g, x);
  // H = 1/2 xi.A xi, then p = sqrt(2H).
  const double h = 0.5 * xi.dot(j.ginv * xi);
  if (!(h > 0.0)) throw MetricError("zero covector has no Hamiltonian direction");
  Eigen::VectorXd hx(n), hxi = j.ginv * xi;
  Eigen::MatrixXd hxx(n, n), hxxi(n, n);
  for (int i = 0; i < n; ++i) {
    hx(i) = 0.5 * xi.dot(j.d[static_cast<std::size_t>(i)] * xi);
    hxxi.row(i) = (j.d[static_cast<std::size_t>(i)] * xi).transpose();
    for (int l = 0; l < n; ++l) hxx(i, l) = 0.5 * xi.dot(j.dd[static_cast<std::size_t>(i * n + l)] * xi);
  }
  HamiltonianJet out;
  out.p = std::sqrt(2.0 * h);
  const double p = out.p, p3 = p * p * p;
  out.px = hx / p;
  out.pxi = hxi / p;
  out.pxx = hxx / p - hx * hx.transpose() / p3;
  out.pxxi = hxxi / p - hx * hxi.transpose() / p3;
  out.pxixi = j.ginv / p - hxi * hxi.transpose() / p3;
  return out;
}

Eigen::MatrixXd flow_linearization(const MetricField& g, const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
  const int n = g.dim();
  const HamiltonianJet h = hamiltonian_jet(g, x, xi);
  Eigen::MatrixXd a(2 * n, 2 * n);
  a.topLeftCorner(n, n) = h.pxxi.transpose();
  a.topRightCorner(n, n) = h.pxixi;
  a.bottomLeftCorner(n, n) = -h.pxx;
  a.bottomRightCorner(n, n) = -h.pxxi;
  return a;
}

std::vector<Eigen::MatrixXd> christoffel(const MetricField& g, const Eigen::VectorXd& x) {
  const int n = g.dim();
  const MetricJet j = g.jet(x);
  const Eigen::MatrixXd ginv = j.g.inverse();
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));
  for (int k = 0; k < n; ++k)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double s = 0.0;
        for (int l = 0; l < n; ++l)
          s += ginv(k, l) * (j.dg[static_cast<std::size_t>(a)](l, b) + j.dg[static_cast<std::size_t>(b)](l, a) -
                             j.dg[static_cast<std::size_t>(l)](a, b));
        out[static_cast<std::size_t>(k)](a, b) = 0.5 * s;
      }
  return out;
}

Eigen::VectorXd laplacian_drift(const MetricField& g, const Eigen::VectorXd& x) {
  const int n = g.dim();
  const MetricJet j = g.jet(x);
  const Eigen::MatrixXd ginv = j.g.inverse();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd& gi = j.dg[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd dinv = -ginv * gi * ginv;
    const double dlog = 0.5 * (ginv * gi).trace();
    for (int jj = 0; jj < n; ++jj) b(jj) += dinv(i, jj) + ginv(i, jj) * dlog;
  }
  return b;
}

Eigen::VectorXd rk4_step(const OdeRhs& f, const Eigen::VectorXd& y, double h) {
  const Eigen::VectorXd k1 = f(y);
  const Eigen::VectorXd k2 = f(y + 0.5 * h * k1);
  const Eigen::VectorXd k3 = f(y + 0.5 * h * k2);
  const Eigen::VectorXd k4 = f(y + h * k3);
  return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

EventStep step_with_events(const SimplicialComplex& c, int top, const OdeRhs& f, const Eigen::VectorXd& y, double h) {
  const int n = c.dim();
  Eigen::VectorXd y1 = rk4_step(f, y, h);
  if (c.barycentric(top, y1.head(n)).minCoeff() >= 0.0) return {y1, h, -1, false};
  double lo = 0.0, hi = 1.0;
  Eigen::VectorXd ylo = y;
  for (int it = 0; it < 200 && (hi - lo) * std::abs(h) > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    Eigen::VectorXd ym = rk4_step(f, y, mid * h);
    if (c.barycentric(top, ym.head(n)).minCoeff() >= 0.0) {
      lo = mid;
      ylo = std::move(ym);
    } else {
      hi = mid;
    }
  }
  if ((hi - lo) * std::abs(h) > 1e-10) throw MetricError("facet event bisection failed to converge");
  const Eigen::VectorXd b = c.barycentric(top, ylo.head(n));
  Eigen::Index local = 0;
  b.minCoeff(&local);
  int near = 0;
  for (Eigen::Index i = 0; i < b.size(); ++i)
    if (b(i) < 1e-8) ++near;
  return {ylo, lo * h, static_cast<int>(local), near >= 2};
}

Eigen::VectorXd geodesic_rhs(const MetricField& g, const Eigen::VectorXd& y) {
  const int n = g.dim();
  const InverseMetricJet j = inverse_metric_jet(g, y.head(n));
  const Eigen::VectorXd xi = y.tail(n);
  Eigen::VectorXd out(2 * n);
  out.head(n) = j.ginv * xi;
  for (int i = 0; i < n; ++i) out(n + i) = -0.5 * xi.dot(j.d[static_cast<std::size_t>(i)] * xi);
  return out;
}

Eigen::VectorXd facet_tangent(const SimplicialComplex& c, int top, int facet) {
  if (c.dim() != 2) throw MetricError("facet tangents are implemented for n = 2");
  const Simplex& f = c.simplices(1)[static_cast<std::size_t>(facet)];
  const Eigen::MatrixXd& ch = c.chart(top);
  return ch.col(c.local_vertex(top, f[1])) - ch.col(c.local_vertex(top, f[0]));
}

Eigen::VectorXd inward_normal_covector(const SimplicialComplex& c, const MetricField& g, int top, int facet,
                                       const Eigen::VectorXd& x) {
  const Eigen::VectorXd t = facet_tangent(c, top, facet);
  Eigen::VectorXd nu(2);
  nu << -t(1), t(0);
  const Simplex& f = c.simplices(1)[static_cast<std::size_t>(facet)];
  const Eigen::MatrixXd& ch = c.chart(top);
  int opp = 0;
  for (int i = 0; i < 3; ++i)
    if (c.simplices(2)[static_cast<std::size_t>(top)][static_cast<std::size_t>(i)] != f[0] &&
        c.simplices(2)[static_cast<std::size_t>(top)][static_cast<std::size_t>(i)] != f[1])
      opp = i;
  if (nu.dot(ch.col(opp) - ch.col(c.local_vertex(top, f[0]))) < 0.0) nu = -nu;
  const Eigen::MatrixXd ginv = g.value(x).inverse();
  return nu / std::sqrt(nu.dot(ginv * nu));
}

std::optional<Eigen::VectorXd> refract_covector(const SimplicialComplex& c, const PiecewiseMetric& m, int from, int to,
                                                int facet, const Eigen::VectorXd& x_to, const Eigen::VectorXd& xi,
                                                double critical_tol) {
  const double ct = xi.dot(facet_tangent(c, from, facet));
  const Eigen::VectorXd t = facet_tangent(c, to, facet);
  const MetricField& g = m.on(to);
  const Eigen::MatrixXd gx = g.value(x_to);
  const double gss = t.dot(gx * t);
  const double q = ct * ct / gss;
  if (q >= 1.0 - critical_tol) return std::nullopt;
  const Eigen::VectorXd tau = gx * t / gss;
  return Eigen::VectorXd(ct * tau + std::sqrt(1.0 - q) * inward_normal_covector(c, g, to, facet, x_to));
}

Eigen::VectorXd mirror_covector(const SimplicialComplex& c, const MetricField& g, int top, int facet,
                                const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
  const Eigen::VectorXd t = facet_tangent(c, top, facet);
  const Eigen::MatrixXd gx = g.value(x);
  const Eigen::VectorXd tau = gx * t / t.dot(gx * t);
  return 2.0 * xi.dot(t) * tau - xi;
}

Eigen::VectorXd transfer_point(const SimplicialComplex& c, int from, int to, int facet, const Eigen::VectorXd& x) {
  Eigen::VectorXd w = c.facet_weights(from, facet, x);
  w = w.cwiseMax(0.0);
  return c.facet_point(to, facet, w / w.sum());
}

GeodesicTrace trace_geodesic(const SimplicialComplex& c, const PiecewiseMetric& m, const GeodesicState& s0, double dt,
                             double T) {
  if (!(dt > 0.0)) throw MetricError("geodesic step must be positive");
  const int n = c.dim();
  {
    const double q = s0.xi.dot(m.on(s0.simplex).value(s0.x).inverse() * s0.xi);
    if (std::abs(q - 1.0) > 1e-8) throw MetricError("initial covector is not unit (|xi|^2 = " + std::to_string(q) + ")");
  }
  GeodesicTrace out;
  GeodesicState s = s0;
  out.states.push_back(s);
  int stalls = 0;
  while (s.t < T - 1e-14) {
    const MetricField& g = m.on(s.simplex);
    OdeRhs f = [&g](const Eigen::VectorXd& y) { return geodesic_rhs(g, y); };
    Eigen::VectorXd y(2 * n);
    y << s.x, s.xi;
    const EventStep st = step_with_events(c, s.simplex, f, y, std::min(dt, T - s.t));
    s.t += st.h;
    s.x = st.y.head(n);
    s.xi = st.y.tail(n);
    if (st.local < 0) {
      out.states.push_back(s);
      continue;
    }
    stalls = st.h == 0.0 ? stalls + 1 : 0;
    if (stalls > 4) throw MetricError("geodesic stalled on a facet");
    FacetCrossing ev;
    ev.t = s.t;
    ev.simplex = s.simplex;
    ev.facet = c.facets_of(s.simplex)[static_cast<std::size_t>(st.local)];
    ev.x = s.x;
    ev.xi = s.xi;
    if (st.skeleton) {
      ev.kind = CrossingKind::Skeleton;
      out.events.push_back(ev);
      out.states.push_back(s);
      out.stopped = true;
      out.stop_reason = "reached the (n-2)-skeleton";
      break;
    }
    const int nb = c.neighbor(s.simplex, ev.facet);
    if (nb < 0) {
      ev.kind = CrossingKind::Boundary;
      out.events.push_back(ev);
      out.states.push_back(s);
      out.stopped = true;
      out.stop_reason = "reached a boundary facet";
      break;
    }
    const Eigen::VectorXd x_to = transfer_point(c, s.simplex, nb, ev.facet, s.x);
    auto xi_to = refract_covector(c, m, s.simplex, nb, ev.facet, x_to, s.xi);
    if (xi_to) {
      ev.kind = CrossingKind::Transmitted;
      ev.next_simplex = nb;
      ev.x_next = x_to;
      ev.xi_next = *xi_to;
    } else {
      ev.kind = CrossingKind::TotalReflection;
      ev.next_simplex = s.simplex;
      ev.x_next = s.x;
      ev.xi_next = mirror_covector(c, g, s.simplex, ev.facet, s.x, s.xi);
    }
    out.events.push_back(ev);
    s.simplex = ev.next_simplex;
    s.x = ev.x_next;
    s.xi = ev.xi_next;
    out.states.push_back(s);
  }
  return out;
}

}  // namespace polyspec
