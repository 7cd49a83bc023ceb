#include "polyspec/interface_chart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "polyspec/error.hpp"
#include "polyspec/geodesic.hpp"

namespace polyspec {

namespace {

struct Sides {
  int minus = -1;
  int plus = -1;
};

Sides sides_of(const SimplicialComplex& c, int facet) {
  if (c.dim() != 2) throw ChartError("interface charts are implemented for n = 2");
  if (facet < 0 || facet >= static_cast<int>(c.count(1))) throw ChartError("facet index out of range");
  const auto& co = c.cofaces(facet);
  if (co.empty() || co.size() > 2) throw ChartError("facet has no chartable sides");
  return {co[0], co.size() == 2 ? co[1] : -1};
}

Eigen::Vector2d facet_origin(const SimplicialComplex& c, int top, int facet) {
  const Simplex& f = c.simplices(1)[static_cast<std::size_t>(facet)];
  return c.chart(top).col(c.local_vertex(top, f[0]));
}

// y = (x, xi, Jx, Jxi): normal geodesic and its variation in s.
Eigen::VectorXd normal_start(const SimplicialComplex& c, const MetricField& g, int top, int facet, double s) {
  const Eigen::Vector2d t = facet_tangent(c, top, facet);
  const Eigen::Vector2d p = facet_origin(c, top, facet) + s * t;
  const Eigen::VectorXd nu = inward_normal_covector(c, g, top, facet, p);
  const InverseMetricJet j = inverse_metric_jet(g, p);
  const Eigen::MatrixXd da = t(0) * j.d[0] + t(1) * j.d[1];
  Eigen::VectorXd y(8);
  y << p, nu, t, -nu * (0.5 * nu.dot(da * nu));
  return y;
}

Eigen::VectorXd normal_rhs(const MetricField& g, const Eigen::VectorXd& y) {
  Eigen::VectorXd out(8);
  out.head(4) = geodesic_rhs(g, y.head(4));
  out.tail(4) = flow_linearization(g, y.head(2), y.segment(2, 2)) * y.tail(4);
  return out;
}

double tangential_metric(const MetricField& g, const Eigen::VectorXd& y) {
  const Eigen::Vector2d jx = y.segment(4, 2);
  return jx.dot(g.value(y.head(2)) * jx);
}

struct SideRun {
  std::vector<double> gss;
  double reach = 0.0;
  bool folded = false;
  bool left = false;
  double structure_error = 0.0;
};

SideRun run_side(const SimplicialComplex& c, const MetricField& g, int top, int facet, double s, double step,
                 int record, int max_steps) {
  SideRun run;
  OdeRhs f = [&g](const Eigen::VectorXd& y) { return normal_rhs(g, y); };
  Eigen::VectorXd y = normal_start(c, g, top, facet, s);
  const double g0 = tangential_metric(g, y);
  run.gss.push_back(g0);
  for (int j = 1; j <= max_steps; ++j) {
    y = rk4_step(f, y, step);
    if (c.barycentric(top, y.head(2)).minCoeff() < -1e-12) {
      run.left = true;
      break;
    }
    const double gss = tangential_metric(g, y);
    if (gss <= 1e-3 * g0) {
      run.folded = true;
      break;
    }
    run.reach = j * step;
    if (j <= record) {
      run.gss.push_back(gss);
      const Eigen::Vector2d xi = y.segment(2, 2);
      const double shear = std::abs(y.segment(4, 2).dot(xi)) / std::sqrt(gss);
      const double unit = std::abs(xi.dot(g.value(y.head(2)).inverse() * xi) - 1.0);
      run.structure_error = std::max(run.structure_error, shear + unit);
    }
  }
  return run;
}

double auto_thickness(const SimplicialComplex& c, const PiecewiseMetric& m, int facet, const Sides& sd) {
  double best = std::numeric_limits<double>::infinity();
  for (int top : {sd.minus, sd.plus}) {
    if (top < 0) continue;
    const Eigen::Vector2d t = facet_tangent(c, top, facet);
    const Eigen::Vector2d a = facet_origin(c, top, facet);
    const Eigen::MatrixXd& ch = c.chart(top);
    double alt = 0.0;
    for (int i = 0; i < 3; ++i) {
      const Eigen::Vector2d d = ch.col(i) - a;
      alt = std::max(alt, std::abs(t(0) * d(1) - t(1) * d(0)) / t.norm());
    }
    const Eigen::Vector3d third = Eigen::Vector3d::Constant(1.0 / 3.0);
    const Eigen::MatrixXd gc = m.on(top).value(c.from_barycentric(top, third));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gc, Eigen::EigenvaluesOnly);
    best = std::min(best, 0.15 * alt * std::sqrt(es.eigenvalues()(0)));
  }
  return best;
}

// Flow to depth tau without validity checks (used by the round trip).
Eigen::VectorXd flow_to(const SimplicialComplex& c, const MetricField& g, int top, int facet, double s, double tau) {
  OdeRhs f = [&g](const Eigen::VectorXd& y) { return normal_rhs(g, y); };
  Eigen::VectorXd y = normal_start(c, g, top, facet, s);
  const int steps = 64;
  for (int j = 0; j < steps; ++j) y = rk4_step(f, y, tau / steps);
  return y;
}

}  // namespace

std::vector<double> one_sided_weights(int k, int points, double h) {
  const int n = points - 1;
  std::vector<std::vector<double>> w(static_cast<std::size_t>(points), std::vector<double>(static_cast<std::size_t>(k + 1), 0.0));
  auto node = [h](int i) { return i * h; };
  double c1 = 1.0, c4 = node(0);
  w[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, k);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = node(i);
    for (int j = 0; j < i; ++j) {
      const double c3 = node(i) - node(j);
      c2 *= c3;
      auto& wi = w[static_cast<std::size_t>(i)];
      const auto& wp = w[static_cast<std::size_t>(i - 1)];
      if (j == i - 1) {
        for (int q = mn; q >= 1; --q)
          wi[static_cast<std::size_t>(q)] = c1 * (q * wp[static_cast<std::size_t>(q - 1)] - c5 * wp[static_cast<std::size_t>(q)]) / c2;
        wi[0] = -c1 * c5 * wp[0] / c2;
      }
      auto& wj = w[static_cast<std::size_t>(j)];
      for (int q = mn; q >= 1; --q)
        wj[static_cast<std::size_t>(q)] = (c4 * wj[static_cast<std::size_t>(q)] - q * wj[static_cast<std::size_t>(q - 1)]) / c3;
      wj[0] = c4 * wj[0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  return out;
}

InterfaceChart interface_chart(const SimplicialComplex& c, const PiecewiseMetric& m, int facet,
                               const ChartOptions& opt) {
  const Sides sd = sides_of(c, facet);
  if (opt.order < 0) throw ChartError("derivative order must be non-negative");
  if (opt.samples < 1 || opt.steps < opt.order + 4) throw ChartError("chart needs more samples or steps");
  InterfaceChart chart;
  chart.facet = facet;
  chart.order = opt.order;
  chart.thickness = opt.thickness > 0.0 ? opt.thickness : auto_thickness(c, m, facet, sd);
  chart.step = chart.thickness / opt.steps;
  chart.injectivity_radius = 4.0 * chart.thickness;
  for (int j = 0; j < opt.samples; ++j)
    chart.s.push_back(opt.samples == 1 ? 0.5 * (opt.s_min + opt.s_max)
                                       : opt.s_min + (opt.s_max - opt.s_min) * j / (opt.samples - 1));

  const int fd_points = opt.order + 4;
  std::vector<std::vector<double>> weights;
  for (int k = 0; k <= opt.order; ++k) weights.push_back(one_sided_weights(k, fd_points, chart.step));

  for (int side = 0; side < 2; ++side) {
    const int top = side == 0 ? sd.minus : sd.plus;
    ChartSide& out = side == 0 ? chart.minus : chart.plus;
    out.simplex = top;
    if (top < 0) continue;
    const double sign = side == 0 ? -1.0 : 1.0;
    out.derivative.assign(static_cast<std::size_t>(opt.order + 1), {});
    for (double s : chart.s) {
      const SideRun run = run_side(c, m.on(top), top, facet, s, chart.step, opt.steps, 4 * opt.steps);
      chart.injectivity_radius = std::min(chart.injectivity_radius, run.reach);
      if (run.reach < chart.thickness - 1e-15) {
        const std::string where = " at s = " + std::to_string(s) + " in simplex " + std::to_string(top) +
                                  " (depth " + std::to_string(run.reach) + " < " + std::to_string(chart.thickness) + ")";
        if (run.folded) throw ChartError("normal coordinate fold" + where);
        throw ChartError("normal geodesic leaves its simplex" + where);
      }
      chart.structure_error = std::max(chart.structure_error, run.structure_error);
      out.gss.push_back(run.gss[0]);
      out.derivative[0].push_back(run.gss[0]);
      for (int k = 1; k <= opt.order; ++k) {
        double d = 0.0;
        for (int i = 1; i < fd_points; ++i)
          d += weights[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] *
               (run.gss[static_cast<std::size_t>(i)] - run.gss[0]);
        out.derivative[static_cast<std::size_t>(k)].push_back(std::pow(sign, k) * d);
      }
    }
  }
  if (chart.structure_error > 1e-6)
    throw ChartError("normal coordinates fail the unit-normal/zero-shear check (error " +
                     std::to_string(chart.structure_error) + ")");
  return chart;
}

PolyPoint chart_point(const SimplicialComplex& c, const PiecewiseMetric& m, int facet, double s, double sigma) {
  const Sides sd = sides_of(c, facet);
  const int top = sigma >= 0.0 && sd.plus >= 0 ? sd.plus : sd.minus;
  if (sigma > 0.0 && sd.plus < 0) throw ChartError("positive normal coordinate on a boundary facet");
  const Eigen::VectorXd y = flow_to(c, m.on(top), top, facet, s, std::abs(sigma));
  return {top, y.head(2)};
}

Eigen::Vector2d chart_locate(const SimplicialComplex& c, const PiecewiseMetric& m, int facet, const PolyPoint& p) {
  const Sides sd = sides_of(c, facet);
  if (p.simplex != sd.minus && p.simplex != sd.plus) throw ChartError("point is not in a simplex adjacent to the facet");
  const int top = p.simplex;
  const double sign = top == sd.plus ? 1.0 : -1.0;
  const MetricField& g = m.on(top);
  const Eigen::Vector2d t = facet_tangent(c, top, facet);
  const Eigen::Vector2d a = facet_origin(c, top, facet);
  double s = (p.x - a).dot(t) / t.squaredNorm();
  double tau = inward_normal_covector(c, g, top, facet, a + s * t).dot(p.x - a - s * t);
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd y = flow_to(c, g, top, facet, s, tau);
    const Eigen::Vector2d r = y.head(2) - p.x;
    Eigen::Matrix2d jac;
    jac.col(0) = y.segment(4, 2);
    jac.col(1) = g.value(y.head(2)).inverse() * y.segment(2, 2);
    const Eigen::Vector2d delta = jac.partialPivLu().solve(r);
    s -= delta(0);
    tau -= delta(1);
    if (delta.norm() < 1e-14) break;
  }
  return {s, sign * tau};
}

SideFrame side_frame(const SimplicialComplex& c, const PiecewiseMetric& m, int facet, int simplex, double s) {
  const MetricField& g = m.on(simplex);
  const Eigen::VectorXd y = normal_start(c, g, simplex, facet, s);
  SideFrame fr;
  fr.simplex = simplex;
  fr.x = y.head(2);
  fr.t = y.segment(4, 2);
  const InverseMetricJet inv = inverse_metric_jet(g, fr.x);
  const Eigen::VectorXd nu = y.segment(2, 2);
  fr.n = inv.ginv * nu;
  const Eigen::MatrixXd da = fr.t(0) * inv.d[0] + fr.t(1) * inv.d[1];
  fr.dn_ds = da * nu + inv.ginv * y.segment(6, 2);
  const auto gam = christoffel(g, fr.x);
  for (int k = 0; k < 2; ++k) fr.x_tautau(k) = -fr.n.dot(gam[static_cast<std::size_t>(k)] * fr.n);
  const MetricJet j = g.jet(fr.x);
  fr.gss = fr.t.dot(j.g * fr.t);
  const Eigen::MatrixXd dgt = fr.t(0) * j.dg[0] + fr.t(1) * j.dg[1];
  const Eigen::MatrixXd dgn = fr.n(0) * j.dg[0] + fr.n(1) * j.dg[1];
  fr.dgss_ds = fr.t.dot(dgt * fr.t);
  fr.dgss_dtau = 2.0 * fr.t.dot(j.g * fr.dn_ds) + fr.t.dot(dgn * fr.t);
  return fr;
}

double JumpProfile::max_jump(int k) const {
  const auto& v = jump.at(static_cast<std::size_t>(k));
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

JumpProfile jump_profile(const InterfaceChart& chart) {
  if (chart.plus.simplex < 0) throw ChartError("jump profile needs an interface, not a boundary facet");
  JumpProfile jp;
  jp.facet = chart.facet;
  jp.s = chart.s;
  jp.jump.assign(static_cast<std::size_t>(chart.order + 1), {});
  for (int k = 0; k <= chart.order; ++k)
    for (std::size_t j = 0; j < chart.s.size(); ++j)
      jp.jump[static_cast<std::size_t>(k)].push_back(std::abs(chart.plus.derivative[static_cast<std::size_t>(k)][j] -
                                                               chart.minus.derivative[static_cast<std::size_t>(k)][j]));
  return jp;
}

JumpProfile jump_profile(const SimplicialComplex& c, const PiecewiseMetric& m, int facet, const ChartOptions& opt) {
  return jump_profile(interface_chart(c, m, facet, opt));
}

double default_jump_tolerance(const PiecewiseMetric& m, int minus, int plus) {
  return m.on(minus).degree() == 0 && m.on(plus).degree() == 0 ? 1e-8 : 1e-4;
}

std::vector<int> detect_artificial_interfaces(const SimplicialComplex& c, const PiecewiseMetric& m, int order,
                                              double tol) {
  std::vector<int> out;
  ChartOptions opt;
  opt.order = order;
  for (const FacetClass& fc : classify_facets(c)) {
    if (fc.kind != FacetKind::Interface) continue;
    const double t = tol > 0.0 ? tol : default_jump_tolerance(m, fc.minus, fc.plus);
    const JumpProfile jp = jump_profile(c, m, fc.facet, opt);
    bool smooth = true;
    for (int k = 0; k <= order && smooth; ++k) smooth = jp.max_jump(k) <= t;
    if (smooth) out.push_back(fc.facet);
  }
  return out;
}

std::vector<int> chambers(const SimplicialComplex& c, const std::vector<int>& artificial) {
  const std::size_t nt = c.count(c.dim());
  std::vector<int> parent(nt);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  };
  for (int f : artificial) {
    const auto& co = c.cofaces(f);
    if (co.size() != 2) continue;
    const int a = find(co[0]), b = find(co[1]);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
  std::vector<int> label(nt, -1), root_label(nt, -1);
  int next = 0;
  for (std::size_t t = 0; t < nt; ++t) {
    const int r = find(static_cast<int>(t));
    if (root_label[static_cast<std::size_t>(r)] < 0) root_label[static_cast<std::size_t>(r)] = next++;
    label[t] = root_label[static_cast<std::size_t>(r)];
  }
  return label;
}

std::vector<int> chambers(const SimplicialComplex& c, const PiecewiseMetric& m, int order, double tol) {
  return chambers(c, detect_artificial_interfaces(c, m, order, tol));
}

}  // namespace polyspec
