#include "polyspec/beam.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "polyspec/error.hpp"
#include "polyspec/interface_chart.hpp"

namespace polyspec {

namespace {

constexpr double kPi = 3.14159265358979323846;

// y = (x, xi, Re H, Im H, Re u00, Im u00), H column-major.
Eigen::VectorXd pack(const BeamState& b) {
  const auto n = b.ray.x.size();
  Eigen::VectorXd y(2 * n + 2 * n * n + 2);
  y.head(n) = b.ray.x;
  y.segment(n, n) = b.ray.xi;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) {
      y(2 * n + j * n + i) = b.hessian(i, j).real();
      y(2 * n + n * n + j * n + i) = b.hessian(i, j).imag();
    }
  y(2 * n + 2 * n * n) = b.amplitude.real();
  y(2 * n + 2 * n * n + 1) = b.amplitude.imag();
  return y;
}

void unpack(const Eigen::VectorXd& y, BeamState& b) {
  const auto n = b.ray.x.size();
  b.ray.x = y.head(n);
  b.ray.xi = y.segment(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      b.hessian(i, j) = Complex(y(2 * n + j * n + i), y(2 * n + n * n + j * n + i));
  b.amplitude = Complex(y(2 * n + 2 * n * n), y(2 * n + 2 * n * n + 1));
}

Eigen::VectorXd pack_rates(const BeamRates& r) {
  BeamState tmp;
  tmp.ray.x = r.dx;
  tmp.ray.xi = r.dxi;
  tmp.hessian = r.dhessian;
  tmp.amplitude = r.damplitude;
  return pack(tmp);
}

OdeRhs beam_rhs(const MetricField& g, const BeamState& shape) {
  return [&g, shape](const Eigen::VectorXd& y) {
    BeamState b = shape;
    unpack(y, b);
    return pack_rates(beam_rates(g, b));
  };
}

bool healthy(const BeamState& b) {
  return b.hessian.allFinite() && std::isfinite(b.amplitude.real()) && std::isfinite(b.amplitude.imag()) &&
         b.hessian.cwiseAbs().maxCoeff() < 1e10 && min_imaginary_eigenvalue(b.hessian) > 0.0;
}

// Unit normal covector of the facet pointing out of `top`, and the
// corresponding unit vector.
Eigen::VectorXd outward_normal_vector(const SimplicialComplex& c, const MetricField& g, int top, int facet,
                                      const Eigen::VectorXd& x) {
  const Eigen::VectorXd nu = -inward_normal_covector(c, g, top, facet, x);
  return g.value(x).inverse() * nu;
}

}  // namespace

BeamRates beam_rates(const MetricField& g, const BeamState& b) {
  const Eigen::VectorXd& x = b.ray.x;
  const Eigen::VectorXd& xi = b.ray.xi;
  const HamiltonianJet j = hamiltonian_jet(g, x, xi);
  const Eigen::MatrixXcd& h = b.hessian;
  const Eigen::MatrixXcd pxxi = j.pxxi.cast<Complex>();
  BeamRates r;
  r.dx = j.pxi;
  r.dxi = -j.px;
  Eigen::MatrixXcd dh = -0.5 * j.pxx.cast<Complex>() - pxxi * h - h * pxxi.transpose() -
                        2.0 * h * j.pxixi.cast<Complex>() * h;
  r.dhessian = 0.5 * (dh + dh.transpose());
  // u00' = 1/2 (Theta_tt - Lap Theta) u00 on the ray.
  const Eigen::MatrixXd ginv = g.value(x).inverse();
  const Eigen::VectorXd v = j.pxi;
  const Complex theta_tt = v.dot(j.px) + 2.0 * (v.cast<Complex>().transpose() * h * v.cast<Complex>())(0, 0);
  const Complex lap = 2.0 * (ginv.cast<Complex>() * h).trace() + laplacian_drift(g, x).dot(xi);
  r.damplitude = 0.5 * (theta_tt - lap) * b.amplitude;
  return r;
}

double min_imaginary_eigenvalue(const Eigen::MatrixXcd& h) {
  const Eigen::MatrixXd im = 0.5 * (h.imag() + h.imag().transpose());
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(im, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

BeamState launch_beam(const PiecewiseMetric& m, int simplex, const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                      const Eigen::MatrixXcd& hessian) {
  const MetricField& g = m.on(simplex);
  const Eigen::MatrixXd gx = g.value(x);
  const double q = xi.dot(gx.inverse() * xi);
  if (!(q > 0.0)) throw BeamError("launch covector must be nonzero");
  BeamState b;
  b.ray.simplex = simplex;
  b.ray.x = x;
  b.ray.xi = xi / std::sqrt(q);
  b.ray.t = 0.0;
  b.hessian = hessian.size() ? hessian : Eigen::MatrixXcd(Complex(0.0, 0.5) * gx.cast<Complex>());
  if (b.hessian.rows() != x.size() || b.hessian.cols() != x.size()) throw BeamError("launch Hessian has the wrong shape");
  if (!(min_imaginary_eigenvalue(b.hessian) > 0.0)) throw BeamError("launch Hessian must have Im H > 0");
  return b;
}

namespace {

template <class Stepper>
BeamPath advance(const BeamState& b, double dt, double until, Stepper step) {
  if (dt == 0.0) throw BeamError("beam step must be nonzero");
  BeamPath out;
  out.states.push_back(b);
  BeamState s = b;
  const double dir = dt > 0.0 ? 1.0 : -1.0;
  double h = dt;
  int halvings = 0;
  while (dir * (until - s.ray.t) > 1e-13) {
    if (dir * (s.ray.t + h - until) > 0.0) h = until - s.ray.t;
    BeamState next = s;
    int local = -1;
    bool skeleton = false;
    double taken = 0.0;
    step(s, h, next, taken, local, skeleton);
    if (!healthy(next)) {
      if (++halvings > 20) throw BeamError("Riccati blow-up: Im H lost definiteness near t = " + std::to_string(s.ray.t));
      h *= 0.5;
      continue;
    }
    halvings = 0;
    h = dt;
    next.ray.t = s.ray.t + taken;
    s = next;
    out.states.push_back(s);
    if (local >= 0) {
      out.facet = local;
      out.skeleton = skeleton;
      return out;
    }
  }
  return out;
}

}  // namespace

BeamPath propagate_beam(const SimplicialComplex& c, const PiecewiseMetric& m, const BeamState& b, double dt,
                        double until) {
  const MetricField& g = m.on(b.ray.simplex);
  const int top = b.ray.simplex;
  BeamPath p = advance(b, dt, until, [&](const BeamState& s, double h, BeamState& next, double& taken, int& local,
                                          bool& skeleton) {
    const EventStep st = step_with_events(c, top, beam_rhs(g, s), pack(s), h);
    unpack(st.y, next);
    taken = st.h;
    local = st.local;
    skeleton = st.skeleton;
  });
  if (p.facet >= 0) p.facet = c.facets_of(top)[static_cast<std::size_t>(p.facet)];
  return p;
}

BeamPath propagate_in_chart(const MetricField& g, const BeamState& b, double dt, double until) {
  return advance(b, dt, until, [&](const BeamState& s, double h, BeamState& next, double& taken, int& local,
                                   bool& skeleton) {
    unpack(rk4_step(beam_rhs(g, s), pack(s), h), next);
    taken = h;
    local = -1;
    skeleton = false;
  });
}

Eigen::MatrixXcd match_hessian(const MetricField& g_in, const Eigen::VectorXd& x_in, const Eigen::VectorXd& xi_in,
                               const Eigen::MatrixXcd& h_in, const Eigen::VectorXd& t_in, const MetricField& g_out,
                               const Eigen::VectorXd& x_out, const Eigen::VectorXd& xi_out,
                               const Eigen::VectorXd& t_out) {
  if (x_in.size() != 2) throw BeamError("phase matching is implemented for n = 2");
  const HamiltonianJet ji = hamiltonian_jet(g_in, x_in, xi_in);
  const HamiltonianJet jo = hamiltonian_jet(g_out, x_out, xi_out);
  const Eigen::VectorXcd ti = t_in.cast<Complex>(), vi = ji.pxi.cast<Complex>();
  const Eigen::VectorXd& vo = jo.pxi;
  // Coefficients of s^2, s t and t^2 in the restricted phase.
  const Complex css = (ti.transpose() * h_in * ti)(0, 0);
  const Complex cst = 0.5 * (ji.px.dot(t_in) + 2.0 * (ti.transpose() * h_in * vi)(0, 0) - jo.px.dot(t_out));
  const Complex ctt = 0.5 * (vi.dot(ji.px.cast<Complex>()) + 2.0 * (vi.transpose() * h_in * vi)(0, 0) - vo.dot(jo.px));
  Eigen::Matrix2d basis;
  basis.col(0) = t_out;
  basis.col(1) = vo;
  if (std::abs(basis.determinant()) < 1e-12 * t_out.norm() * vo.norm())
    throw BeamError("outgoing ray is tangent to the facet");
  Eigen::Matrix2cd gram;
  gram << css, cst, cst, ctt;
  const Eigen::Matrix2cd binv = basis.inverse().cast<Complex>();
  Eigen::MatrixXcd h = binv.transpose() * gram * binv;
  return 0.5 * (h + h.transpose());
}

namespace {

// Shared geometry of a beam standing on a facet.
struct FacetGeometry {
  Eigen::VectorXd tangent;
  double gss = 0.0;
  double xi_n = 0.0;  // xi applied to the outward unit normal
};

FacetGeometry facet_geometry(const SimplicialComplex& c, const MetricField& g, int top, int facet,
                             const Eigen::VectorXd& x, const Eigen::VectorXd& xi) {
  FacetGeometry fg;
  fg.tangent = facet_tangent(c, top, facet);
  fg.gss = fg.tangent.dot(g.value(x) * fg.tangent);
  fg.xi_n = xi.dot(outward_normal_vector(c, g, top, facet, x));
  return fg;
}

BeamState branch(const BeamState& in, int simplex, const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                 const Eigen::MatrixXcd& h, Complex coefficient) {
  BeamState out = in;
  out.ray.simplex = simplex;
  out.ray.x = x;
  out.ray.xi = xi;
  out.hessian = h;
  out.amplitude = coefficient * in.amplitude;
  return out;
}

}  // namespace

BeamEvent split_at_interface(const SimplicialComplex& c, const PiecewiseMetric& m, const BeamState& b, int facet,
                             double critical_tol) {
  const int from = b.ray.simplex;
  const int to = c.neighbor(from, facet);
  if (to < 0) throw BeamError("facet " + std::to_string(facet) + " is a boundary facet, not an interface");
  const MetricField& gm = m.on(from);
  const MetricField& gp = m.on(to);
  const FacetGeometry in = facet_geometry(c, gm, from, facet, b.ray.x, b.ray.xi);
  if (!(in.xi_n > 0.0)) throw BeamError("beam does not point into facet " + std::to_string(facet));

  BeamEvent ev;
  ev.kind = BeamEventKind::Interface;
  ev.time = b.ray.t;
  ev.facet = facet;
  ev.simplex = from;
  ev.x = b.ray.x;
  ev.xi_in = b.ray.xi;
  ev.a = std::sqrt(in.gss) * in.xi_n;

  const Eigen::VectorXd x_to = transfer_point(c, from, to, facet, b.ray.x);
  const Eigen::VectorXd t_to = facet_tangent(c, to, facet);
  const double gss_p = t_to.dot(gp.value(x_to) * t_to);
  const double xi_s = b.ray.xi.dot(in.tangent);
  const double q = xi_s * xi_s / gss_p;
  Complex bcoef;
  const auto xi_tr = refract_covector(c, m, from, to, facet, x_to, b.ray.xi, critical_tol);
  if (xi_tr) {
    const double xin_tr = xi_tr->dot(gp.value(x_to).inverse() * inward_normal_covector(c, gp, to, facet, x_to));
    ev.b = std::sqrt(gss_p) * xin_tr;
    bcoef = ev.b;
  } else {
    // Evanescent side: xi_n = i sqrt(q - 1), so |r| = 1.
    ev.critical = true;
    bcoef = Complex(0.0, std::sqrt(gss_p) * std::sqrt(std::max(q - 1.0, 0.0)));
  }
  ev.r = (ev.a - bcoef) / (ev.a + bcoef);
  ev.t = 2.0 * ev.a / (ev.a + bcoef);

  const Eigen::VectorXd xi_r = mirror_covector(c, gm, from, facet, b.ray.x, b.ray.xi);
  const Eigen::MatrixXcd h_r =
      match_hessian(gm, b.ray.x, b.ray.xi, b.hessian, in.tangent, gm, b.ray.x, xi_r, in.tangent);
  ev.reflected = branch(b, from, b.ray.x, xi_r, h_r, ev.r);
  if (xi_tr) {
    const Eigen::MatrixXcd h_t = match_hessian(gm, b.ray.x, b.ray.xi, b.hessian, in.tangent, gp, x_to, *xi_tr, t_to);
    ev.transmitted = branch(b, to, x_to, *xi_tr, h_t, ev.t);
  } else {
    ev.t = 0.0;
  }
  return ev;
}

BeamEvent reflect_at_boundary(const SimplicialComplex& c, const PiecewiseMetric& m, const BeamState& b, int facet,
                              BoundaryCondition condition) {
  const int from = b.ray.simplex;
  if (c.neighbor(from, facet) >= 0) throw BeamError("facet " + std::to_string(facet) + " is not a boundary facet");
  const MetricField& g = m.on(from);
  const FacetGeometry in = facet_geometry(c, g, from, facet, b.ray.x, b.ray.xi);
  if (!(in.xi_n > 1e-8)) throw BeamError("tangential incidence on boundary facet " + std::to_string(facet));
  BeamEvent ev;
  ev.kind = BeamEventKind::Boundary;
  ev.time = b.ray.t;
  ev.facet = facet;
  ev.simplex = from;
  ev.x = b.ray.x;
  ev.xi_in = b.ray.xi;
  ev.a = std::sqrt(in.gss) * in.xi_n;
  ev.r = condition == BoundaryCondition::Dirichlet ? -1.0 : 1.0;
  const Eigen::VectorXd xi_r = mirror_covector(c, g, from, facet, b.ray.x, b.ray.xi);
  const Eigen::MatrixXcd h_r = match_hessian(g, b.ray.x, b.ray.xi, b.hessian, in.tangent, g, b.ray.x, xi_r, in.tangent);
  ev.reflected = branch(b, from, b.ray.x, xi_r, h_r, ev.r);
  return ev;
}

ChartAtlas::ChartAtlas(const SimplicialComplex& c, const PiecewiseMetric& m, const std::vector<int>& glued_facets) {
  const int n = c.dim();
  count_ = static_cast<int>(c.count(n));
  const std::set<int> glued(glued_facets.begin(), glued_facets.end());
  region_.assign(static_cast<std::size_t>(count_), -1);
  table_.assign(static_cast<std::size_t>(count_) * static_cast<std::size_t>(count_), std::nullopt);
  // Glue map across one facet: from the chart of r into the chart of s,
  // matching the edge and sending the unit normal into r to the unit
  // normal out of s.
  auto glue = [&](int r, int s, int facet) {
    const Simplex& f = c.simplices(1)[static_cast<std::size_t>(facet)];
    const Eigen::VectorXd pr = c.chart(r).col(c.local_vertex(r, f[0]));
    const Eigen::VectorXd ps = c.chart(s).col(c.local_vertex(s, f[0]));
    const Eigen::VectorXd tr = facet_tangent(c, r, facet), ts = facet_tangent(c, s, facet);
    const Eigen::VectorXd mr = pr + 0.5 * tr, ms = ps + 0.5 * ts;
    const Eigen::VectorXd nr = -outward_normal_vector(c, m.on(r), r, facet, mr);
    const Eigen::VectorXd ns = outward_normal_vector(c, m.on(s), s, facet, ms);
    Eigen::Matrix2d src, dst;
    src << tr, nr;
    dst << ts, ns;
    Affine a;
    a.a = dst * src.inverse();
    a.b = ps - a.a * pr;
    return a;
  };
  int label = 0;
  for (int root = 0; root < count_; ++root) {
    if (region_[static_cast<std::size_t>(root)] < 0) {
      std::deque<int> q{root};
      region_[static_cast<std::size_t>(root)] = label;
      while (!q.empty()) {
        const int s = q.front();
        q.pop_front();
        for (int facet : c.facets_of(s)) {
          const int r = c.neighbor(s, facet);
          if (r < 0 || !glued.count(facet) || region_[static_cast<std::size_t>(r)] >= 0) continue;
          region_[static_cast<std::size_t>(r)] = label;
          q.push_back(r);
        }
      }
      ++label;
    }
    // Maps from every simplex of the region into `root`, by breadth-first unfolding.
    auto& self = table_[static_cast<std::size_t>(root * count_ + root)];
    self = Affine{Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n)};
    std::deque<int> q{root};
    while (!q.empty()) {
      const int s = q.front();
      q.pop_front();
      const Affine& into_root = *table_[static_cast<std::size_t>(s * count_ + root)];
      for (int facet : c.facets_of(s)) {
        const int r = c.neighbor(s, facet);
        if (r < 0 || !glued.count(facet) || table_[static_cast<std::size_t>(r * count_ + root)]) continue;
        const Affine step = glue(r, s, facet);
        table_[static_cast<std::size_t>(r * count_ + root)] =
            Affine{into_root.a * step.a, into_root.a * step.b + into_root.b};
        q.push_back(r);
      }
    }
  }
}

bool ChartAtlas::maps(int from, int to) const {
  return table_[static_cast<std::size_t>(from * count_ + to)].has_value();
}

Eigen::VectorXd ChartAtlas::apply(int from, int to, const Eigen::VectorXd& x) const {
  const auto& a = table_[static_cast<std::size_t>(from * count_ + to)];
  if (!a) throw BeamError("no chart map between the two simplices");
  return a->a * x + a->b;
}

double beam_cutoff(double s) {
  if (s <= 0.5) return 1.0;
  if (s >= 1.0) return 0.0;
  const double u = 2.0 * (1.0 - s);  // 1 at s = 1/2, 0 at s = 1
  return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
}

namespace {

double cutoff_derivative(double s) {
  if (s <= 0.5 || s >= 1.0) return 0.0;
  const double u = 2.0 * (1.0 - s);
  return -2.0 * 30.0 * u * u * (1.0 - u) * (1.0 - u);
}

}  // namespace

BeamField trace_beam_tree(const SimplicialComplex& c, const PiecewiseMetric& m, const BeamState& launch, double T,
                          const BeamOptions& opt) {
  if (!(opt.dt > 0.0)) throw BeamError("beam step must be positive");
  if (T < launch.ray.t) throw BeamError("final time precedes the launch time");
  const std::vector<int> artificial = opt.artificial ? *opt.artificial : detect_artificial_interfaces(c, m);
  const std::set<int> transparent(artificial.begin(), artificial.end());
  const std::set<int> dirichlet(opt.dirichlet_facets.begin(), opt.dirichlet_facets.end());
  BeamField f;
  f.atlas = ChartAtlas(c, m, artificial);
  f.final_time = T;

  struct Pending {
    BeamState start;
    int parent;
    int depth;
    std::string origin;
  };
  std::deque<Pending> queue{{launch, -1, 0, "launch"}};
  while (!queue.empty()) {
    Pending job = queue.front();
    queue.pop_front();
    BeamBranch br;
    br.id = static_cast<int>(f.branches.size());
    br.parent = job.parent;
    br.depth = job.depth;
    br.origin = job.origin;
    br.t_start = job.start.ray.t;
    if (job.parent >= 0 && opt.overlap > 0.0) {
      try {
        BeamPath back = propagate_in_chart(m.on(job.start.ray.simplex), job.start, -opt.dt, br.t_start - opt.overlap);
        for (auto it = back.states.rbegin(); it + 1 != back.states.rend(); ++it) br.path.push_back(*it);
      } catch (const Error&) {
        // The extension is a convenience near the event; keep what we have.
      }
    }
    BeamState s = job.start;
    br.path.push_back(s);
    bool ended_on_facet = false;
    while (true) {
      BeamPath p = propagate_beam(c, m, s, opt.dt, T);
      br.path.insert(br.path.end(), p.states.begin() + 1, p.states.end());
      s = p.states.back();
      if (p.facet < 0) break;
      ended_on_facet = true;
      if (p.skeleton) {
        BeamEvent ev;
        ev.kind = BeamEventKind::Skeleton;
        ev.time = s.ray.t;
        ev.facet = p.facet;
        ev.simplex = s.ray.simplex;
        ev.x = s.ray.x;
        ev.xi_in = s.ray.xi;
        ev.branch = br.id;
        f.events.push_back(ev);
        f.notes.push_back("branch " + std::to_string(br.id) + " reached the (n-2)-skeleton at t = " +
                          std::to_string(s.ray.t));
        break;
      }
      const int nb = c.neighbor(s.ray.simplex, p.facet);
      if (nb >= 0 && transparent.count(p.facet)) {
        BeamEvent ev = split_at_interface(c, m, s, p.facet, opt.critical_tol);
        ev.kind = BeamEventKind::Artificial;
        ev.branch = br.id;
        if (!ev.transmitted) throw BeamError("no transmitted beam across artificial facet " + std::to_string(p.facet));
        s = *ev.transmitted;
        ev.transmitted_branch = br.id;
        f.events.push_back(ev);
        br.path.push_back(s);
        ended_on_facet = false;
        continue;
      }
      BeamEvent ev = nb >= 0 ? split_at_interface(c, m, s, p.facet, opt.critical_tol)
                             : reflect_at_boundary(c, m, s, p.facet,
                                                   dirichlet.count(p.facet) ? BoundaryCondition::Dirichlet
                                                                            : BoundaryCondition::Neumann);
      ev.branch = br.id;
      if (job.depth + 1 > opt.max_depth) {
        br.truncated = true;
        f.notes.push_back("branch " + std::to_string(br.id) + " reached the depth cap at t = " +
                          std::to_string(s.ray.t));
      } else {
        int next_id = static_cast<int>(f.branches.size() + queue.size()) + 1;
        if (ev.reflected) {
          ev.reflected_branch = next_id++;
          queue.push_back({*ev.reflected, br.id, job.depth + 1, "reflected"});
        }
        if (ev.transmitted) {
          ev.transmitted_branch = next_id++;
          queue.push_back({*ev.transmitted, br.id, job.depth + 1, "transmitted"});
        }
      }
      f.events.push_back(ev);
      break;
    }
    br.t_end = s.ray.t;
    if (ended_on_facet && opt.overlap > 0.0) {
      try {
        BeamPath fwd = propagate_in_chart(m.on(s.ray.simplex), s, opt.dt, br.t_end + opt.overlap);
        br.path.insert(br.path.end(), fwd.states.begin() + 1, fwd.states.end());
      } catch (const Error&) {
      }
    }
    f.branches.push_back(std::move(br));
  }
  return f;
}

BeamState branch_state(const PiecewiseMetric& m, const BeamBranch& br, double t) {
  const auto& path = br.path;
  if (path.empty()) throw BeamError("empty beam branch");
  if (t < path.front().ray.t - 1e-12 || t > path.back().ray.t + 1e-12)
    throw BeamError("time " + std::to_string(t) + " outside the traced range of branch " + std::to_string(br.id));
  // Last state with time <= t; at a facet crossing the later (far side) copy wins.
  auto it = std::upper_bound(path.begin(), path.end(), t,
                             [](double v, const BeamState& s) { return v < s.ray.t; });
  const BeamState& base = it == path.begin() ? path.front() : *(it - 1);
  const double h = t - base.ray.t;
  if (h == 0.0) return base;
  BeamState out = base;
  unpack(rk4_step(beam_rhs(m.on(base.ray.simplex), base), pack(base), h), out);
  out.ray.t = t;
  return out;
}

namespace {

bool branch_active(const BeamBranch& br, double t) {
  return t >= br.path.front().ray.t - 1e-12 && t <= br.path.back().ray.t + 1e-12;
}

struct PreparedBranch {
  BeamState s;
  BeamRates rates;
  Eigen::MatrixXd g;
  std::vector<Eigen::MatrixXd> dg;
};

BeamSample sample_point(const ChartAtlas& atlas, const std::vector<PreparedBranch>& prepared, double eps,
                        const PolyPoint& p) {
  const auto n = p.x.size();
  const double norm = std::pow(kPi * eps, -0.25 * static_cast<double>(n));
  const double scale = std::pow(eps, -5.0 / 6.0);
  BeamSample out{Complex(0.0, 0.0), Complex(0.0, 0.0)};
  for (const PreparedBranch& pb : prepared) {
    const BeamState& s = pb.s;
    if (!atlas.maps(p.simplex, s.ray.simplex)) continue;
    const Eigen::VectorXd y = atlas.apply(p.simplex, s.ray.simplex, p.x) - s.ray.x;
    const double qarg = y.dot(pb.g * y) * scale;
    const double chi = beam_cutoff(qarg);
    if (chi == 0.0) continue;
    const Eigen::VectorXcd yc = y.cast<Complex>();
    const Complex theta = s.theta0 + s.ray.xi.dot(y) + (yc.transpose() * s.hessian * yc)(0, 0);
    const Complex e = std::exp(Complex(0.0, 1.0) * theta / eps);
    const Complex u = norm * s.amplitude * chi * e;
    // Time derivative with y = x - x(t).
    const Eigen::VectorXd& v = pb.rates.dx;
    const Complex theta_t = pb.rates.dxi.dot(y) - s.ray.xi.dot(v) + (yc.transpose() * pb.rates.dhessian * yc)(0, 0) -
                            2.0 * (yc.transpose() * s.hessian * v.cast<Complex>())(0, 0);
    double gdot = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) gdot += v(k) * y.dot(pb.dg[static_cast<std::size_t>(k)] * y);
    const double q_t = (-2.0 * y.dot(pb.g * v) + gdot) * scale;
    const Complex ut = norm * e *
                       (pb.rates.damplitude * chi + s.amplitude * cutoff_derivative(qarg) * q_t +
                        s.amplitude * chi * Complex(0.0, 1.0) * theta_t / eps);
    out.u += u;
    out.ut += ut;
  }
  return out;
}

std::vector<PreparedBranch> prepare(const PiecewiseMetric& m, const BeamField& f, double t) {
  std::vector<PreparedBranch> out;
  for (const BeamBranch& br : f.branches) {
    if (!branch_active(br, t)) continue;
    PreparedBranch pb;
    pb.s = branch_state(m, br, t);
    const MetricField& g = m.on(pb.s.ray.simplex);
    pb.rates = beam_rates(g, pb.s);
    const MetricJet j = g.jet(pb.s.ray.x);
    pb.g = j.g;
    pb.dg = j.dg;
    out.push_back(std::move(pb));
  }
  return out;
}

}  // namespace

std::vector<BeamSample> evaluate_beam_field(const SimplicialComplex& c, const PiecewiseMetric& m, const BeamField& f,
                                            double eps, const std::vector<PolyPoint>& points, double t,
                                            Execution exec) {
  if (!(eps > 0.0 && eps < 1.0)) throw BeamError("eps must lie in (0, 1)");
  if (t < -1e-12 || t > f.final_time + 1e-12) throw BeamError("time outside the traced range");
  for (const PolyPoint& p : points)
    if (p.simplex < 0 || p.simplex >= static_cast<int>(c.count(c.dim())))
      throw BeamError("point outside every simplex");
  const std::vector<PreparedBranch> prepared = prepare(m, f, t);
  std::vector<BeamSample> out(points.size());
  const auto count = static_cast<long long>(points.size());
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < count; ++i)
      out[static_cast<std::size_t>(i)] = sample_point(f.atlas, prepared, eps, points[static_cast<std::size_t>(i)]);
  } else {
    for (long long i = 0; i < count; ++i)
      out[static_cast<std::size_t>(i)] = sample_point(f.atlas, prepared, eps, points[static_cast<std::size_t>(i)]);
  }
  return out;
}

NodalData beam_nodal_data(const SimplicialComplex& c, const PiecewiseMetric& m, const BeamField& f, double eps,
                          const Mesh& mesh, double t, Execution exec) {
  std::vector<PolyPoint> pts(mesh.node_count());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = mesh.node_point(static_cast<int>(i));
  const auto s = evaluate_beam_field(c, m, f, eps, pts, t, exec);
  NodalData d;
  d.u.resize(static_cast<Eigen::Index>(s.size()));
  d.ut.resize(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) {
    d.u(static_cast<Eigen::Index>(i)) = s[i].u.real();
    d.ut(static_cast<Eigen::Index>(i)) = s[i].ut.real();
  }
  return d;
}

}  // namespace polyspec
