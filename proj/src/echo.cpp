#include "polyspec/echo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polyspec/distance.hpp"
#include "polyspec/error.hpp"
#include "polyspec/fem.hpp"

namespace polyspec {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<int> interior_facets(const SimplicialComplex& c) {
  std::vector<int> out;
  for (std::size_t f = 0; f < c.count(c.dim() - 1); ++f)
    if (c.cofaces(static_cast<int>(f)).size() == 2) out.push_back(static_cast<int>(f));
  return out;
}

Eigen::VectorXd lumped_mass(const EigenSystem& es) {
  return es.mass * Eigen::VectorXd::Ones(es.mass.cols());
}

void check_resolution(const Mesh& mesh, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw BeamError("eps must lie in (0, 1)");
  // At least eight elements per wavelength 2 pi eps.
  if (mesh.size() > 2.0 * kPi * eps / 8.0)
    throw SolverError("mesh size " + std::to_string(mesh.size()) + " does not resolve eps = " + std::to_string(eps));
}

}  // namespace

std::vector<char> ball_elements(const SimplicialComplex& c, const PiecewiseMetric& m, const Mesh& mesh,
                                const PolyPoint& p, double r) {
  const ChartAtlas atlas(c, m, interior_facets(c));
  const Eigen::MatrixXd g = m.on(p.simplex).value(p.x);
  std::vector<char> mask(mesh.element_count(), 0);
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    const int top = mesh.parent(static_cast<int>(e));
    if (!atlas.maps(top, p.simplex)) continue;
    const auto& xs = mesh.element_coords(static_cast<int>(e));
    const Eigen::VectorXd centroid = (xs[0] + xs[1] + xs[2]) / 3.0;
    const Eigen::VectorXd y = atlas.apply(top, p.simplex, centroid) - p.x;
    mask[e] = y.dot(g * y) <= r * r;
  }
  return mask;
}

SparseMatrix masked_mass(const Mesh& mesh, const PiecewiseMetric& m, const std::vector<char>& elements) {
  const auto em = element_matrices(mesh, m);
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    if (!elements[e]) continue;
    const auto& nodes = mesh.element(static_cast<int>(e));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) trips.emplace_back(nodes[static_cast<std::size_t>(i)],
                                                     nodes[static_cast<std::size_t>(j)], em[e].mass(i, j));
  }
  const auto n = static_cast<Eigen::Index>(mesh.node_count());
  SparseMatrix out(n, n);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

double distance_to_facet(const SimplicialComplex& c, const PiecewiseMetric& m, const PolyPoint& p, int facet,
                         double pitch) {
  const auto& cof = c.cofaces(facet);
  if (cof.empty()) throw MeshError("facet " + std::to_string(facet) + " has no coface");
  const int top = cof.front();
  const DistanceGraph graph(c, m, pitch);
  const Simplex& f = c.simplices(c.dim() - 1)[static_cast<std::size_t>(facet)];
  const Eigen::VectorXd a = c.chart(top).col(c.local_vertex(top, f[0]));
  const Eigen::VectorXd b = c.chart(top).col(c.local_vertex(top, f[1]));
  const int samples = std::max(8, static_cast<int>(std::ceil((b - a).norm() / pitch)));
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const double s = (i + 0.5) / samples;
    best = std::min(best, graph.query(p, PolyPoint{top, a + s * (b - a)}).distance);
  }
  if (!std::isfinite(best)) throw DisconnectedError("facet unreachable from the launch point");
  return best;
}

BeamFidelity beam_synthesis_mismatch(const SimplicialComplex& c, const PiecewiseMetric& m, const Mesh& mesh,
                                     const EigenSystem& es, const BeamState& launch, double eps,
                                     const std::vector<double>& times, const BeamOptions& opt,
                                     const WaveOptions& wave) {
  if (times.empty()) throw BeamError("no comparison times");
  check_resolution(mesh, eps);
  const double T = *std::max_element(times.begin(), times.end());
  const BeamField field = trace_beam_tree(c, m, launch, T, opt);
  const NodalData init = beam_nodal_data(c, m, field, eps, mesh, launch.ray.t);
  const WaveField w = synthesize_wave(es, init.u, init.ut, times, nullptr, wave);
  const Eigen::VectorXd weight = lumped_mass(es);
  BeamFidelity out;
  out.times = times;
  out.truncation = w.truncation;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    const NodalData pred = beam_nodal_data(c, m, field, eps, mesh, t);
    std::vector<BeamState> centres;
    for (const BeamBranch& br : field.branches)
      if (t >= br.t_start - 1e-12 && t <= br.t_end + 1e-12)
        centres.push_back(branch_state(m, br, t));
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
      const PolyPoint& p = mesh.node_point(static_cast<int>(i));
      bool near = false;
      for (const BeamState& s : centres) {
        if (!field.atlas.maps(p.simplex, s.ray.simplex)) continue;
        const Eigen::VectorXd y = field.atlas.apply(p.simplex, s.ray.simplex, p.x) - s.ray.x;
        if (y.dot(m.on(s.ray.simplex).value(s.ray.x) * y) <= eps) {
          near = true;
          break;
        }
      }
      if (!near) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      const double diff = w.u(ii, static_cast<Eigen::Index>(k)) - pred.u(ii);
      num += weight(ii) * diff * diff;
      den += weight(ii) * pred.u(ii) * pred.u(ii);
    }
    if (!(den > 0.0)) throw SolverError("the beam neighbourhood contains no mesh nodes");
    out.mismatch.push_back(std::sqrt(num / den));
  }
  out.max_mismatch = *std::max_element(out.mismatch.begin(), out.mismatch.end());
  return out;
}

EchoRun beam_echo_run(const SimplicialComplex& c, const PiecewiseMetric& m, const Mesh& mesh, const EigenSystem& es,
                      const EchoConfig& cfg) {
  check_resolution(mesh, cfg.eps);
  if (!(cfg.sigma > 0.0)) throw BeamError("ball radius must be positive");
  if (cfg.samples < 2) throw BeamError("need at least two time samples");
  EchoRun run;
  run.distance = distance_to_facet(c, m, cfg.p0, cfg.facet, cfg.distance_pitch);
  const double d = run.distance;
  const double T = 2.0 * d + cfg.sigma;
  run.window_start = 2.0 * d - cfg.sigma;
  run.window_end = T;

  const Eigen::MatrixXcd h0 = Complex(0.0, cfg.launch_im) * m.on(cfg.p0.simplex).value(cfg.p0.x).cast<Complex>();
  const BeamState launch = launch_beam(m, cfg.p0.simplex, cfg.p0.x, cfg.direction, h0);
  BeamOptions bopt;
  bopt.dt = cfg.beam_dt;
  bopt.dirichlet_facets = cfg.dirichlet_facets;
  const BeamField field = trace_beam_tree(c, m, launch, T, bopt);
  const BeamEvent* hit = nullptr;
  for (const BeamEvent& ev : field.events)
    if (ev.facet == cfg.facet && ev.branch == 0) {
      hit = &ev;
      break;
    }
  if (!hit) throw BeamError("the launch ray does not reach facet " + std::to_string(cfg.facet));

  const NodalData init = beam_nodal_data(c, m, field, cfg.eps, mesh, 0.0);
  for (int k = 0; k < cfg.samples; ++k) run.times.push_back(T * k / (cfg.samples - 1));
  WaveOptions wopt;
  wopt.max_truncation = cfg.max_truncation;
  const WaveField w = synthesize_wave(es, init.u, init.ut, run.times, nullptr, wopt);
  run.truncation = w.truncation;

  const SparseMatrix mb = masked_mass(mesh, m, ball_elements(c, m, mesh, cfg.p0, cfg.sigma));
  const double cutoff_radius = std::pow(cfg.eps, 5.0 / 12.0);
  const double quiet_lo = cfg.sigma + cutoff_radius, quiet_hi = 2.0 * d - cfg.sigma - cutoff_radius;
  run.echo_energy = 0.0;
  run.quiet_energy = quiet_hi > quiet_lo ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    const Eigen::VectorXd u = w.u.col(static_cast<Eigen::Index>(k));
    const double e = u.dot(mb * u);
    run.energy.push_back(e);
    const double t = run.times[k];
    if (t >= run.window_start - 1e-12 && e > run.echo_energy) {
      run.echo_energy = e;
      run.echo_time = t;
    }
    if (t >= quiet_lo && t <= quiet_hi) run.quiet_energy = std::max(run.quiet_energy, e);
  }

  if (hit->kind == BeamEventKind::Interface || hit->kind == BeamEventKind::Boundary) {
    run.predicted_coefficient = hit->r;
    const int rid = hit->reflected_branch;
    if (rid >= 0 && std::abs(hit->r) > 0.0) {
      BeamField echo = field;
      echo.branches = {field.branches[static_cast<std::size_t>(rid)]};
      const NodalData pred = beam_nodal_data(c, m, echo, cfg.eps, mesh, run.echo_time);
      // Same branch with a unit coefficient.
      BeamField unit = echo;
      for (BeamState& s : unit.branches[0].path) s.amplitude /= hit->r;
      const NodalData base = beam_nodal_data(c, m, unit, cfg.eps, mesh, run.echo_time);
      const Eigen::Index col = static_cast<Eigen::Index>(
          std::find(run.times.begin(), run.times.end(), run.echo_time) - run.times.begin());
      const Eigen::VectorXd u = w.u.col(col);
      const double uu = u.dot(mb * u), pp = pred.u.dot(mb * pred.u), bb = base.u.dot(mb * base.u);
      if (uu > 0.0 && pp > 0.0) run.correlation = u.dot(mb * pred.u) / std::sqrt(uu * pp);
      if (bb > 0.0) run.measured_coefficient = u.dot(mb * base.u) / bb;
    }
  }
  return run;
}

EchoReport beam_echo_experiment(const SimplicialComplex& c, const PiecewiseMetric& m, const EchoConfig& cfg,
                                const EchoSolve& solve) {
  auto run_with = [&](const PiecewiseMetric& metric) {
    const Mesh mesh = refine(c, metric, solve.h);
    const Forms forms = assemble_forms(mesh, metric);
    const EigenSystem es = solve_eigen(forms, solve.count, solve.eigen, free_nodes(mesh, cfg.dirichlet_facets));
    return beam_echo_run(c, metric, mesh, es, cfg);
  };
  EchoReport rep;
  rep.run = run_with(m);
  if (c.cofaces(cfg.facet).size() == 2) {
    PiecewiseMetric smooth = m;
    for (auto& f : smooth.fields) f = m.on(cfg.p0.simplex);
    rep.control = run_with(smooth);
    rep.has_control = true;
    rep.control_energy = rep.control.echo_energy;
  } else {
    rep.control_energy = rep.run.quiet_energy;
    if (std::isnan(rep.control_energy))
      throw BeamError("no quiet window before the echo; move the launch point away from the facet");
  }
  rep.ratio = rep.control_energy > 0.0 ? rep.run.echo_energy / rep.control_energy
                                       : std::numeric_limits<double>::infinity();
  rep.reflective = rep.ratio >= cfg.threshold;
  return rep;
}

}  // namespace polyspec
