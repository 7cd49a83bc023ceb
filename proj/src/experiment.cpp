#include "polyspec/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include <json.hpp>

#include "polyspec/beam.hpp"
#include "polyspec/complex.hpp"
#include "polyspec/distance.hpp"
#include "polyspec/document.hpp"
#include "polyspec/dtn.hpp"
#include "polyspec/echo.hpp"
#include "polyspec/eigensolver.hpp"
#include "polyspec/error.hpp"
#include "polyspec/fem.hpp"
#include "polyspec/interface_chart.hpp"
#include "polyspec/io.hpp"
#include "polyspec/mesh.hpp"
#include "polyspec/spectral.hpp"

namespace polyspec {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string num(double v) { return format_double(v); }

Check check(std::string name, bool pass, std::string detail) {
  return Check{std::move(name), pass, std::move(detail)};
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

/// Top simplex containing chart point x; charts are taken as one global frame.
PolyPoint locate_point(const SimplicialComplex& c, const Eigen::VectorXd& x) {
  int best = -1;
  double best_min = -1e300;
  for (std::size_t t = 0; t < c.count(c.dim()); ++t) {
    const double lo = c.barycentric(static_cast<int>(t), x).minCoeff();
    if (lo > best_min) {
      best_min = lo;
      best = static_cast<int>(t);
    }
  }
  if (best < 0 || best_min < -1e-9) throw ComplexError("point lies outside every simplex");
  return PolyPoint{best, x};
}

std::vector<int> subset(const Polyhedron& p, const std::string& name) {
  const auto it = p.subsets.find(name);
  if (it == p.subsets.end()) throw Error("no boundary subset named '" + name + "'");
  return it->second;
}

std::vector<int> dirichlet_facets(const Polyhedron& p, const ExperimentConfig& cfg) {
  std::vector<int> out;
  for (const std::string& name : cfg.dirichlet) {
    const auto f = subset(p, name);
    out.insert(out.end(), f.begin(), f.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

EigenOptions eigen_options(const ExperimentConfig& cfg) {
  EigenOptions o;
  o.tolerance = cfg.tol_eig;
  o.seed = cfg.seed;
  return o;
}

std::string facet_label(const SimplicialComplex& c, int facet) {
  const Simplex& s = c.simplices(c.dim() - 1)[static_cast<std::size_t>(facet)];
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "-" : "") + std::to_string(s[i]);
  return out;
}

ExperimentResult run_validate(const ExperimentConfig& cfg) {
  const Polyhedron p = load_polyhedron(cfg.input);
  const SimplicialComplex& c = p.complex;
  ExperimentResult r;
  r.title = "validate " + cfg.input;
  const HomogeneityVerdict hom = check_dimensional_homogeneity(c);
  std::string offenders;
  for (const Simplex& s : hom.offenders) {
    offenders += offenders.empty() ? " offending" : ",";
    for (std::size_t i = 0; i < s.size(); ++i) offenders += (i ? "-" : " ") + std::to_string(s[i]);
  }
  r.checks.push_back(check("dimensional homogeneity", hom.homogeneous,
                           hom.homogeneous ? "ok" : "lower-dimensional maximal simplices" + offenders));
  std::vector<FacetClass> facets;
  bool manifold = hom.homogeneous;
  if (hom.homogeneous) {
    try {
      facets = classify_facets(c);
    } catch (const ComplexError& e) {
      manifold = false;
      r.checks.push_back(check("manifold facets", false, e.what()));
    }
  }
  if (manifold) {
    std::size_t interfaces = 0;
    for (const auto& f : facets) interfaces += f.kind == FacetKind::Interface;
    r.checks.push_back(check("facets", true,
                             std::to_string(facets.size()) + " facets, " + std::to_string(interfaces) + " interfaces"));
  }
  const bool chain = check_chainability(c);
  r.checks.push_back(check("(n-1)-chainable", chain, chain ? "regular part connected" : "regular part disconnected"));

  std::vector<int> artificial, chamber;
  if (manifold) {
    artificial = detect_artificial_interfaces(c, p.metric);
    chamber = chambers(c, artificial);
    const int nch = chamber.empty() ? 0 : *std::max_element(chamber.begin(), chamber.end()) + 1;
    r.checks.push_back(check("chambers", true, std::to_string(nch) + " chambers, " + std::to_string(artificial.size()) +
                                                   " artificial interfaces"));
  }
  bool admissible = manifold && chain;
  if (admissible) {
    const auto pairs = sample_point_pairs(c, 20, cfg.seed);
    const AdmissibilityVerdict adm = check_admissibility_metric(c, p.metric, cfg.h, pairs);
    admissible = adm.admissible;
    r.checks.push_back(check("admissible", adm.admissible,
                             std::to_string(adm.pairs_checked) + " pairs, worst excess " + num(adm.worst_excess)));
  }
  r.verdict = !hom.homogeneous ? "not dimensionally homogeneous"
              : !manifold      ? "non-manifold facets"
              : !chain         ? "not (n-1)-chainable"
              : !admissible    ? "not admissible"
                               : "admissible";
  r.negative = r.verdict != "admissible";

  CsvTable ft({"facet", "vertices", "kind", "minus", "plus", "artificial"});
  for (const auto& f : facets) {
    const bool art = std::find(artificial.begin(), artificial.end(), f.facet) != artificial.end();
    ft.row({cell(f.facet), facet_label(c, f.facet), f.kind == FacetKind::Interface ? "interface" : "boundary",
            cell(f.minus), cell(f.plus), art ? "1" : "0"});
  }
  r.csvs.emplace_back("facets.csv", ft.str());
  if (!chamber.empty()) {
    CsvTable st({"simplex", "chamber"});
    for (std::size_t t = 0; t < chamber.size(); ++t) st.row({cell(t), cell(chamber[t])});
    r.csvs.emplace_back("chambers.csv", st.str());
  }
  return r;
}

ExperimentResult run_spectrum(const ExperimentConfig& cfg) {
  const Polyhedron p = load_polyhedron(cfg.input);
  const SimplicialComplex& c = p.complex;
  const auto dir = dirichlet_facets(p, cfg);
  const Mesh mesh = refine(c, p.metric, cfg.h);
  const EigenSystem es = solve_eigen(assemble_forms(mesh, p.metric), cfg.count, eigen_options(cfg), free_nodes(mesh, dir));
  ExperimentResult r;
  r.title = "spectrum " + cfg.input;
  r.checks.push_back(check("mesh", true, std::to_string(mesh.node_count()) + " nodes, h " + num(mesh.size())));
  r.checks.push_back(check("eigen residual", es.max_residual <= cfg.tol_eig, num(es.max_residual) + " via " + es.method));
  r.checks.push_back(check("mass Gram", es.gram_error <= cfg.tol_gram, num(es.gram_error)));
  if (dir.empty() && es.values.size() > 0)
    r.checks.push_back(check("constant mode", std::abs(es.values(0)) <= cfg.tol_eig, "lambda_1 = " + num(es.values(0))));

  CsvTable ev({"index", "eigenvalue"});
  for (Eigen::Index k = 0; k < es.values.size(); ++k) ev.row({cell(static_cast<long long>(k + 1)), cell(es.values(k))});
  r.csvs.emplace_back("eigenvalues.csv", ev.str());

  const auto artificial = detect_artificial_interfaces(c, p.metric);
  CsvTable tr({"facet", "index", "trace_jump", "flux_jump"});
  double worst_flux = 0.0;
  bool any = false;
  for (const auto& f : classify_facets(c)) {
    if (f.kind != FacetKind::Interface) continue;
    if (std::find(artificial.begin(), artificial.end(), f.facet) != artificial.end()) continue;
    any = true;
    const auto res = transmission_residual(c, p.metric, mesh, es, f.facet);
    for (std::size_t k = 0; k < res.size(); ++k) {
      tr.row({cell(f.facet), cell(static_cast<long long>(k + 1)), cell(res[k].trace_jump), cell(res[k].flux_jump)});
      worst_flux = std::max(worst_flux, res[k].flux_jump);
    }
  }
  if (any) {
    r.csvs.emplace_back("transmission.csv", tr.str());
    r.checks.push_back(check("interface flux jump", true, "max " + num(worst_flux)));
  }
  r.verdict = std::to_string(es.values.size()) + " eigenpairs";
  return r;
}

ExperimentResult run_bsd_compare(const ExperimentConfig& cfg) {
  auto bsd = [&](const std::string& path) {
    const Polyhedron p = load_polyhedron(path);
    const Mesh mesh = refine(p.complex, p.metric, cfg.h);
    const EigenSystem es = solve_eigen(assemble_forms(mesh, p.metric), cfg.count, eigen_options(cfg));
    return extract_bsd(p.complex, p.metric, mesh, es, subset(p, cfg.gamma), cfg.pitch);
  };
  const BoundarySpectralData a = bsd(cfg.input), b = bsd(cfg.other);
  ExperimentResult r;
  r.title = "bsd-compare " + cfg.input + " " + cfg.other;
  const std::vector<int> kappa = match_samples(a, b);
  BsdComparison cmp;
  try {
    cmp = bsd_equivalent(a, b, kappa, cfg.tol_lambda, cfg.tol_trace);
  } catch (const BsdError& e) {
    cmp.equivalent = false;
    cmp.reason = e.what();
  }
  r.checks.push_back(check("samples", true, std::to_string(kappa.size()) + " matched boundary samples"));
  r.checks.push_back(check("eigenvalues", cmp.max_eigenvalue_mismatch <= cfg.tol_lambda,
                           "max relative mismatch " + num(cmp.max_eigenvalue_mismatch)));
  r.checks.push_back(check("aligned traces", cmp.max_residual <= cfg.tol_trace, "max residual " + num(cmp.max_residual)));
  r.verdict = cmp.equivalent ? "equivalent" : "not equivalent" + (cmp.reason.empty() ? "" : ": " + cmp.reason);
  r.negative = !cmp.equivalent;

  CsvTable ev({"index", "eigenvalue_a", "eigenvalue_b"});
  for (Eigen::Index k = 0; k < std::min(a.eigenvalues.size(), b.eigenvalues.size()); ++k)
    ev.row({cell(static_cast<long long>(k + 1)), cell(a.eigenvalues(k)), cell(b.eigenvalues(k))});
  r.csvs.emplace_back("bsd_eigenvalues.csv", ev.str());
  CsvTable cl({"first", "size", "residual"});
  for (const ClusterMatch& m : cmp.clusters) cl.row({cell(m.first + 1), cell(m.size), cell(m.residual)});
  r.csvs.emplace_back("clusters.csv", cl.str());
  return r;
}

BeamState launch_from(const Polyhedron& p, const ExperimentConfig& cfg) {
  const PolyPoint p0 = locate_point(p.complex, to_vector(cfg.point));
  const Eigen::MatrixXcd h0 = Complex(0.0, cfg.launch_im) * p.metric.on(p0.simplex).value(p0.x).cast<Complex>();
  return launch_beam(p.metric, p0.simplex, p0.x, to_vector(cfg.direction), h0);
}

std::string event_kind(BeamEventKind k) {
  switch (k) {
    case BeamEventKind::Interface: return "interface";
    case BeamEventKind::Artificial: return "artificial";
    case BeamEventKind::Boundary: return "boundary";
    case BeamEventKind::Skeleton: return "skeleton";
  }
  return "unknown";
}

ExperimentResult run_beam_trace(const ExperimentConfig& cfg) {
  const Polyhedron p = load_polyhedron(cfg.input);
  BeamOptions opt;
  opt.dt = cfg.dt;
  opt.dirichlet_facets = dirichlet_facets(p, cfg);
  const BeamField f = trace_beam_tree(p.complex, p.metric, launch_from(p, cfg), cfg.T, opt);
  ExperimentResult r;
  r.title = "beam-trace " + cfg.input;

  CsvTable bt({"branch", "parent", "origin", "t", "simplex", "x", "y", "xi_x", "xi_y", "re_h00", "re_h01", "re_h11",
               "im_h00", "im_h01", "im_h11", "re_a", "im_a"});
  double worst = 1e300;
  for (const BeamBranch& br : f.branches)
    for (const BeamState& s : br.path) {
      worst = std::min(worst, min_imaginary_eigenvalue(s.hessian));
      if (s.ray.t < br.t_start - 1e-12 || s.ray.t > br.t_end + 1e-12) continue;
      const auto& h = s.hessian;
      bt.row({cell(br.id), cell(br.parent), br.origin, cell(s.ray.t), cell(s.ray.simplex), cell(s.ray.x(0)),
              cell(s.ray.x(1)), cell(s.ray.xi(0)), cell(s.ray.xi(1)), cell(h(0, 0).real()), cell(h(0, 1).real()),
              cell(h(1, 1).real()), cell(h(0, 0).imag()), cell(h(0, 1).imag()), cell(h(1, 1).imag()),
              cell(s.amplitude.real()), cell(s.amplitude.imag())});
    }
  r.csvs.emplace_back("branches.csv", bt.str());
  CsvTable et({"time", "kind", "facet", "branch", "re_r", "im_r", "re_t", "im_t", "reflected_branch",
               "transmitted_branch", "critical"});
  for (const BeamEvent& e : f.events)
    et.row({cell(e.time), event_kind(e.kind), cell(e.facet), cell(e.branch), cell(e.r.real()), cell(e.r.imag()),
            cell(e.t.real()), cell(e.t.imag()), cell(e.reflected_branch), cell(e.transmitted_branch),
            e.critical ? "1" : "0"});
  r.csvs.emplace_back("events.csv", et.str());

  r.checks.push_back(check("branches", true, std::to_string(f.branches.size()) + " branches, " +
                                                 std::to_string(f.events.size()) + " events"));
  r.checks.push_back(check("Im H positive definite", worst > 0.0, "min eigenvalue " + num(worst)));
  for (const std::string& note : f.notes) r.checks.push_back(check("note", true, note));
  r.verdict = "traced to t = " + num(cfg.T);
  return r;
}

ExperimentResult run_echo(const ExperimentConfig& cfg) {
  const Polyhedron p = load_polyhedron(cfg.input);
  const SimplicialComplex& c = p.complex;
  const int facet = c.index_of(Simplex{std::min(cfg.facet->first, cfg.facet->second),
                                       std::max(cfg.facet->first, cfg.facet->second)});
  if (facet < 0) throw ComplexError("no facet joins vertices " + std::to_string(cfg.facet->first) + " and " +
                                    std::to_string(cfg.facet->second));
  EchoConfig ec;
  ec.facet = facet;
  ec.p0 = locate_point(c, to_vector(cfg.point));
  ec.direction = to_vector(cfg.direction);
  ec.sigma = cfg.sigma;
  ec.eps = cfg.eps;
  ec.threshold = cfg.threshold;
  ec.samples = cfg.samples;
  ec.launch_im = cfg.launch_im;
  ec.max_truncation = cfg.max_truncation;
  ec.beam_dt = cfg.dt;
  ec.dirichlet_facets = dirichlet_facets(p, cfg);
  EchoSolve solve;
  solve.h = cfg.h;
  solve.count = cfg.count;
  solve.eigen = eigen_options(cfg);
  const EchoReport rep = beam_echo_experiment(c, p.metric, ec, solve);

  ExperimentResult r;
  r.title = "echo " + cfg.input + " facet " + facet_label(c, facet);
  r.checks.push_back(check("distance", true, "d = " + num(rep.run.distance) + ", window [" + num(rep.run.window_start) +
                                                 ", " + num(rep.run.window_end) + "]"));
  r.checks.push_back(check("modal truncation", true, num(rep.run.truncation)));
  r.checks.push_back(check("echo energy", true, num(rep.run.echo_energy) + " at t = " + num(rep.run.echo_time)));
  r.checks.push_back(check(rep.has_control ? "control echo energy" : "quiet-window energy", true, num(rep.control_energy)));
  r.checks.push_back(check("echo ratio", rep.reflective, num(rep.ratio) + " against threshold " + num(cfg.threshold)));
  r.checks.push_back(check("reflection coefficient", true,
                           "predicted " + num(rep.run.predicted_coefficient.real()) + (rep.run.predicted_coefficient.imag() != 0.0 ? " + " + num(rep.run.predicted_coefficient.imag()) + "i" : "") +
                               ", measured " + num(rep.run.measured_coefficient) + ", correlation " +
                               num(rep.run.correlation)));
  r.verdict = rep.reflective ? "reflective" : "not reflective";
  r.negative = !rep.reflective;

  CsvTable et(rep.has_control ? std::vector<std::string>{"time", "energy", "control_energy"}
                              : std::vector<std::string>{"time", "energy"});
  for (std::size_t k = 0; k < rep.run.times.size(); ++k) {
    std::vector<std::string> row{cell(rep.run.times[k]), cell(rep.run.energy[k])};
    if (rep.has_control) row.push_back(cell(rep.control.energy[k]));
    et.row(row);
  }
  r.csvs.emplace_back("echo.csv", et.str());
  return r;
}

ExperimentResult run_dtn(const ExperimentConfig& cfg) {
  const Polyhedron p = load_polyhedron(cfg.input);
  const SimplicialComplex& c = p.complex;
  const std::vector<int> gamma = subset(p, cfg.gamma);
  const Mesh mesh = refine(c, p.metric, cfg.h);
  // Gaussian bump centred on the observation set, switched on smoothly in time.
  Eigen::Vector2d centre = Eigen::Vector2d::Zero();
  double length = 0.0;
  for (int f : gamma) {
    const int top = c.cofaces(f).front();
    const Simplex& s = c.simplices(c.dim() - 1)[static_cast<std::size_t>(f)];
    const Eigen::Vector2d a = c.chart(top).col(c.local_vertex(top, s[0]));
    const Eigen::Vector2d b = c.chart(top).col(c.local_vertex(top, s[1]));
    centre += (b - a).norm() * 0.5 * (a + b);
    length += (b - a).norm();
  }
  if (!(length > 0.0)) throw SolverError("observation set has zero length");
  centre /= length;
  const double width = 0.25 * length, T = cfg.T;
  const BoundaryData f = [=](double t, const PolyPoint& q) {
    const double s = std::sin(kPi * t / T);
    return s * s * std::exp(-(q.x - centre).squaredNorm() / (width * width));
  };
  DtnOptions opt;
  opt.steps = cfg.steps;
  opt.stride = std::max(1, cfg.steps / 256);
  const DtnResult res = dtn_map(c, p.metric, mesh, gamma, f, T, opt);
  const double pairing = dtn_pairing(res, sample_boundary_data(mesh, res, f));

  ExperimentResult r;
  r.title = "dtn " + cfg.input + " on " + cfg.gamma;
  r.checks.push_back(check("observation nodes", true, std::to_string(res.nodes.size()) + " nodes, dt " + num(res.dt)));
  r.checks.push_back(check("energy pairing", std::isfinite(pairing), "<Lambda f, f> = " + num(pairing)));
  std::vector<std::string> header{"time"};
  for (int n : res.nodes) header.push_back("node_" + std::to_string(n));
  CsvTable ft(header);
  for (std::size_t k = 0; k < res.times.size(); ++k) {
    std::vector<std::string> row{cell(res.times[k])};
    for (Eigen::Index j = 0; j < res.flux.cols(); ++j) row.push_back(cell(res.flux(static_cast<Eigen::Index>(k), j)));
    ft.row(row);
  }
  r.csvs.emplace_back("dtn.csv", ft.str());
  r.verdict = "flux sampled at " + std::to_string(res.times.size()) + " times";
  return r;
}

}  // namespace

std::string command_name(Command c) {
  switch (c) {
    case Command::Validate: return "validate";
    case Command::Spectrum: return "spectrum";
    case Command::BsdCompare: return "bsd-compare";
    case Command::BeamTrace: return "beam-trace";
    case Command::Echo: return "echo";
    case Command::Dtn: return "dtn";
  }
  return "unknown";
}

void validate_config(const ExperimentConfig& cfg) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be positive");
  };
  positive(cfg.h, "h");
  positive(cfg.eps, "eps");
  positive(cfg.T, "T");
  positive(cfg.tol_eig, "eigen tolerance");
  positive(cfg.tol_lambda, "eigenvalue tolerance");
  positive(cfg.tol_trace, "trace tolerance");
  positive(cfg.tol_gram, "Gram tolerance");
  positive(cfg.pitch, "pitch");
  positive(cfg.sigma, "sigma");
  positive(cfg.threshold, "threshold");
  positive(cfg.launch_im, "launch width");
  positive(cfg.max_truncation, "truncation tolerance");
  positive(cfg.dt, "dt");
  if (cfg.count < 1) throw std::invalid_argument("count must be at least 1");
  if (cfg.samples < 2) throw std::invalid_argument("samples must be at least 2");
  if (cfg.steps < 1) throw std::invalid_argument("steps must be at least 1");
  if (cfg.input.empty()) throw std::invalid_argument("an input polyhedron is required");
  if (cfg.command == Command::BsdCompare && cfg.other.empty())
    throw std::invalid_argument("bsd-compare needs a second polyhedron");
  if ((cfg.command == Command::BsdCompare || cfg.command == Command::Dtn) && cfg.gamma.empty())
    throw std::invalid_argument("an observation subset (--gamma) is required");
  if (cfg.command == Command::BeamTrace || cfg.command == Command::Echo) {
    if (cfg.point.size() != 2 || cfg.direction.size() != 2)
      throw std::invalid_argument("launch point and direction need two coordinates each");
  }
  if (cfg.command == Command::Echo && !cfg.facet) throw std::invalid_argument("echo needs a facet (--facet a,b)");
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  switch (cfg.command) {
    case Command::Validate: return run_validate(cfg);
    case Command::Spectrum: return run_spectrum(cfg);
    case Command::BsdCompare: return run_bsd_compare(cfg);
    case Command::BeamTrace: return run_beam_trace(cfg);
    case Command::Echo: return run_echo(cfg);
    case Command::Dtn: return run_dtn(cfg);
  }
  throw std::invalid_argument("unknown command");
}

int exit_status(const ExperimentResult& r) { return r.negative ? 2 : 0; }

Report emit_report(const std::vector<ExperimentResult>& results) {
  Report out;
  out.summary = "polyspec report\n";
  nlohmann::ordered_json doc;
  doc["experiments"] = nlohmann::ordered_json::array();
  for (const ExperimentResult& r : results) {
    out.summary += "\n== " + r.title + " ==\n";
    nlohmann::ordered_json e;
    e["title"] = r.title;
    e["checks"] = nlohmann::ordered_json::array();
    for (const Check& c : r.checks) {
      out.summary += std::string(c.pass ? "[PASS] " : "[FAIL] ") + c.name + ": " + c.detail + "\n";
      e["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    }
    out.summary += "verdict: " + r.verdict + "\n";
    e["verdict"] = r.verdict;
    e["negative"] = r.negative;
    e["files"] = nlohmann::ordered_json::array();
    for (const auto& [name, content] : r.csvs) {
      e["files"].push_back(name);
      out.files.emplace_back(name, content);
    }
    doc["experiments"].push_back(e);
  }
  out.json = doc.dump(2) + "\n";
  return out;
}

void write_report(const Report& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  for (const auto& [name, content] : report.files) write_atomic((base / name).string(), content);
  write_atomic((base / "report.json").string(), report.json);
  write_atomic((base / "summary.txt").string(), report.summary);
}

}  // namespace polyspec
