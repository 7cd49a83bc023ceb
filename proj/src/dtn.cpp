#include "polyspec/dtn.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/SparseCholesky>

#include "polyspec/error.hpp"
#include "polyspec/fem.hpp"
#include "polyspec/geodesic.hpp"

namespace polyspec {

namespace {

SparseMatrix block(const SparseMatrix& a, const std::vector<int>& rows, const std::vector<int>& cols, Eigen::Index n) {
  std::vector<int> ri(static_cast<std::size_t>(n), -1), ci(static_cast<std::size_t>(n), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) ri[static_cast<std::size_t>(rows[i])] = static_cast<int>(i);
  for (std::size_t i = 0; i < cols.size(); ++i) ci[static_cast<std::size_t>(cols[i])] = static_cast<int>(i);
  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index col = 0; col < a.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
      const int r = ri[static_cast<std::size_t>(it.row())], c = ci[static_cast<std::size_t>(it.col())];
      if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
    }
  SparseMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace

DtnResult dtn_map(const SimplicialComplex& c, const PiecewiseMetric& m, const Mesh& mesh, const std::vector<int>& gamma,
                  const BoundaryData& f, double T, const DtnOptions& opt) {
  if (gamma.empty()) throw SolverError("empty observation set");
  if (!(T > 0.0) || opt.steps < 1 || opt.stride < 1) throw SolverError("invalid time horizon or step count");
  const double dt = T / opt.steps;
  if (dt > mesh.size())
    throw SolverError("time step " + std::to_string(dt) + " exceeds the mesh size " + std::to_string(mesh.size()));
  const auto n = static_cast<Eigen::Index>(mesh.node_count());
  std::set<int> gamma_set(gamma.begin(), gamma.end());
  const std::set<int> neumann(opt.neumann_facets.begin(), opt.neumann_facets.end());

  std::vector<char> role(static_cast<std::size_t>(n), 0);  // 0 interior, 1 clamped, 2 observation
  for (const auto& fc : classify_facets(c)) {
    if (fc.kind != FacetKind::Boundary) continue;
    if (gamma_set.count(fc.facet) || neumann.count(fc.facet)) continue;
    for (int node : mesh.facet_nodes(fc.facet)) role[static_cast<std::size_t>(node)] = 1;
  }
  for (int g : gamma_set) {
    if (g < 0 || g >= static_cast<int>(c.count(1)) || c.cofaces(g).size() != 1)
      throw SolverError("observation facet " + std::to_string(g) + " is not on the boundary");
    for (int node : mesh.facet_nodes(g)) role[static_cast<std::size_t>(node)] = 2;
  }
  std::vector<int> inner, obs;
  for (Eigen::Index i = 0; i < n; ++i) {
    const char r = role[static_cast<std::size_t>(i)];
    if (r == 0) inner.push_back(static_cast<int>(i));
    if (r == 2) obs.push_back(static_cast<int>(i));
  }

  const Forms forms = assemble_forms(mesh, m);
  const SparseMatrix kii = block(forms.stiffness, inner, inner, n), mii = block(forms.mass, inner, inner, n);
  const SparseMatrix kio = block(forms.stiffness, inner, obs, n), mio = block(forms.mass, inner, obs, n);
  const SparseMatrix koi = block(forms.stiffness, obs, inner, n), moi = block(forms.mass, obs, inner, n);
  const SparseMatrix koo = block(forms.stiffness, obs, obs, n), moo = block(forms.mass, obs, obs, n);

  // Observation-set mass matrix along the edges.
  std::vector<int> obs_index(static_cast<std::size_t>(n), -1);
  for (std::size_t i = 0; i < obs.size(); ++i) obs_index[static_cast<std::size_t>(obs[i])] = static_cast<int>(i);
  const auto no = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd mg = Eigen::MatrixXd::Zero(no, no);
  for (int g : gamma_set) {
    const int top = c.cofaces(g)[0];
    const Eigen::VectorXd t = facet_tangent(c, top, g);
    const auto& nodes = mesh.facet_nodes(g);
    const int segs = static_cast<int>(nodes.size()) - 1;
    for (int k = 0; k < segs; ++k) {
      Eigen::VectorXd w(2);
      const double s = (k + 0.5) / segs;
      w << 1.0 - s, s;
      const Eigen::VectorXd x = c.facet_point(top, g, w);
      const double len = std::sqrt(t.dot(m.on(top).value(x) * t)) / segs;
      const int a = obs_index[static_cast<std::size_t>(nodes[static_cast<std::size_t>(k)])];
      const int b = obs_index[static_cast<std::size_t>(nodes[static_cast<std::size_t>(k + 1)])];
      mg(a, a) += len / 3.0;
      mg(b, b) += len / 3.0;
      mg(a, b) += len / 6.0;
      mg(b, a) += len / 6.0;
    }
  }
  const Eigen::LDLT<Eigen::MatrixXd> mg_solver(mg);

  const double beta = 0.25, gam = 0.5;
  Eigen::SimplicialLDLT<SparseMatrix> solver(SparseMatrix(mii + beta * dt * dt * kii));
  if (solver.info() != Eigen::Success) throw SolverError("factorization of the Newmark operator failed");

  auto boundary_values = [&](double t) {
    Eigen::VectorXd v(no);
    for (Eigen::Index i = 0; i < no; ++i) v(i) = f(t, mesh.node_point(obs[static_cast<std::size_t>(i)]));
    return v;
  };
  auto boundary_accel = [&](double t) {
    return Eigen::VectorXd((boundary_values(t + dt) - 2.0 * boundary_values(t) + boundary_values(t - dt)) / (dt * dt));
  };

  DtnResult out;
  out.dt = dt;
  out.nodes = obs;
  out.boundary_mass = mg;
  const int kept = opt.steps / opt.stride + 1;
  out.flux.resize(kept, no);

  const auto ni = static_cast<Eigen::Index>(inner.size());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(ni), v = Eigen::VectorXd::Zero(ni);
  Eigen::VectorXd ub = boundary_values(0.0), ab = boundary_accel(0.0);
  Eigen::VectorXd rhs0 = -(mio * ab + kio * ub);
  Eigen::SimplicialLDLT<SparseMatrix> mass_solver(mii);
  Eigen::VectorXd a = mass_solver.solve(Eigen::VectorXd(rhs0 - kii * u));

  auto record = [&](int row, double t) {
    const Eigen::VectorXd reaction = koi * u + koo * ub + moi * a + moo * ab;
    out.flux.row(row) = mg_solver.solve(reaction).transpose();
    out.times.push_back(t);
  };
  record(0, 0.0);
  for (int step = 1; step <= opt.steps; ++step) {
    const double t = step * dt;
    ub = boundary_values(t);
    ab = boundary_accel(t);
    const Eigen::VectorXd pred = u + dt * v + dt * dt * (0.5 - beta) * a;
    const Eigen::VectorXd rhs = -(mio * ab + kio * ub) - kii * pred;
    const Eigen::VectorXd a_new = solver.solve(rhs);
    u = pred + beta * dt * dt * a_new;
    v += dt * ((1.0 - gam) * a + gam * a_new);
    a = a_new;
    if (step % opt.stride == 0) record(step / opt.stride, t);
  }
  return out;
}

Eigen::MatrixXd sample_boundary_data(const Mesh& mesh, const DtnResult& r, const BoundaryData& g) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(r.times.size()), static_cast<Eigen::Index>(r.nodes.size()));
  for (std::size_t i = 0; i < r.times.size(); ++i)
    for (std::size_t j = 0; j < r.nodes.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = g(r.times[i], mesh.node_point(r.nodes[j]));
  return out;
}

double dtn_pairing(const DtnResult& r, const Eigen::MatrixXd& g_values) {
  if (g_values.rows() != r.flux.rows() || g_values.cols() != r.flux.cols())
    throw SolverError("pairing data has the wrong shape");
  double total = 0.0;
  const Eigen::Index nt = r.flux.rows();
  for (Eigen::Index i = 0; i < nt; ++i) {
    const double w = (i == 0 || i == nt - 1) ? 0.5 : 1.0;
    const double dt = nt > 1 ? r.times[1] - r.times[0] : 0.0;
    total += w * dt * r.flux.row(i).dot(r.boundary_mass * g_values.row(i).transpose());
  }
  return total;
}

}  // namespace polyspec
