#include "polyspec/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "polyspec/error.hpp"

namespace polyspec {

namespace {

// x^e with e small; avoids std::pow for the integer exponents we store.
double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

void lattice_rec(int remaining, int slots, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (slots == 1) {
    cur.push_back(remaining);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int i = 0; i <= remaining; ++i) {
    cur.push_back(i);
    lattice_rec(remaining - i, slots - 1, cur, out);
    cur.pop_back();
  }
}

}  // namespace

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [e, c] : terms_) {
    int s = 0;
    for (int v : e) s += v;
    d = std::max(d, s);
  }
  return d;
}

void Polynomial::add(const std::vector<int>& exps, double coeff) {
  if (static_cast<int>(exps.size()) != nvars_) throw MetricError("monomial has wrong number of variables");
  for (int e : exps)
    if (e < 0) throw MetricError("negative exponent in monomial");
  double& slot = terms_[exps];
  slot += coeff;
  if (slot == 0.0) terms_.erase(exps);
}

double Polynomial::value(const Eigen::VectorXd& x) const {
  double v = 0.0;
  for (const auto& [e, c] : terms_) {
    double t = c;
    for (int i = 0; i < nvars_; ++i) t *= ipow(x(i), e[static_cast<std::size_t>(i)]);
    v += t;
  }
  return v;
}

void Polynomial::jet(const Eigen::VectorXd& x, double& value, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
  const int n = nvars_;
  value = 0.0;
  grad = Eigen::VectorXd::Zero(n);
  hess = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [e, c] : terms_) {
    double t = c;
    for (int i = 0; i < n; ++i) t *= ipow(x(i), e[static_cast<std::size_t>(i)]);
    value += t;
    for (int k = 0; k < n; ++k) {
      const int ek = e[static_cast<std::size_t>(k)];
      if (ek == 0) continue;
      double d = c * ek;
      for (int i = 0; i < n; ++i) d *= ipow(x(i), e[static_cast<std::size_t>(i)] - (i == k ? 1 : 0));
      grad(k) += d;
      for (int l = 0; l < n; ++l) {
        const int el = e[static_cast<std::size_t>(l)] - (l == k ? 1 : 0);
        if (el <= 0) continue;
        double dd = c * ek * el;
        for (int i = 0; i < n; ++i) {
          int p = e[static_cast<std::size_t>(i)] - (i == k ? 1 : 0) - (i == l ? 1 : 0);
          dd *= ipow(x(i), p);
        }
        hess(k, l) += dd;
      }
    }
  }
}

MetricField::MetricField(int dim) : dim_(dim) {
  entries_.assign(static_cast<std::size_t>(dim * (dim + 1) / 2), Polynomial(dim));
}

MetricField MetricField::constant(const Eigen::MatrixXd& g) {
  const int n = static_cast<int>(g.rows());
  MetricField f(n);
  std::vector<int> zero(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      if (g(i, j) != 0.0) f.add_term(i, j, zero, g(i, j));
  return f;
}

int MetricField::slot(int i, int j) const {
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= dim_) throw MetricError("metric entry index out of range");
  return i * dim_ - i * (i - 1) / 2 + (j - i);
}

void MetricField::add_term(int i, int j, const std::vector<int>& exps, double coeff) {
  entries_[static_cast<std::size_t>(slot(i, j))].add(exps, coeff);
}

const Polynomial& MetricField::entry(int i, int j) const { return entries_[static_cast<std::size_t>(slot(i, j))]; }

int MetricField::degree() const {
  int d = 0;
  for (const auto& p : entries_) d = std::max(d, p.degree());
  return d;
}

Eigen::MatrixXd MetricField::value(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd g(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j) g(i, j) = g(j, i) = entry(i, j).value(x);
  return g;
}

MetricJet MetricField::jet(const Eigen::VectorXd& x) const {
  const int n = dim_;
  MetricJet out;
  out.g.resize(n, n);
  out.dg.assign(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));
  out.ddg.assign(static_cast<std::size_t>(n * n), Eigen::MatrixXd::Zero(n, n));
  double v;
  Eigen::VectorXd gr;
  Eigen::MatrixXd h;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      entry(i, j).jet(x, v, gr, h);
      out.g(i, j) = out.g(j, i) = v;
      for (int k = 0; k < n; ++k) {
        out.dg[static_cast<std::size_t>(k)](i, j) = out.dg[static_cast<std::size_t>(k)](j, i) = gr(k);
        for (int l = 0; l < n; ++l)
          out.ddg[static_cast<std::size_t>(k * n + l)](i, j) = out.ddg[static_cast<std::size_t>(k * n + l)](j, i) =
              h(k, l);
      }
    }
  return out;
}

PiecewiseMetric PiecewiseMetric::uniform(const SimplicialComplex& c, const Eigen::MatrixXd& g) {
  PiecewiseMetric m;
  m.dim = c.dim();
  m.fields.assign(c.count(c.dim()), MetricField::constant(g));
  return m;
}

std::vector<Eigen::VectorXd> simplex_lattice(const SimplicialComplex& c, int top, int lattice) {
  std::vector<std::vector<int>> idx;
  std::vector<int> cur;
  lattice_rec(lattice, c.dim() + 1, cur, idx);
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(idx.size());
  for (const auto& m : idx) {
    Eigen::VectorXd b(c.dim() + 1);
    for (int i = 0; i <= c.dim(); ++i) b(i) = static_cast<double>(m[static_cast<std::size_t>(i)]) / lattice;
    pts.push_back(c.from_barycentric(top, b));
  }
  return pts;
}

double min_metric_eigenvalue(const SimplicialComplex& c, const MetricField& f, int top, int lattice) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& x : simplex_lattice(c, top, lattice)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f.value(x), Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues()(0));
  }
  return lo;
}

void validate_metric(const SimplicialComplex& c, const PiecewiseMetric& m, int lattice) {
  if (m.dim != c.dim() || m.fields.size() != c.count(c.dim()))
    throw MetricError("metric does not match the complex (" + std::to_string(m.fields.size()) + " fields for " +
                      std::to_string(c.count(c.dim())) + " simplices)");
  for (std::size_t t = 0; t < m.fields.size(); ++t) {
    if (m.fields[t].dim() != c.dim()) throw MetricError("metric field " + std::to_string(t) + " has wrong dimension");
    double lo = min_metric_eigenvalue(c, m.fields[t], static_cast<int>(t), lattice);
    if (!(lo > 1e-10))
      throw MetricError("metric on simplex " + std::to_string(t) + " is not positive definite (min eigenvalue " +
                        std::to_string(lo) + ")");
  }
}

}  // namespace polyspec
