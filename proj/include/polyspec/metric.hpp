#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "polyspec/complex.hpp"

namespace polyspec {

/// Multivariate polynomial with real coefficients, keyed by exponent tuple.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int nvars) : nvars_(nvars) {}

  int nvars() const { return nvars_; }
  int degree() const;
  bool is_zero() const { return terms_.empty(); }

  /// Adds `coeff` to the monomial with exponents `exps`.
  void add(const std::vector<int>& exps, double coeff);
  const std::map<std::vector<int>, double>& terms() const { return terms_; }

  double value(const Eigen::VectorXd& x) const;
  /// Value, gradient and Hessian in one pass.
  void jet(const Eigen::VectorXd& x, double& value, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const;

  bool operator==(const Polynomial& o) const { return nvars_ == o.nvars_ && terms_ == o.terms_; }

 private:
  int nvars_ = 0;
  std::map<std::vector<int>, double> terms_;
};

/// Metric tensor and its first/second partial derivatives at a point.
struct MetricJet {
  Eigen::MatrixXd g;
  std::vector<Eigen::MatrixXd> dg;   // dg[k] = d g / dx_k
  std::vector<Eigen::MatrixXd> ddg;  // ddg[k * n + l] = d^2 g / dx_k dx_l
};

/// Symmetric matrix-valued polynomial field on one simplex chart.
class MetricField {
 public:
  MetricField() = default;
  explicit MetricField(int dim);
  static MetricField constant(const Eigen::MatrixXd& g);

  int dim() const { return dim_; }

  /// Adds coeff * x^exps to entry (i, j) and (j, i).
  void add_term(int i, int j, const std::vector<int>& exps, double coeff);
  const Polynomial& entry(int i, int j) const;
  int degree() const;

  Eigen::MatrixXd value(const Eigen::VectorXd& x) const;
  MetricJet jet(const Eigen::VectorXd& x) const;

  bool operator==(const MetricField& o) const { return dim_ == o.dim_ && entries_ == o.entries_; }

 private:
  int slot(int i, int j) const;

  int dim_ = 0;
  std::vector<Polynomial> entries_;  // upper triangle, row-major
};

/// One metric field per n-simplex of a complex (indexed like simplices(n)).
struct PiecewiseMetric {
  int dim = 0;
  std::vector<MetricField> fields;

  const MetricField& on(int top) const { return fields.at(static_cast<std::size_t>(top)); }
  static PiecewiseMetric uniform(const SimplicialComplex& c, const Eigen::MatrixXd& g);
};

/// Checks symmetric positive definiteness on a barycentric lattice of every
/// simplex (smallest eigenvalue > 1e-10). Throws MetricError naming the simplex.
void validate_metric(const SimplicialComplex& c, const PiecewiseMetric& m, int lattice = 8);

/// Smallest eigenvalue of g over the validation lattice of one simplex.
double min_metric_eigenvalue(const SimplicialComplex& c, const MetricField& f, int top, int lattice = 8);

/// Lattice points of a top simplex: barycentric multi-indices / lattice.
std::vector<Eigen::VectorXd> simplex_lattice(const SimplicialComplex& c, int top, int lattice);

}  // namespace polyspec
