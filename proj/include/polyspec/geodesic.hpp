#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polyspec/complex.hpp"
#include "polyspec/metric.hpp"

namespace polyspec {

/// g^{-1} and its first/second partial derivatives.
struct InverseMetricJet {
  Eigen::MatrixXd ginv;
  std::vector<Eigen::MatrixXd> d;   // d[k] = d g^{-1} / dx_k
  std::vector<Eigen::MatrixXd> dd;  // dd[k * n + l]
};

InverseMetricJet inverse_metric_jet(const MetricField& g, const Eigen::VectorXd& x);

/// Value, gradient and Hessian blocks of p(x, xi) = sqrt(xi . g^{-1}(x) xi).
struct HamiltonianJet {
  double p = 0.0;
  Eigen::VectorXd px, pxi;
  Eigen::MatrixXd pxx;
  Eigen::MatrixXd pxxi;  // (i, j) = d^2 p / dx_i dxi_j
  Eigen::MatrixXd pxixi;
};

HamiltonianJet hamiltonian_jet(const MetricField& g, const Eigen::VectorXd& x, const Eigen::VectorXd& xi);

/// Linearized Hamilton flow of p at (x, xi): d(dx, dxi)/dt = A (dx, dxi).
Eigen::MatrixXd flow_linearization(const MetricField& g, const Eigen::VectorXd& x, const Eigen::VectorXd& xi);

/// Christoffel symbols of the second kind: out[k](i, j) = Gamma^k_ij.
std::vector<Eigen::MatrixXd> christoffel(const MetricField& g, const Eigen::VectorXd& x);

/// b^j = (1/sqrt g) d_i (sqrt g g^{ij}), so that Lap f = g^{ij} f_ij + b^j f_j.
Eigen::VectorXd laplacian_drift(const MetricField& g, const Eigen::VectorXd& x);

using OdeRhs = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// One classic fourth-order Runge-Kutta step of an autonomous system.
Eigen::VectorXd rk4_step(const OdeRhs& f, const Eigen::VectorXd& y, double h);

/// Result of a step that may stop on the boundary of the current simplex.
struct EventStep {
  Eigen::VectorXd y;
  double h = 0.0;      // time actually advanced
  int local = -1;      // local vertex opposite the hit facet, -1 if none
  bool skeleton = false;
};

/// Advances `y` (position in its first dim entries) by h inside top simplex
/// `top`, stopping by bisection where it first reaches a facet.
EventStep step_with_events(const SimplicialComplex& c, int top, const OdeRhs& f, const Eigen::VectorXd& y, double h);

/// Rhs of x' = g^{-1} xi, xi' = -1/2 d_x(g^{jk}) xi_j xi_k for y = (x, xi).
Eigen::VectorXd geodesic_rhs(const MetricField& g, const Eigen::VectorXd& y);

/// Unit normal covector of `facet` seen from `top`, positive on vectors
/// pointing into `top`, normalized in g^{-1}(x).
Eigen::VectorXd inward_normal_covector(const SimplicialComplex& c, const MetricField& g, int top, int facet,
                                       const Eigen::VectorXd& x);

/// Edge tangent of a facet in the chart of `top`, from the lower to the
/// higher vertex id (n = 2).
Eigen::VectorXd facet_tangent(const SimplicialComplex& c, int top, int facet);

/// Covector with the same tangential part across `facet`, unit in the metric
/// of `to` at point `x_to` and pointing into `to`. Empty when the incidence
/// is critical (tangential part too large for the target metric).
std::optional<Eigen::VectorXd> refract_covector(const SimplicialComplex& c, const PiecewiseMetric& m, int from, int to,
                                                int facet, const Eigen::VectorXd& x_to, const Eigen::VectorXd& xi,
                                                double critical_tol = 1e-6);

/// Mirror of xi in the facet: tangential part kept, normal part negated.
Eigen::VectorXd mirror_covector(const SimplicialComplex& c, const MetricField& g, int top, int facet,
                                const Eigen::VectorXd& x, const Eigen::VectorXd& xi);

/// Point of `facet` given in the chart of `from`, expressed in the chart of `to`.
Eigen::VectorXd transfer_point(const SimplicialComplex& c, int from, int to, int facet, const Eigen::VectorXd& x);

struct GeodesicState {
  int simplex = -1;
  Eigen::VectorXd x;
  Eigen::VectorXd xi;
  double t = 0.0;
};

enum class CrossingKind { Transmitted, TotalReflection, Boundary, Skeleton };

struct FacetCrossing {
  double t = 0.0;
  int simplex = -1;  // simplex the geodesic arrives from
  int facet = -1;
  CrossingKind kind = CrossingKind::Transmitted;
  Eigen::VectorXd x, xi;  // at the event, chart of `simplex`
  int next_simplex = -1;
  Eigen::VectorXd x_next, xi_next;
};

struct GeodesicTrace {
  std::vector<GeodesicState> states;
  std::vector<FacetCrossing> events;
  bool stopped = false;
  std::string stop_reason;
};

/// Integrates the geodesic flow piecewise, refracting through interfaces
/// (tangential covector kept) and stopping at boundary facets or on the
/// (n-2)-skeleton. Throws MetricError if s0 is not a unit covector.
GeodesicTrace trace_geodesic(const SimplicialComplex& c, const PiecewiseMetric& m, const GeodesicState& s0, double dt,
                             double T);

}  // namespace polyspec
