#pragma once

#include <vector>

#include <Eigen/Dense>

#include "polyspec/complex.hpp"
#include "polyspec/distance.hpp"
#include "polyspec/metric.hpp"

namespace polyspec {

struct ChartOptions {
  int order = 2;           // highest normal derivative K
  int samples = 9;         // tangential samples
  double s_min = 0.2;      // sample range along the facet parameter
  double s_max = 0.8;
  double thickness = -1.0; // normal depth; <= 0 picks a fraction of the simplex heights
  int steps = 64;          // RK4 steps across the thickness
};

/// One side of an interface chart. Normal derivatives are taken in the
/// global normal coordinate sigma (negative on the minus side).
struct ChartSide {
  int simplex = -1;
  std::vector<double> gss;                      // g_ss(s_j, 0)
  std::vector<std::vector<double>> derivative;  // derivative[k][j] = d^k g_ss / d sigma^k
};

/// Interface normal coordinates (s, sigma) on one edge of a 2-complex: s is
/// the affine facet parameter from the lower vertex id, sigma the signed
/// arclength along normal geodesics (sigma < 0 in the minus simplex).
struct InterfaceChart {
  int facet = -1;
  int order = 0;
  std::vector<double> s;
  ChartSide minus, plus;  // plus.simplex == -1 for boundary facets
  double thickness = 0.0;
  double step = 0.0;
  double injectivity_radius = 0.0;
  double structure_error = 0.0;  // max |g_s,sigma| + |g_sigma,sigma - 1| over the sampled chart
};

/// Builds the chart on both sides of `facet` (one side for boundary facets).
/// Throws ChartError on a normal-coordinate fold, a normal geodesic leaving
/// its simplex, or a chart that fails the unit-normal/zero-shear check.
InterfaceChart interface_chart(const SimplicialComplex& c, const PiecewiseMetric& m, int facet,
                               const ChartOptions& opt = {});

/// Point with interface coordinates (s, sigma); sigma >= 0 lies in the plus simplex.
PolyPoint chart_point(const SimplicialComplex& c, const PiecewiseMetric& m, int facet, double s, double sigma);

/// Inverse of chart_point by Newton iteration on the normal geodesic map.
Eigen::Vector2d chart_locate(const SimplicialComplex& c, const PiecewiseMetric& m, int facet, const PolyPoint& p);

/// First-order geometry of the normal coordinates at (s, 0) seen from one
/// side; tau >= 0 is the depth into `simplex`.
struct SideFrame {
  int simplex = -1;
  Eigen::Vector2d x;       // chart point
  Eigen::Vector2d t;       // d X / d s
  Eigen::Vector2d n;       // d X / d tau (unit inward normal)
  Eigen::Vector2d dn_ds;   // d^2 X / ds dtau
  Eigen::Vector2d x_tautau;  // d^2 X / dtau^2
  double gss = 0.0;
  double dgss_ds = 0.0;
  double dgss_dtau = 0.0;
};

SideFrame side_frame(const SimplicialComplex& c, const PiecewiseMetric& m, int facet, int simplex, double s);

struct JumpProfile {
  int facet = -1;
  std::vector<double> s;
  std::vector<std::vector<double>> jump;  // jump[k][j], k = 0..K

  double max_jump(int k) const;
};

/// |d^k g+ - d^k g-| at the chart samples for k = 0..order.
JumpProfile jump_profile(const InterfaceChart& chart);
JumpProfile jump_profile(const SimplicialComplex& c, const PiecewiseMetric& m, int facet, const ChartOptions& opt = {});

/// Default artificial-interface tolerance: 1e-8 when both sides carry a
/// constant metric, 1e-4 otherwise.
double default_jump_tolerance(const PiecewiseMetric& m, int minus, int plus);

/// Interfaces whose jumps stay <= tol up to order K. tol <= 0 selects the default.
std::vector<int> detect_artificial_interfaces(const SimplicialComplex& c, const PiecewiseMetric& m, int order = 2,
                                              double tol = -1.0);

/// Chamber label per n-simplex (labels numbered by first appearance).
std::vector<int> chambers(const SimplicialComplex& c, const std::vector<int>& artificial);
std::vector<int> chambers(const SimplicialComplex& c, const PiecewiseMetric& m, int order = 2, double tol = -1.0);

/// One-sided finite-difference weights for the k-th derivative at 0 on the
/// grid 0, h, ..., (points-1) h (Fornberg's recursion).
std::vector<double> one_sided_weights(int k, int points, double h);

}  // namespace polyspec
