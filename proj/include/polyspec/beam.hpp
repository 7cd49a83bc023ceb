#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polyspec/complex.hpp"
#include "polyspec/distance.hpp"
#include "polyspec/execution.hpp"
#include "polyspec/geodesic.hpp"
#include "polyspec/mesh.hpp"
#include "polyspec/metric.hpp"

namespace polyspec {

using Complex = std::complex<double>;

/// Leading-order Gaussian beam data at one time. The field near the ray is
///   (pi eps)^{-n/4} u00 exp{(i/eps)(theta0 + <xi, y> + <H y, y>)},  y = x - x(t).
struct BeamState {
  GeodesicState ray;
  Eigen::MatrixXcd hessian;  // H, complex symmetric with Im H > 0
  Complex amplitude{1.0, 0.0};
  double theta0 = 0.0;
  int order = 0;
};

/// d/dt of the ray, H and u00 along the flow.
struct BeamRates {
  Eigen::VectorXd dx, dxi;
  Eigen::MatrixXcd dhessian;
  Complex damplitude;
};

/// Riccati equation for H and the transport law for u00 in metric g.
BeamRates beam_rates(const MetricField& g, const BeamState& b);

/// Smallest eigenvalue of Im H (symmetrized).
double min_imaginary_eigenvalue(const Eigen::MatrixXcd& h);

/// Beam at x in `simplex` heading along covector xi (normalized to unit
/// length). An empty `hessian` selects (i/2) g(x).
BeamState launch_beam(const PiecewiseMetric& m, int simplex, const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                      const Eigen::MatrixXcd& hessian = {});

struct BeamPath {
  std::vector<BeamState> states;  // states.back() sits on the facet when `facet` >= 0
  int facet = -1;                 // facet reached, -1 if the final time was reached
  bool skeleton = false;
};

/// Advances the beam with RK4 until time `until` or the first facet of its
/// simplex. dt may be negative. Steps are halved when Im H loses
/// definiteness; throws BeamError after 20 halvings.
BeamPath propagate_beam(const SimplicialComplex& c, const PiecewiseMetric& m, const BeamState& b, double dt,
                        double until);

/// Same flow inside the chart of b.ray.simplex, ignoring facets.
BeamPath propagate_in_chart(const MetricField& g, const BeamState& b, double dt, double until);

enum class BoundaryCondition { Dirichlet, Neumann };
enum class BeamEventKind { Interface, Artificial, Boundary, Skeleton };

/// Outcome of a beam reaching a facet.
struct BeamEvent {
  BeamEventKind kind = BeamEventKind::Interface;
  double time = 0.0;
  int facet = -1;
  int simplex = -1;           // incident side
  Eigen::VectorXd x, xi_in;   // chart of `simplex`
  std::optional<BeamState> reflected;
  std::optional<BeamState> transmitted;
  bool critical = false;
  Complex r{0.0, 0.0};        // reflected / incident amplitude
  Complex t{0.0, 0.0};        // transmitted / incident amplitude
  double a = 0.0;             // sqrt(g_ss^-) xi_n^in
  double b = 0.0;             // sqrt(g_ss^+) xi_n^tr, 0 when critical
  int branch = -1;            // incident branch id in a BeamField
  int reflected_branch = -1;
  int transmitted_branch = -1;
};

/// Phase Hessian of an outgoing branch from second-order matching of the
/// phase restricted to the facet, as a polynomial in (t, s). T_in/T_out are
/// the chart tangents of the common edge parameter.
Eigen::MatrixXcd match_hessian(const MetricField& g_in, const Eigen::VectorXd& x_in, const Eigen::VectorXd& xi_in,
                               const Eigen::MatrixXcd& h_in, const Eigen::VectorXd& t_in, const MetricField& g_out,
                               const Eigen::VectorXd& x_out, const Eigen::VectorXd& xi_out,
                               const Eigen::VectorXd& t_out);

/// Reflected and (below critical incidence) transmitted branches of a beam
/// sitting on interface `facet`. Throws BeamError for boundary facets or
/// beams that do not point into the facet.
BeamEvent split_at_interface(const SimplicialComplex& c, const PiecewiseMetric& m, const BeamState& b, int facet,
                             double critical_tol = 1e-6);

/// Mirror branch at a boundary facet: amplitude -1 (Dirichlet) or +1
/// (Neumann). Throws BeamError for tangential incidence.
BeamEvent reflect_at_boundary(const SimplicialComplex& c, const PiecewiseMetric& m, const BeamState& b, int facet,
                              BoundaryCondition condition);

/// Affine chart maps between simplices joined through artificial facets.
class ChartAtlas {
 public:
  ChartAtlas() = default;
  ChartAtlas(const SimplicialComplex& c, const PiecewiseMetric& m, const std::vector<int>& glued_facets);

  /// Map from the chart of `from` into the chart of `to`, if both lie in
  /// one glued region: x_to = A x_from + b.
  bool maps(int from, int to) const;
  Eigen::VectorXd apply(int from, int to, const Eigen::VectorXd& x) const;
  int region(int top) const { return region_.at(static_cast<std::size_t>(top)); }

 private:
  struct Affine {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
  };
  int count_ = 0;
  std::vector<int> region_;
  std::vector<std::optional<Affine>> table_;  // [from * count + to]
};

struct BeamBranch {
  int id = 0;
  int parent = -1;
  int depth = 0;
  std::string origin;  // launch, reflected, transmitted
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<BeamState> path;  // time-ordered, including the overlap extensions
  bool truncated = false;       // depth cap reached, children dropped
};

struct BeamOptions {
  double dt = 0.01;
  int max_depth = 8;
  double overlap = 0.6;                       // in-chart extension before start and after end
  std::vector<int> dirichlet_facets;          // other boundary facets reflect with Neumann sign
  std::optional<std::vector<int>> artificial; // computed by jump detection when empty
  double critical_tol = 1e-6;
};

/// Beam tree: every branch with its events.
struct BeamField {
  std::vector<BeamBranch> branches;
  std::vector<BeamEvent> events;
  ChartAtlas atlas;
  int order = 0;
  double final_time = 0.0;
  std::vector<std::string> notes;  // skeleton hits, truncations
};

/// Traces the launch beam to time T, splitting at genuine interfaces,
/// reflecting at boundary facets and passing artificial ones.
BeamField trace_beam_tree(const SimplicialComplex& c, const PiecewiseMetric& m, const BeamState& launch, double T,
                          const BeamOptions& opt = {});

/// Quintic smoothstep cutoff: 1 for s <= 1/2, 0 for s >= 1.
double beam_cutoff(double s);

/// State of a branch at time t (one RK4 step from the nearest stored state).
BeamState branch_state(const PiecewiseMetric& m, const BeamBranch& br, double t);

struct BeamSample {
  Complex u;
  Complex ut;
};

/// Sum over branches of the cut-off beam fields and their time derivatives
/// at time t. Points outside every branch's glued region contribute zero.
std::vector<BeamSample> evaluate_beam_field(const SimplicialComplex& c, const PiecewiseMetric& m, const BeamField& f,
                                            double eps, const std::vector<PolyPoint>& points, double t,
                                            Execution exec = Execution::Parallel);

/// Real wave data (Re U, Re U_t) at the mesh nodes at time t.
struct NodalData {
  Eigen::VectorXd u;
  Eigen::VectorXd ut;
};

NodalData beam_nodal_data(const SimplicialComplex& c, const PiecewiseMetric& m, const BeamField& f, double eps,
                          const Mesh& mesh, double t, Execution exec = Execution::Parallel);

}  // namespace polyspec
