#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polyspec/beam.hpp"
#include "polyspec/eigensolver.hpp"
#include "polyspec/mesh.hpp"
#include "polyspec/wave.hpp"

namespace polyspec {

/// Relative mismatch between the beam prediction Re U and the modal wave
/// evolution of the beam's own initial data, measured over the nodes within
/// metric distance sqrt(eps) of an active beam centre.
struct BeamFidelity {
  std::vector<double> times;
  std::vector<double> mismatch;
  double max_mismatch = 0.0;
  double truncation = 0.0;
};

BeamFidelity beam_synthesis_mismatch(const SimplicialComplex& c, const PiecewiseMetric& m, const Mesh& mesh,
                                     const EigenSystem& es, const BeamState& launch, double eps,
                                     const std::vector<double>& times, const BeamOptions& opt = {},
                                     const WaveOptions& wave = {});

struct EchoConfig {
  int facet = -1;             // the facet probed for reflection
  PolyPoint p0;               // launch point and ball centre
  Eigen::VectorXd direction;  // launch covector, normalized internally
  double sigma = 0.2;         // ball radius
  double eps = 0.07;
  double threshold = 10.0;    // echo / control ratio for a positive verdict
  int samples = 121;          // time samples over [0, 2d + sigma]
  double launch_im = 2.0;       // Im H = launch_im * g at launch
  double max_truncation = 0.1;  // modal projection residual allowed for the beam data
  double beam_dt = 0.01;
  double distance_pitch = 0.02;
  std::vector<int> dirichlet_facets;
};

/// One run: ball energy int_B u^2 dV over [0, 2d + sigma] and the echo
/// compared with the predicted reflected beam.
struct EchoRun {
  double distance = 0.0;  // d(p0, facet)
  double window_start = 0.0;
  double window_end = 0.0;
  std::vector<double> times;
  std::vector<double> energy;
  double echo_energy = 0.0;   // max over the window
  double quiet_energy = 0.0;  // max over [sigma + R, 2d - sigma - R], R the cutoff radius
  double echo_time = 0.0;
  Complex predicted_coefficient{0.0, 0.0};  // r of the event on the probed facet
  double measured_coefficient = 0.0;        // least-squares factor against the unit-sign prediction
  double correlation = 0.0;                 // with the signed prediction at echo_time
  double truncation = 0.0;
};

/// Throws SolverError when the mesh or the modes do not resolve eps and
/// BeamError when the launch ray never reaches the facet.
EchoRun beam_echo_run(const SimplicialComplex& c, const PiecewiseMetric& m, const Mesh& mesh, const EigenSystem& es,
                      const EchoConfig& cfg);

struct EchoReport {
  EchoRun run;
  EchoRun control;        // filled for interfaces
  bool has_control = false;
  double control_energy = 0.0;  // control echo energy, or the quiet-window energy for boundary facets
  double ratio = 0.0;
  bool reflective = false;
};

struct EchoSolve {
  double h = 0.03;
  int count = 200;
  EigenOptions eigen;
};

/// Interface facets are compared with a control run in which every simplex
/// carries the launch simplex's metric; boundary facets with the quiet
/// window of the same run. Reflective iff the ratio reaches the threshold.
EchoReport beam_echo_experiment(const SimplicialComplex& c, const PiecewiseMetric& m, const EchoConfig& cfg,
                                const EchoSolve& solve);

/// Element mask of the metric ball B(p, r), by element centroids mapped into
/// the chart of p.simplex through the shared facets.
std::vector<char> ball_elements(const SimplicialComplex& c, const PiecewiseMetric& m, const Mesh& mesh,
                                const PolyPoint& p, double r);

/// Mass matrix restricted to the marked elements.
SparseMatrix masked_mass(const Mesh& mesh, const PiecewiseMetric& m, const std::vector<char>& elements);

/// Shortest-path distance from p to the facet, over evenly spaced facet points.
double distance_to_facet(const SimplicialComplex& c, const PiecewiseMetric& m, const PolyPoint& p, int facet,
                         double pitch);

}  // namespace polyspec
