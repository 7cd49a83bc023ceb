#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "polyspec/eigensolver.hpp"
#include "polyspec/execution.hpp"

namespace polyspec {

/// Separable interior source f(x, t) = profile(x) * pulse(t), profile as
/// nodal values.
struct WaveSource {
  Eigen::VectorXd profile;
  std::function<double(double)> pulse;
};

struct WaveOptions {
  double max_truncation = 0.05;  // relative M-norm of the data outside the modal span
  int duhamel_panels = 64;       // Gauss panels per unit time for the source integral
};

/// Fields u(., t) (nodes x times) and u_t(., t) from the truncated modal
/// expansion u = sum_k u_k(t) phi_k of the Neumann wave equation.
struct WaveField {
  std::vector<double> times;
  Eigen::MatrixXd u;
  Eigen::MatrixXd ut;
  Eigen::VectorXd energy;  // <K u, u> + <M u_t, u_t> per time
  double truncation = 0.0; // worst relative residual of the projected data
};

/// Modal coefficients phi_k^T M v.
Eigen::VectorXd modal_coefficients(const EigenSystem& es, const Eigen::VectorXd& v);

/// Relative M-norm of v minus its projection on the computed modes.
double projection_residual(const EigenSystem& es, const Eigen::VectorXd& v);

/// Throws SolverError when the data is not resolved by the computed modes
/// (projection residual above opt.max_truncation) or a time is negative.
WaveField synthesize_wave(const EigenSystem& es, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const std::vector<double>& times, const WaveSource* source = nullptr,
                          const WaveOptions& opt = {}, Execution exec = Execution::Parallel);

}  // namespace polyspec
