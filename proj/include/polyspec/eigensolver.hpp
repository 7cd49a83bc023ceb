#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polyspec/fem.hpp"

namespace polyspec {

struct EigenOptions {
  double tolerance = 1e-8;         // relative residual per pair
  std::uint64_t seed = 0x5eed5eedULL;
  std::size_t dense_limit = 1000;  // dense solve below this many unknowns
  int block = 8;                   // Lanczos block size
  double shift = -1.0;             // shift-invert pole, below the spectrum
};

/// Lowest eigenpairs of K v = lambda M v, mass-orthonormal and ascending.
/// Vectors have one entry per mesh node; fixed nodes carry zeros.
struct EigenSystem {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  SparseMatrix stiffness;
  SparseMatrix mass;
  std::vector<char> free;
  double cluster_tolerance = 1e-6;  // relative: |a - b| <= tol * (1 + lambda)
  double max_residual = 0.0;
  double gram_error = 0.0;
  std::string method;
};

/// Relative residual |K v - lambda M v| / ((1 + |lambda|) |M v|).
double eigen_residual(const SparseMatrix& k, const SparseMatrix& m, double lambda, const Eigen::VectorXd& v);

/// Dense generalized solve below `dense_limit` free unknowns, block Lanczos
/// with shift-invert and full reorthogonalization above. Throws SolverError
/// if the requested pairs do not converge.
EigenSystem solve_eigen(const Forms& forms, int count, const EigenOptions& opt = {},
                        const std::vector<char>& free_mask = {});

}  // namespace polyspec
