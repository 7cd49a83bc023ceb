#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polyspec/complex.hpp"
#include "polyspec/eigensolver.hpp"
#include "polyspec/mesh.hpp"
#include "polyspec/metric.hpp"

namespace polyspec {

/// Jumps of an eigenfunction across one interface, as L2 norms over the edge
/// (arclength measured on the minus side).
struct TransmissionResidual {
  double trace_jump = 0.0;
  double flux_jump = 0.0;  // of sqrt(g_ss) times the unit normal derivative
};

/// One entry per eigenpair. Throws MeshError if `facet` is not an interface.
std::vector<TransmissionResidual> transmission_residual(const SimplicialComplex& c, const PiecewiseMetric& m,
                                                        const Mesh& mesh, const EigenSystem& es, int facet);

/// Eigenvalues and eigenfunction traces on an observation set inside one
/// boundary edge, sampled at the midpoints of a uniform partition whose
/// pitch is measured in chart length.
struct BoundarySpectralData {
  std::vector<int> facets;          // the boundary edge carrying the samples
  Eigen::VectorXd s;                // affine edge parameter per sample
  Eigen::MatrixXd points;           // 2 x samples, chart coordinates
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd traces;           // samples x eigenpairs
  double cluster_tolerance = 1e-6;
};

/// Throws BsdError for an empty observation set, facets off the boundary, or
/// facets spread over more than one boundary edge.
BoundarySpectralData extract_bsd(const SimplicialComplex& c, const PiecewiseMetric& m, const Mesh& mesh,
                                 const EigenSystem& es, const std::vector<int>& gamma, double pitch);

/// "BSD1" exchange file: u32 version, u64 facet count, u64 facets,
/// u64 samples, (s, x, y) per sample, u64 eigen count, eigenvalues,
/// traces column-major; all little-endian.
std::string encode_bsd(const BoundarySpectralData& d);
BoundarySpectralData decode_bsd(const std::string& data);

struct ClusterMatch {
  int first = 0;
  int size = 0;
  Eigen::MatrixXd unitary;  // a.traces(cluster) * unitary ~ b.traces(kappa, cluster)
  double residual = 0.0;    // relative Frobenius misfit after alignment
};

struct BsdComparison {
  bool equivalent = false;
  double max_eigenvalue_mismatch = 0.0;  // relative, |a - b| / (1 + |a|)
  double max_residual = 0.0;
  std::vector<ClusterMatch> clusters;
  std::string reason;
};

/// Sample correspondence by chart coordinates: kappa[i] is the sample of b at
/// the same point as sample i of a. Throws BsdError if no bijection within tol.
std::vector<int> match_samples(const BoundarySpectralData& a, const BoundarySpectralData& b, double tol = 1e-9);

/// Eigenvalues must agree pairwise within tol_lambda (1 + lambda); inside each
/// cluster the orthogonal Procrustes factor aligns the trace blocks. Throws
/// BsdError on different counts, a bad kappa, or clusters of different size.
BsdComparison bsd_equivalent(const BoundarySpectralData& a, const BoundarySpectralData& b,
                             const std::vector<int>& kappa, double tol_lambda = 1e-6, double tol_trace = 1e-3);

/// Groups of consecutive eigenvalues closer than tol (1 + lambda): (first, size).
std::vector<std::pair<int, int>> eigen_clusters(const Eigen::VectorXd& values, double tol);

struct EigenmapRank {
  int rank = 0;
  Eigen::VectorXd singular_values;  // of the normalized gradient matrix
  double threshold = 0.0;
};

/// Rank of the differential of (phi_k1, ..., phi_kn) at p. Each gradient is
/// scaled by sqrt(lambda_k) max|phi_k|; singular values below `tolerance`
/// count as zero (tolerance <= 0 picks the mesh scale 2 h sqrt(lambda_max)).
/// Throws MeshError when p lies on an element edge.
EigenmapRank eigenmap_rank(const Mesh& mesh, const EigenSystem& es, const PolyPoint& p, const std::vector<int>& indices,
                           double tolerance = -1.0);

}  // namespace polyspec
