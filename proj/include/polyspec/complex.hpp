#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include <Eigen/Dense>

namespace polyspec {

using VertexId = int;

/// Canonically ordered (ascending) list of vertex ids.
using Simplex = std::vector<VertexId>;

/// Input to build_complex. Vertex tuples may be given in any order; the
/// complex sorts them.
struct ComplexInput {
  int dim = 0;
  std::vector<Simplex> simplices;  // n-simplices, arity n+1
  std::map<VertexId, Eigen::VectorXd> coordinates;
  // Per-simplex chart overrides keyed by position in `simplices`. Columns
  // are vertex coordinates in the order the tuple was given.
  std::map<std::size_t, Eigen::MatrixXd> chart_overrides;
  // Maximal simplices of lower dimension (dangling edges, isolated vertices).
  std::vector<Simplex> lower;
};

/// Closed finite simplicial complex with one affine reference chart per
/// n-simplex. Immutable once built.
class SimplicialComplex {
 public:
  int dim() const { return dim_; }

  /// Stored k-simplices in lexicographic order, 0 <= k <= dim.
  const std::vector<Simplex>& simplices(int k) const;
  std::size_t count(int k) const { return simplices(k).size(); }

  /// Index of a k-simplex (k = size-1) or -1 when absent.
  int index_of(const Simplex& s) const;

  /// n-simplices containing (n-1)-simplex `facet`.
  const std::vector<int>& cofaces(int facet) const { return cofaces_.at(static_cast<std::size_t>(facet)); }

  /// The n+1 facet indices of top simplex `top`; entry i is opposite local vertex i.
  const std::vector<int>& facets_of(int top) const { return facets_of_.at(static_cast<std::size_t>(top)); }

  /// Chart of top simplex: dim x (dim+1), column i = local vertex i.
  const Eigen::MatrixXd& chart(int top) const { return charts_.at(static_cast<std::size_t>(top)); }

  /// Position of vertex `v` within top simplex `top`, or -1.
  int local_vertex(int top, VertexId v) const;

  /// Canonical index of the n-simplex given at `input_position` in the input.
  int canonical_index(std::size_t input_position) const { return input_to_canonical_.at(input_position); }

  /// Barycentric coordinates of chart point x in top simplex `top`.
  Eigen::VectorXd barycentric(int top, const Eigen::VectorXd& x) const;
  Eigen::VectorXd from_barycentric(int top, const Eigen::VectorXd& bary) const;

  /// Chart coordinates (in `top`) of the point of `facet` with barycentric
  /// weights `facet_bary` ordered like the facet's vertex tuple.
  Eigen::VectorXd facet_point(int top, int facet, const Eigen::VectorXd& facet_bary) const;

  /// Facet weights of a chart point lying on `facet` (ordered like the tuple).
  Eigen::VectorXd facet_weights(int top, int facet, const Eigen::VectorXd& x) const;

  /// Top simplex on the other side of an interface, or -1 for boundary facets.
  int neighbor(int top, int facet) const;

 private:
  friend SimplicialComplex build_complex(const ComplexInput& input);

  int dim_ = 0;
  std::vector<std::vector<Simplex>> simplices_;
  std::map<Simplex, int> index_;
  std::vector<std::vector<int>> cofaces_;
  std::vector<std::vector<int>> facets_of_;
  std::vector<Eigen::MatrixXd> charts_;
  std::vector<Eigen::MatrixXd> bary_inverse_;
  std::vector<int> input_to_canonical_;
};

enum class FacetKind { Interface, Boundary };

struct FacetClass {
  int facet = -1;
  FacetKind kind = FacetKind::Boundary;
  int minus = -1;  // first coface
  int plus = -1;   // second coface, -1 for boundary facets
};

struct HomogeneityVerdict {
  bool homogeneous = true;
  std::vector<Simplex> offenders;
};

/// Throws ComplexError on arity errors, repeated vertices, duplicate n-simplices
/// or degenerate charts.
SimplicialComplex build_complex(const ComplexInput& input);

/// Throws ComplexError ("non-manifold facet") when a facet has 0 or >= 3 cofaces.
std::vector<FacetClass> classify_facets(const SimplicialComplex& c);

HomogeneityVerdict check_dimensional_homogeneity(const SimplicialComplex& c);

/// Connectivity of the dual graph (n-simplices joined across interfaces).
/// `removed` lists facets whose dual edges are dropped.
bool check_chainability(const SimplicialComplex& c, const std::vector<int>& removed = {});

/// Stored k-simplices; throws ComplexError for k outside [0, n].
std::vector<Simplex> skeleton(const SimplicialComplex& c, int k);

}  // namespace polyspec
