#include "polyspec/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/SparseCholesky>

#include "polyspec/error.hpp"

namespace polyspec {

namespace {

SparseMatrix restrict_to(const SparseMatrix& a, const std::vector<int>& index, Eigen::Index n) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(a.nonZeros()));
  for (Eigen::Index col = 0; col < a.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(a, col); it; ++it) {
      const int r = index[static_cast<std::size_t>(it.row())], c = index[static_cast<std::size_t>(it.col())];
      if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
    }
  SparseMatrix out(n, n);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

Eigen::MatrixXd random_block(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd b(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) b(i, j) = static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
  return b;
}

// M-orthonormal Krylov basis grown block by block.
class Basis {
 public:
  Basis(const SparseMatrix& m, Eigen::Index rows, Eigen::Index capacity)
      : m_(m), q_(rows, capacity), mq_(rows, capacity) {}

  Eigen::Index size() const { return cols_; }
  Eigen::Index capacity() const { return q_.cols(); }
  auto q() const { return q_.leftCols(cols_); }

  /// Orthonormalizes w against the basis and appends the surviving columns.
  /// Returns the number appended.
  Eigen::Index append(Eigen::MatrixXd w) {
    const Eigen::Index room = capacity() - cols_;
    if (room <= 0) return 0;
    for (int round = 0; round < 2; ++round) {
      for (int pass = 0; pass < 2; ++pass)
        if (cols_ > 0) w -= q_.leftCols(cols_) * (mq_.leftCols(cols_).transpose() * w);
      const Eigen::MatrixXd mw = m_ * w;
      Eigen::MatrixXd gram = w.transpose() * mw;
      gram = 0.5 * (gram + gram.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
      const double top = std::max(es.eigenvalues().maxCoeff(), 0.0);
      std::vector<Eigen::Index> keep;
      for (Eigen::Index i = es.eigenvalues().size() - 1; i >= 0; --i)
        if (es.eigenvalues()(i) > 1e-20 * top && es.eigenvalues()(i) > 0.0) keep.push_back(i);
      if (keep.empty()) return 0;
      Eigen::MatrixXd t(w.cols(), static_cast<Eigen::Index>(keep.size()));
      for (std::size_t k = 0; k < keep.size(); ++k)
        t.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(keep[k]) / std::sqrt(es.eigenvalues()(keep[k]));
      w = w * t;
    }
    const Eigen::Index add = std::min(room, w.cols());
    q_.middleCols(cols_, add) = w.leftCols(add);
    mq_.middleCols(cols_, add) = m_ * w.leftCols(add);
    cols_ += add;
    return add;
  }

 private:
  const SparseMatrix& m_;
  Eigen::MatrixXd q_, mq_;
  Eigen::Index cols_ = 0;
};

struct RitzResult {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  double max_residual = 0.0;
};

RitzResult rayleigh_ritz(const SparseMatrix& k, const SparseMatrix& m, const Eigen::MatrixXd& q, int count) {
  Eigen::MatrixXd kr = q.transpose() * (k * q);
  Eigen::MatrixXd mr = q.transpose() * (m * q);
  kr = 0.5 * (kr + kr.transpose());
  mr = 0.5 * (mr + mr.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(kr, mr);
  if (ges.info() != Eigen::Success) throw SolverError("Rayleigh-Ritz projection failed");
  RitzResult r;
  r.values = ges.eigenvalues().head(count);
  r.vectors = q * ges.eigenvectors().leftCols(count);
  for (int i = 0; i < count; ++i)
    r.max_residual = std::max(r.max_residual, eigen_residual(k, m, r.values(i), r.vectors.col(i)));
  return r;
}

}  // namespace

double eigen_residual(const SparseMatrix& k, const SparseMatrix& m, double lambda, const Eigen::VectorXd& v) {
  const Eigen::VectorXd mv = m * v;
  const double denom = (1.0 + std::abs(lambda)) * mv.norm();
  return denom > 0.0 ? (k * v - lambda * mv).norm() / denom : 0.0;
}

EigenSystem solve_eigen(const Forms& forms, int count, const EigenOptions& opt, const std::vector<char>& free_mask) {
  const Eigen::Index total = forms.stiffness.rows();
  if (count < 1) throw SolverError("eigenpair count must be positive");
  std::vector<char> mask = free_mask.empty() ? std::vector<char>(static_cast<std::size_t>(total), 1) : free_mask;
  if (static_cast<Eigen::Index>(mask.size()) != total) throw SolverError("free-node mask has the wrong length");
  std::vector<int> index(static_cast<std::size_t>(total), -1);
  std::vector<int> nodes;
  for (Eigen::Index i = 0; i < total; ++i)
    if (mask[static_cast<std::size_t>(i)]) {
      index[static_cast<std::size_t>(i)] = static_cast<int>(nodes.size());
      nodes.push_back(static_cast<int>(i));
    }
  const auto n = static_cast<Eigen::Index>(nodes.size());
  if (count > n) throw SolverError("requested " + std::to_string(count) + " eigenpairs but only " + std::to_string(n) +
                                   " unknowns are free");
  const SparseMatrix k = restrict_to(forms.stiffness, index, n);
  const SparseMatrix m = restrict_to(forms.mass, index, n);

  EigenSystem es;
  es.stiffness = forms.stiffness;
  es.mass = forms.mass;
  es.free = mask;
  Eigen::VectorXd values;
  Eigen::MatrixXd vecs;

  if (static_cast<std::size_t>(n) < opt.dense_limit) {
    es.method = "dense";
    const Eigen::MatrixXd kd(k), md(m);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(kd, md);
    if (ges.info() != Eigen::Success) throw SolverError("dense generalized eigensolver failed");
    values = ges.eigenvalues().head(count);
    vecs = ges.eigenvectors().leftCols(count);
  } else {
    es.method = "lanczos";
    SparseMatrix shifted = k - opt.shift * m;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
    if (ldlt.info() != Eigen::Success) throw SolverError("factorization of the shifted operator failed");
    std::mt19937_64 rng(opt.seed);
    const int b = std::max(1, opt.block);
    const Eigen::Index cap = std::min<Eigen::Index>(n, 6 * count + 200);
    Basis basis(m, n, cap);
    basis.append(random_block(rng, n, b));
    Eigen::Index next_check = std::min<Eigen::Index>(cap, std::max<Eigen::Index>(2 * count + 2 * b, count + 40));
    const Eigen::Index check_step = std::max<Eigen::Index>(count / 2, 4 * b);
    Eigen::Index block_start = 0;
    RitzResult best;
    bool done = false;
    while (!done) {
      const Eigen::Index block_end = basis.size();
      Eigen::MatrixXd w(n, block_end - block_start);
      const Eigen::MatrixXd rhs = m * basis.q().middleCols(block_start, block_end - block_start);
      w = ldlt.solve(rhs);
      block_start = block_end;
      if (basis.append(std::move(w)) == 0 && basis.size() < cap) basis.append(random_block(rng, n, b));
      if (basis.size() >= next_check || basis.size() >= cap) {
        best = rayleigh_ritz(k, m, basis.q(), count);
        if (best.max_residual <= opt.tolerance) done = true;
        else if (basis.size() >= cap)
          throw SolverError("Lanczos did not converge: residual " + std::to_string(best.max_residual) + " with " +
                            std::to_string(basis.size()) + " basis vectors");
        next_check = std::min(cap, basis.size() + check_step);
      }
    }
    values = best.values;
    vecs = best.vectors;
  }

  // Deterministic sign: largest-magnitude entry positive.
  for (int j = 0; j < count; ++j) {
    Eigen::Index arg = 0;
    vecs.col(j).cwiseAbs().maxCoeff(&arg);
    if (vecs(arg, j) < 0.0) vecs.col(j) = -vecs.col(j);
  }
  es.values = values;
  es.vectors = Eigen::MatrixXd::Zero(total, count);
  for (Eigen::Index i = 0; i < n; ++i) es.vectors.row(nodes[static_cast<std::size_t>(i)]) = vecs.row(i);
  for (int j = 0; j < count; ++j)
    es.max_residual = std::max(es.max_residual, eigen_residual(k, m, values(j), vecs.col(j)));
  const Eigen::MatrixXd gram = vecs.transpose() * (m * vecs);
  es.gram_error = (gram - Eigen::MatrixXd::Identity(count, count)).cwiseAbs().maxCoeff();
  if (es.max_residual > std::max(opt.tolerance, 1e-8) || es.gram_error > 1e-8)
    throw SolverError("eigenpairs failed verification (residual " + std::to_string(es.max_residual) + ", gram error " +
                      std::to_string(es.gram_error) + ")");
  return es;
}

}  // namespace polyspec
