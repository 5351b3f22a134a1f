#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "rareweak/errors.hpp"

namespace rareweak {

using Vector = Eigen::VectorXd;
using IndexSet = std::vector<std::size_t>;

struct SymEntry {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Symmetric p x p matrix with explicit sparsity. Both triangles are stored,
/// so column j doubles as the neighbor list of row j.
class SymMatrix {
 public:
  using Storage = Eigen::SparseMatrix<double, Eigen::ColMajor, std::ptrdiff_t>;

  SymMatrix() = default;

  static SymMatrix identity(std::size_t p) {
    if (p == 0) throw DomainError("SymMatrix: dimension must be >= 1");
    Storage m(static_cast<std::ptrdiff_t>(p), static_cast<std::ptrdiff_t>(p));
    m.setIdentity();
    return SymMatrix(std::move(m));
  }

  /// Entries with |value| <= zero_tol are dropped. Throws if asymmetric
  /// beyond 1e-10 relative to the largest entry.
  static SymMatrix from_dense(const Eigen::MatrixXd& d, double zero_tol = 0.0) {
    if (d.rows() == 0 || d.rows() != d.cols())
      throw DomainError("SymMatrix: input must be square with dimension >= 1");
    const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
    if ((d - d.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw DomainError("SymMatrix: input is not symmetric");
    std::vector<Eigen::Triplet<double, std::ptrdiff_t>> trips;
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      for (Eigen::Index i = 0; i < d.rows(); ++i) {
        const double v = 0.5 * (d(i, j) + d(j, i));
        if (std::abs(v) > zero_tol || (i == j && v != 0.0)) trips.emplace_back(i, j, v);
      }
    }
    Storage m(d.rows(), d.cols());
    m.setFromTriplets(trips.begin(), trips.end());
    return SymMatrix(std::move(m));
  }

  /// Entries are mirrored; give each off-diagonal pair once (either triangle).
  static SymMatrix from_entries(std::size_t p, const std::vector<SymEntry>& entries) {
    if (p == 0) throw DomainError("SymMatrix: dimension must be >= 1");
    std::vector<Eigen::Triplet<double, std::ptrdiff_t>> trips;
    trips.reserve(2 * entries.size());
    for (const auto& e : entries) {
      if (e.row >= p || e.col >= p) throw DomainError("SymMatrix: entry index out of range");
      if (e.value == 0.0) continue;
      const auto r = static_cast<std::ptrdiff_t>(e.row);
      const auto c = static_cast<std::ptrdiff_t>(e.col);
      trips.emplace_back(r, c, e.value);
      if (r != c) trips.emplace_back(c, r, e.value);
    }
    Storage m(static_cast<std::ptrdiff_t>(p), static_cast<std::ptrdiff_t>(p));
    m.setFromTriplets(trips.begin(), trips.end());
    return SymMatrix(std::move(m));
  }

  /// Takes a full (both-triangle) sparse matrix; symmetrizes after checking.
  static SymMatrix from_sparse(const Storage& m) {
    if (m.rows() == 0 || m.rows() != m.cols())
      throw DomainError("SymMatrix: input must be square with dimension >= 1");
    Storage t = m.transpose();
    Storage diff = m - t;
    double scale = 1.0, asym = 0.0;
    for (std::ptrdiff_t k = 0; k < m.outerSize(); ++k)
      for (Storage::InnerIterator it(m, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
    for (std::ptrdiff_t k = 0; k < diff.outerSize(); ++k)
      for (Storage::InnerIterator it(diff, k); it; ++it) asym = std::max(asym, std::abs(it.value()));
    if (asym > 1e-10 * scale) throw DomainError("SymMatrix: input is not symmetric");
    Storage sym = 0.5 * (m + t);
    sym.prune(0.0);
    return SymMatrix(std::move(sym));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }

  double operator()(std::size_t i, std::size_t j) const {
    return m_.coeff(static_cast<std::ptrdiff_t>(i), static_cast<std::ptrdiff_t>(j));
  }

  Vector multiply(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != dim())
      throw DomainError("SymMatrix: vector length does not match dimension");
    return m_ * x;
  }

  /// Calls f(col, value) for every stored entry of row i (diagonal included).
  template <class F>
  void for_each_in_row(std::size_t i, F&& f) const {
    for (Storage::InnerIterator it(m_, static_cast<std::ptrdiff_t>(i)); it; ++it)
      f(static_cast<std::size_t>(it.row()), it.value());
  }

  std::size_t row_nonzeros(std::size_t i, double zero_tol = 0.0) const {
    std::size_t n = 0;
    for_each_in_row(i, [&](std::size_t, double v) {
      if (std::abs(v) > zero_tol) ++n;
    });
    return n;
  }

  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(m_); }
  const Storage& sparse() const noexcept { return m_; }

  /// Principal submatrix on a sorted index set.
  Eigen::MatrixXd block(const IndexSet& idx) const {
    const auto k = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd out(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b) out(a, b) = (*this)(idx[a], idx[b]);
    return out;
  }

 private:
  explicit SymMatrix(Storage m) : m_(std::move(m)) { m_.makeCompressed(); }

  Storage m_;
};

}  // namespace rareweak
