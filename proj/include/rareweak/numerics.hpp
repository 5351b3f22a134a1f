#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/normal_distribution.hpp>

#include "rareweak/errors.hpp"
#include "rareweak/graph.hpp"
#include "rareweak/sym_matrix.hpp"

namespace rareweak {

// ---------------------------------------------------------------------------
// Special functions

struct SpecialFnResult {
  double value = 0.0;
  double abs_error_bound = 0.0;
};

/// P(N(0,1) >= x).
inline double normal_sf(double x) {
  if (!std::isfinite(x)) throw DomainError("normal_sf: non-finite argument");
  return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

/// P(|N(0,1)| >= |x|).
inline double normal_sf_two_sided(double x) {
  if (!std::isfinite(x)) throw DomainError("normal_sf_two_sided: non-finite argument");
  return std::erfc(std::abs(x) / std::numbers::sqrt2);
}

/// Survival function of chi-square with df degrees of freedom: Q(df/2, x/2).
inline double chisq_sf(unsigned df, double x) {
  if (df < 1) throw DomainError("chisq_sf: df must be >= 1");
  if (std::isnan(x) || x < 0.0) throw DomainError("chisq_sf: x must be >= 0");
  if (std::isinf(x)) return 0.0;
  if (x == 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * static_cast<double>(df), 0.5 * x);
}

inline SpecialFnResult normal_sf_result(double x) {
  const double v = normal_sf(x);
  return {v, 1e-10 * v};
}

inline SpecialFnResult chisq_sf_result(unsigned df, double x) {
  const double v = chisq_sf(df, x);
  return {v, 1e-9 * v};
}

// ---------------------------------------------------------------------------
// Random streams

/// splitmix64 finalizer; used to derive independent engine seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for a named sub-experiment of a root seed.
inline std::uint64_t derive_seed(std::uint64_t root_seed, std::uint64_t tag) {
  return mix64(root_seed ^ mix64(tag + 0x5851f42d4c957f2dULL));
}

/// Deterministic sample stream identified by (root_seed, stream_id). The same
/// pair always yields the same sequence, independent of scheduling.
class RngStream {
 public:
  RngStream(std::uint64_t root_seed, std::uint64_t stream_id)
      : root_seed_(root_seed),
        stream_id_(stream_id),
        engine_(mix64(mix64(root_seed) ^ mix64(stream_id * 0xd1342543de82ef95ULL + 1))) {}

  std::uint64_t root_seed() const noexcept { return root_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(engine_); }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t root_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
};

inline Vector gauss_vec(RngStream& rng, std::size_t n) {
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  return v;
}

// ---------------------------------------------------------------------------
// Banded Cholesky

/// Lower-triangular band factor L with L L' = Sigma; entry (i, i - k) for
/// 0 <= k <= bandwidth.
class BandedCholesky {
 public:
  BandedCholesky(std::size_t p, std::size_t bandwidth)
      : p_(p), bw_(bandwidth), data_(p * (bandwidth + 1), 0.0) {}

  std::size_t dim() const noexcept { return p_; }
  std::size_t bandwidth() const noexcept { return bw_; }

  double& at(std::size_t i, std::size_t k) { return data_[i * (bw_ + 1) + k]; }
  double at(std::size_t i, std::size_t k) const { return data_[i * (bw_ + 1) + k]; }

  double operator()(std::size_t i, std::size_t j) const {
    if (j > i || i - j > bw_) return 0.0;
    return at(i, i - j);
  }

  /// L * z.
  Vector multiply(const Vector& z) const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(p_));
    for (std::size_t i = 0; i < p_; ++i) {
      double s = 0.0;
      const std::size_t kmax = std::min(bw_, i);
      for (std::size_t k = 0; k <= kmax; ++k) s += at(i, k) * z[static_cast<Eigen::Index>(i - k)];
      out[static_cast<Eigen::Index>(i)] = s;
    }
    return out;
  }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p_), static_cast<Eigen::Index>(p_));
    for (std::size_t i = 0; i < p_; ++i)
      for (std::size_t k = 0; k <= std::min(bw_, i); ++k)
        d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - k)) = at(i, k);
    return d;
  }

 private:
  std::size_t p_;
  std::size_t bw_;
  std::vector<double> data_;
};

/// Cholesky of a banded SPD matrix in O(p * bandwidth^2).
inline BandedCholesky chol_banded(const SymMatrix& sigma, std::size_t bandwidth) {
  const std::size_t p = sigma.dim();
  for (std::size_t i = 0; i < p; ++i) {
    sigma.for_each_in_row(i, [&](std::size_t j, double v) {
      const std::size_t off = i > j ? i - j : j - i;
      if (off > bandwidth && v != 0.0)
        throw DomainError("chol_banded: entry (" + std::to_string(i) + "," + std::to_string(j) +
                          ") lies outside the band");
    });
  }
  BandedCholesky L(p, bandwidth);
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t jmin = i > bandwidth ? i - bandwidth : 0;
    for (std::size_t j = jmin; j <= i; ++j) {
      double s = sigma(i, j);
      const std::size_t kmin = std::max(jmin, j > bandwidth ? j - bandwidth : std::size_t{0});
      for (std::size_t k = kmin; k < j; ++k) s -= L(i, k) * L(j, k);
      if (j == i) {
        if (!(s > 0.0)) throw FactorizationError("chol_banded: non-positive pivot", i);
        L.at(i, 0) = std::sqrt(s);
      } else {
        L.at(i, i - j) = s / L.at(j, 0);
      }
    }
  }
  return L;
}

// ---------------------------------------------------------------------------
// Symmetric square root and blockwise Gaussian factors

inline constexpr std::size_t kDefaultComponentLimit = 2000;

namespace detail {

inline std::vector<IndexSet> sparsity_components(const SymMatrix& m, std::size_t limit) {
  auto comps = connected_components(graph_from_matrix(m, 0.0));
  for (const auto& c : comps)
    if (c.size() > limit)
      throw CapacityError("component of size " + std::to_string(c.size()) + " exceeds limit " +
                          std::to_string(limit));
  return comps;
}

}  // namespace detail

/// Unique symmetric PD square root, computed per connected component of the
/// sparsity graph.
inline SymMatrix sym_sqrt(const SymMatrix& omega, std::size_t component_limit = kDefaultComponentLimit) {
  std::vector<SymEntry> entries;
  for (const auto& comp : detail::sparsity_components(omega, component_limit)) {
    if (comp.size() == 1) {
      const double v = omega(comp[0], comp[0]);
      if (v < -1e-10) throw NotPositiveDefiniteError("sym_sqrt: negative eigenvalue", v);
      entries.push_back({comp[0], comp[0], std::sqrt(std::max(v, 0.0))});
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(omega.block(comp));
    const Vector& lam = es.eigenvalues();
    if (lam.minCoeff() < -1e-10) throw NotPositiveDefiniteError("sym_sqrt: negative eigenvalue", lam.minCoeff());
    const Eigen::MatrixXd root =
        es.eigenvectors() * lam.cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    for (std::size_t a = 0; a < comp.size(); ++a)
      for (std::size_t b = a; b < comp.size(); ++b) {
        const double v = 0.5 * (root(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +
                                root(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)));
        entries.push_back({comp[a], comp[b], v});
      }
  }
  return SymMatrix::from_entries(omega.dim(), entries);
}

/// Draws N(0, Omega^{-1}) blockwise: Omega_c = L L' per component and
/// z_c = L'^{-1} xi_c. Components are drawn in order of their smallest index.
class PrecisionGaussian {
 public:
  explicit PrecisionGaussian(const SymMatrix& omega, std::size_t component_limit = kDefaultComponentLimit)
      : p_(omega.dim()), comps_(detail::sparsity_components(omega, component_limit)) {
    sigma_diag_ = Vector::Zero(static_cast<Eigen::Index>(p_));
    factors_.reserve(comps_.size());
    for (const auto& comp : comps_) {
      Eigen::LLT<Eigen::MatrixXd> llt(omega.block(comp));
      if (llt.info() != Eigen::Success)
        throw FactorizationError("precision matrix is not positive definite", comp.front());
      Eigen::MatrixXd upper = llt.matrixU();
      const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(upper.rows(), upper.cols()));
      for (std::size_t a = 0; a < comp.size(); ++a)
        sigma_diag_[static_cast<Eigen::Index>(comp[a])] = inv(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a));
      factors_.push_back(std::move(upper));
    }
  }

  std::size_t dim() const noexcept { return p_; }
  const Vector& sigma_diag() const noexcept { return sigma_diag_; }
  const std::vector<IndexSet>& components() const noexcept { return comps_; }

  Vector sample(RngStream& rng) const {
    Vector z(static_cast<Eigen::Index>(p_));
    for (std::size_t c = 0; c < comps_.size(); ++c) {
      const auto& comp = comps_[c];
      if (comp.size() == 1) {
        z[static_cast<Eigen::Index>(comp[0])] = rng.normal() / factors_[c](0, 0);
        continue;
      }
      Vector xi(static_cast<Eigen::Index>(comp.size()));
      for (Eigen::Index a = 0; a < xi.size(); ++a) xi[a] = rng.normal();
      const Vector zc = factors_[c].triangularView<Eigen::Upper>().solve(xi);
      for (std::size_t a = 0; a < comp.size(); ++a)
        z[static_cast<Eigen::Index>(comp[a])] = zc[static_cast<Eigen::Index>(a)];
    }
    return z;
  }

 private:
  std::size_t p_;
  std::vector<IndexSet> comps_;
  std::vector<Eigen::MatrixXd> factors_;
  Vector sigma_diag_;
};

// ---------------------------------------------------------------------------
// Subset least squares

/// Gram matrix X'X and cross product X'W of a regression W = X beta + z.
struct NormalEquations {
  SymMatrix gram;
  Vector xtw;
};

inline constexpr double kIndependenceTol = 1e-10;

/// ||P^I W||^2 from the normal equations restricted to I.
inline double project_norm_sq(const NormalEquations& ne, const IndexSet& index_set) {
  if (index_set.empty()) throw DomainError("project_norm_sq: index set must be nonempty");
  const Eigen::MatrixXd g = ne.gram.block(index_set);
  Vector b(static_cast<Eigen::Index>(index_set.size()));
  for (std::size_t a = 0; a < index_set.size(); ++a) b[static_cast<Eigen::Index>(a)] = ne.xtw[static_cast<Eigen::Index>(index_set[a])];
  if (index_set.size() == 1) {
    if (!(g(0, 0) > kIndependenceTol)) throw DegeneracyError("project_norm_sq: zero column", index_set);
    return b[0] * b[0] / g(0, 0);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success || llt.rcond() < kIndependenceTol)
    throw DegeneracyError("project_norm_sq: rank-deficient restricted Gram", index_set);
  return std::max(0.0, b.dot(llt.solve(b)));
}

/// Same quantity from explicit design columns.
inline double project_norm_sq(const Eigen::MatrixXd& design, const Vector& response, const IndexSet& index_set) {
  if (index_set.empty()) throw DomainError("project_norm_sq: index set must be nonempty");
  if (design.rows() != response.size()) throw DomainError("project_norm_sq: response length mismatch");
  Eigen::MatrixXd cols(design.rows(), static_cast<Eigen::Index>(index_set.size()));
  for (std::size_t a = 0; a < index_set.size(); ++a) {
    if (index_set[a] >= static_cast<std::size_t>(design.cols()))
      throw DomainError("project_norm_sq: column index out of range");
    cols.col(static_cast<Eigen::Index>(a)) = design.col(static_cast<Eigen::Index>(index_set[a]));
  }
  const Eigen::MatrixXd g = cols.transpose() * cols;
  const Vector b = cols.transpose() * response;
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success || llt.rcond() < kIndependenceTol)
    throw DegeneracyError("project_norm_sq: rank-deficient restricted Gram", index_set);
  return std::max(0.0, b.dot(llt.solve(b)));
}

}  // namespace rareweak
