#pragma once

#include <cfenv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rareweak/errors.hpp"
#include "rareweak/graph.hpp"
#include "rareweak/numerics.hpp"
#include "rareweak/sym_matrix.hpp"

namespace rareweak {

/// Rare/Weak calibration: epsilon = p^-vartheta, tau = sqrt(2 r log p).
struct ArwParams {
  std::size_t p = 0;
  double vartheta = 0.5;
  double r = 1.0;

  double epsilon() const { return std::pow(static_cast<double>(p), -vartheta); }
  double tau() const { return std::sqrt(2.0 * r * std::log(static_cast<double>(p))); }

  void validate() const {
    if (p < 2) throw DomainError("ArwParams: p must be >= 2");
    if (!(vartheta > 0.0 && vartheta < 1.0)) throw DomainError("ArwParams: vartheta must lie in (0,1)");
    if (!(r > 0.0)) throw DomainError("ArwParams: r must be > 0");
  }
};

/// Unit-diagonal sparse precision matrix plus the factorizations the
/// estimators need. Copies share the cached derived objects.
class PrecisionModel {
 public:
  enum class Kind { identity, block2, custom };

  static PrecisionModel identity(std::size_t p) {
    return PrecisionModel(Kind::identity, 0.0, SymMatrix::identity(p), "identity");
  }

  /// Omega(i,j) = 1{i=j} + h0 1{|i-j| = 1, max(i,j) odd} in 0-based indexing:
  /// 2x2 blocks (0,1), (2,3), ... ; a trailing odd node is a singleton.
  static PrecisionModel block2(std::size_t p, double h0) {
    if (!(std::abs(h0) < 1.0)) throw DomainError("block2: |h0| must be < 1");
    std::vector<SymEntry> e;
    for (std::size_t i = 0; i < p; ++i) e.push_back({i, i, 1.0});
    for (std::size_t i = 0; i + 1 < p; i += 2) e.push_back({i, i + 1, h0});
    std::ostringstream id;
    id.precision(17);
    id << "block2(h0=" << h0 << ")";
    return PrecisionModel(Kind::block2, h0, SymMatrix::from_entries(p, e), id.str());
  }

  static PrecisionModel custom(SymMatrix omega, std::string id = "custom") {
    for (std::size_t i = 0; i < omega.dim(); ++i)
      if (std::abs(omega(i, i) - 1.0) > 1e-12) throw DomainError("PrecisionModel: diagonal must be 1");
    return PrecisionModel(Kind::custom, 0.0, std::move(omega), std::move(id));
  }

  Kind kind() const noexcept { return kind_; }
  double h0() const noexcept { return h0_; }
  std::size_t dim() const noexcept { return cache_->omega.dim(); }
  const std::string& id() const noexcept { return cache_->id; }
  const SymMatrix& omega() const noexcept { return cache_->omega; }
  const DependencyGraph& graph() const noexcept { return cache_->graph; }

  /// Maximum nonzeros per row of Omega, diagonal included.
  std::size_t row_nonzero_max() const noexcept { return rareweak::row_nonzero_max(cache_->graph); }

  const PrecisionGaussian& gaussian() const {
    std::call_once(cache_->gaussian_once, [&] { cache_->gaussian = std::make_unique<PrecisionGaussian>(cache_->omega); });
    return *cache_->gaussian;
  }

  /// Diagonal of Sigma = Omega^{-1}.
  const Vector& sigma_diag() const { return gaussian().sigma_diag(); }

  const SymMatrix& sqrt() const {
    std::call_once(cache_->sqrt_once, [&] { cache_->sqrt = std::make_unique<SymMatrix>(sym_sqrt(cache_->omega)); });
    return *cache_->sqrt;
  }

  /// One draw of N(0, Sigma).
  Vector sample_noise(RngStream& rng) const { return gaussian().sample(rng); }

 private:
  struct Cache {
    SymMatrix omega;
    std::string id;
    DependencyGraph graph;
    std::once_flag gaussian_once;
    std::unique_ptr<PrecisionGaussian> gaussian;
    std::once_flag sqrt_once;
    std::unique_ptr<SymMatrix> sqrt;
  };

  PrecisionModel(Kind kind, double h0, SymMatrix omega, std::string id) : kind_(kind), h0_(h0) {
    cache_ = std::make_shared<Cache>();
    cache_->graph = graph_from_matrix(omega, 0.0);
    cache_->omega = std::move(omega);
    cache_->id = std::move(id);
  }

  Kind kind_;
  double h0_;
  std::shared_ptr<Cache> cache_;
};

struct ArwInstance {
  Vector beta;
  Vector y;
  ArwParams params;
  std::string omega_id;
};

/// beta_i = tau with probability eps (all p support indicators are drawn
/// first, then the noise), Y = beta + z with z ~ N(0, Omega^{-1}). This
/// overload takes (eps, tau) explicitly, e.g. eps = 0 for a null draw.
inline ArwInstance gen_arw(const ArwParams& params, double eps, double tau, const PrecisionModel& omega,
                           RngStream& rng) {
  params.validate();
  if (omega.dim() != params.p) throw DomainError("gen_arw: precision dimension does not match p");
  ArwInstance inst;
  inst.params = params;
  inst.omega_id = omega.id();
  inst.beta = Vector::Zero(static_cast<Eigen::Index>(params.p));
  for (Eigen::Index i = 0; i < inst.beta.size(); ++i)
    if (rng.uniform() < eps) inst.beta[i] = tau;
  inst.y = inst.beta + omega.sample_noise(rng);
  return inst;
}

inline ArwInstance gen_arw(const ArwParams& params, const PrecisionModel& omega, RngStream& rng) {
  params.validate();
  return gen_arw(params, params.epsilon(), params.tau(), omega, rng);
}

/// Regression form W = X beta + z with X = Omega^{1/2}, W = Omega^{1/2} Y.
struct Regression {
  SymMatrix design;
  Vector response;
};

inline Regression to_regression(const ArwInstance& inst, const PrecisionModel& omega) {
  if (static_cast<std::size_t>(inst.y.size()) != omega.dim())
    throw DomainError("to_regression: dimension mismatch");
  const SymMatrix& root = omega.sqrt();
  return {root, root.multiply(inst.y)};
}

inline NormalEquations normal_equations(const Regression& reg) {
  const auto& x = reg.design.sparse();
  SymMatrix::Storage gram = x.transpose() * x;
  return {SymMatrix::from_sparse(gram), x.transpose() * reg.response};
}

/// Normal equations of a rectangular design (n x p).
inline NormalEquations normal_equations(const Eigen::MatrixXd& design, const Vector& response) {
  if (design.rows() != response.size()) throw DomainError("normal_equations: response length mismatch");
  Eigen::MatrixXd g(design.cols(), design.cols());
  g.setZero();
  g.selfadjointView<Eigen::Lower>().rankUpdate(design.transpose());
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return {SymMatrix::from_dense(g), design.transpose() * response};
}

// ---------------------------------------------------------------------------
// Two-class samples

struct ClassSample {
  Eigen::MatrixXd features;  // n x p
  std::vector<int> labels;   // +-1
  Vector mu;
};

/// round(p^theta) with ties to even.
inline std::size_t class_sample_size(std::size_t p, double theta) {
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double n = std::nearbyint(std::pow(static_cast<double>(p), theta));
  std::fesetround(saved);
  return static_cast<std::size_t>(n);
}

/// Draws count rows N(l_i mu, Sigma) with labels uniform on {-1, +1}.
inline ClassSample draw_class_rows(const Vector& mu, const PrecisionModel& omega, std::size_t count, RngStream& rng) {
  if (static_cast<std::size_t>(mu.size()) != omega.dim()) throw DomainError("draw_class_rows: dimension mismatch");
  ClassSample s;
  s.mu = mu;
  s.features.resize(static_cast<Eigen::Index>(count), mu.size());
  s.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int label = rng.uniform() < 0.5 ? -1 : 1;
    s.labels[i] = label;
    s.features.row(static_cast<Eigen::Index>(i)) = (static_cast<double>(label) * mu + omega.sample_noise(rng)).transpose();
  }
  return s;
}

/// sqrt(n) mu_i ~ (1 - eps) nu_0 + eps nu_tau, then n labelled rows.
inline ClassSample gen_class_sample(std::size_t n, std::size_t p, double vartheta, double r,
                                    const PrecisionModel& omega, RngStream& rng) {
  if (n < 1) throw DomainError("gen_class_sample: n must be >= 1");
  ArwParams params{p, vartheta, r};
  params.validate();
  if (omega.dim() != p) throw DomainError("gen_class_sample: precision dimension does not match p");
  const double eps = params.epsilon();
  const double level = params.tau() / std::sqrt(static_cast<double>(n));
  Vector mu = Vector::Zero(static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (rng.uniform() < eps) mu[i] = level;
  return draw_class_rows(mu, omega, n, rng);
}

// ---------------------------------------------------------------------------
// Banded covariance samples

struct BandMixture {
  double epsilon = 0.0;
  double tau = 0.0;
};

struct BandedSample {
  Eigen::MatrixXd samples;  // n x p
  SymMatrix sigma;
  std::size_t bandwidth = 0;
  int shrink_steps = 0;
};

inline constexpr int kMaxShrinkRetries = 20;
inline constexpr double kShrinkFactor = 0.9;

/// Sigma has unit diagonal and k-th off-diagonal entries drawn from
/// (1 - eps_k) nu_0 + eps_k nu_{tau_k}. If Sigma is not PD, all off-diagonals
/// are shrunk by 0.9 and the factorization retried, at most 20 times.
inline BandedSample gen_banded_sample(std::size_t p, std::size_t n, const std::vector<BandMixture>& bands,
                                      RngStream& rng) {
  if (p < 2) throw DomainError("gen_banded_sample: p must be >= 2");
  if (bands.size() >= p) throw DomainError("gen_banded_sample: too many bands for p");
  struct Off {
    std::size_t i, j;
    double v;
  };
  std::vector<Off> off;
  std::size_t bandwidth = 0;
  for (std::size_t k = 1; k <= bands.size(); ++k) {
    const auto& b = bands[k - 1];
    if (b.epsilon < 0.0 || b.epsilon > 1.0) throw DomainError("gen_banded_sample: epsilon must lie in [0,1]");
    for (std::size_t i = 0; i + k < p; ++i) {
      if (rng.uniform() < b.epsilon && b.tau != 0.0) {
        off.push_back({i, i + k, b.tau});
        bandwidth = k;
      }
    }
  }
  double scale = 1.0;
  for (int attempt = 0; attempt <= kMaxShrinkRetries; ++attempt) {
    std::vector<SymEntry> e;
    e.reserve(p + off.size());
    for (std::size_t i = 0; i < p; ++i) e.push_back({i, i, 1.0});
    for (const auto& o : off) e.push_back({o.i, o.j, scale * o.v});
    SymMatrix sigma = SymMatrix::from_entries(p, e);
    try {
      const BandedCholesky L = chol_banded(sigma, bandwidth);
      BandedSample out;
      out.samples.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
      for (std::size_t r = 0; r < n; ++r)
        out.samples.row(static_cast<Eigen::Index>(r)) = L.multiply(gauss_vec(rng, p)).transpose();
      out.sigma = std::move(sigma);
      out.bandwidth = bandwidth;
      out.shrink_steps = attempt;
      return out;
    } catch (const FactorizationError&) {
      if (attempt == kMaxShrinkRetries) {
        // Gershgorin lower bound on the smallest eigenvalue.
        Vector rowsum = Vector::Zero(static_cast<Eigen::Index>(p));
        for (const auto& o : off) {
          rowsum[static_cast<Eigen::Index>(o.i)] += std::abs(scale * o.v);
          rowsum[static_cast<Eigen::Index>(o.j)] += std::abs(scale * o.v);
        }
        throw NotPositiveDefiniteError("gen_banded_sample: covariance not PD after shrinking",
                                       1.0 - rowsum.maxCoeff());
      }
      scale *= kShrinkFactor;
    }
  }
  throw NotPositiveDefiniteError("gen_banded_sample: unreachable", 0.0);
}

// ---------------------------------------------------------------------------
// Paired-signal designs

/// Pair signals (beta_{2j}, beta_{2j+1}) ~ (1-eps) (0,0) + eps/2 (tau,tau) + eps/2 (tau,0).
inline Vector draw_paired_beta(std::size_t p, double epsilon, double tau, RngStream& rng) {
  if (p % 2 != 0) throw DomainError("paired design: p must be even");
  if (epsilon < 0.0 || epsilon > 1.0) throw DomainError("paired design: epsilon must lie in [0,1]");
  Vector beta = Vector::Zero(static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p / 2; ++j) {
    const double u = rng.uniform();
    if (u < 0.5 * epsilon) {
      beta[static_cast<Eigen::Index>(2 * j)] = tau;
      beta[static_cast<Eigen::Index>(2 * j + 1)] = tau;
    } else if (u < epsilon) {
      beta[static_cast<Eigen::Index>(2 * j)] = tau;
    }
  }
  return beta;
}

/// Adds a row of N(0, scale^2 Sigma) with Sigma 2x2-blockwise (1, h0; h0, 1).
inline void add_paired_noise(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row, double h0, double scale, RngStream& rng) {
  const double c = std::sqrt(1.0 - h0 * h0);
  for (Eigen::Index j = 0; j + 1 < row.size(); j += 2) {
    const double a = rng.normal();
    const double b = rng.normal();
    row[j] += scale * a;
    row[j + 1] += scale * (h0 * a + c * b);
  }
}

struct PairedDesign {
  Eigen::MatrixXd rows;  // n x p
  Vector beta;
};

/// n rows iid N(beta, Sigma / n).
inline PairedDesign gen_paired_design(std::size_t n, std::size_t p, double epsilon, double h0, double tau,
                                      RngStream& rng) {
  if (!(std::abs(h0) < 1.0)) throw DomainError("gen_paired_design: |h0| must be < 1");
  PairedDesign d;
  d.beta = draw_paired_beta(p, epsilon, tau, rng);
  d.rows.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index i = 0; i < d.rows.rows(); ++i) {
    d.rows.row(i) = d.beta.transpose();
    add_paired_noise(d.rows.row(i), h0, scale, rng);
  }
  return d;
}

struct PairedRegression {
  Eigen::MatrixXd design;  // n x p, unit-norm columns
  Vector response;         // length n
  Vector beta;
};

/// Regression W = X beta + z, z ~ N(0, I_n), where X has rows iid
/// N(0, Sigma / n) normalized to unit column norms, so X'X is close to Sigma.
inline PairedRegression gen_paired_regression(std::size_t n, std::size_t p, double epsilon, double h0,
                                              double tau, RngStream& rng) {
  if (!(std::abs(h0) < 1.0)) throw DomainError("gen_paired_regression: |h0| must be < 1");
  if (n < 2) throw DomainError("gen_paired_regression: n must be >= 2");
  PairedRegression reg;
  reg.beta = draw_paired_beta(p, epsilon, tau, rng);
  reg.design = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index i = 0; i < reg.design.rows(); ++i) add_paired_noise(reg.design.row(i), h0, scale, rng);
  for (Eigen::Index j = 0; j < reg.design.cols(); ++j) reg.design.col(j).normalize();
  reg.response = reg.design * reg.beta + gauss_vec(rng, n);
  return reg;
}

}  // namespace rareweak
