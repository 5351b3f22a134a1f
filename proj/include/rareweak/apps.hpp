#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rareweak/detect.hpp"
#include "rareweak/errors.hpp"
#include "rareweak/graph.hpp"
#include "rareweak/numerics.hpp"
#include "rareweak/parallel.hpp"
#include "rareweak/select.hpp"

namespace rareweak {

// ---------------------------------------------------------------------------
// Bandwidth

/// k-th upper off-diagonal (s(0,k), ..., s(p-1-k, p-1)).
inline Vector offdiagonal_vectors(const SymMatrix& s, std::size_t k) {
  const std::size_t p = s.dim();
  if (k < 1 || k >= p) throw DomainError("offdiagonal_vectors: k must lie in [1, p-1]");
  Vector out(static_cast<Eigen::Index>(p - k));
  for (std::size_t i = 0; i + k < p; ++i) out[static_cast<Eigen::Index>(i)] = s(i, i + k);
  return out;
}

/// k-th upper off-diagonal of S_n = (1/n) sum X_i X_i' without forming S_n.
inline Vector sample_offdiagonal(const Eigen::MatrixXd& samples, std::size_t k) {
  const auto p = static_cast<std::size_t>(samples.cols());
  if (k < 1 || k >= p) throw DomainError("sample_offdiagonal: k must lie in [1, p-1]");
  const auto m = static_cast<Eigen::Index>(p - k);
  const auto n = static_cast<double>(samples.rows());
  return (samples.leftCols(m).cwiseProduct(samples.rightCols(m))).colwise().sum().transpose() / n;
}

struct BandwidthEstimate {
  std::size_t b_hat = 0;
  std::vector<double> hc_scores;  // HC^(1..b0)
  double threshold = 0.0;
  double alpha = 0.05;
  std::size_t b0 = 0;
};

inline constexpr double kBandwidthAlpha0 = 0.5;

/// b-hat = max{k <= b0 : HC+^(k) >= h+(p, alpha / b0)}, or 0. HC+ of
/// off-diagonal k uses P-values of sqrt(n) xi-hat^(k) on the given side.
inline BandwidthEstimate estimate_bandwidth(const Eigen::MatrixXd& samples, std::size_t b0, double alpha,
                                            const CriticalValueTable& null_table, Side side = Side::two) {
  const auto n = static_cast<std::size_t>(samples.rows());
  const auto p = static_cast<std::size_t>(samples.cols());
  if (n < 2) throw DomainError("estimate_bandwidth: need n >= 2");
  if (b0 < 1 || b0 >= p) throw DomainError("estimate_bandwidth: b0 must lie in [1, p-1]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("estimate_bandwidth: alpha must lie in (0,1)");
  if (null_table.variant != Variant::HCplus) throw DomainError("estimate_bandwidth: null table must be for HC+");
  if (null_table.p != p) throw DomainError("estimate_bandwidth: null table built for a different p");
  BandwidthEstimate est;
  est.alpha = alpha;
  est.b0 = b0;
  est.threshold = null_table.h(alpha / static_cast<double>(b0));
  const double rn = std::sqrt(static_cast<double>(n));
  for (std::size_t k = 1; k <= b0; ++k) {
    const Vector xi = sample_offdiagonal(samples, k) * rn;
    const double hc = hc_plus_statistic(pvalues_from_statistics(xi, side), null_table.alpha0).statistic;
    est.hc_scores.push_back(hc);
    if (hc >= est.threshold) est.b_hat = k;
  }
  return est;
}

/// Null table for estimate_bandwidth matched to the finite-n statistic: HC+ of
/// sqrt(n) xi-hat^(k), k = 1..b0, from n x p samples with Sigma = I. Each
/// sample contributes b0 draws, so ceil(num_null_reps / b0) samples are used.
inline CriticalValueTable simulate_bandwidth_null_table(std::size_t p, std::size_t n, std::size_t b0,
                                                        std::size_t num_null_reps, std::uint64_t seed,
                                                        Side side = Side::two, std::size_t threads = 1,
                                                        double alpha0 = kBandwidthAlpha0) {
  if (num_null_reps < 100) throw DomainError("bandwidth null table: need at least 100 null replicates");
  if (n < 2) throw DomainError("bandwidth null table: need n >= 2");
  if (b0 < 1 || b0 >= p) throw DomainError("bandwidth null table: b0 must lie in [1, p-1]");
  const std::size_t batches = (num_null_reps + b0 - 1) / b0;
  CriticalValueTable t;
  t.p = p;
  t.variant = Variant::HCplus;
  t.num_null_reps = batches * b0;
  t.seed = seed;
  t.alpha0 = alpha0;
  t.null_sample.resize(t.num_null_reps);
  const double rn = std::sqrt(static_cast<double>(n));
  parallel_for(batches, threads, [&](std::size_t b) {
    RngStream rng(seed, b);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < x.rows(); ++i) x.row(i) = gauss_vec(rng, p).transpose();
    for (std::size_t k = 1; k <= b0; ++k)
      t.null_sample[b * b0 + k - 1] =
          hc_plus_statistic(pvalues_from_statistics(sample_offdiagonal(x, k) * rn, side), alpha0).statistic;
  });
  std::sort(t.null_sample.begin(), t.null_sample.end());
  return t;
}

// ---------------------------------------------------------------------------
// Feature ranking

struct RankingResult {
  std::vector<double> scores;  // lower is more significant
  Method method = Method::US;
  std::vector<std::string> warnings;
};

/// Two-sided P-value of (x_j, W).
inline RankingResult rank_features_us(const NormalEquations& ne) {
  RankingResult res;
  res.method = Method::US;
  res.scores.resize(static_cast<std::size_t>(ne.xtw.size()));
  for (Eigen::Index j = 0; j < ne.xtw.size(); ++j) res.scores[static_cast<std::size_t>(j)] = normal_sf_two_sided(ne.xtw[j]);
  return res;
}

/// pi_j = min over connected I containing j (graph |G(i,j)| >= delta, |I| <= m0)
/// of P(chi^2_{|I|} > ||P^I W||^2).
inline RankingResult rank_features_gs(const NormalEquations& ne, double delta, std::size_t m0,
                                      std::size_t cap = 10'000'000) {
  if (!(delta > 0.0)) throw DomainError("rank_features_gs: delta must be > 0");
  const std::size_t p = ne.gram.dim();
  const SubgraphList subs = enum_connected_subgraphs(graph_from_matrix(ne.gram, delta), m0, cap);
  RankingResult res;
  res.method = Method::GS;
  res.scores.assign(p, 1.0);
  for (const IndexSet& set : subs.subsets) {
    double pi;
    try {
      pi = chisq_sf(static_cast<unsigned>(set.size()), project_norm_sq(ne, set));
    } catch (const DegeneracyError& e) {
      res.warnings.emplace_back(e.what());
      continue;
    }
    for (std::size_t j : set) res.scores[j] = std::min(res.scores[j], pi);
  }
  return res;
}

struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;
  double auc = 0.0;
};

/// ROC of ranking by ascending score; tied scores enter as one step.
inline RocCurve roc_curve(const std::vector<double>& scores, const IndexSet& truth) {
  const std::size_t p = scores.size();
  std::vector<char> pos(p, 0);
  for (std::size_t j : truth) {
    if (j >= p) throw DomainError("roc_curve: truth index out of range");
    pos[j] = 1;
  }
  const auto np = static_cast<std::size_t>(std::count(pos.begin(), pos.end(), 1));
  if (np == 0 || np == p) throw DomainError("roc_curve: truth must be a nonempty proper subset");
  for (double s : scores)
    if (std::isnan(s)) throw DomainError("roc_curve: NaN score");
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  const double P = static_cast<double>(np);
  const double N = static_cast<double>(p - np);
  RocCurve roc;
  roc.fpr.push_back(0.0);
  roc.tpr.push_back(0.0);
  std::size_t tp = 0, fp = 0;
  for (std::size_t a = 0; a < p;) {
    std::size_t b = a;
    while (b < p && scores[order[b]] == scores[order[a]]) {
      if (pos[order[b]]) ++tp;
      else ++fp;
      ++b;
    }
    const double x = static_cast<double>(fp) / N;
    const double y = static_cast<double>(tp) / P;
    roc.auc += 0.5 * (x - roc.fpr.back()) * (y + roc.tpr.back());
    roc.fpr.push_back(x);
    roc.tpr.push_back(y);
    a = b;
  }
  return roc;
}

inline RocCurve roc_curve(const RankingResult& ranking, const IndexSet& truth) { return roc_curve(ranking.scores, truth); }

}  // namespace rareweak
