#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rareweak/apps.hpp"
#include "rareweak/experiments.hpp"
#include "rareweak/models.hpp"

using namespace rareweak;

namespace {

// Mann-Whitney: fraction of (positive, negative) pairs with the positive
// scored lower, ties counted half.
double pairwise_auc(const std::vector<double>& s, const IndexSet& truth) {
  std::vector<char> pos(s.size(), 0);
  for (std::size_t j : truth) pos[j] = 1;
  double num = 0, den = 0;
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = 0; b < s.size(); ++b)
      if (pos[a] && !pos[b]) {
        den += 1;
        num += s[a] < s[b] ? 1.0 : (s[a] == s[b] ? 0.5 : 0.0);
      }
  return num / den;
}

std::vector<std::size_t> order_of(const std::vector<double>& s) {
  std::vector<std::size_t> o(s.size());
  std::iota(o.begin(), o.end(), std::size_t{0});
  std::stable_sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) { return s[a] < s[b]; });
  return o;
}

NormalEquations identity_instance(std::size_t p, std::uint64_t seed) {
  RngStream rng(seed, 0);
  return {SymMatrix::identity(p), gauss_vec(rng, p) * 1.5};
}

}  // namespace

TEST(Offdiagonal, Examples) {
  for (std::size_t k = 1; k < 5; ++k) EXPECT_TRUE(offdiagonal_vectors(SymMatrix::identity(5), k).isZero());
  Eigen::MatrixXd m(3, 3);
  m << 1, 0.2, 0.3, 0.2, 1, 0.4, 0.3, 0.4, 1;
  const Vector v = offdiagonal_vectors(SymMatrix::from_dense(m), 2);
  ASSERT_EQ(v.size(), 1);
  EXPECT_EQ(v[0], 0.3);
  EXPECT_EQ(offdiagonal_vectors(SymMatrix::from_dense(m), 1), (Vector(2) << 0.2, 0.4).finished());
  EXPECT_THROW(offdiagonal_vectors(SymMatrix::from_dense(m), 0), DomainError);
  EXPECT_THROW(offdiagonal_vectors(SymMatrix::from_dense(m), 3), DomainError);
}

TEST(Offdiagonal, SampleMatchesDenseCovariance) {
  RngStream rng(1, 0);
  Eigen::MatrixXd x(7, 12);
  for (int i = 0; i < 7; ++i) x.row(i) = gauss_vec(rng, 12).transpose();
  const Eigen::MatrixXd s = x.transpose() * x / 7.0;
  for (std::size_t k = 1; k < 12; ++k) {
    const Vector got = sample_offdiagonal(x, k);
    ASSERT_EQ(got.size(), static_cast<Eigen::Index>(12 - k));
    for (std::size_t i = 0; i + k < 12; ++i) EXPECT_NEAR(got[static_cast<Eigen::Index>(i)], s(i, i + k), 1e-13);
    EXPECT_NEAR((got - offdiagonal_vectors(SymMatrix::from_dense(s), k)).norm(), 0.0, 1e-13);
  }
}

TEST(Bandwidth, LevelUnderDiagonalTruth) {
  const std::size_t p = 400, n = 100, b0 = 5, reps = 200;
  const double alpha = 0.1;
  for (Side side : {Side::upper, Side::two}) {
    const auto table = simulate_null_table(p, Variant::HCplus, 4000, 2, 1, kBandwidthAlpha0);
    std::size_t nonzero = 0;
    for (std::size_t k = 0; k < reps; ++k) {
      RngStream rng(3, k);
      Eigen::MatrixXd x(n, p);
      for (std::size_t i = 0; i < n; ++i) x.row(static_cast<Eigen::Index>(i)) = gauss_vec(rng, p).transpose();
      const auto est = estimate_bandwidth(x, b0, alpha, table, side);
      EXPECT_LE(est.b_hat, b0);
      EXPECT_EQ(est.hc_scores.size(), b0);
      nonzero += est.b_hat != 0;
    }
    const double rate = static_cast<double>(nonzero) / reps;
    EXPECT_LE(rate, alpha + 3.0 * std::sqrt(alpha * (1 - alpha) / reps));
  }
}

TEST(Bandwidth, RecoversStrongBand) {
  const std::size_t p = 600, n = 200;
  const auto table = simulate_null_table(p, Variant::HCplus, 2000, 4, 1, kBandwidthAlpha0);
  int correct = 0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    RngStream rng(5, k);
    const BandedSample s = gen_banded_sample(p, n, {{0.05, 0.3}, {0.05, 0.3}, {0.05, 0.3}}, rng);
    const auto est = estimate_bandwidth(s.samples, 8, 0.05, table, Side::upper);
    correct += est.b_hat == s.bandwidth;
    for (std::size_t j = est.b_hat; j < 8; ++j) { EXPECT_LT(est.hc_scores[j], est.threshold); }
    if (est.b_hat) { EXPECT_GE(est.hc_scores[est.b_hat - 1], est.threshold); }
  }
  EXPECT_GE(correct, 18);
}

TEST(Bandwidth, MatchedNullTable) {
  const auto a = simulate_bandwidth_null_table(300, 40, 4, 1002, 8, Side::upper, 1);
  const auto b = simulate_bandwidth_null_table(300, 40, 4, 1002, 8, Side::upper, 3);
  EXPECT_EQ(a.num_null_reps, 1004u);
  EXPECT_EQ(a.null_sample, b.null_sample);
  EXPECT_EQ(a.variant, Variant::HCplus);
  EXPECT_TRUE(std::is_sorted(a.null_sample.begin(), a.null_sample.end()));
  EXPECT_THROW(simulate_bandwidth_null_table(300, 40, 300, 1000, 8), DomainError);
  EXPECT_THROW(simulate_bandwidth_null_table(300, 1, 4, 1000, 8), DomainError);
}

TEST(Bandwidth, MatchedNullHeavierThanGaussianAtSmallN) {
  const std::size_t p = 1000;
  const auto gauss = simulate_null_table(p, Variant::HCplus, 4000, 9, 1, kBandwidthAlpha0);
  const auto matched = simulate_bandwidth_null_table(p, 10, 8, 4000, 10, Side::upper);
  EXPECT_GT(matched.h(0.02), gauss.h(0.02));
}

TEST(Bandwidth, MatchedNullHoldsLevel) {
  const std::size_t p = 400, n = 30, b0 = 5, reps = 300;
  const double alpha = 0.1;
  const auto table = simulate_bandwidth_null_table(p, n, b0, 4000, 11, Side::upper);
  std::size_t nonzero = 0;
  for (std::size_t k = 0; k < reps; ++k) {
    RngStream rng(12, k);
    Eigen::MatrixXd x(n, p);
    for (std::size_t i = 0; i < n; ++i) x.row(static_cast<Eigen::Index>(i)) = gauss_vec(rng, p).transpose();
    nonzero += estimate_bandwidth(x, b0, alpha, table, Side::upper).b_hat != 0;
  }
  EXPECT_LE(static_cast<double>(nonzero) / reps, alpha + 3.0 * std::sqrt(alpha * (1 - alpha) / reps));
}

TEST(Bandwidth, Errors) {
  const auto table = simulate_null_table(10, Variant::HCplus, 100, 6);
  const auto ohc = simulate_null_table(10, Variant::OHC, 100, 6);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(5, 10);
  EXPECT_THROW(estimate_bandwidth(Eigen::MatrixXd::Ones(1, 10), 2, 0.05, table), DomainError);
  EXPECT_THROW(estimate_bandwidth(x, 0, 0.05, table), DomainError);
  EXPECT_THROW(estimate_bandwidth(x, 10, 0.05, table), DomainError);
  EXPECT_THROW(estimate_bandwidth(x, 2, 1.5, table), DomainError);
  EXPECT_THROW(estimate_bandwidth(x, 2, 0.05, ohc), DomainError);
  EXPECT_THROW(estimate_bandwidth(Eigen::MatrixXd::Ones(5, 11), 2, 0.05, table), DomainError);
}

TEST(RankUs, Examples) {
  NormalEquations zero{SymMatrix::identity(6), Vector::Zero(6)};
  for (double s : rank_features_us(zero).scores) EXPECT_EQ(s, 1.0);
  const auto ne = identity_instance(40, 7);
  const auto o = order_of(rank_features_us(ne).scores);
  for (std::size_t a = 1; a < o.size(); ++a) EXPECT_GE(std::abs(ne.xtw[static_cast<Eigen::Index>(o[a - 1])]), std::abs(ne.xtw[static_cast<Eigen::Index>(o[a])]));
  Eigen::MatrixXd x = Eigen::MatrixXd::Identity(8, 8);
  const NormalEquations one = normal_equations(x, x.col(3) * 5.0);
  EXPECT_EQ(order_of(rank_features_us(one).scores).front(), 3u);
}

TEST(RankGs, SingletonsMatchUsUnderIdentity) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ne = identity_instance(200, 10 + seed);
    for (double delta : {0.01, 0.5, 2.0}) {
      const auto gs = rank_features_gs(ne, delta, 1);
      const auto us = rank_features_us(ne);
      EXPECT_EQ(order_of(gs.scores), order_of(us.scores));
      for (std::size_t j = 0; j < 200; ++j) EXPECT_NEAR(gs.scores[j], us.scores[j], 1e-12);
    }
  }
}

TEST(RankGs, NeverAboveSingletonAndValidProbability) {
  RngStream rng(20, 0);
  const PairedRegression reg = gen_paired_regression(150, 100, 0.1, -0.7, 3.0, rng);
  const NormalEquations ne = normal_equations(reg.design, reg.response);
  const auto gs = rank_features_gs(ne, 0.3, 3);
  for (std::size_t j = 0; j < 100; ++j) {
    const double single = chisq_sf(1, project_norm_sq(ne, {j}));
    EXPECT_LE(gs.scores[j], single + 1e-15);
    EXPECT_GE(gs.scores[j], 0.0);
    EXPECT_LE(gs.scores[j], 1.0);
    EXPECT_TRUE(std::isfinite(gs.scores[j]));
  }
  EXPECT_EQ(gs.method, Method::GS);
  EXPECT_THROW(rank_features_gs(ne, 0.0, 2), DomainError);
}

TEST(RankGs, PairMinimumOverContainingSets) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Identity(4, 4);
  g(0, 1) = g(1, 0) = -0.8;
  const NormalEquations ne{SymMatrix::from_dense(g), (Vector(4) << 0.4, 0.4, 0.1, -0.2).finished()};
  const auto gs = rank_features_gs(ne, 0.5, 2);
  const double pair = chisq_sf(2, project_norm_sq(ne, {0, 1}));
  EXPECT_NEAR(gs.scores[0], std::min(pair, chisq_sf(1, 0.16)), 1e-15);
  EXPECT_NEAR(gs.scores[1], gs.scores[0], 1e-15);
  EXPECT_NEAR(gs.scores[2], chisq_sf(1, 0.01), 1e-15);
  EXPECT_NEAR(gs.scores[3], chisq_sf(1, 0.04), 1e-15);
}

TEST(Roc, Examples) {
  const std::vector<double> s{0.1, 0.2, 0.3, 0.4, 0.5};
  EXPECT_DOUBLE_EQ(roc_curve(s, {0, 1}).auc, 1.0);
  EXPECT_DOUBLE_EQ(roc_curve(s, {3, 4}).auc, 0.0);
  EXPECT_DOUBLE_EQ(roc_curve(std::vector<double>(5, 0.3), {1}).auc, 0.5);
  const auto r = roc_curve(s, {0, 2});
  EXPECT_DOUBLE_EQ(r.auc, pairwise_auc(s, {0, 2}));
  EXPECT_EQ(r.fpr.front(), 0.0);
  EXPECT_EQ(r.tpr.back(), 1.0);
  EXPECT_EQ(r.fpr.back(), 1.0);
  EXPECT_TRUE(std::is_sorted(r.fpr.begin(), r.fpr.end()));
  EXPECT_TRUE(std::is_sorted(r.tpr.begin(), r.tpr.end()));
}

TEST(Roc, Errors) {
  const std::vector<double> s{0.1, 0.2, 0.3};
  EXPECT_THROW(roc_curve(s, {}), DomainError);
  EXPECT_THROW(roc_curve(s, {0, 1, 2}), DomainError);
  EXPECT_THROW(roc_curve(s, {3}), DomainError);
  EXPECT_THROW(roc_curve(std::vector<double>{0.1, NAN, 0.2}, {0}), DomainError);
}

TEST(Roc, MatchesPairwiseOracleWithTies) {
  RngStream rng(30, 0);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> s(60);
    for (double& v : s) v = std::floor(rng.uniform() * 8.0);
    IndexSet truth;
    for (std::size_t j = 0; j < 60; ++j)
      if (rng.uniform() < 0.3) truth.push_back(j);
    if (truth.empty()) truth.push_back(0);
    EXPECT_NEAR(roc_curve(s, truth).auc, pairwise_auc(s, truth), 1e-12);
  }
}

TEST(Roc, InvariantToMonotoneTransform) {
  RngStream rng(31, 0);
  std::vector<double> s(300);
  for (double& v : s) v = rng.uniform();
  IndexSet truth{3, 17, 40, 99, 150, 222, 299};
  std::vector<double> t(s.size());
  std::transform(s.begin(), s.end(), t.begin(), [](double v) { return std::exp(5 * v) - 7.0; });
  EXPECT_DOUBLE_EQ(roc_curve(s, truth).auc, roc_curve(t, truth).auc);
}

TEST(Roc, IndependentScoresNearHalf) {
  RngStream rng(32, 0);
  std::vector<double> s(20000);
  for (double& v : s) v = rng.uniform();
  IndexSet truth;
  for (std::size_t j = 0; j < s.size(); j += 50) truth.push_back(j);
  EXPECT_NEAR(roc_curve(s, truth).auc, 0.5, 3.0 / std::sqrt(static_cast<double>(truth.size())));
}

TEST(Ranking, GsBeatsUsUnderCancellation) {
  const std::size_t reps = 40;
  std::vector<double> diff;
  for (std::size_t k = 0; k < reps; ++k) {
    RngStream rng(40, k);
    const auto r = harness::ranking_replicate(250, 500, 0.05, -0.8, 4.0, 2, 0.3, rng);
    if (!std::isnan(r.auc_us)) diff.push_back(r.auc_gs - r.auc_us);
  }
  const double m = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(diff.size());
  double v = 0;
  for (double d : diff) v += (d - m) * (d - m);
  const double se = std::sqrt(v / static_cast<double>(diff.size() - 1) / static_cast<double>(diff.size()));
  EXPECT_GT(m, 3.0 * se);
  EXPECT_GT(m, 0.05);
}

TEST(Ranking, SimilarWithoutCancellation) {
  const std::size_t reps = 40;
  double sum = 0;
  std::size_t valid = 0;
  for (std::size_t k = 0; k < reps; ++k) {
    RngStream rng(41, k);
    const auto r = harness::ranking_replicate(250, 500, 0.05, 0.8, 1.5, 2, 0.3, rng);
    if (std::isnan(r.auc_us)) continue;
    sum += r.auc_gs - r.auc_us;
    ++valid;
  }
  EXPECT_LT(std::abs(sum / static_cast<double>(valid)), 0.05);
}
