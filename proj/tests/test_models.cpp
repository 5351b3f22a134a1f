#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "rareweak/models.hpp"

using namespace rareweak;

namespace {

// Two-sided Kolmogorov-Smirnov distance to N(0,1).
double ks_distance(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = 1.0 - normal_sf(x[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

}  // namespace

TEST(ArwParams, Calibration) {
  const ArwParams a{10000, 0.5, 1.0};
  EXPECT_NEAR(a.epsilon() * 10000, 100.0, 1e-9);
  EXPECT_NEAR(a.tau(), std::sqrt(2 * std::log(10000.0)), 1e-12);
  EXPECT_THROW((ArwParams{100, 1.0, 1.0}.validate()), DomainError);
  EXPECT_THROW((ArwParams{100, 0.5, 0.0}.validate()), DomainError);
}

TEST(PrecisionModel, Block2Structure) {
  const auto m = PrecisionModel::block2(5, 0.3);
  EXPECT_DOUBLE_EQ(m.omega()(0, 1), 0.3);
  EXPECT_DOUBLE_EQ(m.omega()(1, 2), 0.0);
  EXPECT_DOUBLE_EQ(m.omega()(2, 3), 0.3);
  EXPECT_DOUBLE_EQ(m.omega()(4, 4), 1.0);
  EXPECT_NEAR(m.sigma_diag()[0], 1.0 / (1.0 - 0.09), 1e-12);
  EXPECT_THROW(PrecisionModel::block2(4, 1.0), DomainError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2) * 2.0;
  EXPECT_THROW(PrecisionModel::custom(SymMatrix::from_dense(bad)), DomainError);
}

TEST(GenArw, SupportSizeAndSignalLevel) {
  const ArwParams params{10000, 0.5, 1.0};
  const auto omega = PrecisionModel::identity(10000);
  double total = 0.0;
  const int reps = 50;
  for (int k = 0; k < reps; ++k) {
    RngStream rng(1, static_cast<std::uint64_t>(k));
    const ArwInstance inst = gen_arw(params, omega, rng);
    for (Eigen::Index i = 0; i < inst.beta.size(); ++i) {
      ASSERT_TRUE(inst.beta[i] == 0.0 || inst.beta[i] == params.tau());
      total += inst.beta[i] != 0.0;
    }
  }
  EXPECT_NEAR(total / reps, 100.0, 3.0 * std::sqrt(100.0 / reps));
}

TEST(GenArw, NoiseIsStandardNormal) {
  const std::size_t p = 5000;
  RngStream rng(2, 0);
  const ArwInstance inst = gen_arw(ArwParams{p, 0.5, 1.0}, PrecisionModel::identity(p), rng);
  const Vector z = inst.y - inst.beta;
  EXPECT_LT(ks_distance(std::vector<double>(z.data(), z.data() + z.size())), 1.628 / std::sqrt(static_cast<double>(p)));
}

TEST(GenArw, NoiseCovarianceMatchesInverse) {
  Eigen::MatrixXd o = Eigen::MatrixXd::Identity(4, 4);
  o(0, 1) = o(1, 0) = 0.4;
  o(1, 2) = o(2, 1) = -0.3;
  o(2, 3) = o(3, 2) = 0.2;
  const auto omega = PrecisionModel::custom(SymMatrix::from_dense(o));
  const Eigen::MatrixXd sigma = o.inverse();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(4, 4);
  const int reps = 10000;
  for (int k = 0; k < reps; ++k) {
    RngStream rng(3, static_cast<std::uint64_t>(k));
    const ArwInstance inst = gen_arw(ArwParams{4, 0.5, 1.0}, omega, rng);
    const Vector z = inst.y - inst.beta;
    acc += z * z.transpose();
  }
  EXPECT_LE((acc / reps - sigma).cwiseAbs().maxCoeff(), 0.05);
}

TEST(GenArw, Deterministic) {
  const auto omega = PrecisionModel::block2(50, 0.5);
  RngStream a(4, 7), b(4, 7);
  const auto x = gen_arw(ArwParams{50, 0.3, 1.0}, omega, a);
  const auto y = gen_arw(ArwParams{50, 0.3, 1.0}, omega, b);
  EXPECT_EQ(x.beta, y.beta);
  EXPECT_EQ(x.y, y.y);
  EXPECT_EQ(x.omega_id, omega.id());
  RngStream c(4, 7);
  EXPECT_THROW(gen_arw(ArwParams{40, 0.3, 1.0}, omega, c), DomainError);
}

TEST(ToRegression, Examples) {
  RngStream rng(5, 0);
  const auto id = PrecisionModel::identity(30);
  const auto inst = gen_arw(ArwParams{30, 0.5, 1.0}, id, rng);
  const Regression reg = to_regression(inst, id);
  EXPECT_TRUE(reg.design.dense().isApprox(Eigen::MatrixXd::Identity(30, 30)));
  EXPECT_EQ(reg.response, inst.y);

  const auto blk = PrecisionModel::block2(30, 0.5);
  const Regression r2 = to_regression(gen_arw(ArwParams{30, 0.5, 1.0}, blk, rng), blk);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_NEAR(r2.design(i, i), 0.965926, 1e-6);
  const Eigen::MatrixXd x = r2.design.dense();
  EXPECT_LE((x.transpose() * x - blk.omega().dense()).cwiseAbs().maxCoeff(), 1e-8);
  const NormalEquations ne = normal_equations(r2);
  EXPECT_LE((ne.gram.dense() - blk.omega().dense()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(ClassSample, SizeRule) {
  EXPECT_EQ(class_sample_size(10000, 0.5), 100u);
  EXPECT_EQ(class_sample_size(10000, 0.4), 40u);
  EXPECT_EQ(class_sample_size(10000, 0.0), 1u);
}

TEST(ClassSample, SupportConcentration) {
  const std::size_t p = 10000;
  RngStream rng(6, 0);
  const ClassSample s = gen_class_sample(10, p, 0.4, 1.0, PrecisionModel::identity(p), rng);
  const double support = static_cast<double>((s.mu.array() != 0.0).count());
  const double mean = std::pow(static_cast<double>(p), 0.6);
  EXPECT_NEAR(mean, 251.19, 0.01);
  EXPECT_LE(std::abs(support - mean), 3.0 * std::sqrt(mean));
  const double level = std::sqrt(2 * std::log(static_cast<double>(p))) / std::sqrt(10.0);
  for (Eigen::Index i = 0; i < s.mu.size(); ++i) ASSERT_TRUE(s.mu[i] == 0.0 || std::abs(s.mu[i] - level) < 1e-15);
  EXPECT_EQ(s.features.rows(), 10);
  for (int l : s.labels) EXPECT_TRUE(l == 1 || l == -1);
}

TEST(ClassSample, SingleRowMeanIsMu) {
  const std::size_t p = 6;
  const auto id = PrecisionModel::identity(p);
  Vector mu(6);
  mu << 1, 0, 2, 0, -1, 0.5;
  Vector acc = Vector::Zero(6);
  const int reps = 20000;
  for (int k = 0; k < reps; ++k) {
    RngStream rng(7, static_cast<std::uint64_t>(k));
    const ClassSample s = draw_class_rows(mu, id, 1, rng);
    acc += static_cast<double>(s.labels[0]) * s.features.row(0).transpose();
  }
  EXPECT_LE((acc / reps - mu).cwiseAbs().maxCoeff(), 4.0 / std::sqrt(static_cast<double>(reps)));
}

TEST(ClassSample, LabelsBalanced) {
  RngStream rng(8, 0);
  const ClassSample s = draw_class_rows(Vector::Zero(3), PrecisionModel::identity(3), 4000, rng);
  double sum = 0.0;
  for (int l : s.labels) sum += l;
  EXPECT_LE(std::abs(sum / 4000.0), 4.0 / std::sqrt(4000.0));
}

TEST(Banded, NoBandsIsIdentity) {
  RngStream rng(9, 0);
  const BandedSample a = gen_banded_sample(20, 5, {}, rng);
  EXPECT_EQ(a.bandwidth, 0u);
  EXPECT_TRUE(a.sigma.dense().isApprox(Eigen::MatrixXd::Identity(20, 20)));
  const BandedSample b = gen_banded_sample(20, 5, {BandMixture{0.0, 0.3}}, rng);
  EXPECT_EQ(b.bandwidth, 0u);
  EXPECT_TRUE(b.sigma.dense().isApprox(Eigen::MatrixXd::Identity(20, 20)));
}

TEST(Banded, StructureAndPdRate) {
  const std::vector<std::pair<double, double>> cases{{0.01, 0.175}, {0.01, 0.2},  {0.01, 0.225},
                                                     {0.005, 0.225}, {0.005, 0.25}, {0.01, 0.275}};
  std::size_t clean = 0, total = 0;
  for (auto [eps, tau] : cases) {
    for (std::uint64_t k = 0; k < 20; ++k) {
      RngStream rng(10, k + 100 * total);
      const BandedSample s = gen_banded_sample(5000, 2, std::vector<BandMixture>(2, {eps, tau}), rng);
      ++total;
      clean += s.shrink_steps == 0;
      EXPECT_LE(s.bandwidth, 2u);
      for (std::size_t i = 0; i + 3 < 5000; i += 97) EXPECT_EQ(s.sigma(i, i + 3), 0.0);
      EXPECT_EQ(s.sigma(0, 0), 1.0);
    }
  }
  EXPECT_GE(static_cast<double>(clean) / static_cast<double>(total), 0.95);
}

TEST(Banded, SampleCovarianceMatchesSigma) {
  RngStream rng(11, 0);
  const BandedSample s = gen_banded_sample(6, 40000, {BandMixture{1.0, 0.3}, BandMixture{1.0, 0.1}}, rng);
  EXPECT_EQ(s.bandwidth, 2u);
  const Eigen::MatrixXd cov = s.samples.transpose() * s.samples / 40000.0;
  EXPECT_LE((cov - s.sigma.dense()).cwiseAbs().maxCoeff(), 0.03);
}

TEST(Banded, ShrinkRepairsIndefiniteDraws) {
  RngStream rng(12, 0);
  const BandedSample s = gen_banded_sample(50, 2, {BandMixture{1.0, 0.9}}, rng);
  EXPECT_GT(s.shrink_steps, 0);
  EXPECT_LT(s.sigma(0, 1), 0.9);
}

TEST(Paired, Examples) {
  RngStream rng(13, 0);
  EXPECT_TRUE(gen_paired_design(10, 20, 0.0, 0.5, 1.0, rng).beta.isZero());
  EXPECT_THROW(gen_paired_design(10, 21, 0.1, 0.5, 1.0, rng), DomainError);
  double pairs = 0.0;
  const int reps = 400;
  for (int k = 0; k < reps; ++k) {
    RngStream r(14, static_cast<std::uint64_t>(k));
    const Vector b = draw_paired_beta(1000, 0.05, 1.0, r);
    for (Eigen::Index j = 0; j < 1000; j += 2) pairs += (b[j] != 0.0 || b[j + 1] != 0.0);
  }
  EXPECT_NEAR(pairs / reps, 25.0, 3.0 * std::sqrt(500 * 0.05 * 0.95 / reps));
}

TEST(Paired, PairShapes) {
  RngStream rng(15, 0);
  const Vector b = draw_paired_beta(2000, 0.5, 2.0, rng);
  for (Eigen::Index j = 0; j < 2000; j += 2) EXPECT_FALSE(b[j] == 0.0 && b[j + 1] != 0.0);
}

TEST(Paired, ColumnMeansConcentrate) {
  RngStream rng(16, 0);
  const std::size_t n = 500;
  const PairedDesign d = gen_paired_design(n, 200, 0.2, 0.0, 1.0, rng);
  const Vector means = d.rows.colwise().mean().transpose();
  EXPECT_LE((means - d.beta).cwiseAbs().maxCoeff(), 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Paired, RegressionColumnsUnitNorm) {
  RngStream rng(17, 0);
  const PairedRegression r = gen_paired_regression(200, 40, 0.1, -0.6, 2.0, rng);
  for (Eigen::Index j = 0; j < 40; ++j) EXPECT_NEAR(r.design.col(j).norm(), 1.0, 1e-12);
  const Eigen::MatrixXd g = r.design.transpose() * r.design;
  double pair_corr = 0.0;
  for (Eigen::Index j = 0; j < 40; j += 2) pair_corr += g(j, j + 1);
  EXPECT_NEAR(pair_corr / 20.0, -0.6, 0.05);
  RngStream again(17, 0);
  EXPECT_EQ(gen_paired_regression(200, 40, 0.1, -0.6, 2.0, again).response, r.response);
}
