#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rareweak/errors.hpp"
#include "rareweak/models.hpp"
#include "rareweak/numerics.hpp"
#include "rareweak/parallel.hpp"

namespace rareweak {

struct FeatureZVector {
  Vector z;
  std::size_t n = 0;
};

/// Z = n^{-1/2} sum_i l_i Y^(i).
inline FeatureZVector z_vector(const ClassSample& sample) {
  const auto n = static_cast<std::size_t>(sample.features.rows());
  if (n < 1) throw DomainError("z_vector: need at least one training row");
  if (sample.labels.size() != n) throw DomainError("z_vector: label count mismatch");
  Eigen::VectorXd l(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) l[static_cast<Eigen::Index>(i)] = sample.labels[i];
  return {sample.features.transpose() * l / std::sqrt(static_cast<double>(n)), n};
}

/// sgn(z) 1{|z| >= t}.
inline Vector clip_threshold(const Vector& z, double t) {
  if (!(t > 0.0)) throw DomainError("clip_threshold: t must be > 0");
  Vector out = Vector::Zero(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (std::abs(z[i]) >= t) out[i] = z[i] > 0.0 ? 1.0 : -1.0;
  return out;
}

struct HctThreshold {
  double threshold = 0.0;
  std::size_t argmax_index = 0;  // 1-based rank
  double score = 0.0;
};

/// max over i <= alpha0 p of sqrt(p) (i/p - pi_(i)) / sqrt((i/p)(1 - i/p))
/// on sorted P-values; ties go to the smallest i.
inline std::size_t hct_argmax(const std::vector<double>& sorted_pvalues, double alpha0, double* score = nullptr) {
  const std::size_t p = sorted_pvalues.size();
  const auto imax = static_cast<std::size_t>(std::floor(alpha0 * static_cast<double>(p)));
  if (imax < 1) throw DegeneracyError("hct_threshold: alpha0 * p < 1", {});
  const double pd = static_cast<double>(p);
  std::size_t best_i = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i <= imax; ++i) {
    const double f = static_cast<double>(i) / pd;
    const double v = std::sqrt(pd) * (f - sorted_pvalues[i - 1]) / std::sqrt(f * (1.0 - f));
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  if (score) *score = best;
  return best_i;
}

struct HctOptions {
  double alpha0 = 0.10;
  bool literal_z = false;  // read the threshold from |Z| instead of |Omega Z|
};

/// HC-chosen clipping threshold: P-values from Omega Z (two-sided); the
/// threshold is the i-hat-th largest |Omega Z|.
inline HctThreshold hct_threshold(const FeatureZVector& z, const PrecisionModel& omega, const HctOptions& opt = {}) {
  if (!(opt.alpha0 > 0.0 && opt.alpha0 <= 0.5)) throw DomainError("hct_threshold: alpha0 must lie in (0, 0.5]");
  const std::size_t p = omega.dim();
  if (static_cast<std::size_t>(z.z.size()) != p) throw DomainError("hct_threshold: dimension mismatch");
  if (std::floor(opt.alpha0 * static_cast<double>(p)) < 1.0) throw DegeneracyError("hct_threshold: alpha0 * p < 1", {});
  const Vector oz = omega.omega().multiply(z.z);
  std::vector<double> mags(p);
  std::vector<double> pv(p);
  for (std::size_t i = 0; i < p; ++i) {
    mags[i] = std::abs(oz[static_cast<Eigen::Index>(i)]);
    pv[i] = normal_sf_two_sided(mags[i]);
  }
  std::sort(pv.begin(), pv.end());
  HctThreshold out;
  out.argmax_index = hct_argmax(pv, opt.alpha0, &out.score);
  if (opt.literal_z)
    for (std::size_t i = 0; i < p; ++i) mags[i] = std::abs(z.z[static_cast<Eigen::Index>(i)]);
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(out.argmax_index - 1), mags.end(),
                   std::greater<>());
  out.threshold = mags[out.argmax_index - 1];
  return out;
}

struct HctModel {
  Vector mu_hat;
  Vector weight;  // Omega mu_hat
  double threshold = 0.0;
  std::size_t argmax_index = 0;
  double alpha0 = 0.10;
  std::string omega_id;
  bool degenerate = false;
  std::vector<std::string> warnings;
};

inline HctModel train_hct(const ClassSample& sample, const PrecisionModel& omega, const HctOptions& opt = {}) {
  const FeatureZVector z = z_vector(sample);
  const HctThreshold t = hct_threshold(z, omega, opt);
  HctModel m;
  m.threshold = t.threshold;
  m.argmax_index = t.argmax_index;
  m.alpha0 = opt.alpha0;
  m.omega_id = omega.id();
  const Vector oz = omega.omega().multiply(z.z);
  if (t.threshold > 0.0) {
    m.mu_hat = clip_threshold(oz, t.threshold);
  } else {
    m.mu_hat = Vector::Zero(oz.size());
  }
  m.weight = omega.omega().multiply(m.mu_hat);
  if (m.mu_hat.cwiseAbs().sum() == 0.0) {
    m.degenerate = true;
    m.warnings.emplace_back("train_hct: no feature selected; classifier predicts +1");
  }
  return m;
}

/// sign(mu_hat' Omega Y) per row, 0 mapped to +1.
inline std::vector<int> classify_batch(const HctModel& model, const Eigen::MatrixXd& fresh) {
  if (fresh.cols() != model.weight.size()) throw DomainError("classify_batch: dimension mismatch");
  const Vector scores = fresh * model.weight;
  std::vector<int> labels(static_cast<std::size_t>(fresh.rows()));
  for (Eigen::Index i = 0; i < scores.size(); ++i) labels[static_cast<std::size_t>(i)] = scores[i] < 0.0 ? -1 : 1;
  return labels;
}

inline std::vector<int> classify_batch(const HctModel& model, const Eigen::MatrixXd& fresh, const PrecisionModel& omega) {
  if (fresh.cols() != static_cast<Eigen::Index>(omega.dim())) throw DomainError("classify_batch: dimension mismatch");
  return classify_batch(model, fresh);
}

struct ClassParams {
  double vartheta = 0.3;
  double r = 1.0;
  double theta = 0.4;
  std::size_t p = 10000;
};

struct ErrorEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::vector<double> per_rep;
};

/// Replicate k: stream k of `seed` draws mu, n = round(p^theta) training
/// rows and test_size fresh rows; error is the fraction of mislabelled rows.
inline ErrorEstimate classification_error(const ClassParams& params, const PrecisionModel& omega, std::size_t reps,
                                          std::size_t test_size, std::uint64_t seed, std::size_t threads = 1,
                                          const HctOptions& opt = {}) {
  if (reps < 20) throw DomainError("classification_error: need at least 20 replicates");
  if (test_size < 1) throw DomainError("classification_error: test_size must be >= 1");
  if (!(params.theta > 0.0 && params.theta < 1.0)) throw DomainError("classification_error: theta must lie in (0,1)");
  const std::size_t n = std::max<std::size_t>(1, class_sample_size(params.p, params.theta));
  (void)omega.gaussian();
  ErrorEstimate est;
  est.per_rep.assign(reps, 0.0);
  parallel_for(reps, threads, [&](std::size_t k) {
    RngStream rng(seed, k);
    const ClassSample train = gen_class_sample(n, params.p, params.vartheta, params.r, omega, rng);
    const HctModel model = train_hct(train, omega, opt);
    const ClassSample test = draw_class_rows(train.mu, omega, test_size, rng);
    const std::vector<int> pred = classify_batch(model, test.features);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < test_size; ++i) wrong += pred[i] != test.labels[i];
    est.per_rep[k] = static_cast<double>(wrong) / static_cast<double>(test_size);
  });
  const double nr = static_cast<double>(reps);
  est.mean = std::accumulate(est.per_rep.begin(), est.per_rep.end(), 0.0) / nr;
  double ss = 0.0;
  for (double e : est.per_rep) ss += (e - est.mean) * (e - est.mean);
  est.se = std::sqrt(ss / (nr - 1.0) / nr);
  return est;
}

}  // namespace rareweak
