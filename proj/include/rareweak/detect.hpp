#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rareweak/errors.hpp"
#include "rareweak/models.hpp"
#include "rareweak/numerics.hpp"
#include "rareweak/parallel.hpp"

namespace rareweak {

enum class Transform { none, whitened, innovated };
enum class Side { upper, two };
enum class Variant { OHC, HCplus, BHC, WHC, IHC };

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::OHC: return "OHC";
    case Variant::HCplus: return "HCplus";
    case Variant::BHC: return "BHC";
    case Variant::WHC: return "WHC";
    case Variant::IHC: return "IHC";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  for (Variant v : {Variant::OHC, Variant::HCplus, Variant::BHC, Variant::WHC, Variant::IHC})
    if (to_string(v) == s) return v;
  throw DomainError("unknown HC variant '" + s + "'");
}

struct PValueVector {
  std::vector<double> values;
  Side side = Side::upper;
  Transform transform = Transform::none;
};

/// argmax_index is the 1-based rank i of the maximizing HC_{p,i}; 0 when the
/// feasible set is empty.
struct DetectionResult {
  double statistic = -std::numeric_limits<double>::infinity();
  std::size_t argmax_index = 0;
  double threshold = std::numeric_limits<double>::quiet_NaN();
  bool reject = false;
  Variant variant = Variant::OHC;
  bool clamped = false;
};

inline constexpr double kPValueFloor = 1e-15;

/// Test statistics before conversion to P-values: Y / sqrt(Sigma_ii),
/// Omega^{1/2} Y or Omega Y.
inline Vector transformed_statistics(const Vector& y, const PrecisionModel& omega, Transform transform) {
  if (static_cast<std::size_t>(y.size()) != omega.dim()) throw DomainError("pvalues: dimension mismatch");
  switch (transform) {
    case Transform::none: return y.cwiseQuotient(omega.sigma_diag().cwiseSqrt());
    case Transform::whitened: return omega.sqrt().multiply(y);
    case Transform::innovated: return omega.omega().multiply(y);
  }
  return y;
}

inline PValueVector pvalues_from_statistics(const Vector& t, Side side) {
  PValueVector pv;
  pv.side = side;
  pv.values.resize(static_cast<std::size_t>(t.size()));
  for (Eigen::Index i = 0; i < t.size(); ++i)
    pv.values[static_cast<std::size_t>(i)] = side == Side::upper ? normal_sf(t[i]) : normal_sf_two_sided(t[i]);
  return pv;
}

inline PValueVector pvalues(const Vector& y, const PrecisionModel& omega, Transform transform, Side side) {
  PValueVector pv = pvalues_from_statistics(transformed_statistics(y, omega, transform), side);
  pv.transform = transform;
  return pv;
}

namespace detail {

inline double hc_term(double p, double i, double pi) { return std::sqrt(p) * (i / p - pi) / std::sqrt(pi * (1.0 - pi)); }

inline std::vector<double> sorted_clamped(const std::vector<double>& values, bool& clamped) {
  std::vector<double> s = values;
  std::sort(s.begin(), s.end());
  clamped = false;
  for (double& v : s) {
    if (v < kPValueFloor) {
      v = kPValueFloor;
      clamped = true;
    } else if (v > 1.0 - kPValueFloor) {
      v = 1.0 - kPValueFloor;
      clamped = true;
    }
  }
  return s;
}

}  // namespace detail

/// Orthodox HC: max over 1 <= i <= p/2 of sqrt(p) (i/p - pi_(i)) / sqrt(pi_(i)(1 - pi_(i))).
inline DetectionResult hc_statistic(const PValueVector& pv) {
  const std::size_t p = pv.values.size();
  if (p < 2) throw DomainError("hc_statistic: need at least 2 P-values");
  DetectionResult res;
  const std::vector<double> s = detail::sorted_clamped(pv.values, res.clamped);
  const double pd = static_cast<double>(p);
  for (std::size_t i = 1; i <= p / 2; ++i) {
    const double v = detail::hc_term(pd, static_cast<double>(i), s[i - 1]);
    if (v > res.statistic) {
      res.statistic = v;
      res.argmax_index = i;
    }
  }
  return res;
}

/// HC+: maximum restricted to i <= alpha0 p with pi_(i) > 1/p. An empty
/// feasible set gives -inf.
inline DetectionResult hc_plus_statistic(const PValueVector& pv, double alpha0) {
  const std::size_t p = pv.values.size();
  if (p < 2) throw DomainError("hc_plus_statistic: need at least 2 P-values");
  if (!(alpha0 > 0.0 && alpha0 <= 0.5)) throw DomainError("hc_plus_statistic: alpha0 must lie in (0, 0.5]");
  DetectionResult res;
  res.variant = Variant::HCplus;
  std::vector<double> s = pv.values;
  std::sort(s.begin(), s.end());
  const double pd = static_cast<double>(p);
  const auto imax = static_cast<std::size_t>(std::floor(alpha0 * pd));
  for (std::size_t i = 1; i <= imax && i <= p; ++i) {
    double pi = s[i - 1];
    if (!(pi > 1.0 / pd)) continue;
    if (pi > 1.0 - kPValueFloor) {
      pi = 1.0 - kPValueFloor;
      res.clamped = true;
    }
    const double v = detail::hc_term(pd, static_cast<double>(i), pi);
    if (v > res.statistic) {
      res.statistic = v;
      res.argmax_index = i;
    }
  }
  return res;
}

inline void decide(DetectionResult& res, double threshold) {
  res.threshold = threshold;
  res.reject = res.statistic >= threshold;
}

/// h(p, alpha) ~ sqrt(2 log log p).
inline double asymptotic_critical_value(double p) {
  const double ll = std::log(std::log(p));
  if (!(ll > 0.0)) throw DomainError("asymptotic_critical_value: need log log p > 0");
  return std::sqrt(2.0 * ll);
}

// ---------------------------------------------------------------------------
// Critical values

/// Null distribution of HC (or HC+) under Y ~ N(0, I_p). When built by
/// simulation it keeps the sorted null sample; when loaded from CSV only the
/// alpha grid is available.
struct CriticalValueTable {
  std::size_t p = 0;
  Variant variant = Variant::OHC;
  std::size_t num_null_reps = 0;
  std::uint64_t seed = 0;
  double alpha0 = 0.5;
  std::vector<double> alphas;
  std::vector<double> quantiles;
  std::vector<double> null_sample;

  /// Empirical (1 - alpha) quantile: the smallest sample value x with
  /// F_n(x) >= 1 - alpha.
  double h(double alpha) const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("critical value: alpha must lie in (0,1)");
    if (!null_sample.empty()) {
      const double n = static_cast<double>(null_sample.size());
      auto k = static_cast<std::size_t>(std::ceil((1.0 - alpha) * n - 1e-9));
      k = std::clamp<std::size_t>(k, 1, null_sample.size());
      return null_sample[k - 1];
    }
    for (std::size_t a = 0; a < alphas.size(); ++a)
      if (std::abs(alphas[a] - alpha) < 1e-12) return quantiles[a];
    throw DomainError("critical value: alpha not present in table");
  }

  void set_grid(std::vector<double> grid) {
    alphas = std::move(grid);
    quantiles.clear();
    for (double a : alphas) quantiles.push_back(h(a));
  }
};

inline bool uses_hc_plus(Variant v) { return v == Variant::HCplus; }

/// One null replicate of the statistic underlying `variant`.
inline double null_statistic(std::size_t p, Variant variant, double alpha0, RngStream& rng) {
  const PValueVector pv = pvalues_from_statistics(gauss_vec(rng, p), uses_hc_plus(variant) || variant == Variant::OHC ? Side::upper : Side::two);
  return uses_hc_plus(variant) ? hc_plus_statistic(pv, alpha0).statistic : hc_statistic(pv).statistic;
}

/// Simulated null table; replicate k uses stream k of `seed`.
inline CriticalValueTable simulate_null_table(std::size_t p, Variant variant, std::size_t num_null_reps,
                                              std::uint64_t seed, std::size_t threads = 1, double alpha0 = 0.5) {
  if (num_null_reps < 100) throw DomainError("critical value: need at least 100 null replicates");
  CriticalValueTable t;
  t.p = p;
  t.variant = variant;
  t.num_null_reps = num_null_reps;
  t.seed = seed;
  t.alpha0 = alpha0;
  t.null_sample.resize(num_null_reps);
  parallel_for(num_null_reps, threads, [&](std::size_t k) {
    RngStream rng(seed, k);
    t.null_sample[k] = null_statistic(p, variant, alpha0, rng);
  });
  std::sort(t.null_sample.begin(), t.null_sample.end());
  return t;
}

struct CriticalValue {
  std::size_t p = 0;
  double alpha = 0.0;
  Variant variant = Variant::OHC;
  double quantile = 0.0;
  double asymptotic = 0.0;
  std::size_t num_reps = 0;
  std::uint64_t seed = 0;
};

/// Simulated h(p, alpha) from num_null_reps draws of the given stream, plus
/// the asymptotic reference sqrt(2 log log p).
inline CriticalValue critical_value(std::size_t p, double alpha, Variant variant, std::size_t num_null_reps,
                                    RngStream& rng, double alpha0 = 0.5) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("critical_value: alpha must lie in (0,1)");
  if (num_null_reps < 100) throw DomainError("critical_value: need at least 100 null replicates");
  CriticalValueTable t;
  t.p = p;
  t.variant = variant;
  t.num_null_reps = num_null_reps;
  t.seed = rng.root_seed();
  for (std::size_t k = 0; k < num_null_reps; ++k) t.null_sample.push_back(null_statistic(p, variant, alpha0, rng));
  std::sort(t.null_sample.begin(), t.null_sample.end());
  CriticalValue cv{p, alpha, variant, t.h(alpha), 0.0, num_null_reps, rng.root_seed()};
  cv.asymptotic = p > 15 ? asymptotic_critical_value(static_cast<double>(p)) : std::numeric_limits<double>::quiet_NaN();
  return cv;
}

// ---------------------------------------------------------------------------
// Tests

/// Statistic of `variant` on data y: OHC and HC+ use upper-tail P-values of
/// the marginally standardized data; BHC, WHC and IHC use two-sided P-values
/// after no, whitening or innovated transformation.
inline DetectionResult hc_variant_statistic(const Vector& y, const PrecisionModel& omega, Variant variant,
                                            double alpha0 = 0.5) {
  DetectionResult res;
  switch (variant) {
    case Variant::OHC: res = hc_statistic(pvalues(y, omega, Transform::none, Side::upper)); break;
    case Variant::HCplus: res = hc_plus_statistic(pvalues(y, omega, Transform::none, Side::upper), alpha0); break;
    case Variant::BHC: res = hc_statistic(pvalues(y, omega, Transform::none, Side::two)); break;
    case Variant::WHC: res = hc_statistic(pvalues(y, omega, Transform::whitened, Side::two)); break;
    case Variant::IHC: res = hc_statistic(pvalues(y, omega, Transform::innovated, Side::two)); break;
  }
  res.variant = variant;
  return res;
}

/// Rejection threshold: h(p, alpha), inflated by d*_p(Omega) for IHC.
inline double variant_threshold(Variant variant, const PrecisionModel& omega, double alpha,
                                const CriticalValueTable& table) {
  const double h = table.h(alpha);
  return variant == Variant::IHC ? static_cast<double>(omega.row_nonzero_max()) * h : h;
}

inline DetectionResult hc_test(const Vector& y, const PrecisionModel& omega, Variant variant, double alpha,
                               const CriticalValueTable& table) {
  if (table.p != omega.dim()) throw DomainError("hc_test: critical value table built for a different p");
  DetectionResult res = hc_variant_statistic(y, omega, variant, table.alpha0);
  decide(res, variant_threshold(variant, omega, alpha, table));
  return res;
}

/// Reject iff IHC*_p >= d*_p(Omega) h(p, alpha).
inline DetectionResult ihc_test(const Vector& y, const PrecisionModel& omega, double alpha,
                                const CriticalValueTable& table) {
  return hc_test(y, omega, Variant::IHC, alpha, table);
}

/// sum_i log((1 - eps) + eps exp(tau y_i - tau^2 / 2)).
inline double lr_statistic(const Vector& y, double epsilon, double tau) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("lr_statistic: epsilon must lie in (0,1)");
  if (!(tau >= 0.0)) throw DomainError("lr_statistic: tau must be >= 0");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double x = tau * y[i] - 0.5 * tau * tau;
    if (x <= 0.0)
      sum += std::log1p(epsilon * std::expm1(x));
    else
      sum += x + std::log(epsilon + (1.0 - epsilon) * std::exp(-x));
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Power

struct PowerOptions {
  std::size_t null_reps = 2000;       // replicates for the shared critical value
  std::size_t threads = 1;
  double alpha0 = 0.5;
  std::optional<double> epsilon;      // overrides p^-vartheta when set
  std::optional<CriticalValueTable> table;
};

struct PowerEstimate {
  double size = 0.0;
  double power = 0.0;
  double size_se = 0.0;
  double power_se = 0.0;
  double threshold = 0.0;
  std::size_t reps = 0;
};

/// Monte Carlo rejection rates under H0 (beta = 0) and H1 (ARW draw), both
/// against one simulated critical value. Replicate k uses stream k of
/// seeds derived from `seed`, so alternatives at different r share their
/// random numbers.
inline PowerEstimate power_estimate(const ArwParams& params, const PrecisionModel& omega, Variant variant,
                                    double alpha, std::size_t reps, std::uint64_t seed,
                                    const PowerOptions& opt = {}) {
  params.validate();
  if (reps < 50) throw DomainError("power_estimate: need at least 50 replicates");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("power_estimate: alpha must lie in (0,1)");
  const CriticalValueTable table =
      opt.table ? *opt.table
                : simulate_null_table(params.p, uses_hc_plus(variant) ? Variant::HCplus : Variant::OHC,
                                      opt.null_reps, derive_seed(seed, 1), opt.threads, opt.alpha0);
  const double threshold = variant_threshold(variant, omega, alpha, table);
  const double eps = opt.epsilon.value_or(params.epsilon());
  std::vector<char> rej0(reps, 0), rej1(reps, 0);
  (void)omega.gaussian();
  if (variant == Variant::WHC) (void)omega.sqrt();
  parallel_for(reps, opt.threads, [&](std::size_t k) {
    RngStream r0(derive_seed(seed, 2), k);
    const Vector y0 = omega.sample_noise(r0);
    rej0[k] = hc_variant_statistic(y0, omega, variant, opt.alpha0).statistic >= threshold;
    RngStream r1(derive_seed(seed, 3), k);
    const ArwInstance inst = gen_arw(params, eps, params.tau(), omega, r1);
    rej1[k] = hc_variant_statistic(inst.y, omega, variant, opt.alpha0).statistic >= threshold;
  });
  PowerEstimate out;
  out.reps = reps;
  out.threshold = threshold;
  const double n = static_cast<double>(reps);
  for (std::size_t k = 0; k < reps; ++k) {
    out.size += rej0[k];
    out.power += rej1[k];
  }
  out.size /= n;
  out.power /= n;
  out.size_se = std::sqrt(out.size * (1.0 - out.size) / n);
  out.power_se = std::sqrt(out.power * (1.0 - out.power) / n);
  return out;
}

}  // namespace rareweak
