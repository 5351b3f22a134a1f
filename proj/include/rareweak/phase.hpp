#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "rareweak/errors.hpp"

namespace rareweak {

struct PhasePoint {
  double vartheta = 0.5;
  double r = 1.0;
};

enum class RegionLabel { Undetectable, DetectableNotRecoverable, AlmostFullyRecoverable, ExactlyRecoverable };

inline std::string to_string(RegionLabel l) {
  switch (l) {
    case RegionLabel::Undetectable: return "Undetectable";
    case RegionLabel::DetectableNotRecoverable: return "DetectableNotRecoverable";
    case RegionLabel::AlmostFullyRecoverable: return "AlmostFullyRecoverable";
    case RegionLabel::ExactlyRecoverable: return "ExactlyRecoverable";
  }
  return "?";
}

namespace detail {

inline void check_vartheta(double vartheta, const char* who) {
  if (!(vartheta > 0.0 && vartheta < 1.0)) throw DomainError(std::string(who) + ": vartheta must lie in (0,1)");
}

}  // namespace detail

/// Detection boundary rho*(vartheta).
inline double rho_detect(double vartheta) {
  detail::check_vartheta(vartheta, "rho_detect");
  if (vartheta <= 0.5) return 0.0;
  if (vartheta <= 0.75) return vartheta - 0.5;
  const double s = 1.0 - std::sqrt(1.0 - vartheta);
  return s * s;
}

/// (1 + sqrt(1 - vartheta))^2.
inline double rho_exact_identity(double vartheta) {
  detail::check_vartheta(vartheta, "rho_exact_identity");
  const double s = 1.0 + std::sqrt(1.0 - vartheta);
  return s * s;
}

/// Hamming exponent for the 2x2 block precision model with off-diagonal h0.
inline double block_exponent(double vartheta, double r, double h0) {
  if (!(std::abs(h0) < 1.0)) throw DomainError("block_exponent: |h0| must be < 1");
  if (!(r > 0.0)) throw DomainError("block_exponent: r must be > 0");
  if (!(vartheta > 0.0)) throw DomainError("block_exponent: vartheta must be > 0");
  const double a = (1.0 - h0 * h0) * r;
  const double plus = std::max(a - vartheta, 0.0);
  const double t1 = (vartheta + r) * (vartheta + r) / (4.0 * r);
  const double t2 = vartheta + (1.0 - std::abs(h0)) * r / 2.0;
  const double t3 = 2.0 * vartheta + plus * plus / (4.0 * a);
  return std::min({t1, t2, t3});
}

inline constexpr double kBoundaryUpper = 64.0;
inline constexpr double kBoundaryTol = 1e-8;

/// Smallest r in (vartheta, 64] with block_exponent(vartheta, r, h0) = 1, by
/// bisection.
inline double rho_exact_block(double vartheta, double h0) {
  detail::check_vartheta(vartheta, "rho_exact_block");
  if (!(std::abs(h0) < 1.0)) throw DomainError("rho_exact_block: |h0| must be < 1");
  double lo = vartheta + 1e-9;
  double hi = kBoundaryUpper;
  const double flo = block_exponent(vartheta, lo, h0) - 1.0;
  const double fhi = block_exponent(vartheta, hi, h0) - 1.0;
  if (flo >= 0.0) return lo;
  if (fhi < 0.0) throw SolverError("rho_exact_block: no root in (vartheta, 64]");
  while (hi - lo > kBoundaryTol) {
    const double mid = 0.5 * (lo + hi);
    if (block_exponent(vartheta, mid, h0) >= 1.0)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

/// Exact-recovery boundary for the change-point design.
inline double rho_changepoint(double vartheta) {
  detail::check_vartheta(vartheta, "rho_changepoint");
  const double a = 2.0 - 5.0 * vartheta;
  const double disc = std::max(a * a - vartheta * vartheta, 0.0);
  return std::max(4.0 * (1.0 - vartheta), (4.0 - 10.0 * vartheta) + 2.0 * std::sqrt(disc));
}

/// (1 - theta) rho*(vartheta / (1 - theta)).
inline double rho_classify(double vartheta, double theta) {
  if (!(theta >= 0.0 && theta < 1.0)) throw DomainError("rho_classify: theta must lie in [0,1)");
  if (!(vartheta > 0.0)) throw DomainError("rho_classify: vartheta must be > 0");
  if (vartheta >= 1.0 - theta) throw DomainError("rho_classify: vartheta must be < 1 - theta");
  return (1.0 - theta) * rho_detect(vartheta / (1.0 - theta));
}

inline constexpr double kBoundaryMargin = 1e-9;

/// Region of (vartheta, r) relative to r = rho*(vartheta), r = vartheta and
/// r = exact_boundary(vartheta). Points within 1e-9 of a curve are rejected.
inline RegionLabel classify_region(const PhasePoint& pt, const std::function<double(double)>& exact_boundary) {
  detail::check_vartheta(pt.vartheta, "classify_region");
  if (!(pt.r > 0.0)) throw DomainError("classify_region: r must be > 0");
  const double lower = rho_detect(pt.vartheta);
  const double upper = exact_boundary(pt.vartheta);
  for (double c : {lower, pt.vartheta, upper})
    if (std::abs(pt.r - c) <= kBoundaryMargin) throw AmbiguousPointError("classify_region: point lies on a boundary curve");
  if (pt.r < lower) return RegionLabel::Undetectable;
  if (pt.r < pt.vartheta) return RegionLabel::DetectableNotRecoverable;
  if (pt.r < upper) return RegionLabel::AlmostFullyRecoverable;
  return RegionLabel::ExactlyRecoverable;
}

inline RegionLabel classify_region(const PhasePoint& pt) {
  return classify_region(pt, [](double v) { return rho_exact_identity(v); });
}

}  // namespace rareweak
