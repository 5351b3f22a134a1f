#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rareweak/errors.hpp"
#include "rareweak/graph.hpp"
#include "rareweak/models.hpp"
#include "rareweak/numerics.hpp"

namespace rareweak {

enum class Method { HT, GS, US };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::HT: return "HT";
    case Method::GS: return "GS";
    case Method::US: return "US";
  }
  return "?";
}

struct GsTuning {
  std::size_t m0 = 1;
  double q = 0.9;
  double u = 1.0;
  double v = 1.0;

  void validate() const {
    if (m0 < 1) throw DomainError("GsTuning: m0 must be >= 1");
    if (!(q > 0.0)) throw DomainError("GsTuning: q must be > 0");
    if (!(u > 0.0)) throw DomainError("GsTuning: u must be > 0");
    if (!(v > 0.0)) throw DomainError("GsTuning: v must be > 0");
  }
};

struct SelectionResult {
  Vector beta_hat;
  IndexSet support;
  Method method = Method::HT;
  double threshold = 0.0;  // HT / US
  GsTuning tuning;         // GS
  std::vector<std::string> warnings;
};

namespace detail {

inline IndexSet nonzero_support(const Vector& b) {
  IndexSet s;
  for (Eigen::Index i = 0; i < b.size(); ++i)
    if (b[i] != 0.0) s.push_back(static_cast<std::size_t>(i));
  return s;
}

inline int sgn(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace detail

/// Keep y_i when |y_i| >= t.
inline SelectionResult hard_threshold(const Vector& y, double t) {
  if (!(t > 0.0)) throw DomainError("hard_threshold: t must be > 0");
  SelectionResult res;
  res.method = Method::HT;
  res.threshold = t;
  res.beta_hat = Vector::Zero(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (std::abs(y[i]) >= t) res.beta_hat[i] = y[i];
  res.support = detail::nonzero_support(res.beta_hat);
  return res;
}

inline double universal_threshold(std::size_t p) { return std::sqrt(2.0 * std::log(static_cast<double>(p))); }

/// q with t = sqrt(2 q log p) the ideal HT threshold.
inline double ideal_q(double vartheta, double r) {
  if (!(vartheta > 0.0 && vartheta < 1.0)) throw DomainError("ideal_q: vartheta must lie in (0,1)");
  if (!(r > 0.0)) throw DomainError("ideal_q: r must be > 0");
  return r > vartheta ? (vartheta + r) * (vartheta + r) / (4.0 * r) : vartheta;
}

/// Number of sign disagreements.
inline std::size_t hamming(const Vector& beta_hat, const Vector& beta) {
  if (beta_hat.size() != beta.size()) throw DomainError("hamming: length mismatch");
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < beta.size(); ++i) n += detail::sgn(beta_hat[i]) != detail::sgn(beta[i]);
  return n;
}

struct HammingReport {
  std::vector<std::size_t> counts;
  double mean = 0.0;
  double se = 0.0;
};

inline HammingReport summarize_hamming(std::vector<std::size_t> counts) {
  HammingReport rep;
  rep.counts = std::move(counts);
  const double n = static_cast<double>(rep.counts.size());
  if (rep.counts.empty()) return rep;
  for (std::size_t c : rep.counts) rep.mean += static_cast<double>(c);
  rep.mean /= n;
  if (rep.counts.size() > 1) {
    double ss = 0.0;
    for (std::size_t c : rep.counts) ss += (static_cast<double>(c) - rep.mean) * (static_cast<double>(c) - rep.mean);
    rep.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Graphlet Screening

struct ScreenResult {
  IndexSet retained;
  std::size_t num_subgraphs = 0;
  std::vector<std::string> warnings;
};

/// Sequential chi-square screening over connected subgraphs in size-then-lex
/// order: I joins S when ||P^I W||^2 - ||P^{I n S} W||^2 >= 2 q log p.
inline ScreenResult gs_screen(const NormalEquations& ne, const SubgraphList& subgraphs, const GsTuning& tuning,
                              std::size_t p) {
  tuning.validate();
  if (ne.gram.dim() != p || static_cast<std::size_t>(ne.xtw.size()) != p)
    throw DomainError("gs_screen: dimension mismatch");
  const double cut = 2.0 * tuning.q * std::log(static_cast<double>(p));
  std::vector<char> in(p, 0);
  ScreenResult res;
  res.num_subgraphs = subgraphs.subsets.size();
  IndexSet inter;
  for (const IndexSet& set : subgraphs.subsets) {
    inter.clear();
    for (std::size_t j : set)
      if (in[j]) inter.push_back(j);
    if (inter.size() == set.size()) continue;
    try {
      const double full = project_norm_sq(ne, set);
      const double part = inter.empty() ? 0.0 : project_norm_sq(ne, inter);
      if (full - part >= cut)
        for (std::size_t j : set) in[j] = 1;
    } catch (const DegeneracyError& e) {
      res.warnings.emplace_back(e.what());
    }
  }
  for (std::size_t j = 0; j < p; ++j)
    if (in[j]) res.retained.push_back(j);
  return res;
}

inline GsTuning gs_tuning(std::size_t p, double vartheta, double r, std::size_t m0, double q = 0.9) {
  const double lp = std::log(static_cast<double>(p));
  return {m0, q, std::sqrt(2.0 * vartheta * lp), std::sqrt(2.0 * r * lp)};
}

inline constexpr std::size_t kCleanComponentCap = 15;

namespace detail {

/// Exhaustive constrained minimization of
///   b'G^{-1}b - 2 beta'b + beta'G beta + u^2 |supp beta|
/// over supports T of one component, with LS entries below v in magnitude
/// clipped to +-v. Ties keep the earlier support in bitmask order.
inline Vector clean_component(const Eigen::MatrixXd& g, const Vector& b, double u, double v) {
  const auto k = static_cast<int>(b.size());
  Vector best = Vector::Zero(k);
  double best_obj = 0.0;  // empty support: constant term dropped
  Vector beta(k);
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    std::vector<Eigen::Index> idx;
    for (int a = 0; a < k; ++a)
      if (mask & (1u << a)) idx.push_back(a);
    const auto m = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd gs(m, m);
    Vector bs(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      bs[a] = b[idx[a]];
      for (Eigen::Index c = 0; c < m; ++c) gs(a, c) = g(idx[a], idx[c]);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gs);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < kIndependenceTol) continue;
    Vector sol = ldlt.solve(bs);
    bool zero = false;
    for (Eigen::Index a = 0; a < m; ++a) {
      if (sol[a] == 0.0) zero = true;
      else if (std::abs(sol[a]) < v) sol[a] = sol[a] > 0.0 ? v : -v;
    }
    if (zero) continue;
    beta.setZero();
    for (Eigen::Index a = 0; a < m; ++a) beta[idx[a]] = sol[a];
    const double obj = -2.0 * beta.dot(b) + beta.dot(g * beta) + u * u * static_cast<double>(m);
    if (obj < best_obj) {
      best_obj = obj;
      best = beta;
    }
  }
  return best;
}

}  // namespace detail

/// Penalized constrained least squares on each component of the retained
/// set in the dependency graph.
inline SelectionResult gs_clean(const NormalEquations& ne, const DependencyGraph& graph, const IndexSet& retained,
                                const GsTuning& tuning, std::size_t component_cap = kCleanComponentCap) {
  tuning.validate();
  const std::size_t p = ne.gram.dim();
  if (graph.num_nodes() != p) throw DomainError("gs_clean: graph dimension mismatch");
  SelectionResult res;
  res.method = Method::GS;
  res.tuning = tuning;
  res.beta_hat = Vector::Zero(static_cast<Eigen::Index>(p));
  for (const IndexSet& comp : connected_components(graph, retained)) {
    if (comp.size() > component_cap)
      throw CapacityError("gs_clean: component of size " + std::to_string(comp.size()) + " starting at index " +
                          std::to_string(comp.front()) + " exceeds cap " + std::to_string(component_cap));
    const Eigen::MatrixXd g = ne.gram.block(comp);
    Vector b(static_cast<Eigen::Index>(comp.size()));
    for (std::size_t a = 0; a < comp.size(); ++a) b[static_cast<Eigen::Index>(a)] = ne.xtw[static_cast<Eigen::Index>(comp[a])];
    const Vector sol = detail::clean_component(g, b, tuning.u, tuning.v);
    for (std::size_t a = 0; a < comp.size(); ++a) res.beta_hat[static_cast<Eigen::Index>(comp[a])] = sol[static_cast<Eigen::Index>(a)];
  }
  res.support = detail::nonzero_support(res.beta_hat);
  return res;
}

struct GsOptions {
  double q = 0.9;
  bool literal_y = false;  // project Y instead of W = Omega^{1/2} Y
  std::size_t subgraph_cap = 10'000'000;
};

/// Screen + Clean on the regression form of an ARW instance, with
/// u = sqrt(2 vartheta log p) and v = sqrt(2 r log p).
inline SelectionResult gs_estimate(const Vector& y, const PrecisionModel& omega, double vartheta, double r,
                                   std::size_t m0, const GsOptions& opt = {}) {
  const std::size_t p = omega.dim();
  if (static_cast<std::size_t>(y.size()) != p) throw DomainError("gs_estimate: dimension mismatch");
  ArwParams{p, vartheta, r}.validate();
  const GsTuning tuning = gs_tuning(p, vartheta, r, m0, opt.q);
  Regression reg{omega.sqrt(), omega.sqrt().multiply(y)};
  NormalEquations ne = normal_equations(reg);
  if (opt.literal_y) ne.xtw = reg.design.sparse().transpose() * y;
  const SubgraphList subgraphs = enum_connected_subgraphs(omega.graph(), m0, opt.subgraph_cap);
  ScreenResult screen = gs_screen(ne, subgraphs, tuning, p);
  SelectionResult res = gs_clean(ne, omega.graph(), screen.retained, tuning);
  res.warnings = std::move(screen.warnings);
  return res;
}

/// beta_j = (x_j, W) 1{|(x_j, W)| >= t}; the inner products are X'W.
inline SelectionResult univariate_screen(const NormalEquations& ne, double t) {
  if (!(t >= 0.0)) throw DomainError("univariate_screen: t must be >= 0");
  SelectionResult res;
  res.method = Method::US;
  res.threshold = t;
  res.beta_hat = Vector::Zero(ne.xtw.size());
  for (Eigen::Index j = 0; j < ne.xtw.size(); ++j)
    if (std::abs(ne.xtw[j]) >= t && ne.xtw[j] != 0.0) res.beta_hat[j] = ne.xtw[j];
  res.support = detail::nonzero_support(res.beta_hat);
  return res;
}

inline SelectionResult univariate_screen(const Regression& reg, double t) {
  return univariate_screen(NormalEquations{reg.design, reg.design.sparse().transpose() * reg.response}, t);
}

}  // namespace rareweak
