#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rareweak/rareweak.hpp"

namespace rareweak::harness {

using json = nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"detect", "recover", "bandwidth", "ranking", "classify", "phase"};
  return kinds;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------
// Presets

inline json preset(const std::string& kind, const std::string& scale) {
  const bool paper = scale == "paper";
  if (kind == "detect")
    return {{"p", paper ? 10000 : 2000},
            {"omega", {{"kind", "block2"}, {"h0", 0.5}}},
            {"alpha", 0.05},
            {"reps", paper ? 400 : 200},
            {"null_reps", paper ? 5000 : 1000},
            {"vartheta", {0.6}},
            {"r", {0.4, 0.8, 1.2}},
            {"variants", {"OHC", "BHC", "WHC", "IHC"}}};
  if (kind == "recover") {
    json grid = json::array();
    for (int e = 9; e <= (paper ? 14 : 12); ++e) grid.push_back(1 << e);
    return {{"vartheta", 0.5},       {"r", 2.0},           {"p", grid},
            {"reps", paper ? 200 : 50}, {"methods", {"HT", "GS"}}, {"omega", {{"kind", "identity"}, {"h0", 0.0}}},
            {"m0", 1},               {"q", 0.9},           {"ht_threshold", "ideal"}};
  }
  if (kind == "bandwidth")
    return {{"p", paper ? 5000 : 2000},
            {"n", 200},
            {"b0", 10},
            {"alpha", 0.05},
            {"reps", paper ? 200 : 100},
            {"null_reps", paper ? 20000 : 4000},
            {"bands", 2},
            {"side", "upper"},
            {"null", "matched"},
            {"cases", {{0.01, 0.175}, {0.01, 0.2}, {0.01, 0.225}, {0.005, 0.225}, {0.005, 0.25}, {0.01, 0.275}}}};
  if (kind == "ranking")
    return {{"n", paper ? 500 : 250},
            {"p", paper ? 1000 : 500},
            {"epsilon", 0.05},
            {"m0", 2},
            {"delta", 0.3},
            {"reps", paper ? 200 : 30},
            {"roc_points", 101},
            {"cases", {{-0.8, 4.0}, {0.8, 1.5}}}};
  if (kind == "classify")
    return {{"p", paper ? 10000 : 2000},
            {"theta", 0.4},
            {"alpha0", 0.10},
            {"reps", paper ? 50 : 20},
            {"test_size", paper ? 400 : 200},
            {"omega", {{"kind", "identity"}, {"h0", 0.0}}},
            {"vartheta", {0.3, 0.5}},
            {"r", {0.02, 0.4, 1.2}}};
  if (kind == "phase")
    return {{"grid_points", paper ? 999 : 99}, {"theta", 0.2}, {"h0", {-0.5, 0.0, 0.5}}};
  throw ConfigError("unknown experiment '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Resolution and validation

namespace detail {

inline bool same_shape(const json& def, const json& val) {
  if (def.is_number_integer()) return val.is_number_integer();
  if (def.is_number()) return val.is_number();
  if (def.is_string()) return val.is_string();
  if (def.is_boolean()) return val.is_boolean();
  if (def.is_object()) return val.is_object();
  if (def.is_array()) return val.is_array();
  return false;
}

inline void merge_strict(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError(path + ": expected an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("unknown config key '" + key + "'");
    json& slot = base[it.key()];
    if (!same_shape(slot, it.value())) throw ConfigError("config key '" + key + "' has the wrong type");
    if (slot.is_object())
      merge_strict(slot, it.value(), key);
    else
      slot = it.value();
  }
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

inline double num(const json& j, const char* key) { return j.at(key).get<double>(); }

inline std::size_t count(const json& j, const char* key, std::size_t min = 0) {
  const json& v = j.at(key);
  require(v.is_number_integer() && v.get<long long>() >= static_cast<long long>(min),
          std::string(key) + " must be an integer >= " + std::to_string(min));
  return v.get<std::size_t>();
}

inline std::vector<double> numbers(const json& j, const char* key) {
  std::vector<double> out;
  for (const json& v : j.at(key)) {
    require(v.is_number(), std::string(key) + " must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline std::vector<std::pair<double, double>> pairs(const json& j, const char* key) {
  std::vector<std::pair<double, double>> out;
  for (const json& v : j.at(key)) {
    require(v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number(),
            std::string(key) + " entries must be [number, number]");
    out.emplace_back(v[0].get<double>(), v[1].get<double>());
  }
  return out;
}

inline void check_omega(const json& o, std::size_t p) {
  const std::string kind = o.at("kind").get<std::string>();
  require(kind == "identity" || kind == "block2", "omega.kind must be identity or block2");
  const double h0 = o.at("h0").get<double>();
  require(std::abs(h0) < 1.0, "omega.h0 must satisfy |h0| < 1");
  require(p >= 2, "p must be >= 2");
}

inline PrecisionModel make_omega(const json& o, std::size_t p) {
  if (o.at("kind").get<std::string>() == "identity") return PrecisionModel::identity(p);
  return PrecisionModel::block2(p, o.at("h0").get<double>());
}

inline void check_open_unit(const std::vector<double>& v, const char* what) {
  for (double x : v) require(x > 0.0 && x < 1.0, std::string(what) + " values must lie in (0,1)");
}

inline void check_positive(const std::vector<double>& v, const char* what) {
  for (double x : v) require(x > 0.0, std::string(what) + " values must be > 0");
}

}  // namespace detail

/// Every semantic check for a resolved config; throws ConfigError before
/// any computation starts.
inline void validate(const std::string& kind, const json& c) {
  using namespace detail;
  if (kind == "detect") {
    const std::size_t p = count(c, "p", 16);
    check_omega(c.at("omega"), p);
    require(num(c, "alpha") > 0.0 && num(c, "alpha") < 1.0, "alpha must lie in (0,1)");
    count(c, "reps", 50);
    count(c, "null_reps", 100);
    check_open_unit(numbers(c, "vartheta"), "vartheta");
    check_positive(numbers(c, "r"), "r");
    for (const json& v : c.at("variants")) {
      require(v.is_string(), "variants must be strings");
      try {
        variant_from_string(v.get<std::string>());
      } catch (const DomainError& e) {
        throw ConfigError(e.what());
      }
    }
  } else if (kind == "recover") {
    require(num(c, "vartheta") > 0.0 && num(c, "vartheta") < 1.0, "vartheta must lie in (0,1)");
    require(num(c, "r") > 0.0, "r must be > 0");
    count(c, "reps", 1);
    for (const json& v : c.at("p")) require(v.is_number_integer() && v.get<long long>() >= 2, "p values must be integers >= 2");
    for (const json& v : c.at("methods")) {
      require(v.is_string(), "methods must be strings");
      require(v == "HT" || v == "GS", "methods must be HT or GS");
    }
    check_omega(c.at("omega"), 2);
    count(c, "m0", 1);
    require(num(c, "q") > 0.0, "q must be > 0");
    const std::string t = c.at("ht_threshold").get<std::string>();
    require(t == "ideal" || t == "universal", "ht_threshold must be ideal or universal");
  } else if (kind == "bandwidth") {
    const std::size_t p = count(c, "p", 16);
    count(c, "n", 2);
    const std::size_t b0 = count(c, "b0", 1);
    require(b0 < p, "b0 must be < p");
    require(num(c, "alpha") > 0.0 && num(c, "alpha") < 1.0, "alpha must lie in (0,1)");
    count(c, "reps", 1);
    count(c, "null_reps", 100);
    const std::size_t bands = count(c, "bands", 1);
    require(bands <= b0, "bands must be <= b0");
    const std::string side = c.at("side").get<std::string>();
    require(side == "upper" || side == "two", "side must be upper or two");
    const std::string null = c.at("null").get<std::string>();
    require(null == "matched" || null == "gaussian", "null must be matched or gaussian");
    for (auto [e, t] : pairs(c, "cases")) {
      require(e >= 0.0 && e <= 1.0, "case epsilon must lie in [0,1]");
      require(t > 0.0 && t < 1.0, "case tau must lie in (0,1)");
    }
  } else if (kind == "ranking") {
    count(c, "n", 2);
    const std::size_t p = count(c, "p", 4);
    require(p % 2 == 0, "p must be even");
    require(num(c, "epsilon") > 0.0 && num(c, "epsilon") <= 1.0, "epsilon must lie in (0,1]");
    count(c, "m0", 1);
    require(num(c, "delta") > 0.0, "delta must be > 0");
    count(c, "reps", 1);
    count(c, "roc_points", 2);
    for (auto [h0, tau] : pairs(c, "cases")) {
      require(std::abs(h0) < 1.0, "case h0 must satisfy |h0| < 1");
      require(tau > 0.0, "case tau must be > 0");
    }
  } else if (kind == "classify") {
    const std::size_t p = count(c, "p", 10);
    const double theta = num(c, "theta");
    require(theta > 0.0 && theta < 1.0, "theta must lie in (0,1)");
    require(num(c, "alpha0") > 0.0 && num(c, "alpha0") <= 0.5, "alpha0 must lie in (0,0.5]");
    require(std::floor(num(c, "alpha0") * static_cast<double>(p)) >= 1.0, "alpha0 * p must be >= 1");
    count(c, "reps", 20);
    count(c, "test_size", 1);
    check_omega(c.at("omega"), p);
    check_open_unit(numbers(c, "vartheta"), "vartheta");
    check_positive(numbers(c, "r"), "r");
  } else if (kind == "phase") {
    count(c, "grid_points", 1);
    const double theta = num(c, "theta");
    require(theta >= 0.0 && theta < 1.0, "theta must lie in [0,1)");
    for (double h : numbers(c, "h0")) require(std::abs(h) < 1.0, "h0 values must satisfy |h0| < 1");
  } else {
    throw ConfigError("unknown experiment '" + kind + "'");
  }
}

struct ResolvedConfig {
  std::string kind;
  std::string scale = "desk";
  std::uint64_t seed = 0;
  json params;

  json echo() const { return {{"experiment", kind}, {"scale", scale}, {"seed", seed}, {"params", params}}; }
  std::string hash() const { return hex64(fnv1a64(echo().dump())); }
};

/// User config layout: {"experiment": kind, "scale": "desk"|"paper",
/// "seed": N, "params": {...}}; every key optional except that a present
/// "experiment" must match `kind`. CLI overrides win over the file.
inline ResolvedConfig resolve(const std::string& kind, const json& user, std::optional<std::string> scale_override,
                              std::optional<std::uint64_t> seed_override) {
  if (std::find(experiment_kinds().begin(), experiment_kinds().end(), kind) == experiment_kinds().end())
    throw ConfigError("unknown experiment '" + kind + "'");
  if (!user.is_object()) throw ConfigError("config root must be an object");
  for (auto it = user.begin(); it != user.end(); ++it)
    if (it.key() != "experiment" && it.key() != "scale" && it.key() != "seed" && it.key() != "params")
      throw ConfigError("unknown config key '" + it.key() + "'");
  ResolvedConfig rc;
  rc.kind = kind;
  if (user.contains("experiment")) {
    if (!user["experiment"].is_string() || user["experiment"].get<std::string>() != kind)
      throw ConfigError("config is for experiment '" + user["experiment"].dump() + "', not '" + kind + "'");
  }
  if (user.contains("scale")) {
    if (!user["scale"].is_string()) throw ConfigError("scale must be a string");
    rc.scale = user["scale"].get<std::string>();
  }
  if (scale_override) rc.scale = *scale_override;
  if (rc.scale != "desk" && rc.scale != "paper") throw ConfigError("scale must be desk or paper");
  if (user.contains("seed")) {
    const json& s = user["seed"];
    if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<long long>() < 0))
      throw ConfigError("seed must be a non-negative integer");
    rc.seed = user["seed"].get<std::uint64_t>();
  }
  if (seed_override) rc.seed = *seed_override;
  rc.params = preset(kind, rc.scale);
  if (user.contains("params")) detail::merge_strict(rc.params, user["params"], "params");
  validate(kind, rc.params);
  return rc;
}

// ---------------------------------------------------------------------------
// Runners

struct OutputFile {
  std::string name;
  std::string body;
};

namespace detail {

/// TPR at false-positive rate x along the piecewise-linear ROC.
inline double roc_at(const RocCurve& roc, double x) {
  std::size_t i = 0;
  while (i + 1 < roc.fpr.size() && roc.fpr[i + 1] <= x) ++i;
  if (roc.fpr[i] == x || i + 1 == roc.fpr.size()) return roc.tpr[i];
  const double w = (x - roc.fpr[i]) / (roc.fpr[i + 1] - roc.fpr[i]);
  return roc.tpr[i] + w * (roc.tpr[i + 1] - roc.tpr[i]);
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

inline double se_of(const std::vector<double>& v) {
  if (v.size() < 2) return std::nan("");
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace detail

inline std::vector<OutputFile> run_detect_power(const ResolvedConfig& rc, std::size_t threads) {
  const json& c = rc.params;
  const std::size_t p = c["p"].get<std::size_t>();
  const PrecisionModel omega = detail::make_omega(c["omega"], p);
  const double alpha = c["alpha"].get<double>();
  const std::size_t reps = c["reps"].get<std::size_t>();
  const std::size_t null_reps = c["null_reps"].get<std::size_t>();
  std::vector<Variant> variants;
  for (const json& v : c["variants"]) variants.push_back(variant_from_string(v.get<std::string>()));
  const auto vth = detail::numbers(c, "vartheta");
  const auto rs = detail::numbers(c, "r");

  std::ostringstream os;
  CsvWriter w(os);
  w.header({"vartheta", "r", "variant", "size", "power", "se"});
  std::optional<CriticalValueTable> ohc, hcp;
  auto table_for = [&](Variant v) -> const CriticalValueTable& {
    auto& slot = uses_hc_plus(v) ? hcp : ohc;
    if (!slot)
      slot = simulate_null_table(p, uses_hc_plus(v) ? Variant::HCplus : Variant::OHC, null_reps,
                                 derive_seed(rc.seed, uses_hc_plus(v) ? 12 : 11), threads, 0.5);
    return *slot;
  };
  for (double v : vth)
    for (double r : rs)
      for (Variant var : variants) {
        PowerOptions opt;
        opt.threads = threads;
        opt.table = table_for(var);
        const PowerEstimate est = power_estimate(ArwParams{p, v, r}, omega, var, alpha, reps, derive_seed(rc.seed, 2), opt);
        w.row({fmt(v), fmt(r), to_string(var), fmt(est.size), fmt(est.power), fmt(est.power_se)});
      }
  return {{"detect.csv", os.str()}};
}

inline std::vector<OutputFile> run_recover(const ResolvedConfig& rc, std::size_t threads) {
  const json& c = rc.params;
  const double vartheta = c["vartheta"].get<double>();
  const double r = c["r"].get<double>();
  const std::size_t reps = c["reps"].get<std::size_t>();
  const std::size_t m0 = c["m0"].get<std::size_t>();
  const double q = c["q"].get<double>();
  const bool ideal = c["ht_threshold"].get<std::string>() == "ideal";
  std::ostringstream os, per;
  CsvWriter w(os), wp(per);
  w.header({"p", "method", "mean_hamming", "se"});
  wp.header({"p", "method", "rep", "hamming"});
  for (const json& pj : c["p"]) {
    const auto p = pj.get<std::size_t>();
    const PrecisionModel omega = detail::make_omega(c["omega"], p);
    const ArwParams params{p, vartheta, r};
    const double t = std::sqrt(2.0 * (ideal ? ideal_q(vartheta, r) : 1.0) * std::log(static_cast<double>(p)));
    for (const json& mj : c["methods"]) {
      const std::string method = mj.get<std::string>();
      std::vector<std::size_t> counts(reps);
      (void)omega.gaussian();
      if (method == "GS") (void)omega.sqrt();
      parallel_for(reps, threads, [&](std::size_t k) {
        RngStream rng(derive_seed(rc.seed, p), k);
        const ArwInstance inst = gen_arw(params, omega, rng);
        const SelectionResult s = method == "HT" ? hard_threshold(inst.y, t)
                                                 : gs_estimate(inst.y, omega, vartheta, r, m0, GsOptions{q});
        counts[k] = hamming(s.beta_hat, inst.beta);
      });
      const HammingReport rep = summarize_hamming(counts);
      w.row({std::to_string(p), method, fmt(rep.mean), fmt(rep.se)});
      for (std::size_t k = 0; k < reps; ++k)
        wp.row({std::to_string(p), method, std::to_string(k), std::to_string(counts[k])});
    }
  }
  return {{"recover.csv", os.str()}, {"recover_reps.csv", per.str()}};
}

inline std::vector<OutputFile> run_bandwidth(const ResolvedConfig& rc, std::size_t threads) {
  const json& c = rc.params;
  const std::size_t p = c["p"].get<std::size_t>();
  const std::size_t n = c["n"].get<std::size_t>();
  const std::size_t b0 = c["b0"].get<std::size_t>();
  const double alpha = c["alpha"].get<double>();
  const std::size_t reps = c["reps"].get<std::size_t>();
  const std::size_t bands = c["bands"].get<std::size_t>();
  const Side side = c["side"].get<std::string>() == "two" ? Side::two : Side::upper;
  const std::size_t null_reps = c["null_reps"].get<std::size_t>();
  const CriticalValueTable table =
      c["null"].get<std::string>() == "matched"
          ? simulate_bandwidth_null_table(p, n, b0, null_reps, derive_seed(rc.seed, 23), side, threads)
          : simulate_null_table(p, Variant::HCplus, null_reps, derive_seed(rc.seed, 21), threads, kBandwidthAlpha0);
  std::ostringstream os, sum;
  CsvWriter w(os), ws(sum);
  w.header({"epsilon", "tau", "rep", "b_hat", "correct"});
  ws.header({"epsilon", "tau", "error_rate", "se", "threshold"});
  for (auto [eps, tau] : detail::pairs(c, "cases")) {
    const std::vector<BandMixture> mix(bands, BandMixture{eps, tau});
    std::vector<std::size_t> bhat(reps), truth(reps);
    parallel_for(reps, threads, [&](std::size_t k) {
      RngStream rng(derive_seed(rc.seed, 22), k);
      const BandedSample s = gen_banded_sample(p, n, mix, rng);
      bhat[k] = estimate_bandwidth(s.samples, b0, alpha, table, side).b_hat;
      truth[k] = s.bandwidth;
    });
    std::size_t wrong = 0;
    for (std::size_t k = 0; k < reps; ++k) {
      const bool ok = bhat[k] == truth[k];
      wrong += !ok;
      w.row({fmt(eps), fmt(tau), std::to_string(k), std::to_string(bhat[k]), ok ? "1" : "0"});
    }
    const double rate = static_cast<double>(wrong) / static_cast<double>(reps);
    ws.row({fmt(eps), fmt(tau), fmt(rate), fmt(std::sqrt(rate * (1.0 - rate) / static_cast<double>(reps))),
            fmt(table.h(alpha / static_cast<double>(b0)))});
  }
  return {{"bandwidth.csv", os.str()}, {"bandwidth_summary.csv", sum.str()}};
}

struct RankingRep {
  double auc_us = std::nan("");
  double auc_gs = std::nan("");
  RocCurve roc_us, roc_gs;
};

/// One paired-design replicate ranked by US and GS.
inline RankingRep ranking_replicate(std::size_t n, std::size_t p, double eps, double h0, double tau, std::size_t m0,
                                    double delta, RngStream& rng) {
  const PairedRegression reg = gen_paired_regression(n, p, eps, h0, tau, rng);
  const NormalEquations ne = normal_equations(reg.design, reg.response);
  IndexSet truth;
  for (Eigen::Index j = 0; j < reg.beta.size(); ++j)
    if (reg.beta[j] != 0.0) truth.push_back(static_cast<std::size_t>(j));
  RankingRep out;
  if (truth.empty() || truth.size() == p) return out;
  out.roc_us = roc_curve(rank_features_us(ne), truth);
  out.roc_gs = roc_curve(rank_features_gs(ne, delta, m0), truth);
  out.auc_us = out.roc_us.auc;
  out.auc_gs = out.roc_gs.auc;
  return out;
}

inline std::vector<OutputFile> run_ranking(const ResolvedConfig& rc, std::size_t threads) {
  const json& c = rc.params;
  const std::size_t n = c["n"].get<std::size_t>();
  const std::size_t p = c["p"].get<std::size_t>();
  const double eps = c["epsilon"].get<double>();
  const std::size_t m0 = c["m0"].get<std::size_t>();
  const double delta = c["delta"].get<double>();
  const std::size_t reps = c["reps"].get<std::size_t>();
  const std::size_t npts = c["roc_points"].get<std::size_t>();
  std::vector<OutputFile> files;
  std::ostringstream os, sum;
  CsvWriter w(os), ws(sum);
  w.header({"h0", "tau", "rep", "auc_us", "auc_gs"});
  ws.header({"h0", "tau", "mean_auc_us", "mean_auc_gs", "mean_diff", "se_diff", "valid_reps"});
  std::size_t case_index = 0;
  for (auto [h0, tau] : detail::pairs(c, "cases")) {
    std::vector<RankingRep> out(reps);
    parallel_for(reps, threads, [&](std::size_t k) {
      RngStream rng(derive_seed(rc.seed, 31), k);
      out[k] = ranking_replicate(n, p, eps, h0, tau, m0, delta, rng);
    });
    std::vector<double> us, gs, diff;
    std::vector<double> grid_us(npts, 0.0), grid_gs(npts, 0.0);
    for (std::size_t k = 0; k < reps; ++k) {
      w.row({fmt(h0), fmt(tau), std::to_string(k), fmt(out[k].auc_us), fmt(out[k].auc_gs)});
      if (std::isnan(out[k].auc_us)) continue;
      us.push_back(out[k].auc_us);
      gs.push_back(out[k].auc_gs);
      diff.push_back(out[k].auc_gs - out[k].auc_us);
      for (std::size_t g = 0; g < npts; ++g) {
        const double x = static_cast<double>(g) / static_cast<double>(npts - 1);
        grid_us[g] += detail::roc_at(out[k].roc_us, x);
        grid_gs[g] += detail::roc_at(out[k].roc_gs, x);
      }
    }
    ws.row({fmt(h0), fmt(tau), fmt(detail::mean_of(us)), fmt(detail::mean_of(gs)), fmt(detail::mean_of(diff)),
            fmt(detail::se_of(diff)), std::to_string(us.size())});
    for (int m = 0; m < 2; ++m) {
      std::ostringstream ro;
      CsvWriter wr(ro);
      wr.header({"fpr", "tpr"});
      const auto& grid = m == 0 ? grid_us : grid_gs;
      for (std::size_t g = 0; g < npts; ++g)
        wr.row({fmt(static_cast<double>(g) / static_cast<double>(npts - 1)),
                fmt(us.empty() ? std::nan("") : grid[g] / static_cast<double>(us.size()))});
      files.push_back({"roc_case" + std::to_string(case_index) + (m == 0 ? "_US.csv" : "_GS.csv"), ro.str()});
    }
    ++case_index;
  }
  files.insert(files.begin(), {{"ranking.csv", os.str()}, {"ranking_summary.csv", sum.str()}});
  return files;
}

inline std::vector<OutputFile> run_classify(const ResolvedConfig& rc, std::size_t threads) {
  const json& c = rc.params;
  const std::size_t p = c["p"].get<std::size_t>();
  const double theta = c["theta"].get<double>();
  const PrecisionModel omega = detail::make_omega(c["omega"], p);
  HctOptions opt;
  opt.alpha0 = c["alpha0"].get<double>();
  std::ostringstream os;
  CsvWriter w(os);
  w.header({"vartheta", "r", "theta", "p", "mean_error", "se", "rho_classify"});
  for (double v : detail::numbers(c, "vartheta"))
    for (double r : detail::numbers(c, "r")) {
      const ErrorEstimate e = classification_error(ClassParams{v, r, theta, p}, omega, c["reps"].get<std::size_t>(),
                                                   c["test_size"].get<std::size_t>(), derive_seed(rc.seed, 41), threads,
                                                   opt);
      const std::string boundary = v < 1.0 - theta ? fmt(rho_classify(v, theta)) : "";
      w.row({fmt(v), fmt(r), fmt(theta), std::to_string(p), fmt(e.mean), fmt(e.se), boundary});
    }
  return {{"classify.csv", os.str()}};
}

inline std::vector<OutputFile> run_phase(const ResolvedConfig& rc, std::size_t) {
  const json& c = rc.params;
  const std::size_t m = c["grid_points"].get<std::size_t>();
  std::vector<double> grid;
  for (std::size_t i = 1; i <= m; ++i) grid.push_back(static_cast<double>(i) / static_cast<double>(m + 1));
  std::ostringstream os, blk, cp;
  write_phase_grid_csv(os, grid, c["theta"].get<double>());
  CsvWriter wb(blk), wc(cp);
  wb.header({"vartheta", "h0", "rho_exact_block"});
  for (double h0 : detail::numbers(c, "h0"))
    for (double v : grid) wb.row({fmt(v), fmt(h0), fmt(rho_exact_block(v, h0))});
  wc.header({"vartheta", "rho_changepoint"});
  for (double v : grid) wc.row({fmt(v), fmt(rho_changepoint(v))});
  return {{"phase.csv", os.str()}, {"phase_block.csv", blk.str()}, {"phase_changepoint.csv", cp.str()}};
}

inline std::vector<OutputFile> run(const ResolvedConfig& rc, std::size_t threads) {
  if (rc.kind == "detect") return run_detect_power(rc, threads);
  if (rc.kind == "recover") return run_recover(rc, threads);
  if (rc.kind == "bandwidth") return run_bandwidth(rc, threads);
  if (rc.kind == "ranking") return run_ranking(rc, threads);
  if (rc.kind == "classify") return run_classify(rc, threads);
  if (rc.kind == "phase") return run_phase(rc, threads);
  throw ConfigError("unknown experiment '" + rc.kind + "'");
}

/// '#' provenance lines prepended to every output file.
inline std::string provenance_header(const ResolvedConfig& rc) {
  std::ostringstream os;
  os << "# rareweak " << kVersion << '\n'
     << "# experiment: " << rc.kind << '\n'
     << "# config_hash: " << rc.hash() << '\n'
     << "# seed: " << rc.seed << '\n'
     << "# config: " << rc.echo().dump() << '\n';
  return os.str();
}

}  // namespace rareweak::harness
