#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rareweak/apps.hpp"
#include "rareweak/classify.hpp"
#include "rareweak/detect.hpp"
#include "rareweak/errors.hpp"
#include "rareweak/phase.hpp"
#include "rareweak/select.hpp"

namespace rareweak {

/// Shortest-safe round-trip text for a double: 17 significant digits.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw DomainError("csv: malformed number '" + s + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Minimal CSV emitter: optional '#' comment lines, one header, rows.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  CsvWriter& comment(const std::string& text) {
    os_ << "# " << text << '\n';
    return *this;
  }

  CsvWriter& header(const std::vector<std::string>& cols) { return row(cols); }

  CsvWriter& row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
    return *this;
  }

 private:
  std::ostream& os_;
};

// ---------------------------------------------------------------------------

inline void write_table_csv(std::ostream& os, const CriticalValueTable& t) {
  CsvWriter w(os);
  w.header({"p", "alpha", "variant", "quantile", "num_reps", "seed"});
  for (std::size_t a = 0; a < t.alphas.size(); ++a)
    w.row({std::to_string(t.p), fmt(t.alphas[a]), to_string(t.variant), fmt(t.quantiles[a]),
           std::to_string(t.num_null_reps), std::to_string(t.seed)});
}

inline CriticalValueTable read_table_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "p,alpha,variant,quantile,num_reps,seed")
    throw DomainError("critical value csv: unexpected header");
  CriticalValueTable t;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 6) throw DomainError("critical value csv: expected 6 fields");
    const std::size_t p = std::stoull(c[0]);
    const Variant v = variant_from_string(c[2]);
    const std::size_t reps = std::stoull(c[4]);
    const std::uint64_t seed = std::stoull(c[5]);
    if (first) {
      t.p = p;
      t.variant = v;
      t.num_null_reps = reps;
      t.seed = seed;
      first = false;
    } else if (p != t.p || v != t.variant || reps != t.num_null_reps || seed != t.seed) {
      throw DomainError("critical value csv: mixed tables in one file");
    }
    t.alphas.push_back(parse_double(c[1]));
    t.quantiles.push_back(parse_double(c[3]));
  }
  return t;
}

inline void write_selection_csv(std::ostream& os, const SelectionResult& s) {
  CsvWriter w(os);
  w.header({"index", "beta_hat"});
  for (Eigen::Index i = 0; i < s.beta_hat.size(); ++i) w.row({std::to_string(i), fmt(s.beta_hat[i])});
}

inline void write_hamming_csv(std::ostream& os, const HammingReport& r) {
  CsvWriter w(os);
  w.header({"rep", "hamming"});
  for (std::size_t k = 0; k < r.counts.size(); ++k) w.row({std::to_string(k), std::to_string(r.counts[k])});
}

inline void write_model_csv(std::ostream& os, const HctModel& m) {
  os << "threshold=" << fmt(m.threshold) << ",argmax=" << m.argmax_index << ",alpha0=" << fmt(m.alpha0) << '\n';
  CsvWriter w(os);
  w.header({"index", "mu_hat"});
  for (Eigen::Index i = 0; i < m.mu_hat.size(); ++i) w.row({std::to_string(i), fmt(m.mu_hat[i])});
}

inline void write_roc_csv(std::ostream& os, const RocCurve& roc) {
  CsvWriter w(os);
  w.header({"fpr", "tpr"});
  for (std::size_t i = 0; i < roc.fpr.size(); ++i) w.row({fmt(roc.fpr[i]), fmt(roc.tpr[i])});
}

inline void write_vector_csv(std::ostream& os, const Vector& v) {
  CsvWriter w(os);
  w.header({"index", "value"});
  for (Eigen::Index i = 0; i < v.size(); ++i) w.row({std::to_string(i), fmt(v[i])});
}

inline Vector read_vector_csv(std::istream& is) {
  std::string line;
  while (std::getline(is, line) && !line.empty() && line[0] == '#') {
  }
  if (line != "index,value") throw DomainError("vector csv: unexpected header");
  std::vector<double> vals;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto c = split_csv_line(line);
    if (c.size() != 2 || std::stoull(c[0]) != vals.size()) throw DomainError("vector csv: malformed row");
    vals.push_back(parse_double(c[1]));
  }
  return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

/// One row per vartheta: detection, identity exact-recovery and
/// classification boundaries (the last blank where undefined).
inline void write_phase_grid_csv(std::ostream& os, const std::vector<double>& grid, double theta) {
  CsvWriter w(os);
  w.header({"vartheta", "rho_detect", "rho_exact", "rho_classify_theta"});
  for (double v : grid) {
    const std::string cls = v < 1.0 - theta ? fmt(rho_classify(v, theta)) : "";
    w.row({fmt(v), fmt(rho_detect(v)), fmt(rho_exact_identity(v)), cls});
  }
}

}  // namespace rareweak
