#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "data.hpp"
#include "error.hpp"

namespace fusioncausal {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return detail::format_double(v);
}

struct EstimateReport {
  std::string strategy;
  std::string estimand;
  double estimate = kNaN;
  std::optional<double> se;
  std::array<std::array<double, 2>, 2> cell_n{};  // [g][a], weighted row counts
  std::vector<std::pair<std::string, std::string>> diagnostics;
  std::vector<std::string> warnings;
  Vec contributions;  // per-row IF values (uncentered); not serialized

  void diag(const std::string& key, double v) { diagnostics.emplace_back(key, fmt(v)); }
  void diag(const std::string& key, const std::string& v) { diagnostics.emplace_back(key, v); }

  std::optional<std::string> find(const std::string& key) const {
    for (const auto& [k, v] : diagnostics)
      if (k == key) return v;
    return std::nullopt;
  }
};

inline void fill_cell_counts(EstimateReport& r, const FusedDataset& d) {
  for (Index i = 0; i < d.size(); ++i) r.cell_n[static_cast<int>(d.g[static_cast<std::size_t>(i)])][static_cast<std::size_t>(d.arm(i))] += d.w[i];
}

// One key=value record per line; the last line is the summary.
inline std::string serialize(const EstimateReport& r) {
  std::ostringstream out;
  out << "strategy=" << r.strategy << '\n';
  out << "estimand=" << r.estimand << '\n';
  out << "estimate=" << fmt(r.estimate) << '\n';
  if (r.se) out << "se=" << fmt(*r.se) << '\n';
  for (int g = 0; g < 2; ++g)
    for (int a = 0; a < 2; ++a) out << "n." << (g ? 'O' : 'E') << a << '=' << fmt(r.cell_n[static_cast<std::size_t>(g)][static_cast<std::size_t>(a)]) << '\n';
  for (const auto& [k, v] : r.diagnostics) out << "diag." << k << '=' << v << '\n';
  for (const auto& w : r.warnings) out << "warning=" << w << '\n';
  out << "summary strategy=" << r.strategy << " estimand=" << r.estimand << " estimate=" << fmt(r.estimate);
  if (r.se) out << " se=" << fmt(*r.se);
  out << '\n';
  return out.str();
}

inline double parse_number(const std::string& s) {
  if (s == "nan") return kNaN;
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  return detail::parse_double(s, 0, "report");
}

inline EstimateReport parse_report(const std::string& text) {
  EstimateReport r;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.rfind("summary", 0) == 0) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::ParseError, "report line without '=': " + line);
    std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    if (k == "strategy") r.strategy = v;
    else if (k == "estimand") r.estimand = v;
    else if (k == "estimate") r.estimate = parse_number(v);
    else if (k == "se") r.se = parse_number(v);
    else if (k.size() == 4 && k.rfind("n.", 0) == 0) r.cell_n[k[2] == 'O' ? 1 : 0][static_cast<std::size_t>(k[3] - '0')] = parse_number(v);
    else if (k.rfind("diag.", 0) == 0) r.diagnostics.emplace_back(k.substr(5), v);
    else if (k == "warning") r.warnings.push_back(v);
    else fail(ErrorCode::ParseError, "unknown report key '" + k + "'");
  }
  return r;
}

// Weighted mean and the standard error of that mean from per-row values.
struct MeanSe {
  double mean = 0, se = 0;
};

inline MeanSe mean_se(const Vec& v, const Vec& w) {
  double sw = w.sum();
  double mu = v.dot(w) / sw;
  double var = (v.array() - mu).square().matrix().dot(w) / sw;
  return {mu, std::sqrt(var / static_cast<double>(v.size()))};
}

// One-step summary from per-row influence values. The estimate is the weighted
// mean of the uncentered values; the SE uses the centered values, whose
// weighted mean is zero by construction.
struct IfSummary {
  double estimate = 0, se = 0, centered_mean = 0;
  Vec contributions;
};

inline IfSummary summarize_if(const Vec& uncentered, const Vec& centered, const Vec& w) {
  IfSummary s;
  double sw = w.sum();
  s.contributions = uncentered;
  s.estimate = uncentered.dot(w) / sw;
  s.centered_mean = centered.dot(w) / sw;
  s.se = std::sqrt(centered.array().square().matrix().dot(w) / sw / static_cast<double>(centered.size()));
  return s;
}

}  // namespace fusioncausal
