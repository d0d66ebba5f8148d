#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"

namespace fusioncausal {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class Domain : std::uint8_t { Experimental = 0, Observational = 1 };
enum class ZRole : std::uint8_t { None, Bsiv, Proxy };

inline constexpr Domain kE = Domain::Experimental;
inline constexpr Domain kO = Domain::Observational;

inline const char* to_string(Domain g) { return g == kE ? "E" : "O"; }

struct Observation {
  Domain g = kO;
  int a = 0;
  std::vector<double> x;
  double m = 0.0;
  std::optional<double> y;
  std::optional<double> z;
  double weight = 1.0;
};

struct ColumnSchema {
  ZRole z_role = ZRole::None;
  bool m_observed_in_o = true;
};

// Pooled sample stored by column. Missing y / z / m are NaN internally.
// Row weights default to one; weighted tables let population joints flow
// through the same code as samples.
class FusedDataset {
 public:
  std::vector<Domain> g;
  std::vector<int> a;
  Mat x;
  Vec m, y, z, w;
  ZRole z_role = ZRole::None;
  bool m_observed_in_o = true;

  FusedDataset() = default;

  Index size() const { return static_cast<Index>(g.size()); }
  Index dim() const { return x.cols(); }
  bool has_y(Index i) const { return !std::isnan(y[i]); }
  bool has_z(Index i) const { return !std::isnan(z[i]); }
  bool is_o(Index i) const { return g[static_cast<std::size_t>(i)] == kO; }
  bool is_e(Index i) const { return g[static_cast<std::size_t>(i)] == kE; }
  int arm(Index i) const { return a[static_cast<std::size_t>(i)]; }

  void resize(Index n, Index d) {
    g.assign(static_cast<std::size_t>(n), kO);
    a.assign(static_cast<std::size_t>(n), 0);
    x.resize(n, d);
    m.setConstant(n, kNaN);
    y.setConstant(n, kNaN);
    z.setConstant(n, kNaN);
    w.setOnes(n);
  }

  Observation row(Index i) const {
    Observation o;
    o.g = g[static_cast<std::size_t>(i)];
    o.a = a[static_cast<std::size_t>(i)];
    o.x.resize(static_cast<std::size_t>(dim()));
    for (Index j = 0; j < dim(); ++j) o.x[static_cast<std::size_t>(j)] = x(i, j);
    o.m = m[i];
    if (has_y(i)) o.y = y[i];
    if (has_z(i)) o.z = z[i];
    o.weight = w[i];
    return o;
  }

  static FusedDataset from_rows(const std::vector<Observation>& rows, ColumnSchema schema = {}) {
    FusedDataset d;
    Index dim = rows.empty() ? 0 : static_cast<Index>(rows.front().x.size());
    d.resize(static_cast<Index>(rows.size()), dim);
    d.z_role = schema.z_role;
    d.m_observed_in_o = schema.m_observed_in_o;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& o = rows[r];
      auto i = static_cast<Index>(r);
      if (static_cast<Index>(o.x.size()) != dim) fail(ErrorCode::InvalidSpec, "covariate dimension differs across rows");
      d.g[r] = o.g;
      d.a[r] = o.a;
      for (Index j = 0; j < dim; ++j) d.x(i, j) = o.x[static_cast<std::size_t>(j)];
      d.m[i] = o.m;
      d.y[i] = o.y ? *o.y : kNaN;
      d.z[i] = o.z ? *o.z : kNaN;
      d.w[i] = o.weight;
    }
    d.validate();
    return d;
  }

  void validate() const {
    const Index n = size();
    if (n == 0) fail(ErrorCode::EmptyDataset, "no rows");
    double cell[2][2] = {{0, 0}, {0, 0}};
    for (Index i = 0; i < n; ++i) {
      int ai = arm(i);
      if (ai != 0 && ai != 1) fail(ErrorCode::NonBinaryTreatment, "row " + std::to_string(i));
      if (!(std::isfinite(w[i]) && w[i] > 0)) fail(ErrorCode::ParseError, "nonpositive weight at row " + std::to_string(i));
      for (Index j = 0; j < dim(); ++j)
        if (!std::isfinite(x(i, j))) fail(ErrorCode::ParseError, "non-finite covariate at row " + std::to_string(i));
      bool m_required = is_e(i) || m_observed_in_o;
      if (m_required && !std::isfinite(m[i])) fail(ErrorCode::ParseError, "non-finite m at row " + std::to_string(i));
      if (!std::isnan(m[i]) && !std::isfinite(m[i])) fail(ErrorCode::ParseError, "non-finite m at row " + std::to_string(i));
      if (is_e(i) && has_y(i)) fail(ErrorCode::LongTermOutcomeInExperiment, "row " + std::to_string(i));
      if (is_o(i) && !std::isfinite(y[i])) fail(ErrorCode::ParseError, "missing or non-finite y on observational row " + std::to_string(i));
      if (has_z(i) && !std::isfinite(z[i])) fail(ErrorCode::ParseError, "non-finite z at row " + std::to_string(i));
      if (z_role != ZRole::None && is_o(i) && !has_z(i)) fail(ErrorCode::MissingColumn, "z missing on observational row " + std::to_string(i));
      if (z_role == ZRole::Bsiv && !has_z(i)) fail(ErrorCode::MissingColumn, "bespoke instrument needs z on every row, missing at " + std::to_string(i));
      cell[static_cast<int>(g[static_cast<std::size_t>(i)])][ai] += 1;
    }
    for (int gi = 0; gi < 2; ++gi)
      for (int ai = 0; ai < 2; ++ai)
        if (cell[gi][ai] == 0)
          fail(ErrorCode::EmptyArm, std::string("no rows with g=") + (gi ? "O" : "E") + ", a=" + std::to_string(ai));
  }
};

// Copy of selected rows, unvalidated (fold training sets may be partial).
inline FusedDataset subset(const FusedDataset& d, const std::vector<Index>& rows) {
  FusedDataset s;
  s.resize(static_cast<Index>(rows.size()), d.dim());
  s.z_role = d.z_role;
  s.m_observed_in_o = d.m_observed_in_o;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Index i = rows[r], k = static_cast<Index>(r);
    s.g[r] = d.g[static_cast<std::size_t>(i)];
    s.a[r] = d.a[static_cast<std::size_t>(i)];
    s.x.row(k) = d.x.row(i);
    s.m[k] = d.m[i];
    s.y[k] = d.y[i];
    s.z[k] = d.z[i];
    s.w[k] = d.w[i];
  }
  return s;
}

// Read-only row selection; order follows the parent.
struct View {
  const FusedDataset* data = nullptr;
  std::vector<Index> rows;

  Index size() const { return static_cast<Index>(rows.size()); }
  bool empty() const { return rows.empty(); }
  Index operator[](std::size_t k) const { return rows[k]; }
  auto begin() const { return rows.begin(); }
  auto end() const { return rows.end(); }
  double total_weight() const {
    double s = 0;
    for (Index i : rows) s += data->w[i];
    return s;
  }
};

inline View all_rows(const FusedDataset& d) {
  View v{&d, std::vector<Index>(static_cast<std::size_t>(d.size()))};
  std::iota(v.rows.begin(), v.rows.end(), Index{0});
  return v;
}

inline View split(const View& v, std::optional<Domain> g, std::optional<int> a = std::nullopt) {
  View out{v.data, {}};
  for (Index i : v.rows) {
    if (g && v.data->g[static_cast<std::size_t>(i)] != *g) continue;
    if (a && v.data->arm(i) != *a) continue;
    out.rows.push_back(i);
  }
  return out;
}

inline View split(const FusedDataset& d, std::optional<Domain> g, std::optional<int> a = std::nullopt) {
  return split(all_rows(d), g, a);
}

using CellEvent = std::function<bool(Domain, int)>;

inline double empirical_prob(const View& v, const CellEvent& event) {
  if (v.empty()) fail(ErrorCode::EmptyDataset, "probability over an empty sample");
  double num = 0, den = 0;
  for (Index i : v.rows) {
    double wi = v.data->w[i];
    den += wi;
    if (event(v.data->g[static_cast<std::size_t>(i)], v.data->arm(i))) num += wi;
  }
  return num / den;
}

inline double empirical_prob(const FusedDataset& d, const CellEvent& event) { return empirical_prob(all_rows(d), event); }

// P(event | given) as a ratio of weighted counts.
inline double empirical_prob(const FusedDataset& d, const CellEvent& event, const CellEvent& given) {
  double num = 0, den = 0;
  for (Index i = 0; i < d.size(); ++i) {
    auto gi = d.g[static_cast<std::size_t>(i)];
    if (!given(gi, d.arm(i))) continue;
    den += d.w[i];
    if (event(gi, d.arm(i))) num += d.w[i];
  }
  if (den == 0) fail(ErrorCode::EmptyDataset, "conditioning event has no rows");
  return num / den;
}

inline double weighted_mean(const View& v, const std::function<double(Index)>& f) {
  if (v.empty()) fail(ErrorCode::EmptyCell, "mean over an empty cell");
  double num = 0, den = 0;
  for (Index i : v.rows) {
    num += v.data->w[i] * f(i);
    den += v.data->w[i];
  }
  return num / den;
}

namespace detail {

// NaN sorts first and compares equal to NaN.
inline int cmp_double(double p, double q) {
  bool pn = std::isnan(p), qn = std::isnan(q);
  if (pn || qn) return pn == qn ? 0 : (pn ? -1 : 1);
  return p < q ? -1 : (p > q ? 1 : 0);
}

}  // namespace detail

// Rows sorted by their full content. Every estimator runs on this order, so
// results do not depend on the order rows arrived in.
inline FusedDataset canonical(const FusedDataset& d) {
  std::vector<Index> idx(static_cast<std::size_t>(d.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  auto less = [&](Index i, Index j) {
    auto gi = d.g[static_cast<std::size_t>(i)], gj = d.g[static_cast<std::size_t>(j)];
    if (gi != gj) return gi < gj;
    if (d.arm(i) != d.arm(j)) return d.arm(i) < d.arm(j);
    for (Index c = 0; c < d.dim(); ++c)
      if (int r = detail::cmp_double(d.x(i, c), d.x(j, c))) return r < 0;
    for (const Vec* col : {&d.m, &d.y, &d.z, &d.w})
      if (int r = detail::cmp_double((*col)[i], (*col)[j])) return r < 0;
    return false;
  };
  std::stable_sort(idx.begin(), idx.end(), less);
  return subset(d, idx);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& raw, std::size_t line_no, const std::string& col) {
  std::string s = trim(raw);
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ", column " + col + ": '" + s + "'");
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace detail

inline FusedDataset read_csv(std::istream& in, ColumnSchema schema = {}) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::MissingColumn, "empty file, no header");
  auto header = detail::split_csv_line(line);
  for (auto& h : header) h = detail::trim(h);
  auto find = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  int cg = find("g"), ca = find("a"), cm = find("m"), cy = find("y"), cz = find("z");
  for (auto [name, col] : {std::pair{"g", cg}, {"a", ca}, {"m", cm}, {"y", cy}})
    if (col < 0) fail(ErrorCode::MissingColumn, std::string("column '") + name + "'");
  if (schema.z_role != ZRole::None && cz < 0) fail(ErrorCode::MissingColumn, "column 'z'");
  std::vector<int> cx;
  for (int j = 0;; ++j) {
    int c = find("x" + std::to_string(j));
    if (c < 0) break;
    cx.push_back(c);
  }

  std::vector<Observation> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto f = detail::split_csv_line(line);
    if (f.size() != header.size())
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " fields");
    Observation o;
    auto gs = detail::trim(f[static_cast<std::size_t>(cg)]);
    if (gs == "E") o.g = kE;
    else if (gs == "O") o.g = kO;
    else fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": domain must be E or O");
    auto as = detail::trim(f[static_cast<std::size_t>(ca)]);
    if (as == "0") o.a = 0;
    else if (as == "1") o.a = 1;
    else fail(ErrorCode::NonBinaryTreatment, "line " + std::to_string(line_no) + ": a='" + as + "'");
    for (std::size_t j = 0; j < cx.size(); ++j)
      o.x.push_back(detail::parse_double(f[static_cast<std::size_t>(cx[j])], line_no, "x" + std::to_string(j)));
    auto ms = detail::trim(f[static_cast<std::size_t>(cm)]);
    if (ms.empty() && o.g == kO && !schema.m_observed_in_o) o.m = kNaN;
    else o.m = detail::parse_double(ms, line_no, "m");
    auto ys = detail::trim(f[static_cast<std::size_t>(cy)]);
    if (!ys.empty()) {
      if (o.g == kE) fail(ErrorCode::LongTermOutcomeInExperiment, "line " + std::to_string(line_no));
      o.y = detail::parse_double(ys, line_no, "y");
    }
    // z on experimental rows only matters for the bespoke instrument.
    if (cz >= 0 && (o.g == kO || schema.z_role == ZRole::Bsiv)) {
      auto zs = detail::trim(f[static_cast<std::size_t>(cz)]);
      if (!zs.empty()) o.z = detail::parse_double(zs, line_no, "z");
    }
    rows.push_back(std::move(o));
  }
  if (rows.empty()) fail(ErrorCode::EmptyDataset, "no data rows");
  return FusedDataset::from_rows(rows, schema);
}

inline FusedDataset load_csv(const std::string& path, ColumnSchema schema = {}) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ParseError, "cannot open " + path);
  return read_csv(in, schema);
}

// Shortest round-trip decimal form, so reading back is bit-exact.
inline void write_csv(std::ostream& out, const FusedDataset& d) {
  bool with_z = d.z_role != ZRole::None;
  for (Index i = 0; i < d.size() && !with_z; ++i) with_z = d.has_z(i);
  out << "g,a";
  for (Index j = 0; j < d.dim(); ++j) out << ",x" << j;
  out << ",m,y";
  if (with_z) out << ",z";
  out << '\n';
  for (Index i = 0; i < d.size(); ++i) {
    out << to_string(d.g[static_cast<std::size_t>(i)]) << ',' << d.arm(i);
    for (Index j = 0; j < d.dim(); ++j) out << ',' << detail::format_double(d.x(i, j));
    out << ',';
    if (!std::isnan(d.m[i])) out << detail::format_double(d.m[i]);
    out << ',';
    if (d.has_y(i)) out << detail::format_double(d.y[i]);
    if (with_z) {
      out << ',';
      if (d.has_z(i)) out << detail::format_double(d.z[i]);
    }
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const FusedDataset& d) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::ParseError, "cannot write " + path);
  write_csv(out, d);
}

}  // namespace fusioncausal
