#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "data.hpp"
#include "models.hpp"
#include "rng.hpp"

namespace fusioncausal {

enum class Target : std::uint8_t { M, Y };

struct NuisanceConfig {
  Family family = Family::Linear;
  double trim = 0.01;
  int crossfit_folds = -1;  // < 0: estimator default (5 for influence-function estimators, none for plug-ins)
  double kernel_bandwidth = 0.0;
  double ridge_lambda = -1.0;  // <= 0: cross-validated
  int max_levels = 32;
  int landmarks = 150;
  std::optional<bool> discrete_m;  // unset: auto-detect by level count
  std::uint64_t seed = 0;

  FeatureConfig features() const { return {family, kernel_bandwidth, landmarks}; }
  int folds(bool influence) const { return crossfit_folds >= 0 ? crossfit_folds : (influence ? 5 : 0); }
};

inline Mat covariates(const View& v) {
  Mat X(v.size(), v.data->dim());
  for (Index r = 0; r < v.size(); ++r) X.row(r) = v.data->x.row(v.rows[static_cast<std::size_t>(r)]);
  return X;
}

// Covariates with extra leading columns, e.g. (m, x) or (z, x).
inline Mat covariates_with(const View& v, const std::vector<const Vec*>& lead) {
  Index k = static_cast<Index>(lead.size());
  Mat X(v.size(), v.data->dim() + k);
  for (Index r = 0; r < v.size(); ++r) {
    Index i = v.rows[static_cast<std::size_t>(r)];
    for (Index j = 0; j < k; ++j) X(r, j) = (*lead[static_cast<std::size_t>(j)])[i];
    X.row(r).tail(v.data->dim()) = v.data->x.row(i);
  }
  return X;
}

inline Vec column(const View& v, const Vec& col) {
  Vec out(v.size());
  for (Index r = 0; r < v.size(); ++r) out[r] = col[v.rows[static_cast<std::size_t>(r)]];
  return out;
}

inline Vec weights(const View& v) { return column(v, v.data->w); }

class ConditionalMean {
 public:
  ConditionalMean() = default;
  explicit ConditionalMean(Regressor r, Family f) : reg_(std::move(r)), family_(f), fitted_(true) {}

  template <class Row>
  double predict(const Row& x) const {
    return reg_.predict(x);
  }
  double predict_row(const FusedDataset& d, Index i) const { return reg_.predict(d.x.row(i)); }

  bool fitted() const { return fitted_; }
  Family family() const { return family_; }
  Index n_train() const { return reg_.n_train(); }
  double rmse() const { return reg_.rmse(); }
  const Regressor& model() const { return reg_; }

 private:
  Regressor reg_;
  Family family_ = Family::Linear;
  bool fitted_ = false;
};

inline ConditionalMean fit_conditional_mean(const FusedDataset& d, Target target, int a, Domain g, const NuisanceConfig& cfg) {
  if (target == Target::Y && g == kE) fail(ErrorCode::TargetUnavailable, "long-term outcome is not observed in the experiment");
  View cell = split(d, g, a);
  if (cell.empty()) fail(ErrorCode::EmptyCell, std::string("no rows with g=") + to_string(g) + ", a=" + std::to_string(a));
  const Vec& col = target == Target::M ? d.m : d.y;
  return ConditionalMean(Regressor::fit(covariates(cell), column(cell, col), weights(cell), cfg.features(), cfg.ridge_lambda), cfg.family);
}

enum class PropensityKind : std::uint8_t { TreatmentInE, TreatmentInO, Domain };

class PropensityScore {
 public:
  PropensityScore() = default;
  PropensityScore(Classifier c, bool with_z) : clf_(std::move(c)), with_z_(with_z), fitted_(true) {}

  template <class Row>
  double predict(const Row& x) const {
    return clf_.predict(x);
  }
  // Input (z, x) for the instrument-aware variant.
  double predict_row(const FusedDataset& d, Index i) const {
    if (!with_z_) return clf_.predict(d.x.row(i));
    return clf_.predict(zx_input(d.z[i], d.x.row(i)));
  }
  double predict_zx(double z, const Eigen::Ref<const Eigen::RowVectorXd>& x) const { return clf_.predict(zx_input(z, x)); }

  bool fitted() const { return fitted_; }
  bool converged() const { return clf_.converged(); }
  double trim() const { return clf_.trim(); }
  bool uses_z() const { return with_z_; }

  // (z, x, z*x): saturated in z when fit with the Linear family.
  static Vec zx_input(double z, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    Index d = x.size();
    Vec u(2 * d + 1);
    u[0] = z;
    for (Index j = 0; j < d; ++j) {
      u[1 + j] = x[j];
      u[1 + d + j] = z * x[j];
    }
    return u;
  }

 private:
  Classifier clf_;
  bool with_z_ = false;
  bool fitted_ = false;
};

inline PropensityScore fit_propensity(const FusedDataset& d, PropensityKind kind, const NuisanceConfig& cfg, bool with_z = false) {
  View rows = kind == PropensityKind::TreatmentInE ? split(d, kE)
              : kind == PropensityKind::TreatmentInO ? split(d, kO)
                                                     : all_rows(d);
  Vec label(rows.size());
  for (Index r = 0; r < rows.size(); ++r) {
    Index i = rows[static_cast<std::size_t>(r)];
    label[r] = kind == PropensityKind::Domain ? (d.is_e(i) ? 1.0 : 0.0) : static_cast<double>(d.arm(i));
  }
  Mat X;
  if (with_z) {
    X.resize(rows.size(), 2 * d.dim() + 1);
    for (Index r = 0; r < rows.size(); ++r) {
      Index i = rows[static_cast<std::size_t>(r)];
      X.row(r) = PropensityScore::zx_input(d.z[i], d.x.row(i)).transpose();
    }
  } else {
    X = covariates(rows);
  }
  return PropensityScore(Classifier::fit(X, label, weights(rows), cfg.features(), cfg.trim, cfg.ridge_lambda), with_z);
}

enum class CdfRule : std::uint8_t { Midpoint, Step };

// Weighted empirical CDF. Midpoint: value (C_k - w_k/2)/W at the k-th distinct
// order statistic (C_k cumulative weight through k, w_k weight of its last
// tied element), linear in between, 0 below the minimum, 1 from the maximum on.
// Step: the usual right-continuous C_k/W.
class EmpiricalCdf {
 public:
  EmpiricalCdf() = default;

  EmpiricalCdf(std::vector<std::pair<double, double>> vw, CdfRule rule) : rule_(rule) {
    if (vw.empty()) fail(ErrorCode::EmptyCell, "empirical CDF of an empty sample");
    std::sort(vw.begin(), vw.end());
    double total = 0;
    for (auto& [v, w] : vw) total += w;
    double cum = 0;
    for (std::size_t k = 0; k < vw.size(); ++k) {
      cum += vw[k].second;
      bool last_of_tie = k + 1 == vw.size() || vw[k + 1].first != vw[k].first;
      if (!last_of_tie) continue;
      v_.push_back(vw[k].first);
      f_.push_back(rule == CdfRule::Midpoint ? (cum - 0.5 * vw[k].second) / total : cum / total);
    }
    if (rule == CdfRule::Step) f_.back() = 1.0;
  }

  double cdf(double w) const {
    if (w < v_.front()) return 0.0;
    if (w >= v_.back()) return 1.0;
    auto k = static_cast<std::size_t>(std::upper_bound(v_.begin(), v_.end(), w) - v_.begin()) - 1;
    if (rule_ == CdfRule::Step) return f_[k];
    double t = (w - v_[k]) / (v_[k + 1] - v_[k]);
    return f_[k] + t * (f_[k + 1] - f_[k]);
  }

  // inf{w : cdf(w) >= p}. Step mode tolerates 1e-12 of rounding in p.
  double quantile(double p) const {
    if (rule_ == CdfRule::Step) {
      auto it = std::lower_bound(f_.begin(), f_.end(), p - 1e-12);
      return it == f_.end() ? v_.back() : v_[static_cast<std::size_t>(it - f_.begin())];
    }
    if (p <= f_.front()) return v_.front();
    auto it = std::lower_bound(f_.begin(), f_.end(), p);
    if (it == f_.end()) return v_.back();
    auto k1 = static_cast<std::size_t>(it - f_.begin()), k = k1 - 1;
    if (f_[k1] == f_[k]) return v_[k];
    double t = (p - f_[k]) / (f_[k1] - f_[k]);
    return v_[k] + t * (v_[k1] - v_[k]);
  }

  const std::vector<double>& support() const { return v_; }
  const std::vector<double>& levels() const { return f_; }
  CdfRule rule() const { return rule_; }

 private:
  std::vector<double> v_, f_;
  CdfRule rule_ = CdfRule::Midpoint;
};

using StratumKey = std::vector<double>;

inline StratumKey stratum_key(const FusedDataset& d, Index i) {
  StratumKey k(static_cast<std::size_t>(d.dim()));
  for (Index j = 0; j < d.dim(); ++j) k[static_cast<std::size_t>(j)] = d.x(i, j);
  return k;
}

inline std::size_t count_strata(const FusedDataset& d, std::size_t cap) {
  std::set<StratumKey> s;
  for (Index i = 0; i < d.size() && s.size() <= cap; ++i) s.insert(stratum_key(d, i));
  return s.size();
}

// F_{W | A=a, X=x, G=g}: per stratum for discrete X, Gaussian-kernel weighted
// on standardized X otherwise.
class ConditionalCdf {
 public:
  ConditionalCdf() = default;

  static ConditionalCdf fit(const FusedDataset& d, Target target, int a, Domain g, CdfRule rule = CdfRule::Midpoint,
                            std::size_t max_strata = 32) {
    ConditionalCdf c;
    c.rule_ = rule;
    View cell = split(d, g, a);
    if (cell.empty()) fail(ErrorCode::EmptyCell, "conditional CDF on an empty cell");
    const Vec& col = target == Target::M ? d.m : d.y;
    c.discrete_ = count_strata(d, max_strata) <= max_strata;
    if (c.discrete_) {
      std::map<StratumKey, std::vector<std::pair<double, double>>> bins;
      for (Index i : cell) bins[stratum_key(d, i)].emplace_back(col[i], d.w[i]);
      for (auto& [k, vw] : bins) c.strata_.emplace(k, EmpiricalCdf(std::move(vw), rule));
      return c;
    }
    c.train_x_ = covariates(cell);
    c.train_v_ = column(cell, col);
    c.train_w_ = weights(cell);
    Index n = c.train_x_.rows();
    c.scale_ = ((c.train_x_.rowwise() - c.train_x_.colwise().mean()).array().square().colwise().sum() / std::max<Index>(n - 1, 1))
                   .sqrt()
                   .transpose();
    for (Index j = 0; j < c.scale_.size(); ++j)
      if (c.scale_[j] <= 0) c.scale_[j] = 1.0;
    c.bandwidth_ = std::pow(static_cast<double>(n), -1.0 / (4.0 + static_cast<double>(d.dim())));
    return c;
  }

  bool discrete() const { return discrete_; }

  // The CDF object for covariate value x (built on demand for continuous X).
  EmpiricalCdf at(const StratumKey& x) const {
    if (discrete_) {
      auto it = strata_.find(x);
      if (it == strata_.end()) fail(ErrorCode::EmptyCell, "no sample in this covariate stratum");
      return it->second;
    }
    std::vector<std::pair<double, double>> vw;
    for (Index i = 0; i < train_x_.rows(); ++i) {
      double s = 0;
      for (Index j = 0; j < train_x_.cols(); ++j) s += std::pow((train_x_(i, j) - x[static_cast<std::size_t>(j)]) / scale_[j], 2);
      double k = std::exp(-0.5 * s / (bandwidth_ * bandwidth_)) * train_w_[i];
      if (k > 1e-300) vw.emplace_back(train_v_[i], k);
    }
    return EmpiricalCdf(std::move(vw), rule_);
  }

  double cdf(double w, const StratumKey& x) const { return at(x).cdf(w); }
  double quantile(double p, const StratumKey& x) const { return at(x).quantile(p); }

  std::vector<StratumKey> strata() const {
    std::vector<StratumKey> out;
    for (auto& [k, v] : strata_) out.push_back(k);
    return out;
  }

 private:
  CdfRule rule_ = CdfRule::Midpoint;
  bool discrete_ = true;
  std::map<StratumKey, EmpiricalCdf> strata_;
  Mat train_x_;
  Vec train_v_, train_w_, scale_;
  double bandwidth_ = 1.0;
};

inline ConditionalCdf fit_conditional_cdf(const FusedDataset& d, Target target, int a, Domain g, CdfRule rule = CdfRule::Midpoint) {
  return ConditionalCdf::fit(d, target, a, g, rule);
}

enum class DensitySupport : std::uint8_t { Auto, Discrete, Continuous };

// p(m | A=a, X=x, G=g).
// Discrete M: relative frequencies per covariate stratum, or one-vs-rest
// classifiers (normalized) when X is continuous.
// Continuous M: location model, m = mu(x) + r with a Gaussian KDE for r
// (Silverman bandwidth); expectations use a 101-point residual grid over
// [min r - 3h, max r + 3h].
class ConditionalDensity {
 public:
  ConditionalDensity() = default;

  static ConditionalDensity fit(const FusedDataset& d, int a, Domain g, DensitySupport support, const NuisanceConfig& cfg) {
    View cell = split(d, g, a);
    if (cell.empty()) fail(ErrorCode::EmptyCell, "density on an empty cell");
    ConditionalDensity c;
    std::set<double> levels;
    for (Index i : cell) {
      levels.insert(d.m[i]);
      if (levels.size() > static_cast<std::size_t>(cfg.max_levels)) break;
    }
    bool few = levels.size() <= static_cast<std::size_t>(cfg.max_levels);
    if (support == DensitySupport::Auto) support = few ? DensitySupport::Discrete : DensitySupport::Continuous;
    if (support == DensitySupport::Discrete && !few)
      fail(ErrorCode::TooManyLevels, "more than " + std::to_string(cfg.max_levels) + " distinct M levels");
    c.discrete_ = support == DensitySupport::Discrete;
    if (c.discrete_) {
      c.levels_.assign(levels.begin(), levels.end());
      c.strata_discrete_ = count_strata(d, 32) <= 32;
      if (c.strata_discrete_) {
        for (Index i : cell) {
          auto& p = c.table_[stratum_key(d, i)];
          if (p.empty()) p.assign(c.levels_.size(), 0.0);
          p[c.level_index(d.m[i])] += d.w[i];
        }
        for (auto& [k, p] : c.table_) {
          double s = 0;
          for (double v : p) s += v;
          for (double& v : p) v /= s;
        }
      } else {
        Mat X = covariates(cell);
        Vec w = weights(cell);
        for (std::size_t l = 0; l + 1 < c.levels_.size(); ++l) {
          Vec lab(cell.size());
          for (Index r = 0; r < cell.size(); ++r) lab[r] = d.m[cell[static_cast<std::size_t>(r)]] == c.levels_[l] ? 1.0 : 0.0;
          c.ovr_.push_back(Classifier::fit(X, lab, w, cfg.features(), 0.0, cfg.ridge_lambda));
        }
      }
      return c;
    }
    c.mean_ = Regressor::fit(covariates(cell), column(cell, d.m), weights(cell), cfg.features(), cfg.ridge_lambda);
    Vec w = weights(cell);
    double ws = w.sum();
    c.resid_.resize(static_cast<std::size_t>(cell.size()));
    c.resid_w_.resize(c.resid_.size());
    for (Index r = 0; r < cell.size(); ++r) {
      Index i = cell[static_cast<std::size_t>(r)];
      c.resid_[static_cast<std::size_t>(r)] = d.m[i] - c.mean_.predict(d.x.row(i));
      c.resid_w_[static_cast<std::size_t>(r)] = w[r] / ws;
    }
    double mu = 0, var = 0;
    for (std::size_t k = 0; k < c.resid_.size(); ++k) mu += c.resid_w_[k] * c.resid_[k];
    for (std::size_t k = 0; k < c.resid_.size(); ++k) var += c.resid_w_[k] * (c.resid_[k] - mu) * (c.resid_[k] - mu);
    std::vector<std::pair<double, double>> vw;
    for (std::size_t k = 0; k < c.resid_.size(); ++k) vw.emplace_back(c.resid_[k], c.resid_w_[k]);
    EmpiricalCdf ecdf(vw, CdfRule::Step);
    double iqr = ecdf.quantile(0.75) - ecdf.quantile(0.25);
    double sd = std::sqrt(var);
    double spread = iqr > 0 ? std::min(sd, iqr / 1.34) : sd;
    if (spread <= 0) spread = 1e-6;
    double neff = 1.0 / std::accumulate(c.resid_w_.begin(), c.resid_w_.end(), 0.0, [](double s, double v) { return s + v * v; });
    c.bw_ = 0.9 * spread * std::pow(neff, -0.2);
    double lo = *std::min_element(c.resid_.begin(), c.resid_.end()) - 3 * c.bw_;
    double hi = *std::max_element(c.resid_.begin(), c.resid_.end()) + 3 * c.bw_;
    const int nodes = 101;
    double total = 0;
    for (int j = 0; j < nodes; ++j) {
      double r = lo + (hi - lo) * j / (nodes - 1);
      double p = c.residual_pdf(r);
      c.grid_.push_back(r);
      c.grid_w_.push_back(p);
      total += p;
    }
    for (double& v : c.grid_w_) v /= total;
    return c;
  }

  bool discrete() const { return discrete_; }
  const std::vector<double>& levels() const { return levels_; }

  // Audit hook: discrete pmf -> 0.5 p + 0.5 (point mass on the lowest level);
  // continuous location mu -> 0.5 mu + 1.
  void corrupt(bool on = true) { corrupt_ = on; }

  template <class Row>
  double pmf(double m, const Row& x) const {
    if (!discrete_) return pdf_continuous(m, x);
    std::size_t k = level_index(m);
    if (k >= levels_.size()) return 0.0;
    return probs(x)[k];
  }

  // sum_m f(m) p(m | x), or the quadrature analogue for continuous M.
  template <class Row, class F>
  double expect(const F& f, const Row& x) const {
    if (discrete_) {
      auto p = probs(x);
      double s = 0;
      for (std::size_t k = 0; k < levels_.size(); ++k) s += p[k] * f(levels_[k]);
      return s;
    }
    double mu = location(x);
    double s = 0;
    for (std::size_t j = 0; j < grid_.size(); ++j) s += grid_w_[j] * f(mu + grid_[j]);
    return s;
  }

  template <class Row>
  std::vector<double> probs(const Row& x) const {
    std::vector<double> p(levels_.size(), 0.0);
    if (levels_.size() == 1) {
      p[0] = 1.0;
    } else if (strata_discrete_) {
      StratumKey k(static_cast<std::size_t>(x.size()));
      for (Index j = 0; j < x.size(); ++j) k[static_cast<std::size_t>(j)] = x[j];
      auto it = table_.find(k);
      if (it == table_.end()) fail(ErrorCode::EmptyCell, "no sample in this covariate stratum");
      p = it->second;
    } else {
      double s = 0;
      for (std::size_t l = 0; l < ovr_.size(); ++l) {
        p[l] = ovr_[l].raw_predict(x);
        s += p[l];
      }
      if (s > 1.0) {
        for (auto& v : p) v /= s;
        s = 1.0;
      }
      p.back() = 1.0 - s;
    }
    if (corrupt_) {
      for (auto& v : p) v *= 0.5;
      p[0] += 0.5;
    }
    return p;
  }

  template <class Row>
  double location(const Row& x) const {
    double mu = mean_.predict(x);
    return corrupt_ ? 0.5 * mu + 1.0 : mu;
  }

 private:
  std::size_t level_index(double m) const {
    auto it = std::lower_bound(levels_.begin(), levels_.end(), m);
    if (it == levels_.end() || *it != m) return levels_.size();
    return static_cast<std::size_t>(it - levels_.begin());
  }

  double residual_pdf(double r) const {
    double s = 0;
    for (std::size_t k = 0; k < resid_.size(); ++k) {
      double t = (r - resid_[k]) / bw_;
      s += resid_w_[k] * std::exp(-0.5 * t * t);
    }
    return s / (bw_ * std::sqrt(2.0 * std::numbers::pi));
  }

  template <class Row>
  double pdf_continuous(double m, const Row& x) const {
    return residual_pdf(m - location(x));
  }

  bool discrete_ = true;
  bool strata_discrete_ = true;
  bool corrupt_ = false;
  std::vector<double> levels_;
  std::map<StratumKey, std::vector<double>> table_;
  std::vector<Classifier> ovr_;
  Regressor mean_;
  std::vector<double> resid_, resid_w_, grid_, grid_w_;
  double bw_ = 1.0;
};

inline ConditionalDensity fit_conditional_density(const FusedDataset& d, int a, Domain g, DensitySupport support,
                                                  const NuisanceConfig& cfg) {
  return ConditionalDensity::fit(d, a, g, support, cfg);
}

// Fold labels stratified by (g, a): each cell is shuffled with its own stream
// and dealt round-robin.
inline std::vector<int> assign_folds(const FusedDataset& d, int k, std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::FoldTooSmall, "cross-fitting needs at least 2 folds");
  std::vector<int> fold(static_cast<std::size_t>(d.size()), 0);
  for (int gi = 0; gi < 2; ++gi)
    for (int ai = 0; ai < 2; ++ai) {
      View cell = split(d, static_cast<Domain>(gi), ai);
      if (cell.size() < 2 * k)
        fail(ErrorCode::FoldTooSmall, "cell g=" + std::string(gi ? "O" : "E") + ", a=" + std::to_string(ai) + " has " +
                                          std::to_string(cell.size()) + " rows for " + std::to_string(k) + " folds");
      auto rows = cell.rows;
      auto rng = Rng::stream(seed, 0xC0FFEEu + static_cast<std::uint64_t>(2 * gi + ai));
      rng.shuffle(rows.begin(), rows.end());
      for (std::size_t r = 0; r < rows.size(); ++r) fold[static_cast<std::size_t>(rows[r])] = static_cast<int>(r % static_cast<std::size_t>(k));
    }
  return fold;
}

// Out-of-fold routing: fit(train) returns a model, eval(model, i) fills row i.
// folds < 2 fits once on the full sample.
template <class Fit, class Eval>
void cross_fit(const FusedDataset& d, int folds, std::uint64_t seed, Fit&& fit, Eval&& eval) {
  if (folds < 2) {
    auto model = fit(d);
    for (Index i = 0; i < d.size(); ++i) eval(model, i);
    return;
  }
  auto fold = assign_folds(d, folds, seed);
  for (int k = 0; k < folds; ++k) {
    std::vector<Index> train, test;
    for (Index i = 0; i < d.size(); ++i) (fold[static_cast<std::size_t>(i)] == k ? test : train).push_back(i);
    auto model = fit(subset(d, train));
    for (Index i : test) eval(model, i);
  }
}

// Every nuisance a strategy may demand, keyed as in the estimating equations.
struct NuisanceSet {
  std::map<std::tuple<Target, int, Domain>, ConditionalMean> means;
  std::optional<PropensityScore> pi_e, pi_o, domain;

  const ConditionalMean& mean(Target t, int a, Domain g) const {
    auto it = means.find({t, a, g});
    if (it == means.end()) fail(ErrorCode::MissingNuisance, "conditional mean not fitted");
    return it->second;
  }
  const PropensityScore& need(const std::optional<PropensityScore>& p, const char* what) const {
    if (!p) fail(ErrorCode::MissingNuisance, what);
    return *p;
  }
};

// The six regressions/propensities of the equi-confounding family.
inline NuisanceSet fit_equiconf_nuisances(const FusedDataset& d, const NuisanceConfig& cfg) {
  NuisanceSet s;
  for (int a = 0; a < 2; ++a) {
    s.means[{Target::M, a, kE}] = fit_conditional_mean(d, Target::M, a, kE, cfg);
    s.means[{Target::M, a, kO}] = fit_conditional_mean(d, Target::M, a, kO, cfg);
    s.means[{Target::Y, a, kO}] = fit_conditional_mean(d, Target::Y, a, kO, cfg);
  }
  s.pi_e = fit_propensity(d, PropensityKind::TreatmentInE, cfg);
  s.pi_o = fit_propensity(d, PropensityKind::TreatmentInO, cfg);
  s.domain = fit_propensity(d, PropensityKind::Domain, cfg);
  return s;
}


inline Vec eval_rows(const ConditionalMean& f, const FusedDataset& d) {
  Vec v(d.size());
  for (Index i = 0; i < d.size(); ++i) v[i] = f.predict_row(d, i);
  return v;
}

inline Vec eval_rows(const PropensityScore& p, const FusedDataset& d) {
  Vec v(d.size());
  for (Index i = 0; i < d.size(); ++i) v[i] = p.predict_row(d, i);
  return v;
}

// Rows whose fitted probability sits on a clipping bound.
inline Index count_trimmed(const Vec& p, double trim) {
  Index k = 0;
  for (Index i = 0; i < p.size(); ++i)
    if (p[i] <= trim || p[i] >= 1.0 - trim) ++k;
  return k;
}

inline double require_positive(double p, double floor, const std::string& what) {
  if (!(p >= floor)) fail(ErrorCode::PositivityViolation, what + " = " + std::to_string(p) + " is below " + std::to_string(floor));
  return p;
}

// The six equi-confounding nuisances evaluated at every row: arm-specific
// means of M in E and O and of Y in O, the treatment propensities in E and O,
// and the domain score P(G=E | x).
struct EquiconfEvals {
  std::array<Vec, 2> m_e, m_o, y_o;
  Vec pi_e, pi_o, p_e;
};

inline EquiconfEvals evaluate_equiconf(const FusedDataset& d, const NuisanceConfig& cfg, int folds) {
  EquiconfEvals ev;
  Index n = d.size();
  for (int a = 0; a < 2; ++a) ev.m_e[static_cast<std::size_t>(a)].resize(n), ev.m_o[static_cast<std::size_t>(a)].resize(n), ev.y_o[static_cast<std::size_t>(a)].resize(n);
  ev.pi_e.resize(n), ev.pi_o.resize(n), ev.p_e.resize(n);
  cross_fit(
      d, folds, cfg.seed, [&](const FusedDataset& train) { return fit_equiconf_nuisances(train, cfg); },
      [&](const NuisanceSet& s, Index i) {
        auto x = d.x.row(i);
        for (int a = 0; a < 2; ++a) {
          auto k = static_cast<std::size_t>(a);
          ev.m_e[k][i] = s.mean(Target::M, a, kE).predict(x);
          ev.m_o[k][i] = s.mean(Target::M, a, kO).predict(x);
          ev.y_o[k][i] = s.mean(Target::Y, a, kO).predict(x);
        }
        ev.pi_e[i] = s.pi_e->predict(x);
        ev.pi_o[i] = s.pi_o->predict(x);
        ev.p_e[i] = s.domain->predict(x);
      });
  return ev;
}

}  // namespace fusioncausal
