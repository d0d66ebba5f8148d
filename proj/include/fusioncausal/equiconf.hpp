#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "data.hpp"
#include "estimand.hpp"
#include "nuisance.hpp"
#include "report.hpp"

namespace fusioncausal {

// E[M^(a) | X=x, A=1-a, G=O] from E[M | x, A=a, E], E[M | x, A=a, O] and P(A=a | x, O):
// the experimental mean mixes both observational arms, so the unseen arm is
// recovered by removing the seen one.
inline double cf_mean_m_conditional(double mean_e, double mean_o, double p_same, double floor = 1e-6) {
  double p_other = require_positive(1.0 - p_same, floor, "P(A=1-a | X, G=O)");
  return (mean_e - mean_o * p_same) / p_other;
}

inline double cf_mean_m_conditional(const NuisanceSet& s, int a, const Eigen::Ref<const Eigen::RowVectorXd>& x, double floor = 1e-6) {
  double p1 = s.need(s.pi_o, "observational propensity").predict(x);
  double p_same = a == 1 ? p1 : 1.0 - p1;
  return cf_mean_m_conditional(s.mean(Target::M, a, kE).predict(x), s.mean(Target::M, a, kO).predict(x), p_same, floor);
}

namespace detail {

struct ObsMoments {
  double y[2], m[2], p[2];  // arm means of Y and M among O rows, and P(A=a | O)
};

inline ObsMoments obs_moments(const FusedDataset& d) {
  ObsMoments r{};
  double wy[2] = {0, 0}, wm[2] = {0, 0}, w[2] = {0, 0};
  for (Index i = 0; i < d.size(); ++i) {
    if (!d.is_o(i)) continue;
    int a = d.arm(i);
    w[a] += d.w[i];
    wy[a] += d.w[i] * d.y[i];
    wm[a] += d.w[i] * d.m[i];
  }
  for (int a = 0; a < 2; ++a) {
    if (w[a] <= 0) fail(ErrorCode::EmptyCell, "observational arm " + std::to_string(a) + " is empty");
    r.y[a] = wy[a] / w[a];
    r.m[a] = wm[a] / w[a];
    r.p[a] = w[a] / (w[0] + w[1]);
  }
  return r;
}

template <class F>
double mean_over(const FusedDataset& d, bool treated_only, F f) {
  double s = 0, w = 0;
  for (Index i = 0; i < d.size(); ++i) {
    if (!d.is_o(i) || (treated_only && d.arm(i) != 1)) continue;
    s += d.w[i] * f(i);
    w += d.w[i];
  }
  return s / w;
}

inline EstimateReport start_report(const FusedDataset& d, const std::string& strategy, Estimand e) {
  EstimateReport r;
  r.strategy = strategy;
  r.estimand = to_string(e);
  fill_cell_counts(r, d);
  return r;
}

inline Vec mean_rows(const FusedDataset& d, Target t, int a, Domain g, const NuisanceConfig& cfg) {
  return eval_rows(fit_conditional_mean(d, t, a, g, cfg), d);
}

}  // namespace detail

// Marginal additive equi-confounding: E[Y^(0) | A=1, O] is the observed
// control mean shifted by the M-confounding gap, with E[M^(0) | A=1, O]
// recovered from the experimental control regression averaged over O.
inline EstimateReport ett_equiconf_marginal(const FusedDataset& data, const NuisanceConfig& cfg) {
  auto d = canonical(data);
  auto r = detail::start_report(d, "equiconf-marg-ett", Estimand::Ett);
  auto mo = detail::obs_moments(d);
  require_positive(mo.p[1], cfg.trim, "P(A=1 | G=O)");
  Vec me0 = detail::mean_rows(d, Target::M, 0, kE, cfg);
  double em0 = detail::mean_over(d, false, [&](Index i) { return me0[i]; });
  double cf_m0 = (em0 - mo.m[0] * mo.p[0]) / mo.p[1];
  r.estimate = mo.y[1] - mo.y[0] - (cf_m0 - mo.m[0]);
  r.diag("cf_mean_m0_treated", cf_m0);
  return r;
}

inline EstimateReport ate_equiconf_marginal(const FusedDataset& data, const NuisanceConfig& cfg) {
  auto d = canonical(data);
  auto r = detail::start_report(d, "equiconf-marg-ate", Estimand::Ate);
  auto mo = detail::obs_moments(d);
  Vec me1 = detail::mean_rows(d, Target::M, 1, kE, cfg), me0 = detail::mean_rows(d, Target::M, 0, kE, cfg);
  double em1 = detail::mean_over(d, false, [&](Index i) { return me1[i]; });
  double em0 = detail::mean_over(d, false, [&](Index i) { return me0[i]; });
  double theta1 = mo.y[1] + em1 - mo.m[1], theta0 = mo.y[0] + em0 - mo.m[0];
  r.estimate = theta1 - theta0;
  r.diag("theta1", theta1);
  r.diag("theta0", theta0);
  return r;
}

inline EstimateReport ett_equiconf_conditional(const FusedDataset& data, const NuisanceConfig& cfg) {
  auto d = canonical(data);
  auto r = detail::start_report(d, "equiconf-cond-ett", Estimand::Ett);
  auto mo = detail::obs_moments(d);
  require_positive(mo.p[1], cfg.trim, "P(A=1 | G=O)");
  Vec me0 = detail::mean_rows(d, Target::M, 0, kE, cfg), mo0 = detail::mean_rows(d, Target::M, 0, kO, cfg),
      yo0 = detail::mean_rows(d, Target::Y, 0, kO, cfg);
  Vec pi = eval_rows(fit_propensity(d, PropensityKind::TreatmentInO, cfg), d);
  double cf0 = detail::mean_over(d, true, [&](Index i) { return yo0[i] + cf_mean_m_conditional(me0[i], mo0[i], 1.0 - pi[i]) - mo0[i]; });
  r.estimate = mo.y[1] - cf0;
  r.diag("trimmed_rows", static_cast<double>(count_trimmed(pi, cfg.trim)));
  return r;
}

inline EstimateReport ate_equiconf_conditional(const FusedDataset& data, const NuisanceConfig& cfg) {
  auto d = canonical(data);
  auto r = detail::start_report(d, "equiconf-cond-ate", Estimand::Ate);
  std::array<Vec, 2> me, mo, yo;
  for (int a = 0; a < 2; ++a) {
    auto k = static_cast<std::size_t>(a);
    me[k] = detail::mean_rows(d, Target::M, a, kE, cfg);
    mo[k] = detail::mean_rows(d, Target::M, a, kO, cfg);
    yo[k] = detail::mean_rows(d, Target::Y, a, kO, cfg);
  }
  r.estimate = detail::mean_over(d, false, [&](Index i) { return yo[1][i] - yo[0][i] + me[1][i] - me[0][i] + mo[0][i] - mo[1][i]; });
  return r;
}

// Quantile-quantile equi-confounding.

struct QqNuisances {
  ConditionalCdf y_o0, m_o0, m_e0;  // control-arm CDFs: Y and M in O, M in E
  PropensityScore pi_o;
  CdfRule rule = CdfRule::Midpoint;
};

inline QqNuisances fit_qq(const FusedDataset& d, const NuisanceConfig& cfg, CdfRule rule = CdfRule::Midpoint) {
  QqNuisances q;
  q.rule = rule;
  q.y_o0 = ConditionalCdf::fit(d, Target::Y, 0, kO, rule);
  q.m_o0 = ConditionalCdf::fit(d, Target::M, 0, kO, rule);
  q.m_e0 = ConditionalCdf::fit(d, Target::M, 0, kE, rule);
  q.pi_o = fit_propensity(d, PropensityKind::TreatmentInO, cfg);
  return q;
}

namespace detail {

struct QqStratum {
  EmpiricalCdf y_o0, m_o0, m_e0;
  double p1;
};

inline QqStratum qq_stratum(const QqNuisances& q, const StratumKey& x, double floor) {
  Eigen::Map<const Eigen::RowVectorXd> xr(x.data(), static_cast<Index>(x.size()));
  return {q.y_o0.at(x), q.m_o0.at(x), q.m_e0.at(x), require_positive(q.pi_o.predict(xr), floor, "P(A=1 | X, G=O)")};
}

inline double qq_unclamped(const QqStratum& s, double y) {
  double t = s.y_o0.cdf(y);
  if (t <= 0) return 0.0;
  if (t >= 1) return 1.0;
  return (s.m_e0.cdf(s.m_o0.quantile(t)) - (1.0 - s.p1) * t) / s.p1;
}

}  // namespace detail

// F_{Y^(0) | A=1, X=x, G=O}(y), clamped to [0, 1].
inline double qq_counterfactual_cdf(const QqNuisances& q, double y, const StratumKey& x, double floor = 1e-6) {
  return std::clamp(detail::qq_unclamped(detail::qq_stratum(q, x, floor), y), 0.0, 1.0);
}

// q_W(v | x) = F_{W | A=0, x} o F^{-1}_{W | A=1, x} for two arm-specific CDFs of W.
inline double qq_association(const ConditionalCdf& arm0, const ConditionalCdf& arm1, double v, const StratumKey& x) {
  return arm0.at(x).cdf(arm1.at(x).quantile(v));
}

struct QqIntegral {
  double mean = 0;
  Index monotonized = 0;  // grid points raised by the running maximum
};

// Mean of the debiased counterfactual law in stratum x: the CDF is evaluated
// on the observational control Y support, clamped and made monotone by running
// maximum. Step rule: exact mean of the resulting step law. Midpoint rule:
// inverted on a 201-point v-grid in [0.0025, 0.9975] and averaged with the
// trapezoid rule.
inline QqIntegral qq_counterfactual_mean(const QqNuisances& q, const StratumKey& x, double floor = 1e-6) {
  auto s = detail::qq_stratum(q, x, floor);
  const auto& ys = s.y_o0.support();
  std::vector<double> G(ys.size());
  QqIntegral out;
  double run = 0;
  for (std::size_t k = 0; k < ys.size(); ++k) {
    double v = std::clamp(detail::qq_unclamped(s, ys[k]), 0.0, 1.0);
    if (v < run) ++out.monotonized;
    run = std::max(run, v);
    G[k] = run;
  }
  if (q.rule == CdfRule::Step) {
    // Exact mean of the step law; mass above the last atom is left on it.
    double prev = 0, acc = 0;
    for (std::size_t k = 0; k < ys.size(); ++k) {
      double g = k + 1 == ys.size() ? 1.0 : G[k];
      acc += ys[k] * (g - prev);
      prev = g;
    }
    out.mean = acc;
    return out;
  }
  auto inverse = [&](double v) {
    auto it = std::lower_bound(G.begin(), G.end(), v);
    if (it == G.end()) return ys.back();
    auto k = static_cast<std::size_t>(it - G.begin());
    if (q.rule == CdfRule::Step || k == 0 || G[k] == G[k - 1]) return ys[k];
    double t = (v - G[k - 1]) / (G[k] - G[k - 1]);
    return ys[k - 1] + t * (ys[k] - ys[k - 1]);
  };
  const int nodes = 201;
  const double lo = 0.0025, hi = 0.9975, h = (hi - lo) / (nodes - 1);
  double acc = 0;
  for (int j = 0; j < nodes; ++j) {
    double wgt = (j == 0 || j == nodes - 1) ? 0.5 : 1.0;
    acc += wgt * inverse(lo + h * j);
  }
  out.mean = acc * h / (hi - lo);
  return out;
}

inline EstimateReport ett_equiconf_qq(const FusedDataset& data, const NuisanceConfig& cfg, CdfRule rule = CdfRule::Midpoint) {
  auto d = canonical(data);
  auto r = detail::start_report(d, "equiconf-qq-ett", Estimand::Ett);
  auto mo = detail::obs_moments(d);
  auto q = fit_qq(d, cfg, rule);
  // Treated observational rows grouped by stratum; continuous X uses at most 200 strided rows.
  std::map<StratumKey, double> weight;
  std::vector<Index> treated;
  for (Index i = 0; i < d.size(); ++i)
    if (d.is_o(i) && d.arm(i) == 1) treated.push_back(i);
  if (q.y_o0.discrete()) {
    for (Index i : treated) weight[stratum_key(d, i)] += d.w[i];
  } else {
    std::size_t step = std::max<std::size_t>(1, treated.size() / 200);
    for (std::size_t k = 0; k < treated.size(); k += step) weight[stratum_key(d, treated[k])] += d.w[treated[k]];
  }
  double total = 0, cf = 0;
  Index monotonized = 0;
  for (const auto& [x, w] : weight) {
    auto m = qq_counterfactual_mean(q, x, cfg.trim);
    cf += w * m.mean;
    total += w;
    monotonized += m.monotonized;
  }
  r.estimate = mo.y[1] - cf / total;
  r.diag("strata", static_cast<double>(weight.size()));
  r.diag("monotonized_points", static_cast<double>(monotonized));
  if (monotonized > 0) r.warnings.push_back("debiased counterfactual CDF was monotonized by running maximum");
  return r;
}

}  // namespace fusioncausal
