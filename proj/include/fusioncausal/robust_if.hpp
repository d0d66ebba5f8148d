#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "equiconf.hpp"
#include "proximal.hpp"
#include "simgen.hpp"

namespace fusioncausal {

// One-step ETT under conditional equi-confounding, from nuisances evaluated at every row.
inline IfSummary if_ett_from_evals(const FusedDataset& d, const EquiconfEvals& ev) {
  double p1o = empirical_prob(all_rows(d), [](Domain g, int a) { return g == kO && a == 1; });
  Index n = d.size();
  Vec u(n), c(n);
  for (Index i = 0; i < n; ++i) {
    double A = d.arm(i), v;
    if (d.is_o(i)) {
      double po = ev.pi_o[i], mo = ev.m_o[0][i], yo = ev.y_o[0][i];
      v = (1 - A) / (1 - po) * (d.m[i] - mo) - (1 - A) * po / (1 - po) * (d.y[i] - yo) + mo - ev.m_e[0][i] + A * (d.y[i] - yo);
    } else {
      v = -(1 - A) / (1 - ev.pi_e[i]) * (1 / ev.p_e[i] - 1) * (d.m[i] - ev.m_e[0][i]);
    }
    u[i] = v / p1o;
  }
  double est = u.dot(d.w) / d.w.sum();
  for (Index i = 0; i < n; ++i) c[i] = u[i] - (d.is_o(i) && d.arm(i) == 1 ? est / p1o : 0.0);
  return summarize_if(u, c, d.w);
}

// One-step ATE under conditional equi-confounding.
inline IfSummary if_ate_from_evals(const FusedDataset& d, const EquiconfEvals& ev) {
  double p_o = empirical_prob(all_rows(d), [](Domain g, int) { return g == kO; });
  Index n = d.size();
  Vec u(n), c(n);
  for (Index i = 0; i < n; ++i) {
    int a = d.arm(i);
    auto k = static_cast<std::size_t>(a);
    double sgn = a ? 1.0 : -1.0;
    if (d.is_o(i)) {
      double pa = a ? ev.pi_o[i] : 1 - ev.pi_o[i];
      double plug = ev.y_o[1][i] - ev.y_o[0][i] + ev.m_e[1][i] - ev.m_e[0][i] + ev.m_o[0][i] - ev.m_o[1][i];
      u[i] = (sgn / pa * (d.y[i] - ev.y_o[k][i] - d.m[i] + ev.m_o[k][i]) + plug) / p_o;
    } else {
      double pa = a ? ev.pi_e[i] : 1 - ev.pi_e[i];
      u[i] = sgn / pa / p_o * (d.m[i] - ev.m_e[k][i]) * (1 / ev.p_e[i] - 1);
    }
  }
  double est = u.dot(d.w) / d.w.sum();
  for (Index i = 0; i < n; ++i) c[i] = u[i] - (d.is_o(i) ? est / p_o : 0.0);
  return summarize_if(u, c, d.w);
}

namespace detail {

inline EstimateReport finish_if(EstimateReport r, const IfSummary& s, int folds) {
  r.estimate = s.estimate;
  r.se = s.se;
  r.contributions = s.contributions;
  r.diag("folds", static_cast<double>(folds));
  r.diag("if.centered_mean", s.centered_mean);
  return r;
}

inline void diag_trims(EstimateReport& r, const EquiconfEvals& ev, double trim) {
  r.diag("trimmed.pi_e", static_cast<double>(count_trimmed(ev.pi_e, trim)));
  r.diag("trimmed.pi_o", static_cast<double>(count_trimmed(ev.pi_o, trim)));
  r.diag("trimmed.p_e", static_cast<double>(count_trimmed(ev.p_e, trim)));
}

}  // namespace detail

inline EstimateReport if_ett_equiconf(const FusedDataset& data, const NuisanceConfig& cfg) {
  auto d = canonical(data);
  auto r = detail::start_report(d, "if-ett", Estimand::Ett);
  require_positive(detail::obs_moments(d).p[1], cfg.trim, "P(A=1 | G=O)");
  int folds = cfg.folds(true);
  auto ev = evaluate_equiconf(d, cfg, folds);
  detail::diag_trims(r, ev, cfg.trim);
  return detail::finish_if(std::move(r), if_ett_from_evals(d, ev), folds);
}

inline EstimateReport if_ate_equiconf(const FusedDataset& data, const NuisanceConfig& cfg) {
  auto d = canonical(data);
  auto r = detail::start_report(d, "if-ate", Estimand::Ate);
  int folds = cfg.folds(true);
  auto ev = evaluate_equiconf(d, cfg, folds);
  detail::diag_trims(r, ev, cfg.trim);
  return detail::finish_if(std::move(r), if_ate_from_evals(d, ev), folds);
}

// Proximal one-step estimator for E[Y^(a) | O] alone.
inline EstimateReport if_proximal(const FusedDataset& data, int a, const NuisanceConfig& cfg, const ProximalConfig& pc = {}) {
  auto d = canonical(data);
  auto r = detail::start_report(d, "if-proximal-theta" + std::to_string(a), Estimand::Ate);
  int folds = cfg.folds(true);
  auto ev = evaluate_proximal(d, cfg, pc, folds);
  Vec u = proximal_terms(d, ev, ProximalStrategy::S4, a);
  double p_o = empirical_prob(all_rows(d), [](Domain g, int) { return g == kO; });
  double est = u.dot(d.w) / d.w.sum();
  Vec c(d.size());
  for (Index i = 0; i < d.size(); ++i) c[i] = u[i] - (d.is_o(i) ? est / p_o : 0.0);
  r.estimand = "theta" + std::to_string(a);
  return detail::finish_if(std::move(r), summarize_if(u, c, d.w), folds);
}

// Deliberate misspecification used by the robustness audit.
namespace corrupt {

inline Vec regression(const Vec& f) { return (0.5 * f.array() + 1.0).matrix(); }

inline Vec propensity(const Vec& p) {
  Vec out(p.size());
  for (Index i = 0; i < p.size(); ++i) out[i] = expit(std::log(p[i] / (1 - p[i])) + 1.0);
  return out;
}

}  // namespace corrupt

enum class AuditFamily { Equiconf, Proximal };

// Nuisance labels per family, in the order used by the set masks below.
inline std::vector<std::string> audit_nuisances(AuditFamily f) {
  if (f == AuditFamily::Equiconf) return {"mu_e_m", "mu_o_m", "mu_o_y", "pi_e", "pi_o", "p_e"};
  return {"h", "p_m_e", "q", "pi_e", "p_e"};
}

struct AuditSet {
  std::string name;
  std::vector<std::string> correct;  // everything else is corrupted
  bool expect_pass = true;
};

inline std::vector<AuditSet> audit_sets(AuditFamily f) {
  if (f == AuditFamily::Equiconf)
    return {{"control", audit_nuisances(f), true},
            {"mu-triple", {"mu_e_m", "mu_o_m", "mu_o_y"}, true},
            {"pi-triple", {"pi_e", "pi_o", "p_e"}, true},
            {"mu_e_m+pi_o", {"mu_e_m", "pi_o"}, true},
            {"pi_e+mu_o+p_e", {"pi_e", "mu_o_m", "mu_o_y", "p_e"}, true},
            {"all-corrupt", {}, false}};
  return {{"control", audit_nuisances(f), true},
          {"h+p_m_e", {"h", "p_m_e"}, true},
          {"h+pi_e+p_e", {"h", "pi_e", "p_e"}, true},
          {"q+pi_e+p_e", {"q", "pi_e", "p_e"}, true},
          {"all-corrupt", {}, false}};
}

namespace detail {

inline bool has(const std::vector<std::string>& v, const std::string& s) { return std::find(v.begin(), v.end(), s) != v.end(); }

inline EquiconfEvals apply_set(EquiconfEvals ev, const AuditSet& s) {
  for (std::size_t k = 0; k < 2; ++k) {
    if (!has(s.correct, "mu_e_m")) ev.m_e[k] = corrupt::regression(ev.m_e[k]);
    if (!has(s.correct, "mu_o_m")) ev.m_o[k] = corrupt::regression(ev.m_o[k]);
    if (!has(s.correct, "mu_o_y")) ev.y_o[k] = corrupt::regression(ev.y_o[k]);
  }
  if (!has(s.correct, "pi_e")) ev.pi_e = corrupt::propensity(ev.pi_e);
  if (!has(s.correct, "pi_o")) ev.pi_o = corrupt::propensity(ev.pi_o);
  if (!has(s.correct, "p_e")) ev.p_e = corrupt::propensity(ev.p_e);
  return ev;
}

// eta is the experimental mean of h over the law of M: corrupting h moves it
// consistently, and corrupting the law of M moves it again.
inline ProximalEvals apply_set(ProximalEvals ev, const AuditSet& s) {
  for (std::size_t k = 0; k < 2; ++k) {
    if (!has(s.correct, "h")) {
      ev.h[k] = corrupt::regression(ev.h[k]);
      ev.eta[k] = corrupt::regression(ev.eta[k]);
    }
    if (!has(s.correct, "p_m_e")) ev.eta[k] = corrupt::regression(ev.eta[k]);
    if (!has(s.correct, "q")) ev.q[k] = corrupt::regression(ev.q[k]);
  }
  if (!has(s.correct, "pi_e")) ev.pi_e = corrupt::propensity(ev.pi_e);
  if (!has(s.correct, "p_e")) ev.p_e = corrupt::propensity(ev.p_e);
  return ev;
}

}  // namespace detail

struct AuditRow {
  AuditSet set;
  double estimate = 0, bias = 0, mc_se = 0;
  bool pass = false;
};

struct RobustnessAuditReport {
  std::string family, estimand, dgp;
  Index n = 0;
  int reps = 0;
  std::uint64_t seed = 0;
  double truth = 0;
  std::vector<AuditRow> rows;
};

struct AuditSpec {
  AuditFamily family = AuditFamily::Equiconf;
  Estimand estimand = Estimand::Ett;
  DgpSpec dgp;
  int reps = 200;
};

// Replication seeds are derived from the base seed; each replication fits the
// nuisances once (cross-fitted) and evaluates every set from the same fit.
inline RobustnessAuditReport audit_multiple_robustness(const AuditSpec& spec, const NuisanceConfig& cfg, const ProximalConfig& pc = {}) {
  if (spec.reps < 2) fail(ErrorCode::InvalidSpec, "audit needs at least 2 replications");
  RobustnessAuditReport rep;
  rep.family = spec.family == AuditFamily::Equiconf ? "equiconf" : "proximal";
  rep.estimand = to_string(spec.estimand);
  rep.dgp = to_string(spec.dgp.tag);
  rep.n = spec.dgp.n;
  rep.reps = spec.reps;
  rep.seed = spec.dgp.seed;
  auto truth = ground_truth(spec.dgp, TruthMethod::ClosedForm);
  rep.truth = spec.estimand == Estimand::Ate ? truth.ate : truth.ett;
  auto sets = audit_sets(spec.family);
  std::vector<std::vector<double>> est(sets.size());
  for (int r = 0; r < spec.reps; ++r) {
    DgpSpec s = spec.dgp;
    s.seed = splitmix64(spec.dgp.seed + static_cast<std::uint64_t>(r) * 0x9E3779B97F4A7C15ULL);
    auto d = canonical(generate(s));
    NuisanceConfig c = cfg;
    c.seed = s.seed;
    int folds = c.folds(true);
    if (spec.family == AuditFamily::Equiconf) {
      auto ev = evaluate_equiconf(d, c, folds);
      for (std::size_t k = 0; k < sets.size(); ++k) {
        auto e = detail::apply_set(ev, sets[k]);
        est[k].push_back(spec.estimand == Estimand::Ett ? if_ett_from_evals(d, e).estimate : if_ate_from_evals(d, e).estimate);
      }
    } else {
      auto ev = evaluate_proximal(d, c, pc, folds);
      for (std::size_t k = 0; k < sets.size(); ++k) {
        auto e = detail::apply_set(ev, sets[k]);
        std::array<Vec, 2> terms{proximal_terms(d, e, ProximalStrategy::S4, 0), proximal_terms(d, e, ProximalStrategy::S4, 1)};
        est[k].push_back(assemble_proximal(d, terms, spec.estimand).estimate);
      }
    }
  }
  for (std::size_t k = 0; k < sets.size(); ++k) {
    Vec v = Eigen::Map<const Vec>(est[k].data(), static_cast<Index>(est[k].size()));
    auto ms = mean_se(v, Vec::Ones(v.size()));
    double sd_unbiased_se = ms.se * std::sqrt(static_cast<double>(v.size()) / static_cast<double>(v.size() - 1));
    AuditRow row{sets[k], ms.mean, ms.mean - rep.truth, sd_unbiased_se, false};
    row.pass = std::abs(row.bias) <= 2.0 * row.mc_se;
    rep.rows.push_back(row);
  }
  return rep;
}

inline std::string serialize(const RobustnessAuditReport& r) {
  std::string out = "audit family=" + r.family + " estimand=" + r.estimand + " dgp=" + r.dgp + " n=" + std::to_string(r.n) +
                    " reps=" + std::to_string(r.reps) + " seed=" + std::to_string(r.seed) + " truth=" + fmt(r.truth) + "\n";
  for (const auto& row : r.rows) {
    std::string corrupted;
    for (const auto& name : audit_nuisances(r.family == "equiconf" ? AuditFamily::Equiconf : AuditFamily::Proximal))
      if (!detail::has(row.set.correct, name)) corrupted += (corrupted.empty() ? "" : ",") + name;
    out += "row set=" + row.set.name + " corrupted=" + (corrupted.empty() ? "none" : corrupted) + " estimate=" + fmt(row.estimate) +
           " bias=" + fmt(row.bias) + " mc_se=" + fmt(row.mc_se) + " verdict=" + (row.pass ? "PASS" : "FAIL") + "\n";
  }
  return out;
}

}  // namespace fusioncausal
