#pragma once

#include <array>
#include <cmath>
#include <string>

#include "equiconf.hpp"

namespace fusioncausal {

struct ProximalConfig {
  double lambda_h = -1.0;  // < 0: 1/n for the linear basis, n^{-1/2} for the kernel basis
  double lambda_q = -1.0;  // < 0: as lambda_h
  double lambda_f = -1.0;  // < 0: n^{-1/2}
  double max_condition = 1e12;
  double kernel_bandwidth = -1.0;  // < 0: inherit the nuisance setting
  int landmarks = -1;              // < 0: inherit the nuisance setting

  FeatureConfig features(const NuisanceConfig& cfg) const {
    FeatureConfig f = cfg.features();
    if (kernel_bandwidth >= 0) f.bandwidth = kernel_bandwidth;
    if (landmarks > 0) f.landmarks = landmarks;
    return f;
  }
};

// Function v(primary, x) on a feature basis. Linear family: [1, v, x, v*x].
// Kernel family: Nystrom RBF features of the standardized (v, x).
class BridgeFunction {
 public:
  BridgeFunction() = default;

  static Vec raw_input(double v, const Eigen::Ref<const Eigen::RowVectorXd>& x, Family f) {
    if (f == Family::Linear) return PropensityScore::zx_input(v, x);
    Vec u(x.size() + 1);
    u[0] = v;
    u.tail(x.size()) = x.transpose();
    return u;
  }

  double operator()(double v, const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    return map_.dot(raw_input(v, x, map_.family()), beta_);
  }

  const Vec& coefficients() const { return beta_; }
  double condition() const { return condition_; }
  double moment_residual() const { return residual_; }
  bool fitted() const { return fitted_; }

  FeatureMap map_;
  Vec beta_;
  double condition_ = 0, residual_ = 0;
  bool fitted_ = false;
};

namespace detail {

inline Mat raw_inputs(const FusedDataset& d, const std::vector<Index>& rows, const Vec& lead, Family f) {
  Mat R(static_cast<Index>(rows.size()), f == Family::Linear ? 2 * d.dim() + 1 : d.dim() + 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Index i = rows[r];
    double v = std::isnan(lead[i]) ? 0.0 : lead[i];
    R.row(static_cast<Index>(r)) = BridgeFunction::raw_input(v, d.x.row(i), f).transpose();
  }
  return R;
}

// Penalty scale per feature column: 0 on the intercept, the column variance
// for the linear basis (ridge on standardized coefficients), 1 for whitened kernel features.
inline Vec penalty_scale(const Mat& F, const Vec& w, Family f, bool include_intercept) {
  Vec s = Vec::Ones(F.cols());
  double ws = w.sum();
  if (f == Family::Linear)
    for (Index j = 0; j < F.cols(); ++j) {
      double mu = F.col(j).dot(w) / ws;
      s[j] = ((F.col(j).array() - mu).square() * w.array()).sum() / ws;
    }
  s[0] = include_intercept ? 1.0 : 0.0;
  return s;
}

inline double condition_number(const Mat& A) {
  Eigen::JacobiSVD<Mat> svd(A);
  const auto& sv = svd.singularValues();
  double lo = sv[sv.size() - 1];
  return lo > 0 ? sv[0] / lo : HUGE_VAL;
}

// argmin_b sup_f  mean[(s_i phi_i'b - t_i) f_i - f_i^2] - lam_f |f|^2 + lam_h |b|^2 over
// f = psi' g. The inner supremum is (1/4) r' C^{-1} r with r = B b - c and
// C = mean[psi psi'] + lam_f D_f, so b = (B' C^{-1} B + 4 lam_h D_h)^{-1} B' C^{-1} c.
inline void solve_minimax(BridgeFunction& out, const Mat& Phi, const Mat& Psi, const Vec& s, const Vec& t, const Vec& w, double lam_h,
                          double lam_f, Family fam, double max_cond, const char* what) {
  double ws = w.sum();
  Vec sw = (s.array() * w.array()).matrix();
  Mat B = Psi.transpose() * sw.asDiagonal() * Phi / ws;
  Vec c = Psi.transpose() * (t.array() * w.array()).matrix() / ws;
  Mat C = Psi.transpose() * w.asDiagonal() * Psi / ws;
  C.diagonal() += lam_f * penalty_scale(Psi, w, fam, true);
  double cond_c = condition_number(C);
  if (!(cond_c <= max_cond)) fail(ErrorCode::IllConditioned, std::string(what) + ": adversary Gram condition number " + fmt(cond_c));
  Eigen::LDLT<Mat> cl(C);
  Mat CB = cl.solve(B);
  Mat G = B.transpose() * CB;
  Vec dh = penalty_scale(Phi, sw, fam, false);
  G.diagonal() += 4.0 * lam_h * dh;
  double cond_g = condition_number(G);
  if (!(cond_g <= max_cond)) fail(ErrorCode::IllConditioned, std::string(what) + ": bridge system condition number " + fmt(cond_g));
  out.beta_ = G.fullPivLu().solve(CB.transpose() * c);
  out.condition_ = cond_g;
  out.residual_ = (B * out.beta_ - c).lpNorm<Eigen::Infinity>();
  out.fitted_ = true;
}

inline double default_lambda(double v, Index n, Family f = Family::Kernel) {
  if (v >= 0) return v;
  auto dn = static_cast<double>(n);
  return f == Family::Linear ? 1.0 / dn : 1.0 / std::sqrt(dn);
}

}  // namespace detail

// Outcome bridge for arm a: E[Y | Z, A=a, X, O] = E[h(M, X) | Z, A=a, X, O].
inline BridgeFunction solve_bridge_h(const FusedDataset& d, int a, const NuisanceConfig& cfg, const ProximalConfig& pc = {}) {
  if (d.z_role != ZRole::Proxy) fail(ErrorCode::NoProxy, "proxy column z (role proxy) is required");
  View o = split(d, kO, a);
  if (o.empty()) fail(ErrorCode::EmptyCell, "no observational rows with a=" + std::to_string(a));
  auto fam = cfg.family;
  Mat Rh = detail::raw_inputs(d, o.rows, d.m, fam), Rf = detail::raw_inputs(d, o.rows, d.z, fam);
  Vec w = weights(o);
  BridgeFunction h;
  FeatureConfig fc = pc.features(cfg);
  h.map_ = FeatureMap::build(Rh, w, fc);
  auto fmap = FeatureMap::build(Rf, w, fc);
  Vec ones = Vec::Ones(o.size());
  detail::solve_minimax(h, h.map_.design(Rh), fmap.design(Rf), ones, column(o, d.y), w, detail::default_lambda(pc.lambda_h, d.size(), fam),
                        detail::default_lambda(pc.lambda_f, d.size()), fam, pc.max_condition, "outcome bridge");
  return h;
}

// Treatment bridge for arm a, from the pooled moment
// E[ I(O) q(Z, a, X) / P(O | X) - I(E) / P(A=a, E | X) | M, A=a, X ] = 0.
inline BridgeFunction solve_bridge_q(const FusedDataset& d, int a, const PropensityScore& domain, const PropensityScore& pi_e,
                                     const NuisanceConfig& cfg, const ProximalConfig& pc = {}) {
  if (d.z_role != ZRole::Proxy) fail(ErrorCode::NoProxy, "proxy column z (role proxy) is required");
  View rows = split(d, std::nullopt, a);
  auto fam = cfg.family;
  Mat Rq = detail::raw_inputs(d, rows.rows, d.z, fam), Rf = detail::raw_inputs(d, rows.rows, d.m, fam);
  Vec w = weights(rows);
  Vec s(rows.size()), t(rows.size()), wo(rows.size());
  Index boundary = 0;
  for (Index r = 0; r < rows.size(); ++r) {
    Index i = rows[static_cast<std::size_t>(r)];
    auto x = d.x.row(i);
    double pe = domain.predict(x);
    if (pe <= domain.trim() || pe >= 1 - domain.trim()) ++boundary;
    double pa = a ? pi_e.predict(x) : 1 - pi_e.predict(x);
    s[r] = d.is_o(i) ? 1.0 / (1.0 - pe) : 0.0;
    t[r] = d.is_e(i) ? 1.0 / (pe * pa) : 0.0;
    wo[r] = d.is_o(i) ? w[r] : 0.0;
  }
  if (boundary > rows.size() / 20)
    fail(ErrorCode::PositivityViolation, "domain score at the trim boundary on " + std::to_string(boundary) + " rows");
  BridgeFunction q;
  FeatureConfig fc = pc.features(cfg);
  std::vector<Index> o_pos;
  for (Index r = 0; r < rows.size(); ++r)
    if (wo[r] > 0) o_pos.push_back(r);
  if (o_pos.empty()) fail(ErrorCode::EmptyCell, "no observational rows with a=" + std::to_string(a));
  q.map_ = FeatureMap::build(take_rows(Rq, o_pos), take(wo, o_pos), fc);
  auto fmap = FeatureMap::build(Rf, w, fc);
  detail::solve_minimax(q, q.map_.design(Rq), fmap.design(Rf), s, t, w, detail::default_lambda(pc.lambda_q, d.size(), fam),
                        detail::default_lambda(pc.lambda_f, d.size()), fam, pc.max_condition, "treatment bridge");
  return q;
}

// Bridges, eta(a, x) = E[h(M, a, X) | A=a, X=x, E] and the experimental-domain propensities.
struct ProximalNuisances {
  std::array<BridgeFunction, 2> h, q;
  std::array<Regressor, 2> eta;
  PropensityScore pi_e, domain;
};

inline ProximalNuisances fit_proximal_nuisances(const FusedDataset& d, const NuisanceConfig& cfg, const ProximalConfig& pc) {
  ProximalNuisances n;
  n.pi_e = fit_propensity(d, PropensityKind::TreatmentInE, cfg);
  n.domain = fit_propensity(d, PropensityKind::Domain, cfg);
  for (int a = 0; a < 2; ++a) {
    auto k = static_cast<std::size_t>(a);
    n.h[k] = solve_bridge_h(d, a, cfg, pc);
    n.q[k] = solve_bridge_q(d, a, n.domain, n.pi_e, cfg, pc);
    View e = split(d, kE, a);
    if (e.empty()) fail(ErrorCode::EmptyCell, "no experimental rows with a=" + std::to_string(a));
    Vec hv(e.size());
    for (Index r = 0; r < e.size(); ++r) {
      Index i = e[static_cast<std::size_t>(r)];
      hv[r] = n.h[k](d.m[i], d.x.row(i));
    }
    n.eta[k] = Regressor::fit(covariates(e), hv, weights(e), cfg.features(), cfg.ridge_lambda);
  }
  return n;
}

// Nuisances at every row for both arms: h at the observed M, q at the observed
// Z (0 where Z is absent), eta, P(A=1 | X, E) and P(E | X).
struct ProximalEvals {
  std::array<Vec, 2> h, q, eta;
  Vec pi_e, p_e;
};

inline ProximalEvals evaluate_proximal(const FusedDataset& d, const NuisanceConfig& cfg, const ProximalConfig& pc, int folds) {
  ProximalEvals ev;
  Index n = d.size();
  for (std::size_t k = 0; k < 2; ++k) ev.h[k].resize(n), ev.q[k].resize(n), ev.eta[k].resize(n);
  ev.pi_e.resize(n), ev.p_e.resize(n);
  cross_fit(
      d, folds, cfg.seed, [&](const FusedDataset& train) { return fit_proximal_nuisances(train, cfg, pc); },
      [&](const ProximalNuisances& s, Index i) {
        auto x = d.x.row(i);
        for (std::size_t k = 0; k < 2; ++k) {
          ev.h[k][i] = s.h[k](d.m[i], x);
          ev.q[k][i] = std::isnan(d.z[i]) ? 0.0 : s.q[k](d.z[i], x);
          ev.eta[k][i] = s.eta[k].predict(x);
        }
        ev.pi_e[i] = s.pi_e.predict(x);
        ev.p_e[i] = s.domain.predict(x);
      });
  return ev;
}

// Per-row terms of E[Y^(a) | O] for each strategy; the estimate is their weighted mean.
inline Vec proximal_terms(const FusedDataset& d, const ProximalEvals& ev, ProximalStrategy s, int a) {
  auto k = static_cast<std::size_t>(a);
  double p_o = empirical_prob(all_rows(d), [](Domain g, int) { return g == kO; });
  Vec out(d.size());
  for (Index i = 0; i < d.size(); ++i) {
    bool o = d.is_o(i), on = d.arm(i) == a;
    double pae = a ? ev.pi_e[i] : 1 - ev.pi_e[i];
    double odds = 1.0 / ev.p_e[i] - 1.0;
    double v = 0;
    switch (s) {
      case ProximalStrategy::S1:
        v = o ? ev.eta[k][i] : 0.0;
        break;
      case ProximalStrategy::S2:
        v = !o && on ? ev.h[k][i] / pae * odds : 0.0;
        break;
      case ProximalStrategy::S3:
        v = o && on ? d.y[i] * ev.q[k][i] : 0.0;
        break;
      case ProximalStrategy::S4:
        if (o)
          v = (on ? ev.q[k][i] * (d.y[i] - ev.h[k][i]) : 0.0) + ev.eta[k][i];
        else
          v = on ? (ev.h[k][i] - ev.eta[k][i]) / pae * odds : 0.0;
        break;
    }
    out[i] = v / p_o;
  }
  return out;
}

// ATE or ETT from the per-row terms of E[Y^(a) | O] (each with mean theta_a).
// ETT = (E[Y | O] - theta_0) / P(A=1 | O).
inline IfSummary assemble_proximal(const FusedDataset& d, const std::array<Vec, 2>& terms, Estimand e) {
  double p_o = empirical_prob(all_rows(d), [](Domain g, int) { return g == kO; });
  double sw = d.w.sum();
  Index n = d.size();
  Vec u(n), c(n);
  if (e == Estimand::Ate) {
    u = terms[1] - terms[0];
    double est = u.dot(d.w) / sw;
    for (Index i = 0; i < n; ++i) c[i] = u[i] - (d.is_o(i) ? est / p_o : 0.0);
  } else {
    double p1 = empirical_prob(split(d, kO), [](Domain, int a) { return a == 1; });
    for (Index i = 0; i < n; ++i) u[i] = ((d.is_o(i) ? d.y[i] / p_o : 0.0) - terms[0][i]) / p1;
    double est = u.dot(d.w) / sw;
    for (Index i = 0; i < n; ++i) c[i] = ((d.is_o(i) ? (d.y[i] - d.arm(i) * est) / p_o : 0.0) - terms[0][i]) / p1;
  }
  return summarize_if(u, c, d.w);
}

inline EstimateReport estimate_proximal(const FusedDataset& data, ProximalStrategy s, Estimand e, const NuisanceConfig& cfg,
                                        const ProximalConfig& pc = {}) {
  auto d = canonical(data);
  auto r = detail::start_report(d, std::string("proximal-") + to_string(s), e);
  if (e == Estimand::Ett) require_positive(detail::obs_moments(d).p[1], cfg.trim, "P(A=1 | G=O)");
  int folds = cfg.folds(s == ProximalStrategy::S4);
  auto ev = evaluate_proximal(d, cfg, pc, folds);
  std::array<Vec, 2> terms{proximal_terms(d, ev, s, 0), proximal_terms(d, ev, s, 1)};
  auto sum = assemble_proximal(d, terms, e);
  r.estimate = sum.estimate;
  r.contributions = sum.contributions;
  if (s == ProximalStrategy::S4) r.se = sum.se;
  r.diag("theta0", terms[0].dot(d.w) / d.w.sum());
  r.diag("theta1", terms[1].dot(d.w) / d.w.sum());
  r.diag("folds", static_cast<double>(folds));
  r.diag("trimmed.p_e", static_cast<double>(count_trimmed(ev.p_e, cfg.trim)));
  return r;
}

inline EstimateReport ate_proximal(const FusedDataset& d, ProximalStrategy s, const NuisanceConfig& cfg, const ProximalConfig& pc = {}) {
  return estimate_proximal(d, s, Estimand::Ate, cfg, pc);
}
inline EstimateReport ett_proximal(const FusedDataset& d, ProximalStrategy s, const NuisanceConfig& cfg, const ProximalConfig& pc = {}) {
  return estimate_proximal(d, s, Estimand::Ett, cfg, pc);
}

}  // namespace fusioncausal
