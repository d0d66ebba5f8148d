#pragma once

#include "equiconf.hpp"

namespace fusioncausal {

// Nested regression for arm a: inner = E[Y | M, A=a, X, G=O] fit on
// observational rows, outer = E[inner(M, a, X) | X, A=a, G=E] fit on
// experimental rows by regressing the inner predictions on X.
class NestedRegression {
 public:
  static NestedRegression fit(const FusedDataset& d, int a, const NuisanceConfig& cfg) {
    NestedRegression r;
    View o = split(d, kO, a), e = split(d, kE, a);
    if (o.empty() || e.empty()) fail(ErrorCode::EmptyCell, "nested regression needs arm " + std::to_string(a) + " in both domains");
    r.inner_ = Regressor::fit(covariates_with(o, {&d.m}), column(o, d.y), weights(o), cfg.features(), cfg.ridge_lambda);
    Mat xe = covariates_with(e, {&d.m});
    Vec pseudo(e.size());
    for (Index k = 0; k < e.size(); ++k) pseudo[k] = r.inner_.predict(xe.row(k));
    r.outer_ = Regressor::fit(covariates(e), pseudo, weights(e), cfg.features(), cfg.ridge_lambda);
    return r;
  }

  template <class Row>
  double inner(double m, const Row& x) const {
    Eigen::RowVectorXd u(x.size() + 1);
    u[0] = m;
    u.tail(x.size()) = x;
    return inner_.predict(u);
  }
  template <class Row>
  double outer(const Row& x) const {
    return outer_.predict(x);
  }

 private:
  Regressor inner_, outer_;
};

namespace detail {

inline double latent_theta(const FusedDataset& d, int a, const NuisanceConfig& cfg) {
  auto nr = NestedRegression::fit(d, a, cfg);
  return mean_over(d, false, [&](Index i) { return nr.outer(d.x.row(i)); });
}

}  // namespace detail

inline EstimateReport ate_latent_unconf(const FusedDataset& data, const NuisanceConfig& cfg) {
  auto d = canonical(data);
  auto r = detail::start_report(d, "latent-unconf", Estimand::Ate);
  double t1 = detail::latent_theta(d, 1, cfg), t0 = detail::latent_theta(d, 0, cfg);
  r.estimate = t1 - t0;
  r.diag("theta1", t1);
  r.diag("theta0", t0);
  return r;
}

// E[Y^(0) | A=1, O] = (E[Y^(0) | O] - E[Y | A=0, O] P(A=0 | O)) / P(A=1 | O).
inline EstimateReport ett_latent_unconf(const FusedDataset& data, const NuisanceConfig& cfg) {
  auto d = canonical(data);
  auto r = detail::start_report(d, "latent-unconf", Estimand::Ett);
  auto mo = detail::obs_moments(d);
  require_positive(mo.p[1], cfg.trim, "P(A=1 | G=O)");
  double t0 = detail::latent_theta(d, 0, cfg);
  r.estimate = mo.y[1] - (t0 - mo.y[0] * mo.p[0]) / mo.p[1];
  r.diag("theta0", t0);
  return r;
}

}  // namespace fusioncausal
