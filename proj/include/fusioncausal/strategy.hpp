#pragma once

#include <string>
#include <vector>

#include "bsiv.hpp"
#include "config.hpp"
#include "equiconf.hpp"
#include "latent_unconf.hpp"
#include "proximal.hpp"
#include "robust_if.hpp"

namespace fusioncausal {

// Observational difference in arm means; biased under confounding.
inline EstimateReport naive_difference(const FusedDataset& data) {
  auto d = canonical(data);
  auto r = detail::start_report(d, "naive", Estimand::Ate);
  auto mo = detail::obs_moments(d);
  r.estimate = mo.y[1] - mo.y[0];
  return r;
}

struct StrategyInfo {
  std::string tag;
  bool ate, ett;
};

// Strategy tags accepted by run_strategy and the estimands each supports.
inline const std::vector<StrategyInfo>& strategies() {
  static const std::vector<StrategyInfo> s{
      {"naive", true, true},          {"latent-unconf", true, true}, {"equiconf-marg", true, true}, {"equiconf-cond", true, true},
      {"equiconf-qq", false, true},   {"equiconf-if", true, true},   {"bsiv", true, true},          {"bsiv-nom", true, true},
      {"bsiv-ett", false, true},      {"bsiv-ate", true, false},     {"bsiv-ett-nom", false, true}, {"bsiv-ate-nom", true, false},
      {"proximal-s1", true, true},    {"proximal-s2", true, true},   {"proximal-s3", true, true},   {"proximal-s4", true, true},
  };
  return s;
}

inline ProximalStrategy parse_proximal_strategy(const std::string& tag) {
  if (tag == "proximal-s1") return ProximalStrategy::S1;
  if (tag == "proximal-s2") return ProximalStrategy::S2;
  if (tag == "proximal-s3") return ProximalStrategy::S3;
  return ProximalStrategy::S4;
}

inline void validate_strategy(const std::string& tag, Estimand e) {
  for (const auto& s : strategies()) {
    if (s.tag != tag) continue;
    if ((e == Estimand::Ate && !s.ate) || (e == Estimand::Ett && !s.ett))
      fail(ErrorCode::UnsupportedEstimand, "unsupported estimand '" + std::string(to_string(e)) + "' for strategy '" + tag + "'");
    return;
  }
  fail(ErrorCode::InvalidConfig, "unknown strategy '" + tag + "'");
}

inline EstimateReport run_strategy(const FusedDataset& d, const std::string& tag, Estimand e, const RunConfig& rc) {
  validate_strategy(tag, e);
  const auto& c = rc.nuisance;
  bool ett = e == Estimand::Ett;
  if (tag == "naive") {
    auto r = naive_difference(d);
    r.estimand = to_string(e);
    return r;
  }
  if (tag == "latent-unconf") return ett ? ett_latent_unconf(d, c) : ate_latent_unconf(d, c);
  if (tag == "equiconf-marg") return ett ? ett_equiconf_marginal(d, c) : ate_equiconf_marginal(d, c);
  if (tag == "equiconf-cond") return ett ? ett_equiconf_conditional(d, c) : ate_equiconf_conditional(d, c);
  if (tag == "equiconf-qq") return ett_equiconf_qq(d, c, rc.cdf_rule);
  if (tag == "equiconf-if") return ett ? if_ett_equiconf(d, c) : if_ate_equiconf(d, c);
  if (tag.rfind("bsiv", 0) == 0) return estimate_bsiv(d, e, tag.find("nom") == std::string::npos, c, rc.bsiv);
  return estimate_proximal(d, parse_proximal_strategy(tag), e, c, rc.proximal);
}

}  // namespace fusioncausal
