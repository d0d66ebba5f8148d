#pragma once

#include <array>
#include <string>

#include "equiconf.hpp"

namespace fusioncausal {

struct BsivConfig {
  Homogeneity homogeneity = Homogeneity::Effect;
  double relevance_floor = 0.05;   // minimum |P(A=1 | Z=1, x) - P(A=1 | Z=0, x)|
  double weak_share = 0.05;        // share of O rows allowed below the floor
};

// Instrument-cell components at every row, for both instrument levels:
// contrast[a][z] = E[Y - M | a, z, x, O] (or E[Y | a, z, x, O] without M),
// m_o[a][z] = E[M | a, z, x, O], m_e[a][z] = E[M | a, z, x, E], pi[z] = P(A=1 | z, x, O).
struct BsivComponents {
  std::array<std::array<Vec, 2>, 2> contrast, m_o, m_e;
  std::array<Vec, 2> pi;
  bool with_m = true;
};

namespace detail {

inline void require_binary_z(const FusedDataset& d) {
  if (d.z_role != ZRole::Bsiv) fail(ErrorCode::MissingColumn, "instrument column z (role bsiv) is required");
  for (Index i = 0; i < d.size(); ++i)
    if (!(d.z[i] == 0.0 || d.z[i] == 1.0)) fail(ErrorCode::ZNotBinary, "z must be 0 or 1 (row " + std::to_string(i) + ")");
}

// Regression of col on x within (g, a, z), evaluated at every row.
inline Vec cell_mean(const FusedDataset& d, Domain g, int a, int z, const std::function<double(Index)>& target, const NuisanceConfig& cfg) {
  View v = split(d, g, a);
  std::vector<Index> keep;
  for (Index i : v) if (d.z[i] == z) keep.push_back(i);
  if (keep.empty())
    fail(ErrorCode::EmptyCell, std::string("no rows with g=") + to_string(g) + ", a=" + std::to_string(a) + ", z=" + std::to_string(z));
  View cell{&d, keep};
  Vec y(cell.size());
  for (Index r = 0; r < cell.size(); ++r) y[r] = target(cell[static_cast<std::size_t>(r)]);
  auto f = Regressor::fit(covariates(cell), y, weights(cell), cfg.features(), cfg.ridge_lambda);
  Vec out(d.size());
  for (Index i = 0; i < d.size(); ++i) out[i] = f.predict(d.x.row(i));
  return out;
}

}  // namespace detail

inline BsivComponents fit_bsiv_components(const FusedDataset& d, const NuisanceConfig& cfg, bool with_m) {
  detail::require_binary_z(d);
  if (with_m && !d.m_observed_in_o) fail(ErrorCode::MissingColumn, "M is not observed in the observational domain");
  BsivComponents c;
  c.with_m = with_m;
  auto ym = [&](Index i) { return d.y[i] - d.m[i]; };
  auto y = [&](Index i) { return d.y[i]; };
  auto m = [&](Index i) { return d.m[i]; };
  for (int a = 0; a < 2; ++a)
    for (int z = 0; z < 2; ++z) {
      auto ka = static_cast<std::size_t>(a), kz = static_cast<std::size_t>(z);
      c.contrast[ka][kz] = with_m ? detail::cell_mean(d, kO, a, z, ym, cfg) : detail::cell_mean(d, kO, a, z, y, cfg);
      if (with_m) c.m_o[ka][kz] = detail::cell_mean(d, kO, a, z, m, cfg);
      c.m_e[ka][kz] = detail::cell_mean(d, kE, a, z, m, cfg);
    }
  auto pz = fit_propensity(d, PropensityKind::TreatmentInO, cfg, true);
  for (int z = 0; z < 2; ++z) {
    Vec p(d.size());
    for (Index i = 0; i < d.size(); ++i) p[i] = pz.predict_zx(static_cast<double>(z), d.x.row(i));
    c.pi[static_cast<std::size_t>(z)] = p;
  }
  return c;
}

struct RelevanceReport {
  double min_margin = 0, mean_margin = 0, weak_share = 0;
  bool pass = false;
};

inline RelevanceReport relevance_margin(const FusedDataset& d, const BsivComponents& c, double floor, double allowed_share) {
  RelevanceReport r;
  double w = 0, weak = 0, s = 0;
  r.min_margin = HUGE_VAL;
  for (Index i = 0; i < d.size(); ++i) {
    if (!d.is_o(i)) continue;
    double m = std::abs(c.pi[1][i] - c.pi[0][i]);
    r.min_margin = std::min(r.min_margin, m);
    s += d.w[i] * m;
    w += d.w[i];
    if (m < floor) weak += d.w[i];
  }
  r.mean_margin = s / w;
  r.weak_share = weak / w;
  r.pass = r.weak_share <= allowed_share;
  return r;
}

inline RelevanceReport check_relevance(const FusedDataset& data, const NuisanceConfig& cfg, const BsivConfig& bc = {}) {
  auto d = canonical(data);
  detail::require_binary_z(d);
  auto pz = fit_propensity(d, PropensityKind::TreatmentInO, cfg, true);
  BsivComponents c;
  for (int z = 0; z < 2; ++z) {
    Vec p(d.size());
    for (Index i = 0; i < d.size(); ++i) p[i] = pz.predict_zx(static_cast<double>(z), d.x.row(i));
    c.pi[static_cast<std::size_t>(z)] = p;
  }
  return relevance_margin(d, c, bc.relevance_floor, bc.weak_share);
}

namespace detail {

// Per-row value of the bespoke-instrument display, from fitted components.
inline double bsiv_row(const BsivComponents& c, Index i, double z, bool ett, Homogeneity h, double floor, Index& floored) {
  auto P1 = [&](int zz) { return c.pi[static_cast<std::size_t>(zz)][i]; };
  auto E = [&](int a, int zz) { return c.contrast[static_cast<std::size_t>(a)][static_cast<std::size_t>(zz)][i]; };
  auto Me = [&](int a, int zz) { return c.m_e[static_cast<std::size_t>(a)][static_cast<std::size_t>(zz)][i]; };
  auto Mo = [&](int a, int zz) { return c.m_o[static_cast<std::size_t>(a)][static_cast<std::size_t>(zz)][i]; };
  auto guard = [&](double den) {
    if (std::abs(den) >= floor) return den;
    ++floored;
    return den < 0 ? -floor : floor;
  };
  int zi = z == 1.0 ? 1 : 0;
  double pz = P1(zi);
  auto omega = [&](int a) { return c.with_m ? 0.0 : Me(a, 1) - Me(a, 0); };
  double core;
  if (h == Homogeneity::Effect) {
    auto D = [&](int zz) { return P1(zz) * E(1, zz) + (1 - P1(zz)) * E(0, zz); };
    double om = ett ? omega(0) : omega(0) * pz + omega(1) * (1 - pz);
    core = (D(1) - D(0) - om) / guard(P1(1) - P1(0));
  } else {
    double v = (E(1, 1) - E(0, 1) - E(1, 0) + E(0, 0)) * z + E(1, 0) - E(0, 0);
    double rel0 = guard(P1(0) - P1(1));  // P(A=0 | z=1) - P(A=0 | z=0)
    double b0 = E(0, 1) - E(0, 0) - omega(0);
    if (ett) {
      core = v - b0 / rel0;
    } else {
      double b1 = E(1, 1) - E(1, 0) - omega(1);
      core = v - (b0 * pz + b1 * (1 - pz)) / rel0;
    }
  }
  if (!c.with_m) return core;
  if (!ett) return core + Me(1, zi) - Me(0, zi);
  return core + Mo(1, zi) - Me(0, zi) / pz + Mo(0, zi) * (1 - pz) / pz;
}

}  // namespace detail

inline double bsiv_value(const FusedDataset& d, const BsivComponents& c, Estimand e, Homogeneity h, double floor, Index* floored = nullptr) {
  Index k = 0;
  double v = detail::mean_over(d, e == Estimand::Ett, [&](Index i) { return detail::bsiv_row(c, i, d.z[i], e == Estimand::Ett, h, floor, k); });
  if (floored) *floored = k;
  return v;
}

// with_m = false gives the variants for an unobserved observational M.
inline EstimateReport estimate_bsiv(const FusedDataset& data, Estimand e, bool with_m, const NuisanceConfig& cfg, const BsivConfig& bc = {}) {
  auto d = canonical(data);
  std::string tag = std::string("bsiv-") + to_string(e) + (with_m ? "" : "-nom");
  auto r = detail::start_report(d, tag, e);
  auto c = fit_bsiv_components(d, cfg, with_m);
  auto rel = relevance_margin(d, c, bc.relevance_floor, bc.weak_share);
  r.diag("homogeneity", to_string(bc.homogeneity));
  r.diag("relevance.mean_margin", rel.mean_margin);
  r.diag("relevance.min_margin", rel.min_margin);
  r.diag("relevance.weak_share", rel.weak_share);
  if (!rel.pass)
    fail(ErrorCode::WeakInstrument, "relevance margin below " + fmt(bc.relevance_floor) + " on " + fmt(100 * rel.weak_share) + "% of observational rows");
  Index floored = 0;
  r.estimate = bsiv_value(d, c, e, bc.homogeneity, bc.relevance_floor, &floored);
  r.diag("floored_denominators", static_cast<double>(floored));
  return r;
}

inline EstimateReport ett_bsiv(const FusedDataset& d, const NuisanceConfig& cfg, const BsivConfig& bc = {}) { return estimate_bsiv(d, Estimand::Ett, true, cfg, bc); }
inline EstimateReport ate_bsiv(const FusedDataset& d, const NuisanceConfig& cfg, const BsivConfig& bc = {}) { return estimate_bsiv(d, Estimand::Ate, true, cfg, bc); }
inline EstimateReport ett_bsiv_no_m(const FusedDataset& d, const NuisanceConfig& cfg, const BsivConfig& bc = {}) { return estimate_bsiv(d, Estimand::Ett, false, cfg, bc); }
inline EstimateReport ate_bsiv_no_m(const FusedDataset& d, const NuisanceConfig& cfg, const BsivConfig& bc = {}) { return estimate_bsiv(d, Estimand::Ate, false, cfg, bc); }

}  // namespace fusioncausal
