#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "data.hpp"
#include "error.hpp"
#include "oracle.hpp"
#include "rng.hpp"
#include "worlds.hpp"

namespace fusioncausal {

enum class DgpTag { LatentUnconf, EquiConfMarg, EquiConfCond, Qq, Bsiv, Proximal, DiscreteToy };

inline const char* to_string(DgpTag t) {
  switch (t) {
    case DgpTag::LatentUnconf: return "latent-unconf";
    case DgpTag::EquiConfMarg: return "equiconf-marg";
    case DgpTag::EquiConfCond: return "equiconf-cond";
    case DgpTag::Qq: return "qq";
    case DgpTag::Bsiv: return "bsiv";
    case DgpTag::Proximal: return "proximal";
    case DgpTag::DiscreteToy: return "discrete";
  }
  return "?";
}

inline DgpTag parse_dgp_tag(const std::string& s) {
  for (auto t : {DgpTag::LatentUnconf, DgpTag::EquiConfMarg, DgpTag::EquiConfCond, DgpTag::Qq, DgpTag::Bsiv, DgpTag::Proximal, DgpTag::DiscreteToy})
    if (s == to_string(t)) return t;
  fail(ErrorCode::InvalidSpec, "unknown dgp '" + s + "'");
}

// Structural parameters. Unset (NaN) effect coefficients take the tag's default.
struct DgpSpec {
  DgpTag tag = DgpTag::EquiConfMarg;
  std::string world;  // DiscreteToy only
  Index n = 1000;
  std::uint64_t seed = 0;

  double effect = kNaN;       // direct coefficient of A on Y
  double m_effect = kNaN;     // coefficient of A on M
  double interaction = 0.0;   // LatentUnconf: coefficient of A*U on Y
  bool null_effect = false;   // zero effect of A on both M and Y

  double slippage = 0.0;      // EquiConf: extra slippage*U in Y; Bsiv: extra slippage*Z in Y
  double proxy_leak = 0.0;    // Proximal: Z picks up proxy_leak * (noise of M)

  bool nonlinear = false;          // Qq: Y adds 0.5 U|U| (distributional but not additive equi-confounding)
  bool identical_domains = false;  // Proximal: same covariate law and treatment rule in both domains
  bool y_equals_m = false;         // Proximal: Y is a copy of M
  bool constant_z = false;         // Proximal: Z carries no information

  double proxy_strength = 2.0;  // Proximal: Z = strength * U + N(0, 1/4)
};

// Parameter values resolved from a spec.
struct Coefficients {
  double y_effect, m_effect;
};

inline Coefficients coefficients(const DgpSpec& s) {
  double y = 0, m = 0;
  switch (s.tag) {
    case DgpTag::LatentUnconf: y = 1.5, m = 1.0; break;
    case DgpTag::EquiConfMarg: y = 1.5, m = 1.0; break;
    case DgpTag::EquiConfCond: y = 0.5, m = 1.0; break;
    case DgpTag::Qq: y = 1.0, m = 1.0; break;
    case DgpTag::Bsiv: y = 1.0, m = 1.0; break;
    case DgpTag::Proximal: y = 0.5, m = 1.0; break;
    case DgpTag::DiscreteToy: break;
  }
  if (!std::isnan(s.effect)) y = s.effect;
  if (!std::isnan(s.m_effect)) m = s.m_effect;
  if (s.null_effect) y = m = 0;
  return {y, m};
}

// Units with both potential outcomes; the observed sample is a projection.
struct Units {
  std::vector<Domain> g;
  std::vector<int> a;
  Mat x;
  Vec z, m0, m1, y0, y1, u;
  ZRole z_role = ZRole::None;

  Index size() const { return static_cast<Index>(g.size()); }
};

namespace detail {

enum Stream : std::uint64_t { kG = 1, kX0, kX1, kU, kZ, kAO, kAE, kEM, kEY, kEZ, kM, kY };

inline std::size_t draw_categorical(Rng& r, const std::vector<double>& p) {
  double t = r.uniform(), c = 0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    c += p[k];
    if (t < c) return k;
  }
  return p.size() - 1;
}

inline Units draw_discrete(const DgpSpec& s, Index n) {
  auto w = worlds::by_name(s.world);
  Units out;
  out.g.resize(static_cast<std::size_t>(n));
  out.a.resize(static_cast<std::size_t>(n));
  out.x.resize(n, 1);
  out.z.setConstant(n, kNaN);
  out.m0.resize(n), out.m1.resize(n), out.y0.resize(n), out.y1.resize(n), out.u.resize(n);
  out.z_role = w.z_role;
  Rng rg = Rng::stream(s.seed, kG), rx = Rng::stream(s.seed, kX0), ru = Rng::stream(s.seed, kU), rz = Rng::stream(s.seed, kZ),
      ra = Rng::stream(s.seed, kAO), rm = Rng::stream(s.seed, kM), ry = Rng::stream(s.seed, kY);
  for (Index i = 0; i < n; ++i) {
    Domain g = rg.bernoulli(w.p_e) ? kE : kO;
    int x = static_cast<int>(draw_categorical(rx, w.p_x[static_cast<int>(g)]));
    int u = static_cast<int>(draw_categorical(ru, w.p_u[static_cast<std::size_t>(x)]));
    int z = static_cast<int>(draw_categorical(rz, w.p_z(u, x, g)));
    int a = ra.bernoulli(w.p_a(u, x, z, g)) ? 1 : 0;
    for (int arm = 0; arm < 2; ++arm) {
      auto mi = draw_categorical(rm, w.p_m(u, x, z, arm));
      auto yd = w.y_dist(u, x, z, arm, static_cast<int>(mi));
      std::vector<double> py;
      for (auto& [v, p] : yd) py.push_back(p);
      double y = yd[draw_categorical(ry, py)].first;
      (arm ? out.m1 : out.m0)[i] = w.m_values[mi];
      (arm ? out.y1 : out.y0)[i] = y;
    }
    auto si = static_cast<std::size_t>(i);
    out.g[si] = g;
    out.a[si] = a;
    out.x(i, 0) = w.x_values[static_cast<std::size_t>(x)];
    out.u[i] = u;
    bool keep_z = w.z_role == ZRole::Bsiv || (w.z_role == ZRole::Proxy && g == kO);
    if (keep_z) out.z[i] = w.z_values[static_cast<std::size_t>(z)];
  }
  return out;
}

}  // namespace detail

// Draws n units with both potential outcomes.
//
// Common covariates: G = E with probability 1/2; x0 | G ~ Bernoulli(0.4 if E, 0.6 if O);
// x1 | G ~ N(-0.25 if E, +0.25 if O; 1). Hence logit p(G=E | x) is linear in (x0, x1).
// Qq and Bsiv use x0 only.
inline Units generate_units(const DgpSpec& s, Index n) {
  if (n <= 0) fail(ErrorCode::InvalidSpec, "sample size must be positive");
  if (s.tag == DgpTag::DiscreteToy) return detail::draw_discrete(s, n);
  using namespace detail;
  const auto c = coefficients(s);
  const bool two_cov = s.tag == DgpTag::LatentUnconf || s.tag == DgpTag::EquiConfMarg || s.tag == DgpTag::EquiConfCond || s.tag == DgpTag::Proximal;
  Units out;
  out.g.resize(static_cast<std::size_t>(n));
  out.a.resize(static_cast<std::size_t>(n));
  out.x.resize(n, two_cov ? 2 : 1);
  out.z.setConstant(n, kNaN);
  out.m0.resize(n), out.m1.resize(n), out.y0.resize(n), out.y1.resize(n), out.u.resize(n);
  out.z_role = s.tag == DgpTag::Bsiv ? ZRole::Bsiv : s.tag == DgpTag::Proximal ? ZRole::Proxy : ZRole::None;

  Rng rg = Rng::stream(s.seed, kG), rx0 = Rng::stream(s.seed, kX0), rx1 = Rng::stream(s.seed, kX1), ru = Rng::stream(s.seed, kU),
      rz = Rng::stream(s.seed, kZ), rao = Rng::stream(s.seed, kAO), rae = Rng::stream(s.seed, kAE), rem = Rng::stream(s.seed, kEM),
      rey = Rng::stream(s.seed, kEY), rez = Rng::stream(s.seed, kEZ);

  for (Index i = 0; i < n; ++i) {
    auto si = static_cast<std::size_t>(i);
    bool shared_law = s.tag == DgpTag::Proximal && s.identical_domains;
    Domain g = rg.bernoulli(0.5) ? kE : kO;
    double x0 = rx0.bernoulli(shared_law ? 0.5 : (g == kE ? 0.4 : 0.6)) ? 1.0 : 0.0;
    double x1 = rx1.normal() + (shared_law ? 0.0 : (g == kE ? -0.25 : 0.25));
    out.g[si] = g;
    out.x(i, 0) = x0;
    if (two_cov) out.x(i, 1) = x1;
    double em = rem.normal(), ey = rey.normal();
    int a = 0;
    switch (s.tag) {
      case DgpTag::LatentUnconf:
      case DgpTag::EquiConfMarg:
      case DgpTag::EquiConfCond: {
        // A* is the treatment the unit would take in the observational domain.
        int a_star = rao.bernoulli(expit(-0.3 + 0.8 * x0)) ? 1 : 0;
        double u = a_star + 0.5 * x0 + 0.3 * x1 + ru.normal();
        a = g == kO ? a_star : (rae.bernoulli(expit(0.3 * x1)) ? 1 : 0);
        out.u[i] = u;
        for (int t = 0; t < 2; ++t) {
          double m, y;
          if (s.tag == DgpTag::LatentUnconf) {
            m = c.m_effect * t + 0.5 * x0 + 1.0 * x1 + u;
            y = c.y_effect * t + 0.3 * x0 + 0.5 * x1 + 1.0 * u + s.interaction * t * u + ey;
          } else {
            double b = s.tag == DgpTag::EquiConfMarg ? 0.25 : 1.0;
            m = c.m_effect * t + 0.5 * x0 + 1.0 * x1 + u + em;
            y = c.y_effect * t + b * x0 + 0.5 * x1 + 0.5 * m + 0.5 * u + s.slippage * u + ey;
          }
          (t ? out.m1 : out.m0)[i] = m;
          (t ? out.y1 : out.y0)[i] = y;
        }
        break;
      }
      case DgpTag::Qq: {
        int a_star = rao.bernoulli(expit(0.8 + 0.3 * x0)) ? 1 : 0;
        double u = 1.0 * a_star + 0.5 * x0 + ru.normal();
        a = g == kO ? a_star : (rae.bernoulli(0.2) ? 1 : 0);
        out.u[i] = u;
        double bend = s.nonlinear ? 0.5 * u * std::abs(u) : 0.0;
        for (int t = 0; t < 2; ++t) {
          (t ? out.m1 : out.m0)[i] = c.m_effect * t + 0.5 * x0 + u;
          (t ? out.y1 : out.y0)[i] = c.y_effect * t + 0.8 * x0 + u + bend;
        }
        break;
      }
      case DgpTag::Bsiv: {
        double u = 0.5 * x0 + ru.normal();
        double z = rz.bernoulli(expit(-0.2 + 0.4 * x0)) ? 1.0 : 0.0;
        int a_o = rao.bernoulli(expit(-0.8 + 1.2 * z + 0.8 * u + 0.3 * x0)) ? 1 : 0;
        int a_e = rae.bernoulli(0.5) ? 1 : 0;
        a = g == kO ? a_o : a_e;
        out.u[i] = u;
        out.z[i] = z;
        for (int t = 0; t < 2; ++t) {
          (t ? out.m1 : out.m0)[i] = c.m_effect * t + 0.5 * x0 + 0.7 * z + 0.5 * u + em;
          (t ? out.y1 : out.y0)[i] = c.y_effect * t + 0.8 * x0 + 0.7 * z + 1.5 * u + s.slippage * z + ey;
        }
        break;
      }
      case DgpTag::Proximal: {
        double u = ru.bernoulli(0.5) ? 1.0 : 0.0;
        double z = s.constant_z ? 0.0 : s.proxy_strength * u + 0.5 * rez.normal() + s.proxy_leak * em;
        int a_o = rao.bernoulli(s.identical_domains ? expit(0.2 + 0.6 * x0) : expit(-0.5 + 1.0 * u)) ? 1 : 0;
        int a_e = rae.bernoulli(s.identical_domains ? expit(0.2 + 0.6 * x0) : expit(0.4 * x1)) ? 1 : 0;
        a = g == kO ? a_o : a_e;
        out.u[i] = u;
        if (g == kO) out.z[i] = z;
        for (int t = 0; t < 2; ++t) {
          double m = c.m_effect * t + 0.5 * x0 + 0.3 * x1 + 2.0 * u + 0.5 * em;
          double y = s.y_equals_m ? m : c.y_effect * t + 0.4 * x0 + 0.2 * x1 + 0.5 * m + 1.5 * u + 0.5 * ey;
          (t ? out.m1 : out.m0)[i] = m;
          (t ? out.y1 : out.y0)[i] = y;
        }
        break;
      }
      case DgpTag::DiscreteToy: break;
    }
    out.a[si] = a;
  }
  return out;
}

inline FusedDataset observe(const Units& u) {
  FusedDataset d;
  d.resize(u.size(), u.x.cols());
  d.z_role = u.z_role;
  for (Index i = 0; i < u.size(); ++i) {
    auto si = static_cast<std::size_t>(i);
    d.g[si] = u.g[si];
    d.a[si] = u.a[si];
    d.x.row(i) = u.x.row(i);
    d.m[i] = u.a[si] ? u.m1[i] : u.m0[i];
    if (u.g[si] == kO) d.y[i] = u.a[si] ? u.y1[i] : u.y0[i];
    d.z[i] = u.z[i];
  }
  d.validate();
  return d;
}

inline FusedDataset generate(const DgpSpec& s) { return observe(generate_units(s, s.n)); }

enum class TruthMethod { ClosedForm, CounterfactualMc, Enumeration };

inline const char* to_string(TruthMethod m) {
  switch (m) {
    case TruthMethod::ClosedForm: return "closed-form";
    case TruthMethod::CounterfactualMc: return "counterfactual-mc";
    case TruthMethod::Enumeration: return "enumeration";
  }
  return "?";
}

struct GroundTruth {
  double ate = kNaN, ett = kNaN;
  TruthMethod method = TruthMethod::ClosedForm;
  Index draws = 0;
  std::optional<double> ate_se, ett_se;
};

inline GroundTruth ground_truth(const DgpSpec& s, TruthMethod method, Index draws = 1'000'000) {
  GroundTruth t;
  t.method = method;
  if (method == TruthMethod::Enumeration) {
    if (s.tag != DgpTag::DiscreteToy) fail(ErrorCode::MethodUnavailable, "enumeration needs a discrete world");
    auto w = worlds::by_name(s.world);
    t.ate = w.truth_ate();
    t.ett = w.truth_ett();
    return t;
  }
  if (method == TruthMethod::CounterfactualMc) {
    DgpSpec cf = s;
    cf.seed = splitmix64(s.seed ^ 0x7EA1C0DEULL);
    auto u = generate_units(cf, draws);
    double sa = 0, sa2 = 0, st = 0, st2 = 0;
    Index na = 0, nt = 0;
    for (Index i = 0; i < u.size(); ++i) {
      if (u.g[static_cast<std::size_t>(i)] != kO) continue;
      double d = u.y1[i] - u.y0[i];
      sa += d, sa2 += d * d, ++na;
      if (u.a[static_cast<std::size_t>(i)] == 1) st += d, st2 += d * d, ++nt;
    }
    auto se = [](double s1, double s2, Index k) { return std::sqrt(std::max(0.0, s2 / k - (s1 / k) * (s1 / k)) / static_cast<double>(k)); };
    t.ate = sa / static_cast<double>(na);
    t.ett = st / static_cast<double>(nt);
    t.ate_se = se(sa, sa2, na);
    t.ett_se = se(st, st2, nt);
    t.draws = draws;
    return t;
  }
  const auto c = coefficients(s);
  switch (s.tag) {
    case DgpTag::LatentUnconf: {
      // E[U | O] and E[U | A=1, O] from the observational assignment model.
      double e1 = expit(0.5), e0 = expit(-0.3);
      double p1 = 0.6 * e1 + 0.4 * e0;
      double eu = p1 + 0.5 * 0.6 + 0.3 * 0.25;
      double eu_t = 1.0 + 0.5 * (0.6 * e1 / p1) + 0.3 * 0.25;
      t.ate = c.y_effect + s.interaction * eu;
      t.ett = c.y_effect + s.interaction * eu_t;
      return t;
    }
    case DgpTag::EquiConfMarg:
    case DgpTag::EquiConfCond:
      t.ate = t.ett = c.y_effect + 0.5 * c.m_effect;
      return t;
    case DgpTag::Qq:
    case DgpTag::Bsiv:
      t.ate = t.ett = c.y_effect;
      return t;
    case DgpTag::Proximal:
      t.ate = t.ett = s.y_equals_m ? c.m_effect : c.y_effect + 0.5 * c.m_effect;
      return t;
    case DgpTag::DiscreteToy:
      fail(ErrorCode::MethodUnavailable, "discrete worlds use enumeration");
  }
  return t;
}

// Population bridges of the proximal DGP (no proxy leak, informative Z).
// Outcome bridge: the U loading of Y is 0.5 * 2 + 1.5, that of M is 2, so
// h(m, a, x) = 1.25 m + (theta - 0.75 tau) a + 0.025 x0 - 0.025 x1 (h = m when Y copies M).
inline double proximal_true_h(const DgpSpec& s, double m, int a, double x0, double x1) {
  if (s.tag != DgpTag::Proximal || s.proxy_leak != 0.0 || s.constant_z) fail(ErrorCode::MethodUnavailable, "no closed-form bridge for this spec");
  if (s.y_equals_m) return m;
  auto c = coefficients(s);
  return 1.25 * m + (c.y_effect - 0.75 * c.m_effect) * a + 0.025 * x0 - 0.025 * x1;
}

// Treatment bridge: E[q(Z) | m, a, x, O] = p(m | a, x, E) / (p(m | a, x, O) p(a | x, O)). With binary U
// independent of (X, G) and E[Z | U] = strength * U, the solution is affine in z:
// q = [1/(2 w0) + (1/(2 w1) - 1/(2 w0)) z / strength] / p(a | x, O), w_u = P(U=u | a, x, O).
inline double proximal_true_q(const DgpSpec& s, double z, int a, double x0) {
  if (s.tag != DgpTag::Proximal || s.proxy_leak != 0.0 || s.constant_z) fail(ErrorCode::MethodUnavailable, "no closed-form bridge for this spec");
  auto p_arm = [&](double u) {
    double p1 = s.identical_domains ? expit(0.2 + 0.6 * x0) : expit(-0.5 + u);
    return a ? p1 : 1 - p1;
  };
  double pa = 0.5 * (p_arm(0) + p_arm(1));
  double w1 = 0.5 * p_arm(1) / pa, w0 = 1 - w1;
  return (0.5 / w0 + (0.5 / w1 - 0.5 / w0) * z / s.proxy_strength) / pa;
}

// Plug-in ETT bias implied by U-slippage in the equi-confounding DGP:
// slippage * (E[U | A=1, O] - E[U | A=0, O]).
inline double equiconf_slippage_bias(const DgpSpec& s) {
  double e1 = expit(0.5), e0 = expit(-0.3);
  double p1 = 0.6 * e1 + 0.4 * e0;
  double x_t = 0.6 * e1 / p1, x_c = 0.6 * (1 - e1) / (1 - p1);
  return s.slippage * (1.0 + 0.5 * (x_t - x_c));
}

// Structural perturbation of an assumption by magnitude delta (0 leaves the spec unchanged).
inline DgpSpec violate(const DgpSpec& s, const std::string& assumption, double delta) {
  DgpSpec out = s;
  if (delta == 0.0) return out;
  bool equiconf = s.tag == DgpTag::EquiConfMarg || s.tag == DgpTag::EquiConfCond;
  if (assumption == "equiconf-slippage" && equiconf) {
    out.slippage += delta;
  } else if (assumption == "bsiv-slippage" && s.tag == DgpTag::Bsiv) {
    out.slippage += delta;
  } else if (assumption == "proxy-leak" && s.tag == DgpTag::Proximal) {
    out.proxy_leak += delta;
  } else {
    fail(ErrorCode::UnsupportedViolation, "cannot violate '" + assumption + "' on dgp '" + to_string(s.tag) + "'");
  }
  return out;
}

// Structured text table of a discrete world's joint law.
inline std::string describe(const DiscreteWorld& w) {
  std::string out = "world=" + w.name + "\n";
  out += "g,x,u,z,a,m,y,p\n";
  for (const auto& c : w.joint()) {
    out += std::string(to_string(c.g)) + ',' + detail::format_double(w.x_values[static_cast<std::size_t>(c.x)]) + ',' + std::to_string(c.u) + ',' +
           detail::format_double(w.z_values[static_cast<std::size_t>(c.z)]) + ',' + std::to_string(c.a) + ',' + detail::format_double(c.m) + ',' +
           detail::format_double(c.y) + ',' + detail::format_double(c.p) + '\n';
  }
  return out;
}

}  // namespace fusioncausal
