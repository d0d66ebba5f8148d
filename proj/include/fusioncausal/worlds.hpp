#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "data.hpp"
#include "error.hpp"

namespace fusioncausal {

struct WorldCell {
  Domain g;
  int x, u, z, a, mi;
  double m, y, p;
};

// Finite population with structural factorization
//   p(g) p(x|g) p(u|x) p(z|u,x,g) p(a|u,x,z,g) p(m|u,x,z,a) p(y|u,x,z,a,m).
// Potential outcomes replace a in the last two factors.
class DiscreteWorld {
 public:
  using Prob = std::vector<double>;
  using YDist = std::vector<std::pair<double, double>>;  // (value, probability)

  std::string name;
  double p_e = 0.5;
  std::vector<double> x_values{0.0, 1.0};
  std::array<Prob, 2> p_x;                // [g][x]
  std::vector<Prob> p_u;                  // [x][u]
  std::vector<double> z_values{0.0};
  std::function<Prob(int u, int x, Domain g)> p_z = [](int, int, Domain) { return Prob{1.0}; };
  std::function<double(int u, int x, int z, Domain g)> p_a;  // P(A=1 | u,x,z,g)
  std::vector<double> m_values{0.0, 1.0};
  std::function<Prob(int u, int x, int z, int a)> p_m;
  std::function<YDist(int u, int x, int z, int a, int mi)> y_dist;
  ZRole z_role = ZRole::None;

  double pg(Domain g) const { return g == kE ? p_e : 1.0 - p_e; }
  int nx() const { return static_cast<int>(x_values.size()); }
  int nu(int x) const { return static_cast<int>(p_u[static_cast<std::size_t>(x)].size()); }
  int nz() const { return static_cast<int>(z_values.size()); }
  int nm() const { return static_cast<int>(m_values.size()); }

  std::vector<WorldCell> joint() const {
    std::vector<WorldCell> cells;
    for (Domain g : {kE, kO})
      for (int x = 0; x < nx(); ++x)
        for (int u = 0; u < nu(x); ++u) {
          auto pz = p_z(u, x, g);
          for (int z = 0; z < nz(); ++z)
            for (int a = 0; a < 2; ++a) {
              double pa = p_a(u, x, z, g);
              pa = a == 1 ? pa : 1.0 - pa;
              auto pm = p_m(u, x, z, a);
              for (int mi = 0; mi < nm(); ++mi)
                for (auto [yv, py] : y_dist(u, x, z, a, mi)) {
                  double p = pg(g) * p_x[static_cast<int>(g)][static_cast<std::size_t>(x)] * p_u[static_cast<std::size_t>(x)][static_cast<std::size_t>(u)] *
                             pz[static_cast<std::size_t>(z)] * pa * pm[static_cast<std::size_t>(mi)] * py;
                  if (p > 0) cells.push_back({g, x, u, z, a, mi, m_values[static_cast<std::size_t>(mi)], yv, p});
                }
            }
        }
    return cells;
  }

  template <class F, class P>
  double expect(F f, P pred) const {
    double num = 0, den = 0;
    for (const auto& c : joint())
      if (pred(c)) {
        num += c.p * f(c);
        den += c.p;
      }
    if (den <= 0) fail(ErrorCode::ZeroProbabilityCell, name + ": conditioning event has probability zero");
    return num / den;
  }

  template <class P, class Q>
  double prob(P event, Q given) const {
    return expect([&](const WorldCell& c) { return event(c) ? 1.0 : 0.0; }, given);
  }

  // E[f(W^(a)) | pred(u, x, z, g, A)] from the structural tables.
  template <class F, class P>
  double cf_expect(char outcome, int a, F f, P pred) const {
    double num = 0, den = 0;
    for (Domain g : {kE, kO})
      for (int x = 0; x < nx(); ++x)
        for (int u = 0; u < nu(x); ++u) {
          auto pz = p_z(u, x, g);
          for (int z = 0; z < nz(); ++z)
            for (int A = 0; A < 2; ++A) {
              double pa = p_a(u, x, z, g);
              pa = A == 1 ? pa : 1.0 - pa;
              double w = pg(g) * p_x[static_cast<int>(g)][static_cast<std::size_t>(x)] * p_u[static_cast<std::size_t>(x)][static_cast<std::size_t>(u)] *
                         pz[static_cast<std::size_t>(z)] * pa;
              if (w <= 0 || !pred(u, x, z, g, A)) continue;
              auto pm = p_m(u, x, z, a);
              double val = 0;
              for (int mi = 0; mi < nm(); ++mi) {
                if (pm[static_cast<std::size_t>(mi)] == 0) continue;
                if (outcome == 'M') {
                  val += pm[static_cast<std::size_t>(mi)] * f(m_values[static_cast<std::size_t>(mi)]);
                } else {
                  double ey = 0;
                  for (auto [yv, py] : y_dist(u, x, z, a, mi)) ey += py * f(yv);
                  val += pm[static_cast<std::size_t>(mi)] * ey;
                }
              }
              num += w * val;
              den += w;
            }
        }
    if (den <= 0) fail(ErrorCode::ZeroProbabilityCell, name + ": counterfactual conditioning event is empty");
    return num / den;
  }

  template <class P>
  double cf_mean(char outcome, int a, P pred) const {
    return cf_expect(outcome, a, [](double v) { return v; }, pred);
  }

  double truth_ate() const {
    auto o = [](int, int, int, Domain g, int) { return g == kO; };
    return cf_mean('Y', 1, o) - cf_mean('Y', 0, o);
  }
  double truth_ett() const {
    auto ot = [](int, int, int, Domain g, int A) { return g == kO && A == 1; };
    return cf_mean('Y', 1, ot) - cf_mean('Y', 0, ot);
  }

  // Weighted table over observables; one row per distinct observable cell.
  FusedDataset population() const {
    std::map<std::tuple<int, int, int, int, int, double>, double> agg;  // g,x,z,a,mi,y
    for (const auto& c : joint()) {
      bool keep_z = z_role == ZRole::Bsiv || (z_role == ZRole::Proxy && c.g == kO);
      double y = c.g == kO ? c.y : kNaN;
      agg[{static_cast<int>(c.g), c.x, keep_z ? c.z : -1, c.a, c.mi, c.g == kO ? y : 0.0}] += c.p;
    }
    std::vector<Observation> rows;
    for (const auto& [k, p] : agg) {
      auto [g, x, z, a, mi, y] = k;
      Observation o;
      o.g = static_cast<Domain>(g);
      o.a = a;
      o.x = {x_values[static_cast<std::size_t>(x)]};
      o.m = m_values[static_cast<std::size_t>(mi)];
      if (o.g == kO) o.y = y;
      if (z >= 0) o.z = z_values[static_cast<std::size_t>(z)];
      o.weight = p;
      rows.push_back(std::move(o));
    }
    return FusedDataset::from_rows(rows, {z_role, true});
  }

  // Largest deviation found by the registered certificates (assumption checks).
  double certificate_residual() const {
    double worst = std::abs(total_mass() - 1.0);
    for (const auto& [label, check] : certificates) worst = std::max(worst, check(*this));
    return worst;
  }

  double total_mass() const {
    double s = 0;
    for (const auto& c : joint()) s += c.p;
    return s;
  }

  std::vector<std::pair<std::string, std::function<double(const DiscreteWorld&)>>> certificates;

};

namespace worlds {

inline DiscreteWorld::YDist two_point(double mean, double half = 0.5) { return {{mean - half, 0.5}, {mean + half, 0.5}}; }

inline bool is_o(const WorldCell& c) { return c.g == kO; }

// Max over strata of |E[W^(a) | x, A, g=O] - E[W^(a) | x, g=E]| for both W: external validity in means.
inline double external_validity_residual(const DiscreteWorld& w) {
  double worst = 0;
  for (char W : {'M', 'Y'})
    for (int a = 0; a < 2; ++a)
      for (int x = 0; x < w.nx(); ++x) {
        double e = w.cf_mean(W, a, [x](int, int X, int, Domain g, int) { return X == x && g == kE; });
        double o = w.cf_mean(W, a, [x](int, int X, int, Domain g, int) { return X == x && g == kO; });
        worst = std::max(worst, std::abs(e - o));
      }
  return worst;
}

// Experimental treatment may depend on x only.
inline double internal_validity_residual(const DiscreteWorld& w) {
  double worst = 0;
  for (int x = 0; x < w.nx(); ++x) {
    double ref = w.p_a(0, x, 0, kE);
    for (int u = 0; u < w.nu(x); ++u)
      for (int z = 0; z < w.nz(); ++z) worst = std::max(worst, std::abs(w.p_a(u, x, z, kE) - ref));
  }
  return worst;
}

inline void add_core_certificates(DiscreteWorld& w) {
  w.certificates.emplace_back("internal validity", internal_validity_residual);
  w.certificates.emplace_back("external validity", external_validity_residual);
}

// Conditional additive equi-confounding in each x stratum, both arms.
inline double conditional_equiconf_residual(const DiscreteWorld& w) {
  double worst = 0;
  for (int a = 0; a < 2; ++a)
    for (int x = 0; x < w.nx(); ++x) {
      auto in = [x](int A) { return [x, A](int, int X, int, Domain g, int AA) { return X == x && g == kO && AA == A; }; };
      double dy = w.cf_mean('Y', a, in(1)) - w.cf_mean('Y', a, in(0));
      double dm = w.cf_mean('M', a, in(1)) - w.cf_mean('M', a, in(0));
      worst = std::max(worst, std::abs(dy - dm));
    }
  return worst;
}

inline double marginal_equiconf_residual(const DiscreteWorld& w) {
  double worst = 0;
  for (int a = 0; a < 2; ++a) {
    auto in = [](int A) { return [A](int, int, int, Domain g, int AA) { return g == kO && AA == A; }; };
    double dy = w.cf_mean('Y', a, in(1)) - w.cf_mean('Y', a, in(0));
    double dm = w.cf_mean('M', a, in(1)) - w.cf_mean('M', a, in(0));
    worst = std::max(worst, std::abs(dy - dm));
  }
  return worst;
}

inline void verify(const DiscreteWorld& w) {
  double r = w.certificate_residual();
  if (!(r <= 1e-14)) fail(ErrorCode::InvalidSpec, w.name + ": assumption certificate residual " + std::to_string(r));
}

inline DiscreteWorld base_world(const std::string& name) {
  DiscreteWorld w;
  w.name = name;
  w.p_e = 0.45;
  w.p_x = {DiscreteWorld::Prob{0.6, 0.4}, DiscreteWorld::Prob{0.3, 0.7}};
  w.p_u = {{0.55, 0.45}, {0.35, 0.65}};
  w.p_a = [](int u, int x, int, Domain g) {
    if (g == kE) return x == 0 ? 0.5 : 0.4;
    static const double t[2][2] = {{0.2, 0.5}, {0.7, 0.85}};
    return t[u][x];
  };
  w.p_m = [](int u, int, int, int a) {
    static const double t[2][2] = {{0.2, 0.35}, {0.6, 0.9}};
    double p = t[u][a];
    return DiscreteWorld::Prob{1 - p, p};
  };
  return w;
}

// Generic world: internal and external validity only.
inline DiscreteWorld toy1() {
  auto w = base_world("toy1");
  w.p_m = [](int u, int x, int, int a) {
    double p = 0.15 + 0.25 * a + 0.35 * u + 0.1 * x + 0.05 * a * u;
    return DiscreteWorld::Prob{1 - p, p};
  };
  w.y_dist = [](int u, int x, int, int a, int mi) {
    double mu = 0.3 + 0.9 * a + 1.4 * u + 0.5 * x + 0.6 * mi + 0.7 * a * u - 0.4 * x * mi;
    return two_point(mu, 0.5);
  };
  add_core_certificates(w);
  verify(w);
  return w;
}

// M = U xor A: M and A pin down U, so latent unconfoundedness holds exactly.
// With agreement < 1 the same structure violates it.
inline DiscreteWorld toy_latent(double agreement = 1.0) {
  auto w = base_world(agreement == 1.0 ? "toy_latent" : "toy_latent_violated");
  w.p_m = [agreement](int u, int, int, int a) {
    int hit = u ^ a;
    DiscreteWorld::Prob p{0, 0};
    p[static_cast<std::size_t>(hit)] = agreement;
    p[static_cast<std::size_t>(1 - hit)] += 1.0 - agreement;
    return p;
  };
  w.y_dist = [](int u, int x, int, int a, int mi) {
    double mu = 0.5 + 1.0 * a + 2.0 * u + 0.3 * x + 0.4 * mi + 0.5 * a * u;
    return two_point(mu, 0.5);
  };
  add_core_certificates(w);
  if (agreement == 1.0) {
    // A independent of Y^(a) given (X, M^(a)) in O: compare E[Y^(a) | x, M^(a)=m, A] across A.
    w.certificates.emplace_back("latent unconfoundedness", [](const DiscreteWorld& W) {
      double worst = 0;
      for (int a = 0; a < 2; ++a)
        for (int x = 0; x < 2; ++x)
          for (int m = 0; m < 2; ++m) {
            double v[2];
            for (int A = 0; A < 2; ++A) {
              double num = 0, den = 0;
              for (int u = 0; u < 2; ++u) {
                double pa = W.p_a(u, x, 0, kO);
                double wt = W.p_u[static_cast<std::size_t>(x)][static_cast<std::size_t>(u)] * (A ? pa : 1 - pa) *
                            W.p_m(u, x, 0, a)[static_cast<std::size_t>(m)];
                double ey = 0;
                for (auto [yv, py] : W.y_dist(u, x, 0, a, m)) ey += yv * py;
                num += wt * ey;
                den += wt;
              }
              v[A] = den > 0 ? num / den : 0;
            }
            worst = std::max(worst, std::abs(v[1] - v[0]));
          }
      return worst;
    });
  }
  verify(w);
  return w;
}

// M in {0, 2}; E[Y | u,x,a,m] = g(a,x) + m + k(x) with g(a,x) + k(x) free of x: both the
// marginal and conditional equi-confounding assumptions hold.
inline DiscreteWorld toy_equiconf() {
  auto w = base_world("toy_equiconf");
  w.p_m = [](int u, int x, int, int a) {
    static const double t[2][2] = {{0.2, 0.35}, {0.6, 0.9}};
    double p = t[u][a] + 0.05 * x;
    return DiscreteWorld::Prob{1 - p, p};
  };
  w.m_values = {0.0, 2.0};
  w.y_dist = [](int, int, int, int a, int mi) { return two_point((a ? 1.3 : 0.4) + 2.0 * mi, 0.5); };
  add_core_certificates(w);
  w.certificates.emplace_back("marginal equi-confounding", marginal_equiconf_residual);
  w.certificates.emplace_back("conditional equi-confounding", conditional_equiconf_residual);
  verify(w);
  return w;
}

// Same M, but g(a,x) + k(x) varies with x: only the conditional assumption holds.
inline DiscreteWorld toy_equiconf_conditional() {
  auto w = toy_equiconf();
  w.name = "toy_equiconf_conditional";
  w.y_dist = [](int, int x, int, int a, int mi) { return two_point((a ? 1.3 : 0.4) + 0.8 * x + 2.0 * mi, 0.5); };
  w.certificates.clear();
  add_core_certificates(w);
  w.certificates.emplace_back("conditional equi-confounding", conditional_equiconf_residual);
  verify(w);
  return w;
}

// Bespoke instrument: Z independent of U given X and across domains; the
// observational propensity is mirrored, P(A=1|u,z=1) = 1 - P(A=1|1-u,z=0), so
// the U-imbalance between arms is the same for both z. Outcome means are
// alpha(a,x) + b(u,x) + c(x) z with b differing between M and Y.
inline DiscreteWorld toy_instrument(double slip = 0.0) {
  DiscreteWorld w;
  w.name = "toy_instrument";
  w.p_e = 0.45;
  w.p_x = {DiscreteWorld::Prob{0.6, 0.4}, DiscreteWorld::Prob{0.3, 0.7}};
  w.p_u = {{0.5, 0.5}, {0.5, 0.5}};
  w.z_values = {0.0, 1.0};
  w.p_z = [](int, int x, Domain) { return x == 0 ? DiscreteWorld::Prob{0.6, 0.4} : DiscreteWorld::Prob{0.35, 0.65}; };
  w.p_a = [](int u, int x, int z, Domain g) {
    if (g == kE) return x == 0 ? 0.5 : 0.4;
    static const double t[2][2] = {{0.2, 0.6}, {0.4, 0.8}};
    return t[z][u];
  };
  w.p_m = [](int u, int x, int z, int a) {
    double p = 0.15 + 0.2 * a + 0.1 * x + 0.3 * u + (0.1 + 0.05 * x) * z;
    return DiscreteWorld::Prob{1 - p, p};
  };
  w.y_dist = [slip](int u, int x, int z, int a, int) {
    double mu = 1.0 * a + 0.3 * x + 1.2 * u + 0.4 * a * x + (0.1 + 0.05 * x) * z + slip * z * u;
    return two_point(mu, 0.5);
  };
  w.z_role = ZRole::Bsiv;
  add_core_certificates(w);
  auto cm = [](const DiscreteWorld& W, char V, int a, int x, std::optional<int> z, std::optional<int> A) {
    return W.cf_mean(V, a, [=](int, int X, int Z, Domain g, int AA) { return g == kO && X == x && (!z || Z == *z) && (!A || AA == *A); });
  };
  if (slip == 0.0) {
    // Partial additive equi-association in Z, both arms.
    w.certificates.emplace_back("equi-association", [cm](const DiscreteWorld& W) {
      double worst = 0;
      for (int a = 0; a < 2; ++a)
        for (int x = 0; x < 2; ++x) {
          double dm = cm(W, 'M', a, x, 1, std::nullopt) - cm(W, 'M', a, x, 0, std::nullopt);
          double dy = cm(W, 'Y', a, x, 1, std::nullopt) - cm(W, 'Y', a, x, 0, std::nullopt);
          worst = std::max(worst, std::abs(dm - dy));
        }
      return worst;
    });
    // Effect and bias contrasts of M and of Y free of z; the Y-minus-M versions follow.
    w.certificates.emplace_back("homogeneity", [cm](const DiscreteWorld& W) {
      double worst = 0;
      for (char V : {'M', 'Y'})
        for (int x = 0; x < 2; ++x)
          for (int s = 0; s < 2; ++s) {
            double eff[2], bias[2];
            for (int z = 0; z < 2; ++z) {
              eff[z] = cm(W, V, 1, x, z, s) - cm(W, V, 0, x, z, s);
              bias[z] = cm(W, V, s, x, z, 1) - cm(W, V, s, x, z, 0);
            }
            worst = std::max({worst, std::abs(eff[1] - eff[0]), std::abs(bias[1] - bias[0])});
          }
      return worst;
    });
  }
  verify(w);
  return w;
}

// Proxy world: Z only enters through U in the observational domain, so
// Z is independent of (M, Y) given (U, X, A).
inline DiscreteWorld toy_proxy() {
  DiscreteWorld w;
  w.name = "toy_proxy";
  w.p_e = 0.45;
  w.p_x = {DiscreteWorld::Prob{0.6, 0.4}, DiscreteWorld::Prob{0.3, 0.7}};
  w.p_u = {{0.55, 0.45}, {0.35, 0.65}};
  w.z_values = {0.0, 1.0};
  w.p_z = [](int u, int, Domain) { return u == 0 ? DiscreteWorld::Prob{0.95, 0.05} : DiscreteWorld::Prob{0.05, 0.95}; };
  w.p_a = [](int u, int x, int z, Domain g) {
    if (g == kE) return x == 0 ? 0.5 : 0.4;
    static const double t[2][2] = {{0.3, 0.45}, {0.55, 0.7}};
    return t[u][z] - 0.05 * x;
  };
  w.p_m = [](int u, int x, int, int a) {
    double p = 0.08 + 0.1 * a + 0.04 * x + 0.74 * u;
    return DiscreteWorld::Prob{1 - p, p};
  };
  w.y_dist = [](int u, int x, int, int a, int mi) { return two_point(1.0 * a + 0.3 * x + 0.8 * mi + 1.1 * u + 0.5 * a * u, 0.5); };
  w.z_role = ZRole::Proxy;
  add_core_certificates(w);
  w.certificates.emplace_back("proxy independence", [](const DiscreteWorld& W) {
    double worst = 0;
    for (int x = 0; x < 2; ++x)
      for (int u = 0; u < 2; ++u)
        for (int a = 0; a < 2; ++a) {
          auto p0 = W.p_m(u, x, 0, a), p1 = W.p_m(u, x, 1, a);
          for (int mi = 0; mi < 2; ++mi) {
            worst = std::max(worst, std::abs(p0[static_cast<std::size_t>(mi)] - p1[static_cast<std::size_t>(mi)]));
            auto y0 = W.y_dist(u, x, 0, a, mi), y1 = W.y_dist(u, x, 1, a, mi);
            for (std::size_t k = 0; k < y0.size(); ++k)
              worst = std::max({worst, std::abs(y0[k].first - y1[k].first), std::abs(y0[k].second - y1[k].second)});
          }
        }
    return worst;
  });
  verify(w);
  return w;
}

// Three-level U; M and Y strictly increasing deterministic functions of U,
// so both quantile-quantile maps coincide.
inline DiscreteWorld toy_quantile() {
  DiscreteWorld w;
  w.name = "toy_quantile";
  w.p_e = 0.45;
  w.p_x = {DiscreteWorld::Prob{0.6, 0.4}, DiscreteWorld::Prob{0.3, 0.7}};
  w.p_u = {{0.3, 0.45, 0.25}, {0.2, 0.35, 0.45}};
  w.p_a = [](int u, int x, int, Domain g) {
    if (g == kE) return x == 0 ? 0.5 : 0.4;
    static const double t[3] = {0.25, 0.5, 0.8};
    return t[u] - 0.1 * x;
  };
  // M = 0.5 a + 0.3 x + u, on the grid of m values indexed by (a, x, u).
  w.m_values.clear();
  for (int a = 0; a < 2; ++a)
    for (int x = 0; x < 2; ++x)
      for (int u = 0; u < 3; ++u) w.m_values.push_back(0.5 * a + 0.3 * x + u);
  std::sort(w.m_values.begin(), w.m_values.end());
  w.m_values.erase(std::unique(w.m_values.begin(), w.m_values.end()), w.m_values.end());
  auto mv = w.m_values;
  w.p_m = [mv](int u, int x, int, int a) {
    DiscreteWorld::Prob p(mv.size(), 0.0);
    double v = 0.5 * a + 0.3 * x + u;
    for (std::size_t k = 0; k < mv.size(); ++k)
      if (mv[k] == v) p[k] = 1.0;
    return p;
  };
  w.y_dist = [](int u, int x, int, int a, int) {
    static const double gy[3] = {-1.0, 0.4, 2.5};
    return DiscreteWorld::YDist{{1.2 * a + 0.6 * x + gy[u] + 0.3 * a * u, 1.0}};
  };
  add_core_certificates(w);
  verify(w);
  return w;
}

inline DiscreteWorld by_name(const std::string& name) {
  if (name == "toy1") return toy1();
  if (name == "toy_latent") return toy_latent();
  if (name == "toy_latent_violated") return toy_latent(0.75);
  if (name == "toy_equiconf") return toy_equiconf();
  if (name == "toy_equiconf_conditional") return toy_equiconf_conditional();
  if (name == "toy_instrument") return toy_instrument();
  if (name == "toy_proxy") return toy_proxy();
  if (name == "toy_quantile") return toy_quantile();
  fail(ErrorCode::InvalidSpec, "unknown discrete world '" + name + "'");
}

inline std::vector<std::string> names() {
  return {"toy1", "toy_latent", "toy_latent_violated", "toy_equiconf", "toy_equiconf_conditional", "toy_instrument", "toy_proxy", "toy_quantile"};
}

}  // namespace worlds

}  // namespace fusioncausal
