#pragma once

// Identification functionals evaluated exactly on a DiscreteWorld by direct
// summation over its joint table. Independent of the sample estimators.

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "estimand.hpp"
#include "worlds.hpp"

namespace fusioncausal::oracle {

class Table {
 public:
  explicit Table(const DiscreteWorld& w) : w_(w) {}

  const DiscreteWorld& world() const { return w_; }

  template <class F, class Pred>
  double ex(F f, Pred pred) const {
    return w_.expect(f, pred);
  }
  template <class Ev, class Given>
  double pr(Ev event, Given given) const {
    return w_.prob(event, given);
  }

  // Conditional means in domain g, arm a, stratum x (and instrument level z when given).
  double mu_m(Domain g, int a, int x, int z = -1) const {
    return ex([](const WorldCell& c) { return c.m; }, [=](const WorldCell& c) { return c.g == g && c.a == a && c.x == x && (z < 0 || c.z == z); });
  }
  double mu_y(int a, int x, int z = -1) const {
    return ex([](const WorldCell& c) { return c.y; }, [=](const WorldCell& c) { return c.g == kO && c.a == a && c.x == x && (z < 0 || c.z == z); });
  }
  double mu_ym(int a, int x, int z) const {
    return ex([](const WorldCell& c) { return c.y - c.m; }, [=](const WorldCell& c) { return c.g == kO && c.a == a && c.x == x && c.z == z; });
  }
  // P(A=1 | x, g) and P(A=1 | z, x, O).
  double pi(Domain g, int x) const {
    return pr([](const WorldCell& c) { return c.a == 1; }, [=](const WorldCell& c) { return c.g == g && c.x == x; });
  }
  double pi_z(int z, int x) const {
    return pr([](const WorldCell& c) { return c.a == 1; }, [=](const WorldCell& c) { return c.g == kO && c.x == x && c.z == z; });
  }
  double p_e(int x) const {
    return pr([](const WorldCell& c) { return c.g == kE; }, [=](const WorldCell& c) { return c.x == x; });
  }
  double p_o() const {
    return pr([](const WorldCell& c) { return c.g == kO; }, [](const WorldCell&) { return true; });
  }
  double p_arm_o(int a) const {
    return pr([=](const WorldCell& c) { return c.a == a; }, [](const WorldCell& c) { return c.g == kO; });
  }
  double y_bar(int a) const {
    return ex([](const WorldCell& c) { return c.y; }, [=](const WorldCell& c) { return c.g == kO && c.a == a; });
  }
  double m_bar(int a) const {
    return ex([](const WorldCell& c) { return c.m; }, [=](const WorldCell& c) { return c.g == kO && c.a == a; });
  }
  // Average of f(cell) over the observational population, or its treated part.
  template <class F>
  double over_o(F f) const {
    return ex(f, [](const WorldCell& c) { return c.g == kO; });
  }
  template <class F>
  double over_treated(F f) const {
    return ex(f, [](const WorldCell& c) { return c.g == kO && c.a == 1; });
  }

  // ETT from a functional for E[Y^(0) | G=O].
  double ett_from_theta0(double theta0) const {
    double p1 = p_arm_o(1);
    return y_bar(1) - (theta0 - y_bar(0) * (1 - p1)) / p1;
  }

 private:
  const DiscreteWorld& w_;
};

// Counterfactual conditional mean E[M^(a) | X=x, A=1-a, G=O] by mixture inversion.
inline double cross_arm_m_mean(const DiscreteWorld& w, int a, int x) {
  Table t(w);
  double pa = a == 1 ? t.pi(kO, x) : 1 - t.pi(kO, x);
  return (t.mu_m(kE, a, x) - t.mu_m(kO, a, x) * pa) / (1 - pa);
}

inline double cross_arm_m_mean_marginal(const DiscreteWorld& w, int a) {
  Table t(w);
  double pa = t.p_arm_o(a);
  double em = t.over_o([&](const WorldCell& c) { return t.mu_m(kE, a, c.x); });
  return (em - t.m_bar(a) * pa) / (1 - pa);
}

// Nested regression for E[Y^(a) | G=O] under latent unconfoundedness.
inline double latent_theta(const DiscreteWorld& w, int a) {
  Table t(w);
  auto inner = [&](double m, int x) {
    return t.ex([](const WorldCell& c) { return c.y; }, [=](const WorldCell& c) { return c.g == kO && c.a == a && c.x == x && c.m == m; });
  };
  auto outer = [&](int x) { return t.ex([&](const WorldCell& c) { return inner(c.m, x); }, [=](const WorldCell& c) { return c.g == kE && c.a == a && c.x == x; }); };
  return t.over_o([&](const WorldCell& c) { return outer(c.x); });
}

inline double equiconf_marginal_ett(const DiscreteWorld& w) {
  Table t(w);
  return t.y_bar(1) - t.y_bar(0) + t.m_bar(0) - cross_arm_m_mean_marginal(w, 0);
}

inline double equiconf_marginal_ate(const DiscreteWorld& w) {
  Table t(w);
  double em1 = t.over_o([&](const WorldCell& c) { return t.mu_m(kE, 1, c.x); });
  double em0 = t.over_o([&](const WorldCell& c) { return t.mu_m(kE, 0, c.x); });
  return t.y_bar(1) - t.y_bar(0) + em1 - em0 - t.m_bar(1) + t.m_bar(0);
}

inline double equiconf_conditional_ett(const DiscreteWorld& w) {
  Table t(w);
  double cf0 = t.over_treated([&](const WorldCell& c) { return t.mu_y(0, c.x) + cross_arm_m_mean(w, 0, c.x) - t.mu_m(kO, 0, c.x); });
  return t.y_bar(1) - cf0;
}

inline double equiconf_conditional_ate(const DiscreteWorld& w) {
  Table t(w);
  return t.over_o([&](const WorldCell& c) {
    int x = c.x;
    return t.mu_y(1, x) - t.mu_y(0, x) + t.mu_m(kE, 1, x) - t.mu_m(kE, 0, x) + t.mu_m(kO, 0, x) - t.mu_m(kO, 1, x);
  });
}

// Influence-function representation of the ETT, averaged over the pooled population.
inline double influence_ett(const DiscreteWorld& w) {
  Table t(w);
  double p1o = t.pr([](const WorldCell& c) { return c.g == kO && c.a == 1; }, [](const WorldCell&) { return true; });
  return t.ex(
      [&](const WorldCell& c) {
        int x = c.x, A = c.a;
        double v;
        if (c.g == kO) {
          double po = t.pi(kO, x), mo = t.mu_m(kO, 0, x), yo = t.mu_y(0, x);
          v = (1 - A) / (1 - po) * (c.m - mo) - (1 - A) * po / (1 - po) * (c.y - yo) + mo - t.mu_m(kE, 0, x) + A * (c.y - yo);
        } else {
          v = -(1 - A) / (1 - t.pi(kE, x)) * (1 / t.p_e(x) - 1) * (c.m - t.mu_m(kE, 0, x));
        }
        return v / p1o;
      },
      [](const WorldCell&) { return true; });
}

inline double influence_ate(const DiscreteWorld& w) {
  Table t(w);
  double po = t.p_o();
  return t.ex(
      [&](const WorldCell& c) {
        int x = c.x, A = c.a;
        double s = A ? 1.0 : -1.0;
        if (c.g == kO) {
          double pa = A ? t.pi(kO, x) : 1 - t.pi(kO, x);
          double plug = t.mu_y(1, x) - t.mu_y(0, x) + t.mu_m(kE, 1, x) - t.mu_m(kE, 0, x) + t.mu_m(kO, 0, x) - t.mu_m(kO, 1, x);
          return (s / pa * (c.y - t.mu_y(A, x) - c.m + t.mu_m(kO, A, x)) + plug) / po;
        }
        double pa = A ? t.pi(kE, x) : 1 - t.pi(kE, x);
        return s / pa / po * (c.m - t.mu_m(kE, A, x)) * (1 / t.p_e(x) - 1);
      },
      [](const WorldCell&) { return true; });
}

// Debiased counterfactual CDF F_{Y^(0) | A=1, X=x, G=O}(y) from the three step CDFs.
inline double qq_cdf(const DiscreteWorld& w, double y, int x) {
  Table t(w);
  auto in = [=](Domain g) { return [=](const WorldCell& c) { return c.g == g && c.a == 0 && c.x == x; }; };
  double fy = t.pr([=](const WorldCell& c) { return c.y <= y; }, in(kO));
  if (fy <= 0) return 0.0;
  // Generalized inverse of F_{M | A=0, x, O} over the M support.
  double q = w.m_values.back();
  for (double m : w.m_values) {
    double fm = t.pr([=](const WorldCell& c) { return c.m <= m; }, in(kO));
    if (fm >= fy - 1e-12) {
      q = m;
      break;
    }
  }
  double fme = t.pr([=](const WorldCell& c) { return c.m <= q; }, in(kE));
  double p1 = t.pi(kO, x);
  return std::clamp((fme - (1 - p1) * fy) / p1, 0.0, 1.0);
}

// Atoms of Y among observational controls in stratum x.
inline std::vector<double> control_y_atoms(const DiscreteWorld& w, int x) {
  std::vector<double> ys;
  for (const auto& c : w.joint())
    if (c.g == kO && c.a == 0 && c.x == x) ys.push_back(c.y);
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  return ys;
}

inline double qq_ett(const DiscreteWorld& w) {
  Table t(w);
  double cf = 0;
  for (int x = 0; x < w.nx(); ++x) {
    double px = t.pr([=](const WorldCell& c) { return c.x == x; }, [](const WorldCell& c) { return c.g == kO && c.a == 1; });
    double integral = 0, prev = 0;
    for (double y : control_y_atoms(w, x)) {
      double f = qq_cdf(w, y, x);
      integral += y * (f - prev);
      prev = f;
    }
    cf += px * integral;
  }
  return t.y_bar(1) - cf;
}

// Bespoke-instrument functionals. with_m: the M-based versions; otherwise the
// variants that use Y alone in the observational domain.
inline double bsiv(const DiscreteWorld& w, bool ett, Homogeneity h, bool with_m) {
  Table t(w);
  auto P1 = [&](int z, int x) { return t.pi_z(z, x); };
  auto Pa = [&](int a, int z, int x) { return a ? P1(z, x) : 1 - P1(z, x); };
  auto Eaz = [&](int a, int z, int x) { return with_m ? t.mu_ym(a, x, z) : t.mu_y(a, x, z); };
  auto Dz = [&](int z, int x) { return Pa(1, z, x) * Eaz(1, z, x) + Pa(0, z, x) * Eaz(0, z, x); };
  auto omega = [&](int a, int x) { return with_m ? 0.0 : t.mu_m(kE, a, x, 1) - t.mu_m(kE, a, x, 0); };
  auto m_terms = [&](int z, int x) {
    if (!with_m) return 0.0;
    if (!ett) return t.mu_m(kE, 1, x, z) - t.mu_m(kE, 0, x, z);
    double p = P1(z, x);
    return t.mu_m(kO, 1, x, z) - t.mu_m(kE, 0, x, z) / p + t.mu_m(kO, 0, x, z) * (1 - p) / p;
  };
  auto value = [&](const WorldCell& c) {
    int z = c.z, x = c.x;
    double core;
    if (h == Homogeneity::Effect) {
      double rel = Pa(1, 1, x) - Pa(1, 0, x);
      double om = ett ? omega(0, x) : omega(0, x) * P1(z, x) + omega(1, x) * (1 - P1(z, x));
      core = (Dz(1, x) - Dz(0, x) - om) / rel;
    } else {
      double v = (Eaz(1, 1, x) - Eaz(0, 1, x) - Eaz(1, 0, x) + Eaz(0, 0, x)) * z + Eaz(1, 0, x) - Eaz(0, 0, x);
      double rel0 = Pa(0, 1, x) - Pa(0, 0, x);
      double b0 = Eaz(0, 1, x) - Eaz(0, 0, x) - omega(0, x);
      if (ett) {
        core = v - b0 / rel0;
      } else {
        double b1 = Eaz(1, 1, x) - Eaz(1, 0, x) - omega(1, x);
        core = v - (b0 * P1(z, x) + b1 * (1 - P1(z, x))) / rel0;
      }
    }
    return core + m_terms(z, x);
  };
  return ett ? t.over_treated(value) : t.over_o(value);
}

// Outcome and treatment bridges solved exactly per (a, x) from the 2x2
// systems E[Y | z,a,x,O] = sum_m h(m) p(m | z,a,x,O) and
// sum_z q(z) p(z | m,a,x,O) = p(m | a,x,E) / (p(m | a,x,O) p(a | x,O)).
struct ExactBridges {
  std::vector<std::vector<Eigen::Vector2d>> h, q;  // [a][x]

  double h_at(double m, int a, int x, const DiscreteWorld& w) const {
    return h[static_cast<std::size_t>(a)][static_cast<std::size_t>(x)][m == w.m_values[0] ? 0 : 1];
  }
  double q_at(int z, int a, int x) const { return q[static_cast<std::size_t>(a)][static_cast<std::size_t>(x)][z]; }
};

inline ExactBridges exact_bridges(const DiscreteWorld& w) {
  if (w.nm() != 2 || w.nz() != 2) fail(ErrorCode::InvalidSpec, "exact bridges need binary M and Z");
  Table t(w);
  ExactBridges b;
  b.h.assign(2, std::vector<Eigen::Vector2d>(static_cast<std::size_t>(w.nx())));
  b.q = b.h;
  for (int a = 0; a < 2; ++a)
    for (int x = 0; x < w.nx(); ++x) {
      auto sel = [=](const WorldCell& c) { return c.g == kO && c.a == a && c.x == x; };
      Eigen::Matrix2d pmz, pzm;
      Eigen::Vector2d ey, rhs;
      double pa = a ? t.pi(kO, x) : 1 - t.pi(kO, x);
      for (int i = 0; i < 2; ++i) {
        double mi = w.m_values[static_cast<std::size_t>(i)];
        ey[i] = t.ex([](const WorldCell& c) { return c.y; }, [=](const WorldCell& c) { return sel(c) && c.z == i; });
        double pm_e = t.pr([=](const WorldCell& c) { return c.m == mi; }, [=](const WorldCell& c) { return c.g == kE && c.a == a && c.x == x; });
        double pm_o = t.pr([=](const WorldCell& c) { return c.m == mi; }, sel);
        rhs[i] = pm_e / (pm_o * pa);
        for (int j = 0; j < 2; ++j) {
          double mj = w.m_values[static_cast<std::size_t>(j)];
          pmz(i, j) = t.pr([=](const WorldCell& c) { return c.m == mj; }, [=](const WorldCell& c) { return sel(c) && c.z == i; });
          pzm(i, j) = t.pr([=](const WorldCell& c) { return c.z == j; }, [=](const WorldCell& c) { return sel(c) && c.m == mi; });
        }
      }
      b.h[static_cast<std::size_t>(a)][static_cast<std::size_t>(x)] = pmz.fullPivLu().solve(ey);
      b.q[static_cast<std::size_t>(a)][static_cast<std::size_t>(x)] = pzm.fullPivLu().solve(rhs);
    }
  return b;
}

// E[Y^(a) | G=O] by one of the four proximal representations.
inline double proximal_theta(const DiscreteWorld& w, ProximalStrategy s, int a) {
  Table t(w);
  auto b = exact_bridges(w);
  auto h = [&](double m, int x) { return b.h_at(m, a, x, w); };
  auto pae = [&](int x) { return a ? t.pi(kE, x) : 1 - t.pi(kE, x); };
  auto eta = [&](int x) { return t.ex([&](const WorldCell& c) { return h(c.m, x); }, [=](const WorldCell& c) { return c.g == kE && c.a == a && c.x == x; }); };
  double po = t.p_o();
  auto all = [](const WorldCell&) { return true; };
  switch (s) {
    case ProximalStrategy::S1:
      return t.over_o([&](const WorldCell& c) { return eta(c.x); });
    case ProximalStrategy::S2:
      return t.ex([&](const WorldCell& c) { return c.g == kE && c.a == a ? h(c.m, c.x) / (po * pae(c.x)) * (1 / t.p_e(c.x) - 1) : 0.0; }, all);
    case ProximalStrategy::S3:
      return t.ex([&](const WorldCell& c) { return c.g == kO && c.a == a ? c.y * b.q_at(c.z, a, c.x) / po : 0.0; }, all);
    case ProximalStrategy::S4:
      return t.ex(
          [&](const WorldCell& c) {
            int x = c.x;
            if (c.g == kO) return ((c.a == a ? b.q_at(c.z, a, x) * (c.y - h(c.m, x)) : 0.0) + eta(x)) / po;
            return c.a == a ? (h(c.m, x) - eta(x)) / pae(x) * (1 / t.p_e(x) - 1) / po : 0.0;
          },
          all);
  }
  return 0.0;
}

inline double proximal(const DiscreteWorld& w, ProximalStrategy s, bool ett) {
  double t1 = proximal_theta(w, s, 1), t0 = proximal_theta(w, s, 0);
  return ett ? Table(w).ett_from_theta0(t0) : t1 - t0;
}

// Named scalar functionals; "truth-ate" and "truth-ett" enumerate the counterfactual contrasts.
inline double enumerate_functional(const DiscreteWorld& w, const std::string& tag) {
  Table t(w);
  using PS = ProximalStrategy;
  const std::vector<std::pair<std::string, std::function<double()>>> table = {
      {"truth-ate", [&] { return w.truth_ate(); }},
      {"truth-ett", [&] { return w.truth_ett(); }},
      {"naive", [&] { return t.y_bar(1) - t.y_bar(0); }},
      {"latent-ate", [&] { return latent_theta(w, 1) - latent_theta(w, 0); }},
      {"latent-ett", [&] { return t.ett_from_theta0(latent_theta(w, 0)); }},
      {"equiconf-marg-ett", [&] { return equiconf_marginal_ett(w); }},
      {"equiconf-marg-ate", [&] { return equiconf_marginal_ate(w); }},
      {"equiconf-cond-ett", [&] { return equiconf_conditional_ett(w); }},
      {"equiconf-cond-ate", [&] { return equiconf_conditional_ate(w); }},
      {"if-ett", [&] { return influence_ett(w); }},
      {"if-ate", [&] { return influence_ate(w); }},
      {"equiconf-qq-ett", [&] { return qq_ett(w); }},
      {"bsiv-ett-effect", [&] { return bsiv(w, true, Homogeneity::Effect, true); }},
      {"bsiv-ett-bias", [&] { return bsiv(w, true, Homogeneity::Bias, true); }},
      {"bsiv-ate-effect", [&] { return bsiv(w, false, Homogeneity::Effect, true); }},
      {"bsiv-ate-bias", [&] { return bsiv(w, false, Homogeneity::Bias, true); }},
      {"bsiv-ett-nom-effect", [&] { return bsiv(w, true, Homogeneity::Effect, false); }},
      {"bsiv-ett-nom-bias", [&] { return bsiv(w, true, Homogeneity::Bias, false); }},
      {"bsiv-ate-nom-effect", [&] { return bsiv(w, false, Homogeneity::Effect, false); }},
      {"bsiv-ate-nom-bias", [&] { return bsiv(w, false, Homogeneity::Bias, false); }},
      {"proximal-s1-ate", [&] { return proximal(w, PS::S1, false); }},
      {"proximal-s2-ate", [&] { return proximal(w, PS::S2, false); }},
      {"proximal-s3-ate", [&] { return proximal(w, PS::S3, false); }},
      {"proximal-s4-ate", [&] { return proximal(w, PS::S4, false); }},
      {"proximal-s1-ett", [&] { return proximal(w, PS::S1, true); }},
      {"proximal-s2-ett", [&] { return proximal(w, PS::S2, true); }},
      {"proximal-s3-ett", [&] { return proximal(w, PS::S3, true); }},
      {"proximal-s4-ett", [&] { return proximal(w, PS::S4, true); }},
  };
  for (const auto& [k, f] : table)
    if (k == tag) return f();
  fail(ErrorCode::InvalidSpec, "unknown functional '" + tag + "'");
}

}  // namespace fusioncausal::oracle
