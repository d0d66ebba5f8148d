// Acceptance suite: one PASS/FAIL line per criterion; exit status is the number of failures.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "test_util.hpp"

using namespace fctest;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void verdict(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("criterion %d %s %s: %s\n", id, pass ? "PASS" : "FAIL", what.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

ProximalConfig unregularized() {
  ProximalConfig pc;
  pc.lambda_h = pc.lambda_q = pc.lambda_f = 0;
  return pc;
}

// ---------------------------------------------------------------------------
// Criterion 1: identification formulas and estimators on population tables.

void oracle_exactness() {
  auto t0 = Clock::now();
  double worst = 0;
  std::string worst_tag;
  int checks = 0;
  auto check = [&](const std::string& tag, double value, double truth) {
    double dev = std::abs(value - truth);
    ++checks;
    if (!(dev <= worst)) worst = dev, worst_tag = tag;
  };
  auto cfg = population_config();

  {
    auto w = worlds::toy1();
    for (int a = 0; a < 2; ++a) {
      for (int x = 0; x < w.nx(); ++x)
        check("cross_arm_m_mean", oracle::cross_arm_m_mean(w, a, x),
              w.cf_mean('M', a, [=](int, int xx, int, Domain g, int A) { return g == kO && xx == x && A == 1 - a; }));
      check("cross_arm_m_mean_marginal", oracle::cross_arm_m_mean_marginal(w, a), w.cf_mean('M', a, [=](int, int, int, Domain g, int A) { return g == kO && A == 1 - a; }));
    }
  }
  {
    auto w = worlds::toy_latent();
    auto d = w.population();
    check("latent-ate", oracle::enumerate_functional(w, "latent-ate"), w.truth_ate());
    check("latent-ett", oracle::enumerate_functional(w, "latent-ett"), w.truth_ett());
    check("latent-ate-est", ate_latent_unconf(d, cfg).estimate, w.truth_ate());
    check("latent-ett-est", ett_latent_unconf(d, cfg).estimate, w.truth_ett());
  }
  {
    auto w = worlds::toy_equiconf();
    auto d = w.population();
    check("equiconf-marg-ett", oracle::enumerate_functional(w, "equiconf-marg-ett"), w.truth_ett());
    check("equiconf-marg-ate", oracle::enumerate_functional(w, "equiconf-marg-ate"), w.truth_ate());
    check("equiconf-marg-ett-est", ett_equiconf_marginal(d, cfg).estimate, w.truth_ett());
    check("equiconf-marg-ate-est", ate_equiconf_marginal(d, cfg).estimate, w.truth_ate());
  }
  for (auto name : {"toy_equiconf", "toy_equiconf_conditional"}) {
    auto w = worlds::by_name(name);
    auto d = w.population();
    for (auto tag : {"equiconf-cond-ett", "equiconf-cond-ate", "if-ett", "if-ate"})
      check(tag, oracle::enumerate_functional(w, tag), std::string(tag).ends_with("ett") ? w.truth_ett() : w.truth_ate());
    check("equiconf-cond-ett-est", ett_equiconf_conditional(d, cfg).estimate, w.truth_ett());
    check("equiconf-cond-ate-est", ate_equiconf_conditional(d, cfg).estimate, w.truth_ate());
    check("if-ett-est", if_ett_equiconf(d, cfg).estimate, w.truth_ett());
    check("if-ate-est", if_ate_equiconf(d, cfg).estimate, w.truth_ate());
  }
  {
    auto w = worlds::toy_quantile();
    check("equiconf-qq-ett", oracle::enumerate_functional(w, "equiconf-qq-ett"), w.truth_ett());
    check("equiconf-qq-ett-est", ett_equiconf_qq(w.population(), cfg, CdfRule::Step).estimate, w.truth_ett());
  }
  {
    auto w = worlds::toy_instrument();
    auto d = w.population();
    for (auto h : {Homogeneity::Effect, Homogeneity::Bias})
      for (bool ett : {false, true})
        for (bool with_m : {true, false}) {
          std::string tag = std::string("bsiv-") + (ett ? "ett" : "ate") + (with_m ? "" : "-nom") + "-" + to_string(h);
          double truth = ett ? w.truth_ett() : w.truth_ate();
          BsivConfig bc;
          bc.homogeneity = h;
          check(tag, oracle::enumerate_functional(w, tag), truth);
          check(tag + "-est", estimate_bsiv(d, ett ? Estimand::Ett : Estimand::Ate, with_m, cfg, bc).estimate, truth);
        }
  }
  {
    auto w = worlds::toy_proxy();
    auto d = w.population();
    for (auto s : {ProximalStrategy::S1, ProximalStrategy::S2, ProximalStrategy::S3, ProximalStrategy::S4})
      for (auto e : {Estimand::Ate, Estimand::Ett}) {
        std::string tag = std::string("proximal-") + to_string(s) + "-" + to_string(e);
        double truth = e == Estimand::Ate ? w.truth_ate() : w.truth_ett();
        check(tag, oracle::enumerate_functional(w, tag), truth);
        check(tag + "-est", estimate_proximal(d, s, e, cfg, unregularized()).estimate, truth);
      }
  }
  double secs = seconds_since(t0);
  verdict(1, worst <= 1e-10 && secs < 10.0, "oracle exactness",
          std::to_string(checks) + " checks, max |dev|=" + num(worst, 3) + " (" + worst_tag + "), " + num(secs, 3) + "s");
}

// ---------------------------------------------------------------------------
// Shared Monte Carlo: each family is replicated at two sample sizes; the
// estimators of a family share each simulated dataset.

struct Draw {
  double estimate, se;
};

using Estimators = std::vector<std::pair<std::string, std::function<Draw(const FusedDataset&)>>>;

struct Family {
  DgpTag tag;
  Estimators estimators;
};

Draw plain(const EstimateReport& r) { return {r.estimate, r.se.value_or(kNaN)}; }

std::vector<Family> families() {
  using PS = ProximalStrategy;
  return {
      {DgpTag::EquiConfMarg,
       {{"equiconf-marg-ett", [](const FusedDataset& d) { return plain(ett_equiconf_marginal(d, {})); }},
        {"equiconf-marg-ate", [](const FusedDataset& d) { return plain(ate_equiconf_marginal(d, {})); }}}},
      {DgpTag::EquiConfCond,
       {{"equiconf-cond-ett", [](const FusedDataset& d) { return plain(ett_equiconf_conditional(d, {})); }},
        {"equiconf-cond-ate", [](const FusedDataset& d) { return plain(ate_equiconf_conditional(d, {})); }},
        {"equiconf-if-ett", [](const FusedDataset& d) { return plain(if_ett_equiconf(d, {})); }},
        {"equiconf-if-ate", [](const FusedDataset& d) { return plain(if_ate_equiconf(d, {})); }}}},
      {DgpTag::Qq,
       {{"equiconf-qq-ett", [](const FusedDataset& d) { return plain(ett_equiconf_qq(d, {})); }},
        {"equiconf-cond-ett", [](const FusedDataset& d) { return plain(ett_equiconf_conditional(d, {})); }}}},
      {DgpTag::Bsiv,
       {{"bsiv-ate", [](const FusedDataset& d) { return plain(ate_bsiv(d, {})); }},
        {"bsiv-ett", [](const FusedDataset& d) { return plain(ett_bsiv(d, {})); }}}},
      {DgpTag::Proximal,
       {{"proximal-s1-ate", [](const FusedDataset& d) { return plain(ate_proximal(d, PS::S1, {})); }},
        {"proximal-s4-ate", [](const FusedDataset& d) { return plain(ate_proximal(d, PS::S4, {})); }},
        {"proximal-s4-ett", [](const FusedDataset& d) { return plain(ett_proximal(d, PS::S4, {})); }}}},
  };
}

struct Series {
  std::vector<double> est, se;
};

// Independent seed streams per family, sample size and replication.
std::uint64_t family_seed(DgpTag tag, Index n, int r) {
  std::uint64_t h = 0xACCE55ULL;
  for (char ch : std::string(to_string(tag))) h = splitmix64(h ^ static_cast<unsigned char>(ch));
  return splitmix64(h ^ splitmix64(static_cast<std::uint64_t>(n)) ^ static_cast<std::uint64_t>(r));
}

// results[dgp][n][estimator]
using McResults = std::map<std::string, std::map<Index, std::map<std::string, Series>>>;

McResults run_monte_carlo(int reps, const std::vector<Index>& sizes) {
  McResults out;
  for (const auto& fam : families())
    for (Index n : sizes) {
      auto& slot = out[to_string(fam.tag)][n];
      for (int r = 0; r < reps; ++r) {
        auto d = generate(dgp(fam.tag, n, family_seed(fam.tag, n, r)));
        for (const auto& [name, f] : fam.estimators) {
          auto dr = f(d);
          slot[name].est.push_back(dr.estimate);
          slot[name].se.push_back(dr.se);
        }
      }
    }
  return out;
}

double closed_truth(DgpTag tag, const std::string& estimator) {
  auto t = ground_truth(dgp(tag, 10, 1), TruthMethod::ClosedForm);
  return estimator.ends_with("ett") ? t.ett : t.ate;
}

void monte_carlo_consistency(const McResults& mc) {
  bool ok = true;
  std::string detail;
  for (const auto& fam : families()) {
    const auto& by_n = mc.at(to_string(fam.tag));
    for (const auto& [name, f] : fam.estimators) {
      if (fam.tag == DgpTag::Qq && name != "equiconf-qq-ett") continue;
      double truth = closed_truth(fam.tag, name);
      auto big = summarize(by_n.at(50000).at(name).est), small = summarize(by_n.at(12500).at(name).est);
      double ratio = small.sd / big.sd;
      bool pass = big.within(truth, 2.0) && ratio >= 1.8;
      ok = ok && pass;
      std::printf("  mc %-18s dgp=%-14s bias=%-11s se=%-10s bias/se=%-7s sd_ratio=%-6s %s\n", name.c_str(), to_string(fam.tag),
                  num(big.bias(truth)).c_str(), num(big.se).c_str(), num(big.bias(truth) / big.se, 3).c_str(), num(ratio, 3).c_str(),
                  pass ? "ok" : "MISS");
      if (!pass) detail += (detail.empty() ? "" : ", ") + name;
    }
  }
  verdict(2, ok, "Monte Carlo consistency", ok ? "all estimators within 2 SE with sd ratio >= 1.8" : "missed: " + detail);
}

// ---------------------------------------------------------------------------
// Criteria 3 and 4: multiple-robustness audits.

void robustness_audit(int id, AuditFamily family, DgpTag tag) {
  auto t0 = Clock::now();
  AuditSpec spec;
  spec.family = family;
  spec.estimand = Estimand::Ett;
  spec.reps = 200;
  spec.dgp = dgp(tag, 50000, 20240);
  auto rep = audit_multiple_robustness(spec, {});
  std::printf("%s", serialize(rep).c_str());
  bool ok = true;
  int passing = 0;
  for (const auto& row : rep.rows) {
    if (row.set.name == "control") continue;
    if (row.set.expect_pass) {
      ok = ok && row.pass;
      passing += row.pass;
    } else {
      ok = ok && std::abs(row.bias) > 4.0 * row.mc_se;
    }
  }
  const auto& corrupt = rep.rows.back();
  verdict(id, ok, family == AuditFamily::Equiconf ? "equi-confounding robustness audit" : "proximal robustness audit",
          std::to_string(passing) + " sets pass, all-corrupt bias/mc_se=" + num(corrupt.bias / corrupt.mc_se, 3) + ", " +
              num(seconds_since(t0), 3) + "s");
}

// ---------------------------------------------------------------------------
// Criterion 5: influence-function self-consistency and coverage.

void influence_function(const McResults& mc) {
  double worst_rel = 0, worst_center = 0;
  auto inspect = [&](const EstimateReport& r) {
    double mean = r.contributions.mean();
    worst_rel = std::max(worst_rel, std::abs(mean - r.estimate) / std::max(1.0, std::abs(r.estimate)));
    worst_center = std::max(worst_center, std::abs((r.contributions.array() - r.estimate).mean()));
  };
  {
    auto d = generate(dgp(DgpTag::EquiConfCond, 20000, 5));
    inspect(if_ett_equiconf(d, {}));
    inspect(if_ate_equiconf(d, {}));
  }
  {
    auto d = generate(dgp(DgpTag::Proximal, 20000, 5));
    for (auto s : {ProximalStrategy::S1, ProximalStrategy::S2, ProximalStrategy::S3, ProximalStrategy::S4})
      for (auto e : {Estimand::Ate, Estimand::Ett}) inspect(estimate_proximal(d, s, e, {}, {}));
    for (int a = 0; a < 2; ++a) inspect(if_proximal(d, a, {}));
  }
  bool ok = worst_rel <= 1e-12 && worst_center <= 1e-12;
  std::string detail = "max rel |mean-estimate|=" + num(worst_rel, 3) + ", max |centered mean|=" + num(worst_center, 3);
  for (auto [tag, name] : {std::pair{DgpTag::EquiConfCond, "equiconf-if-ett"}, std::pair{DgpTag::EquiConfCond, "equiconf-if-ate"},
                           std::pair{DgpTag::Proximal, "proximal-s4-ate"}, std::pair{DgpTag::Proximal, "proximal-s4-ett"}}) {
    const auto& s = mc.at(to_string(tag)).at(50000).at(name);
    double truth = closed_truth(tag, name);
    int covered = 0;
    for (std::size_t r = 0; r < s.est.size(); ++r) covered += std::abs(s.est[r] - truth) <= 1.959963984540054 * s.se[r];
    double rate = static_cast<double>(covered) / static_cast<double>(s.est.size());
    ok = ok && rate >= 0.90 && rate <= 0.99;
    detail += ", " + std::string(name) + " coverage=" + num(rate, 3);
  }
  verdict(5, ok, "influence-function self-consistency", detail);
}

// ---------------------------------------------------------------------------
// Criterion 6: bridge solvers.

// Exact bridges of a binary-M, binary-Z table estimated by weighted cell frequencies.
oracle::ExactBridges empirical_bridges(const FusedDataset& d, const DiscreteWorld& w) {
  oracle::ExactBridges b;
  b.h.assign(2, std::vector<Eigen::Vector2d>(static_cast<std::size_t>(w.nx())));
  b.q = b.h;
  auto zi = [&](double z) { return z == w.z_values[0] ? 0 : 1; };
  auto mi = [&](double m) { return m == w.m_values[0] ? 0 : 1; };
  for (int x = 0; x < w.nx(); ++x) {
    double xv = w.x_values[static_cast<std::size_t>(x)];
    double n_o = 0, n_oa[2] = {0, 0};
    double n_zm[2][2][2] = {}, y_z[2][2] = {}, n_me[2][2] = {};
    for (Index i = 0; i < d.size(); ++i) {
      if (d.x(i, 0) != xv) continue;
      int a = d.arm(i);
      double wt = d.w[i];
      if (d.is_o(i)) {
        n_o += wt;
        n_oa[a] += wt;
        n_zm[a][zi(d.z[i])][mi(d.m[i])] += wt;
        y_z[a][zi(d.z[i])] += wt * d.y[i];
      } else {
        n_me[a][mi(d.m[i])] += wt;
      }
    }
    for (int a = 0; a < 2; ++a) {
      Eigen::Matrix2d pmz, pzm;
      Eigen::Vector2d ey, rhs;
      for (int i = 0; i < 2; ++i) {
        double nz = n_zm[a][i][0] + n_zm[a][i][1], nm = n_zm[a][0][i] + n_zm[a][1][i];
        ey[i] = y_z[a][i] / nz;
        rhs[i] = (n_me[a][i] / (n_me[a][0] + n_me[a][1])) / ((nm / n_oa[a]) * (n_oa[a] / n_o));
        for (int j = 0; j < 2; ++j) {
          pmz(i, j) = n_zm[a][i][j] / nz;
          pzm(i, j) = n_zm[a][j][i] / nm;
        }
      }
      b.h[static_cast<std::size_t>(a)][static_cast<std::size_t>(x)] = pmz.fullPivLu().solve(ey);
      b.q[static_cast<std::size_t>(a)][static_cast<std::size_t>(x)] = pzm.fullPivLu().solve(rhs);
    }
  }
  return b;
}

void bridge_solvers() {
  bool ok = true;
  std::string detail;
  {
    auto spec = dgp(DgpTag::Proximal, 20000, 61);
    auto d = canonical(generate(spec));
    auto test = generate_units(dgp(DgpTag::Proximal, 20000, 62), 20000);
    NuisanceConfig cfg;
    auto dom = fit_propensity(d, PropensityKind::Domain, cfg);
    auto pe = fit_propensity(d, PropensityKind::TreatmentInE, cfg);
    for (int a = 0; a < 2; ++a) {
      auto h = solve_bridge_h(d, a, cfg);
      auto q = solve_bridge_q(d, a, dom, pe, cfg);
      double sh = 0, sq = 0;
      int k = 0;
      for (Index i = 0; i < test.size(); ++i) {
        if (test.g[static_cast<std::size_t>(i)] != kO || test.a[static_cast<std::size_t>(i)] != a) continue;
        double m = a ? test.m1[i] : test.m0[i];
        double dh = h(m, test.x.row(i)) - proximal_true_h(spec, m, a, test.x(i, 0), test.x(i, 1));
        double dq = q(test.z[i], test.x.row(i)) - proximal_true_q(spec, test.z[i], a, test.x(i, 0));
        sh += dh * dh, sq += dq * dq, ++k;
      }
      double rh = std::sqrt(sh / k), rq = std::sqrt(sq / k);
      ok = ok && rh <= 0.05 && rq <= 0.05;
      detail += "arm" + std::to_string(a) + " h_rmse=" + num(rh, 3) + " q_rmse=" + num(rq, 3) + ", ";
    }
  }
  {
    auto w = worlds::toy_proxy();
    DgpSpec s = dgp(DgpTag::DiscreteToy, 1000000, 63);
    s.world = "toy_proxy";
    auto d = canonical(generate(s));
    auto cfg = population_config();
    auto dom = fit_propensity(d, PropensityKind::Domain, cfg);
    auto pe = fit_propensity(d, PropensityKind::TreatmentInE, cfg);
    auto sample_exact = empirical_bridges(d, w);
    auto population_exact = oracle::exact_bridges(w);
    double dev = 0, pop_dev = 0;
    for (int a = 0; a < 2; ++a) {
      auto h = solve_bridge_h(d, a, cfg);
      auto q = solve_bridge_q(d, a, dom, pe, cfg);
      for (int x = 0; x < w.nx(); ++x) {
        Eigen::RowVectorXd xr(1);
        xr << w.x_values[static_cast<std::size_t>(x)];
        for (int i = 0; i < 2; ++i) {
          double m = w.m_values[static_cast<std::size_t>(i)], z = w.z_values[static_cast<std::size_t>(i)];
          dev = std::max({dev, std::abs(h(m, xr) - sample_exact.h_at(m, a, x, w)), std::abs(q(z, xr) - sample_exact.q_at(i, a, x))});
          pop_dev = std::max({pop_dev, std::abs(h(m, xr) - population_exact.h_at(m, a, x, w)),
                              std::abs(q(z, xr) - population_exact.q_at(i, a, x))});
        }
      }
    }
    ok = ok && dev <= 1e-2;
    detail += "discrete max |minimax - exact solve|=" + num(dev, 3) + " (vs population bridges " + num(pop_dev, 3) + ")";
  }
  verdict(6, ok, "bridge solvers", detail);
}

// ---------------------------------------------------------------------------
// Criterion 7: quantile-quantile machinery.

void qq_machinery(const McResults& mc) {
  auto spec = dgp(DgpTag::Qq, 100000, 71);
  auto d = canonical(generate(spec));
  auto q = fit_qq(d, {});
  auto sim = generate_units(dgp(DgpTag::Qq, 2000000, 72), 2000000);
  double ks = 0;
  for (double x0 : {0.0, 1.0}) {
    std::vector<double> ys;
    for (Index i = 0; i < sim.size(); ++i)
      if (sim.g[static_cast<std::size_t>(i)] == kO && sim.a[static_cast<std::size_t>(i)] == 1 && sim.x(i, 0) == x0) ys.push_back(sim.y0[i]);
    std::sort(ys.begin(), ys.end());
    StratumKey key{x0};
    auto st = detail::qq_stratum(q, key, 1e-6);
    double run = 0;
    for (int k = 0; k <= 4000; ++k) {
      double y = -5.0 + 13.0 * k / 4000.0;
      run = std::max(run, std::clamp(detail::qq_unclamped(st, y), 0.0, 1.0));
      double truth = static_cast<double>(std::upper_bound(ys.begin(), ys.end(), y) - ys.begin()) / static_cast<double>(ys.size());
      ks = std::max(ks, std::abs(run - truth));
    }
  }
  const auto& by = mc.at(to_string(DgpTag::Qq)).at(50000);
  auto sq = summarize(by.at("equiconf-qq-ett").est), sc = summarize(by.at("equiconf-cond-ett").est);
  double gap = std::abs(sq.mean - sc.mean), band = 2.0 * std::hypot(sq.se, sc.se);
  verdict(7, ks <= 0.02 && gap <= band, "QQ machinery",
          "KS=" + num(ks, 3) + ", |qq-ett - cond-ett|=" + num(gap, 3) + " vs 2 combined SE=" + num(band, 3));
}

// ---------------------------------------------------------------------------
// Criterion 8: negative controls.

void negative_controls() {
  auto v = worlds::by_name("toy_latent_violated");
  double gap = std::abs(oracle::enumerate_functional(v, "latent-ate") - v.truth_ate());
  auto w = worlds::toy_equiconf();
  auto d = w.population();
  RunConfig rc;
  rc.nuisance.crossfit_folds = 0;
  double naive = std::abs(run_strategy(d, "naive", Estimand::Ate, rc).estimate - w.truth_ate());
  double worst = 0;
  for (auto tag : {"equiconf-marg", "equiconf-cond", "equiconf-if"})
    for (auto e : {Estimand::Ate, Estimand::Ett})
      worst = std::max(worst, std::abs(run_strategy(d, tag, e, rc).estimate - (e == Estimand::Ate ? w.truth_ate() : w.truth_ett())));
  verdict(8, gap >= 0.1 && naive >= 0.3 && worst <= 1e-10, "negative controls",
          "latent-violated gap=" + num(gap, 3) + ", naive bias=" + num(naive, 3) + ", fusion max |dev|=" + num(worst, 3));
}

// ---------------------------------------------------------------------------
// Criterion 9: byte-identical CLI reports.

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void reproducibility() {
  auto dir = fs::temp_directory_path() / "fusioncausal_acceptance";
  fs::create_directories(dir);
  auto run = [&](const std::string& args, const std::string& out) {
    std::string cmd = "\"" FUSIONCAUSAL_CLI "\" " + args + " > \"" + (dir / out).string() + "\"";
    return std::system(cmd.c_str());
  };
  std::string data = (dir / "d.csv").string();
  const std::vector<std::pair<std::string, std::string>> cmds = {
      {"simulate", "simulate --dgp proximal --n 5000 --seed 91"},
      {"estimate", "estimate --data \"" + data + "\" --strategy proximal-s4 --estimand ett --seed 92"},
      {"audit", "audit --proposition 1 --n 5000 --reps 5 --seed 93"},
  };
  bool ok = true;
  std::string detail;
  for (int round = 0; round < 2; ++round)
    for (const auto& [name, args] : cmds) {
      if (name == "estimate" && run("simulate --dgp proximal --n 5000 --seed 91 --out \"" + data + "\"", "sim.out") != 0) ok = false;
      if (run(args, name + std::to_string(round) + ".txt") != 0) ok = false;
    }
  for (const auto& [name, args] : cmds) {
    auto a = slurp(dir / (name + "0.txt")), b = slurp(dir / (name + "1.txt"));
    bool same = !a.empty() && a == b;
    ok = ok && same;
    detail += name + (same ? " identical (" + std::to_string(a.size()) + " bytes) " : " DIFFERS ");
  }
  fs::remove_all(dir);
  verdict(9, ok, "reproducibility", detail);
}

}  // namespace

int main() {
  auto t0 = Clock::now();
  oracle_exactness();
  auto mc = run_monte_carlo(200, {12500, 50000});
  monte_carlo_consistency(mc);
  robustness_audit(3, AuditFamily::Equiconf, DgpTag::EquiConfCond);
  robustness_audit(4, AuditFamily::Proximal, DgpTag::Proximal);
  influence_function(mc);
  bridge_solvers();
  qq_machinery(mc);
  negative_controls();
  reproducibility();
  std::printf("acceptance: %d of 9 criteria failed, %.1fs\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
