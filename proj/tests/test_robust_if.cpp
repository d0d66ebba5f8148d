#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace fctest;

namespace {

double contribution_mean(const EstimateReport& r) { return r.contributions.mean(); }

}  // namespace

TEST(InfluenceFunction, ExactOnTables) {
  for (auto name : {"toy_equiconf", "toy_equiconf_conditional"}) {
    auto w = worlds::by_name(name);
    auto d = w.population();
    auto cfg = population_config();
    EXPECT_NEAR(if_ett_equiconf(d, cfg).estimate, w.truth_ett(), 1e-12) << name;
    EXPECT_NEAR(if_ate_equiconf(d, cfg).estimate, w.truth_ate(), 1e-12) << name;
    EXPECT_NEAR(if_ett_equiconf(d, cfg).estimate, oracle::enumerate_functional(w, "if-ett"), 1e-12) << name;
  }
}

TEST(InfluenceFunction, ContributionsAverageToEstimate) {
  auto d = generate(dgp(DgpTag::EquiConfCond, 20000, 43));
  for (const auto& r : {if_ett_equiconf(d, {}), if_ate_equiconf(d, {})}) {
    EXPECT_NEAR(contribution_mean(r), r.estimate, 1e-12 * std::abs(r.estimate)) << r.strategy;
    ASSERT_TRUE(r.find("if.centered_mean"));
    EXPECT_LT(std::abs(std::stod(*r.find("if.centered_mean"))), 1e-12) << r.strategy;
    ASSERT_TRUE(r.se.has_value());
    EXPECT_GT(*r.se, 0);
  }
}

TEST(InfluenceFunction, ProximalContributionsAverageToEstimate) {
  auto d = generate(dgp(DgpTag::Proximal, 20000, 45));
  for (auto e : {Estimand::Ate, Estimand::Ett}) {
    auto r = estimate_proximal(d, ProximalStrategy::S4, e, {}, {});
    EXPECT_NEAR(contribution_mean(r), r.estimate, 1e-12 * std::abs(r.estimate));
    ASSERT_TRUE(r.se.has_value());
  }
  for (int a = 0; a < 2; ++a) {
    auto r = if_proximal(d, a, {});
    EXPECT_NEAR(contribution_mean(r), r.estimate, 1e-12 * std::abs(r.estimate));
  }
}

TEST(InfluenceFunction, StandardErrorTracksReplicationSd) {
  std::vector<double> est, se;
  for (int r = 0; r < 30; ++r) {
    auto rep = if_ett_equiconf(generate(dgp(DgpTag::EquiConfCond, 20000, 200 + static_cast<std::uint64_t>(r))), {});
    est.push_back(rep.estimate);
    se.push_back(*rep.se);
  }
  auto s = summarize(est);
  double mean_se = summarize(se).mean;
  EXPECT_TRUE(s.within(1.0)) << s.mean << " +- " << s.se;
  EXPECT_NEAR(mean_se / s.sd, 1.0, 0.3);
}

TEST(InfluenceFunction, NullWorldGivesZero) {
  auto spec = dgp(DgpTag::EquiConfCond, 20000, 47);
  spec.null_effect = true;
  auto s = replicate(spec, 20, [](const FusedDataset& d) { return if_ate_equiconf(d, {}).estimate; });
  EXPECT_TRUE(s.within(0.0)) << s.mean << " +- " << s.se;
}

TEST(Audit, SetStructure) {
  EXPECT_EQ(audit_sets(AuditFamily::Equiconf).size(), 6u);
  EXPECT_EQ(audit_sets(AuditFamily::Proximal).size(), 5u);
  for (auto f : {AuditFamily::Equiconf, AuditFamily::Proximal}) {
    auto sets = audit_sets(f);
    EXPECT_EQ(sets.front().name, "control");
    EXPECT_EQ(sets.back().name, "all-corrupt");
    EXPECT_FALSE(sets.back().expect_pass);
  }
}

TEST(Audit, SmallEquiconfRun) {
  AuditSpec spec;
  spec.family = AuditFamily::Equiconf;
  spec.reps = 10;
  spec.dgp = dgp(DgpTag::EquiConfCond, 20000, 49);
  auto rep = audit_multiple_robustness(spec, {});
  ASSERT_EQ(rep.rows.size(), 6u);
  EXPECT_TRUE(rep.rows.front().pass);
  EXPECT_FALSE(rep.rows.back().pass);
  auto text = serialize(rep);
  EXPECT_EQ(text.rfind("audit family=equiconf", 0), 0u);
  EXPECT_EQ(text, serialize(audit_multiple_robustness(spec, {})));
}

// The nested-regression baseline has no robustness: an affine corruption of
// the inner regression moves the estimate.
TEST(Audit, LatentBaselineNotRobust) {
  std::vector<double> est;
  for (int r = 0; r < 10; ++r) {
    auto d = canonical(generate(dgp(DgpTag::LatentUnconf, 20000, 300 + static_cast<std::uint64_t>(r))));
    double theta[2];
    for (int a = 0; a < 2; ++a) {
      auto nr = NestedRegression::fit(d, a, {});
      View e = split(d, kE, a);
      Vec pseudo(e.size());
      Mat xe = covariates(e);
      for (Index k = 0; k < e.size(); ++k) pseudo[k] = 0.5 * nr.inner(d.m[e.rows[static_cast<std::size_t>(k)]], xe.row(k)) + 1.0;
      auto outer = Regressor::fit(xe, pseudo, weights(e), NuisanceConfig{}.features(), -1.0);
      theta[a] = weighted_mean(split(d, kO), [&](Index i) { return outer.predict(d.x.row(i)); });
    }
    est.push_back(theta[1] - theta[0]);
  }
  auto s = summarize(est);
  EXPECT_GT(std::abs(s.mean - 1.5), 4 * s.se);
}

// Offsetting the control-arm outcome regression by rho and the observational
// propensity by rho on the logit scale moves the ETT by a product term.
TEST(InfluenceFunction, PairedNuisanceErrorsGiveSecondOrderBias) {
  double shift[2] = {0, 0};
  for (int r = 0; r < 200; ++r) {
    auto d = canonical(generate(dgp(DgpTag::EquiConfCond, 5000, splitmix64(400 + static_cast<std::uint64_t>(r)))));
    auto ev = evaluate_equiconf(d, {}, 5);
    double base = if_ett_from_evals(d, ev).estimate;
    for (int k = 0; k < 2; ++k) {
      double rho = 0.1 * (k + 1);
      auto e = ev;
      e.y_o[0].array() += rho;
      for (Index i = 0; i < d.size(); ++i) e.pi_o[i] = expit(std::log(e.pi_o[i] / (1 - e.pi_o[i])) + rho);
      shift[k] += (if_ett_from_evals(d, e).estimate - base) / 200;
    }
  }
  EXPECT_GT(std::abs(shift[0]), 0.0);
  EXPECT_GE(shift[1] / shift[0], 3.0) << shift[0] << " " << shift[1];
}
