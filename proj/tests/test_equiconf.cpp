#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace fctest;

TEST(Equiconf, CounterfactualMeanArithmetic) { EXPECT_NEAR(cf_mean_m_conditional(1.0, 0.4, 0.5), 1.6, 1e-15); }

TEST(Equiconf, CounterfactualMeanMatchesTable) {
  auto w = worlds::toy1();
  for (int a = 0; a < 2; ++a)
    for (int x = 0; x < w.nx(); ++x) {
      double truth = w.cf_mean('M', a, [=](int, int xx, int, Domain g, int A) { return g == kO && xx == x && A == 1 - a; });
      EXPECT_NEAR(oracle::cross_arm_m_mean(w, a, x), truth, 1e-12) << a << x;
    }
}

TEST(Equiconf, MarginalExactOnTable) {
  auto w = worlds::toy_equiconf();
  auto d = w.population();
  auto cfg = population_config();
  EXPECT_NEAR(ett_equiconf_marginal(d, cfg).estimate, w.truth_ett(), 1e-12);
  EXPECT_NEAR(ate_equiconf_marginal(d, cfg).estimate, w.truth_ate(), 1e-12);
}

TEST(Equiconf, ConditionalExactOnTable) {
  for (auto name : {"toy_equiconf", "toy_equiconf_conditional"}) {
    auto w = worlds::by_name(name);
    auto d = w.population();
    auto cfg = population_config();
    EXPECT_NEAR(ett_equiconf_conditional(d, cfg).estimate, w.truth_ett(), 1e-12) << name;
    EXPECT_NEAR(ate_equiconf_conditional(d, cfg).estimate, w.truth_ate(), 1e-12) << name;
  }
}

TEST(Equiconf, MarginalFormulaBiasedWhenOnlyConditionalHolds) {
  auto w = worlds::toy_equiconf_conditional();
  auto d = w.population();
  double est = ett_equiconf_marginal(d, population_config()).estimate;
  EXPECT_NEAR(est, oracle::enumerate_functional(w, "equiconf-marg-ett"), 1e-12);
  EXPECT_GT(std::abs(est - w.truth_ett()), 1e-3);
}

TEST(Equiconf, MarginalDgpConsistent) {
  auto s = replicate(dgp(DgpTag::EquiConfMarg, 20000, 11), 20, [](const FusedDataset& d) { return ett_equiconf_marginal(d, {}).estimate; });
  EXPECT_TRUE(s.within(2.0)) << s.mean << " +- " << s.se;
}

TEST(Equiconf, ConditionalDgpConsistent) {
  auto s = replicate(dgp(DgpTag::EquiConfCond, 20000, 13), 20, [](const FusedDataset& d) { return ett_equiconf_conditional(d, {}).estimate; });
  EXPECT_TRUE(s.within(1.0)) << s.mean << " +- " << s.se;
}

TEST(Equiconf, NullEffectGivesZero) {
  auto spec = dgp(DgpTag::EquiConfMarg, 20000, 15);
  spec.null_effect = true;
  auto s = replicate(spec, 20, [](const FusedDataset& d) { return ate_equiconf_marginal(d, {}).estimate; });
  EXPECT_TRUE(s.within(0.0)) << s.mean << " +- " << s.se;
}

TEST(Equiconf, SlippageBiasMatchesAnalytic) {
  auto spec = violate(dgp(DgpTag::EquiConfMarg, 50000, 17), "equiconf-slippage", 0.5);
  double expected = 2.0 + equiconf_slippage_bias(spec);
  auto s = replicate(spec, 20, [](const FusedDataset& d) { return ett_equiconf_marginal(d, {}).estimate; });
  EXPECT_TRUE(s.within(expected, 3.0)) << s.mean << " vs " << expected;
}

TEST(Qq, StepRuleExactOnTable) {
  auto w = worlds::toy_quantile();
  auto d = w.population();
  double est = ett_equiconf_qq(d, population_config(), CdfRule::Step).estimate;
  EXPECT_NEAR(est, oracle::enumerate_functional(w, "equiconf-qq-ett"), 1e-12);
  EXPECT_NEAR(est, w.truth_ett(), 1e-12);
}

TEST(Qq, CdfBoundaries) {
  auto d = generate(dgp(DgpTag::Qq, 5000, 19));
  auto q = fit_qq(canonical(d), {});
  StratumKey x(static_cast<std::size_t>(d.dim()), 0.0);
  EXPECT_EQ(qq_counterfactual_cdf(q, -1e9, x), 0.0);
  EXPECT_EQ(qq_counterfactual_cdf(q, 1e9, x), 1.0);
}

TEST(Qq, MonotoneDgpConsistent) {
  auto s = replicate(dgp(DgpTag::Qq, 20000, 21), 10, [](const FusedDataset& d) { return ett_equiconf_qq(d, {}).estimate; });
  EXPECT_TRUE(s.within(1.0, 3.0)) << s.mean << " +- " << s.se;
}

TEST(Qq, RejectsAte) { EXPECT_THROW(validate_strategy("equiconf-qq", Estimand::Ate), FusionError); }
