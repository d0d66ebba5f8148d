#include <gtest/gtest.h>

#include <sstream>

#include "test_util.hpp"

using namespace fctest;

namespace {

std::string as_csv(const FusedDataset& d) {
  std::ostringstream out;
  write_csv(out, d);
  return out.str();
}

}  // namespace

TEST(Simgen, SeedDeterminism) {
  for (auto tag : {DgpTag::LatentUnconf, DgpTag::EquiConfCond, DgpTag::Qq, DgpTag::Bsiv, DgpTag::Proximal}) {
    auto a = as_csv(generate(dgp(tag, 500, 7))), b = as_csv(generate(dgp(tag, 500, 7)));
    EXPECT_EQ(a, b) << to_string(tag);
    EXPECT_NE(a, as_csv(generate(dgp(tag, 500, 8)))) << to_string(tag);
  }
}

TEST(Simgen, ExperimentalOutcomesBlank) {
  auto d = generate(dgp(DgpTag::EquiConfMarg, 2000, 1));
  for (Index i = 0; i < d.size(); ++i) EXPECT_EQ(d.has_y(i), d.is_o(i));
}

TEST(Simgen, DomainDependsOnCovariates) {
  auto d = generate(dgp(DgpTag::EquiConfMarg, 100000, 3));
  auto share = [&](double x0) {
    double e = 0, t = 0;
    for (Index i = 0; i < d.size(); ++i)
      if (d.x(i, 0) == x0) e += d.is_e(i), t += 1;
    return e / t;
  };
  EXPECT_GT(std::abs(share(1.0) - share(0.0)), 0.05);
}

// E[M | A=a, O] = tau a + a + E[x0 | a, O] + 1.3 E[x1 | O].
TEST(Simgen, ObservationalMeansMatchStructuralEquations) {
  auto d = generate(dgp(DgpTag::EquiConfMarg, 1000000, 5));
  double e1 = expit(0.5), e0 = expit(-0.3), p1 = 0.6 * e1 + 0.4 * e0;
  double x0_given[2] = {0.6 * (1 - e1) / (1 - p1), 0.6 * e1 / p1};
  for (int a = 0; a < 2; ++a) {
    double expected = 1.0 * a + a + x0_given[a] + 1.3 * 0.25;
    View v = split(d, kO, a);
    double mean = weighted_mean(v, [&](Index i) { return d.m[i]; });
    double var = weighted_mean(v, [&](Index i) { return (d.m[i] - mean) * (d.m[i] - mean); });
    EXPECT_NEAR(mean, expected, 3 * std::sqrt(var / static_cast<double>(v.size()))) << a;
  }
}

TEST(Simgen, DiscreteFrequenciesMatchTable) {
  auto spec = dgp(DgpTag::DiscreteToy, 1000000, 9);
  spec.world = "toy1";
  auto d = generate(spec);
  auto w = worlds::toy1();
  for (Domain g : {kE, kO})
    for (int a = 0; a < 2; ++a) {
      double p = w.expect([](const WorldCell&) { return 1.0; }, [](const WorldCell&) { return true; });
      double cell = 0;
      for (const auto& c : w.joint())
        if (c.g == g && c.a == a) cell += c.p;
      double freq = empirical_prob(d, [=](Domain gg, int aa) { return gg == g && aa == a; });
      EXPECT_NEAR(p, 1.0, 1e-14);
      EXPECT_NEAR(freq, cell, 3 * std::sqrt(cell * (1 - cell) / 1e6));
    }
}

TEST(Simgen, ClosedFormTruths) {
  auto t = ground_truth(dgp(DgpTag::LatentUnconf, 10, 1), TruthMethod::ClosedForm);
  EXPECT_EQ(t.ate, 1.5);
  EXPECT_EQ(t.ett, 1.5);
  EXPECT_EQ(ground_truth(dgp(DgpTag::Proximal, 10, 1), TruthMethod::ClosedForm).ate, 1.0);
}

TEST(Simgen, CounterfactualTruthAgreesWithClosedForm) {
  auto spec = dgp(DgpTag::LatentUnconf, 10, 11);
  spec.interaction = 1.0;
  auto cf = ground_truth(spec, TruthMethod::CounterfactualMc, 1000000);
  auto closed = ground_truth(spec, TruthMethod::ClosedForm);
  ASSERT_TRUE(cf.ate_se && cf.ett_se);
  EXPECT_LE(*cf.ate_se, 0.005);
  EXPECT_LE(*cf.ett_se, 0.005);
  EXPECT_NEAR(cf.ate, closed.ate, 4 * *cf.ate_se);
  EXPECT_NEAR(cf.ett, closed.ett, 4 * *cf.ett_se);
  EXPECT_GT(std::abs(closed.ett - closed.ate), 0.1);
}

TEST(Simgen, EnumerationTruthIsExact) {
  auto spec = dgp(DgpTag::DiscreteToy, 10, 1);
  spec.world = "toy_equiconf";
  auto t = ground_truth(spec, TruthMethod::Enumeration);
  EXPECT_EQ(t.ate, worlds::toy_equiconf().truth_ate());
  EXPECT_THROW(ground_truth(dgp(DgpTag::Bsiv, 10, 1), TruthMethod::Enumeration), FusionError);
}

TEST(Simgen, ViolationIdentityAndErrors) {
  auto s = dgp(DgpTag::EquiConfMarg, 100, 1);
  EXPECT_EQ(as_csv(generate(violate(s, "equiconf-slippage", 0.0))), as_csv(generate(s)));
  try {
    violate(s, "proxy-leak", 0.5);
    FAIL();
  } catch (const FusionError& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedViolation);
  }
}

TEST(Simgen, DescribeListsJointTable) {
  auto text = describe(worlds::toy_proxy());
  EXPECT_EQ(text.rfind("world=toy_proxy\n", 0), 0u);
  EXPECT_NE(text.find("g,x,u,z,a,m,y,p"), std::string::npos);
}

TEST(Simgen, EnumeratedFunctionalsMatchCounterfactuals) {
  auto w = worlds::toy_equiconf();
  EXPECT_NEAR(oracle::enumerate_functional(w, "equiconf-marg-ett"), oracle::enumerate_functional(w, "truth-ett"), 1e-12);
  EXPECT_THROW(oracle::enumerate_functional(w, "no-such-functional"), FusionError);
}
