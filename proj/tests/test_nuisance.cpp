#include <gtest/gtest.h>

#include "fusioncausal/nuisance.hpp"

using namespace fusioncausal;

TEST(Nuisance, EcdfStepConvention) {
  EmpiricalCdf f({{1, 1}, {2, 1}, {3, 1}, {4, 1}}, CdfRule::Step);
  EXPECT_DOUBLE_EQ(f.cdf(2.5), 0.5);
  EXPECT_DOUBLE_EQ(f.cdf(0.0), 0.0);
  EXPECT_DOUBLE_EQ(f.cdf(4.0), 1.0);
  EXPECT_DOUBLE_EQ(f.quantile(0.5), 2.0);
}

TEST(Nuisance, LinearRegressionRecoversNoiselessTruth) {
  Mat X(50, 2);
  Vec y(50), w = Vec::Ones(50);
  Rng r(3);
  for (Index i = 0; i < 50; ++i) {
    X(i, 0) = r.normal();
    X(i, 1) = r.normal();
    y[i] = 1.0 + 2.0 * X(i, 0) - 0.5 * X(i, 1);
  }
  auto f = Regressor::fit(X, y, w, FeatureConfig{});
  Eigen::RowVector2d u(0.3, -1.2);
  EXPECT_NEAR(f.predict(u), 1.0 + 0.6 + 0.6, 1e-10);
}

TEST(Nuisance, LogisticIsClippedToTrim) {
  Mat X(200, 1);
  Vec y(200), w = Vec::Ones(200);
  Rng r(5);
  for (Index i = 0; i < 200; ++i) {
    X(i, 0) = r.normal();
    y[i] = r.bernoulli(expit(3 * X(i, 0))) ? 1 : 0;
  }
  auto c = Classifier::fit(X, y, w, FeatureConfig{}, 0.05);
  Eigen::RowVectorXd far(1);
  far[0] = 10;
  EXPECT_DOUBLE_EQ(c.predict(far), 0.95);
  EXPECT_TRUE(c.converged());
}

TEST(Nuisance, OneClassRaises) {
  Mat X = Mat::Zero(5, 1);
  Vec y = Vec::Zero(5), w = Vec::Ones(5);
  EXPECT_THROW(Classifier::fit(X, y, w, FeatureConfig{}, 0.01), FusionError);
}
