#include <gtest/gtest.h>

#include "fusioncausal/worlds.hpp"

using namespace fusioncausal;

TEST(Worlds, AllCertify) {
  for (const auto& n : worlds::names()) {
    auto w = worlds::by_name(n);
    EXPECT_NEAR(w.total_mass(), 1.0, 1e-14) << n;
    EXPECT_LE(w.certificate_residual(), 1e-14) << n;
  }
}
