#include <gtest/gtest.h>

#include <cmath>

#include "rspec/random.hpp"
#include "rspec/units.hpp"

namespace {

TEST(Units, WavelengthRoundTrip) {
  for (double nm : {457.9, 850.0, 915.8, 1550.0}) {
    EXPECT_NEAR(rspec::nm_from_omega(rspec::omega_from_nm(nm)), nm, 1e-12 * nm);
  }
}

TEST(Units, WidthConversionIsFirstOrderDerivative) {
  const double center = 850.0;
  const double dw = rspec::omega_width_from_nm(0.01, center);
  const double exact = rspec::omega_from_nm(center - 0.005) - rspec::omega_from_nm(center + 0.005);
  EXPECT_NEAR(dw, exact, 1e-8 * exact);
  EXPECT_NEAR(rspec::nm_width_from_omega(dw, center), 0.01, 1e-15);
}

TEST(Units, PicosecondRounding) {
  EXPECT_EQ(rspec::to_ps(1.0), 1'000'000'000'000);
  EXPECT_EQ(rspec::to_ps(0.4e-12), 0);
  EXPECT_EQ(rspec::to_ps(0.6e-12), 1);
  EXPECT_EQ(rspec::to_ps(-2.6e-12), -3);
}

TEST(Random, DerivedSeedsDiffer) {
  EXPECT_NE(rspec::derive_seed(1, 0), rspec::derive_seed(1, 1));
  EXPECT_NE(rspec::derive_seed(1, 0), rspec::derive_seed(2, 0));
  static_assert(rspec::derive_seed(7, 3) == rspec::derive_seed(7, 3));
}

TEST(Random, UniformRangeAndMoments) {
  rspec::Rng rng(42);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12, 0.002);
}

TEST(Random, NormalMoments) {
  rspec::Rng rng(7);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

}  // namespace
