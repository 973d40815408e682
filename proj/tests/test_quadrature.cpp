#include <cmath>

#include <gtest/gtest.h>

#include "psurv/quadrature.hpp"

using namespace psurv;

TEST(Quadrature, PolynomialIsExact) {
  const auto r = integrate([](double x) { return 3 * x * x + 2 * x + 1; }, 0.0, 2.0);
  EXPECT_NEAR(r.value, 8 + 4 + 2, 1e-13);
  EXPECT_TRUE(r.converged);
}

TEST(Quadrature, LogSingularityConverges) {
  // int_0^1 -log(x) dx = 1
  const auto r = integrate([](double x) { return -std::log(x); }, 0.0, 1.0, {1e-10, 0.0, 4000, 1e12});
  EXPECT_NEAR(r.value, 1.0, 1e-9);
}

TEST(Quadrature, BreakpointsHandleJumps) {
  auto step = [](double x) { return x < 0.3 ? 1.0 : 5.0; };
  const auto r = integrate(step, 0.0, 1.0, {}, {0.3});
  EXPECT_NEAR(r.value, 0.3 + 3.5, 1e-12);
}

TEST(Quadrature, ReversedAndEmptyRanges) {
  EXPECT_EQ(integrate([](double) { return 1.0; }, 0.5, 0.5).value, 0.0);
  EXPECT_NEAR(integrate([](double x) { return x; }, 1.0, 0.0).value, -0.5, 1e-14);
}

TEST(Quadrature, BlowUpIsReported) {
  EXPECT_THROW(integrate([](double x) { return 1.0 / (1.0 - x); }, 0.0, 1.0), DivergenceError);
  EXPECT_THROW(integrate([](double) { return std::nan(""); }, 0.0, 1.0), DivergenceError);
}

TEST(Quadrature, ToleranceIsRespected) {
  // int_0^1 sqrt(x) dx = 2/3 with a kink at 0.
  const auto r = integrate([](double x) { return std::sqrt(x); }, 0.0, 1.0, {1e-12, 0.0, 4000, 1e12});
  EXPECT_NEAR(r.value, 2.0 / 3.0, 1e-11);
  EXPECT_LE(r.error, 1e-12);
}
