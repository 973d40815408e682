#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "psurv/model.hpp"
#include "psurv/stats.hpp"

using namespace psurv;

namespace {

const auto kUniform = AttributeDistribution::uniform(0.0, 1.0);
const auto kExpo = AttributeDistribution::exponential(1.0);
const auto kBeta = AttributeDistribution::beta(2.0, 3.0);

}  // namespace

TEST(Distribution, CdfSurvivalAndQuantileAgree) {
  for (const auto* d : {&kUniform, &kExpo, &kBeta}) {
    double prev = -1.0;
    for (int i = 1; i < 200; ++i) {
      const double u = i / 200.0;
      const double x = d->quantile(u);
      EXPECT_NEAR(d->cdf(x), u, 1e-9) << d->describe();
      EXPECT_NEAR(d->survival(x), 1.0 - d->cdf(x), 1e-12);
      EXPECT_GE(d->cdf(x), prev);
      prev = d->cdf(x);
    }
  }
}

TEST(Distribution, RejectsBadParameters) {
  EXPECT_THROW(AttributeDistribution::uniform(1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(AttributeDistribution::exponential(0.0), std::invalid_argument);
  EXPECT_THROW(AttributeDistribution::beta(-1.0, 2.0), std::invalid_argument);
}

TEST(Distribution, QuantileExamples) {
  EXPECT_DOUBLE_EQ(kUniform.quantile(0.5), 0.5);
  EXPECT_NEAR(kExpo.quantile(1.0 - std::exp(-2.0)), 2.0, 1e-12);
}

TEST(Distribution, SamplerMatchesCdf) {
  for (const auto* d : {&kUniform, &kExpo, &kBeta}) {
    Engine rng(123);
    std::vector<double> u;
    for (int i = 0; i < 100000; ++i) {
      const double x = sample_attribute(*d, rng);
      ASSERT_TRUE(d->in_support(x));
      u.push_back(-std::log(d->survival(x)));  // unit exponential under the null
    }
    EXPECT_GT(stats::ks_exponential_unit(u, 0.001).p_value, 0.001) << d->describe();
  }
}

TEST(RateFunction, Families) {
  EXPECT_EQ(RateFunction::constant(0.3)(0.9), 0.3);
  EXPECT_NEAR(RateFunction::affine(0.2, 0.6)(0.5), 0.5, 1e-15);
  EXPECT_NEAR(RateFunction::affine_in_cdf(0.3, 0.4, kExpo)(std::log(2.0)), 0.5, 1e-15);
  const auto t = RateFunction::tabulated({0.0, 0.5, 1.0}, {0.2, 0.4, 0.8});
  EXPECT_NEAR(t(0.25), 0.3, 1e-15);
  EXPECT_NEAR(t(0.75), 0.6, 1e-15);
  EXPECT_EQ(t(-1.0), 0.2);
  EXPECT_EQ(t(2.0), 0.8);
  EXPECT_THROW(RateFunction::tabulated({0.0, 0.0}, {0.1, 0.2}), std::invalid_argument);
}

TEST(Kernel, ProbabilitiesAndDenominators) {
  const auto ranked = DeletionKernel::ranked(RateFunction::constant(0.5));
  EXPECT_EQ(ranked.deletion_probability(0.3, 0.5), 0.5);
  EXPECT_EQ(ranked.deletion_probability(0.5, 0.5), 0.0);  // strict rank
  EXPECT_EQ(ranked.deletion_probability(0.7, 0.5), 0.0);
  EXPECT_NEAR(ranked.denominator(0.2, kUniform), 0.4, 1e-15);
  EXPECT_NEAR(ranked.denominator_by_quadrature(0.2, kUniform), 0.4, 1e-12);

  const auto prod = DeletionKernel::product(RateFunction::constant(0.5), RateFunction::affine(0.0, 1.0));
  EXPECT_NEAR(prod.denominator(0.9, kUniform), 0.25, 1e-12);  // 0.5 * E[Y]

  EXPECT_TRUE(ranked.problems(kUniform).empty());
  EXPECT_FALSE(DeletionKernel::ranked(RateFunction::constant(0.0)).problems(kUniform).empty());
  EXPECT_FALSE(DeletionKernel::ranked(RateFunction::affine(0.5, 1.0)).problems(kUniform).empty());
  EXPECT_FALSE(DeletionKernel::independent(RateFunction::constant(0.0)).problems(kUniform).empty());
}

TEST(Window, InvariantsAndCounting) {
  EXPECT_THROW(ObservationWindow({{0.3, 0.2}}), std::invalid_argument);
  EXPECT_THROW(ObservationWindow({{0.1, 0.4}, {0.3, 0.5}}), std::invalid_argument);
  const ObservationWindow w({{0.5, 0.6}, {0.1, 0.2}});
  EXPECT_EQ(w.intervals().front().lo, 0.1);
  EXPECT_TRUE(w.contains(0.1));
  EXPECT_FALSE(w.contains(0.2));
  EXPECT_EQ(w.count_sorted({0.05, 0.1, 0.15, 0.2, 0.55, 0.6, 0.9}), 3u);
  EXPECT_NEAR(w.probability(kUniform), 0.2, 1e-15);

  EXPECT_FALSE(window_problems(ObservationWindow::single(0.5, 1.0), kUniform).empty());
  EXPECT_FALSE(window_problems(ObservationWindow::single(-0.5, 0.5), kUniform).empty());
  EXPECT_TRUE(window_problems(ObservationWindow::single(0.5, 0.99), kUniform).empty());
  EXPECT_TRUE(window_problems(ObservationWindow::single(10.0, 50.0), kExpo).empty());
}

TEST(MeanMeasure, ClosedForms) {
  const auto half = DeletionKernel::ranked(RateFunction::constant(0.5));
  const auto b = ObservationWindow::single(0.0, 0.8);
  EXPECT_NEAR(mean_measure(kUniform, half, b), 3.2188758248682007, 1e-9);
  EXPECT_EQ(mean_measure(kUniform, half, ObservationWindow()), 0.0);
  const auto indep = DeletionKernel::independent(RateFunction::constant(0.5));
  EXPECT_NEAR(mean_measure(kUniform, indep, b), 1.6, 1e-9);

  const auto fifth = DeletionKernel::ranked(RateFunction::constant(0.2));
  EXPECT_NEAR(mean_measure(kUniform, fifth, ObservationWindow::single(0.0, 0.25)), 1.4384103622589046, 1e-9);
  EXPECT_NEAR(mean_measure(kUniform, fifth, ObservationWindow::single(0.25, 0.5)), 2.0273255405408219, 1e-9);
  EXPECT_NEAR(mean_measure(kUniform, fifth, ObservationWindow::single(0.5, 0.75)), 3.4657359027997265, 1e-9);

  // Values below come from an independent high-precision quadrature.
  const auto lin = DeletionKernel::ranked(RateFunction::affine(0.2, 0.6));
  EXPECT_NEAR(mean_measure(kUniform, lin, ObservationWindow::single(0.1, 0.6)), 1.9727317111624948, 1e-9);
  const auto cdf_rate = DeletionKernel::ranked(RateFunction::affine_in_cdf(0.3, 0.4, kExpo));
  EXPECT_NEAR(mean_measure(kExpo, cdf_rate, ObservationWindow::single(0.0, kExpo.quantile(0.7))),
              2.661740618871714, 1e-9);
  EXPECT_NEAR(mean_measure(kBeta, half, ObservationWindow::single(0.2, 0.7)), 4.562178553579626, 1e-9);
}

TEST(MeanMeasure, DivergesAtSupremum) {
  const auto half = DeletionKernel::ranked(RateFunction::constant(0.5));
  EXPECT_THROW(mean_measure(kUniform, half, ObservationWindow::single(0.5, 1.0)), DivergenceError);
}

TEST(MeanMeasure, AdditiveMonotoneAndAboveF) {
  Engine rng(77);
  const auto k = DeletionKernel::ranked(RateFunction::affine(0.1, 0.8));
  for (int trial = 0; trial < 50; ++trial) {
    double a = 0.9 * uniform_open01(rng);
    double c = 0.9 * uniform_open01(rng);
    if (a > c) std::swap(a, c);
    const double b = a + (c - a) * uniform_open01(rng);
    const double whole = mean_measure(kUniform, k, ObservationWindow::single(a, c));
    const double left = mean_measure(kUniform, k, ObservationWindow::single(a, b));
    const double right = mean_measure(kUniform, k, ObservationWindow::single(b, c));
    EXPECT_NEAR(whole, left + right, 1e-8);
    EXPECT_GE(whole + 1e-12, left);
    EXPECT_GE(whole + 1e-9, c - a);  // mu(B) >= F(B) for ranked kernels
  }
}

TEST(Lifetime, SurvivalLaw) {
  EXPECT_EQ(lifetime_survival(1.0, 1), 0.0);
  EXPECT_EQ(lifetime_survival(0.4, 0), 1.0);
  EXPECT_NEAR(lifetime_survival(0.3, 2), 0.49, 1e-15);
  for (std::uint64_t l1 = 0; l1 < 6; ++l1) {
    for (std::uint64_t l2 = 0; l2 < 6; ++l2) {
      EXPECT_NEAR(lifetime_survival(0.3, l1 + l2), lifetime_survival(0.3, l1) * lifetime_survival(0.3, l2), 1e-15);
    }
    EXPECT_GE(lifetime_survival(0.3, l1), lifetime_survival(0.3, l1 + 1));
  }
}

TEST(Arrivals, EpochsAreIncreasing) {
  Engine rng(5);
  for (const ArrivalSpec& spec :
       {ArrivalSpec{PoissonArrivals{2.0}},
        ArrivalSpec{RenewalArrivals{InterarrivalLaw::gamma(2.0, 0.5)}},
        ArrivalSpec{RenewalArrivals{InterarrivalLaw::uniform(0.5, 1.5)}}}) {
    ArrivalClock clock(spec);
    double last = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double t = *clock.next(rng);
      EXPECT_GE(t, last);
      last = t;
    }
    EXPECT_GT(last, 100.0);
  }
  const ArrivalSpec silent = PoissonArrivals{0.0};
  ArrivalClock none(silent);
  EXPECT_FALSE(none.next(rng).has_value());
  EXPECT_FALSE(arrival_problems(ArrivalSpec{ScheduledArrivals{{2.0, 1.0}, {}}}).empty());
}
