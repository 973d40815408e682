#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "psurv/array_limits.hpp"

using namespace psurv;

namespace {

const auto kUniform = AttributeDistribution::uniform(0.0, 1.0);
const auto kWindow = ObservationWindow::single(0.0, 0.8);

PermutationRealization fixed_order(std::vector<double> xs, std::vector<std::uint32_t> position) {
  PermutationRealization r;
  r.n = xs.size();
  r.attributes = std::move(xs);
  r.arrival_position = std::move(position);
  return r;
}

}  // namespace

TEST(Permutation, SingleArrivalAlwaysRecord) {
  Engine rng(1);
  const auto r = permutation_rank_realization(1, kUniform, RateFunction::constant(0.5), rng);
  EXPECT_EQ(r.attempts[0], 0u);
  EXPECT_EQ(r.above[0], 1u);
  EXPECT_EQ(r.survivors[0], 1);  // lifetimes are >= 1 trial
  EXPECT_EQ(right_to_left_records(r)[0], 1);
  EXPECT_THROW(permutation_rank_realization(0, kUniform, RateFunction::constant(0.5), rng),
               std::invalid_argument);
}

TEST(Permutation, RecordsOverAllOrdersOfThree) {
  // Mean number of right-to-left records over all 3! orders is H_3 = 11/6.
  std::vector<std::uint32_t> pos{1, 2, 3};
  std::size_t total = 0;
  std::size_t orders = 0;
  do {
    const auto rec = right_to_left_records(fixed_order({0.2, 0.5, 0.9}, pos));
    total += static_cast<std::size_t>(std::count(rec.begin(), rec.end(), 1));
    ++orders;
  } while (std::next_permutation(pos.begin(), pos.end()));
  EXPECT_EQ(orders, 6u);
  EXPECT_EQ(total * 6, 11u * orders);
}

TEST(Permutation, AttemptsMatchDefinition) {
  Engine rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto r = permutation_rank_realization(30, kUniform, RateFunction::constant(0.3), rng);
    for (std::size_t k = 0; k < r.n; ++k) {
      std::uint32_t q = 0;
      for (std::size_t j = 0; j < r.n; ++j) {
        if (r.attributes[j] > r.attributes[k] && r.arrival_position[j] > r.arrival_position[k]) ++q;
      }
      ASSERT_EQ(r.attempts[k], q);
      ASSERT_LT(r.attempts[k], r.above[k]);
      ASSERT_EQ(r.survivors[k], r.lifetimes[k] > r.attempts[k] ? 1 : 0);
    }
  }
}

TEST(AttemptLaw, TwoAndThree) {
  const auto two = claim29_exact_law({0, 1});
  EXPECT_EQ(two.total, 2u);
  EXPECT_EQ(two.above, (std::vector<std::uint32_t>{2, 1}));
  EXPECT_TRUE(two.marginals_uniform());
  EXPECT_TRUE(two.product_form());

  std::vector<std::uint32_t> ranks{0, 1, 2};
  do {
    const auto law = claim29_exact_law(ranks);
    EXPECT_EQ(law.total, 6u);
    EXPECT_TRUE(law.marginals_uniform());
    EXPECT_TRUE(law.product_form());
  } while (std::next_permutation(ranks.begin(), ranks.end()));
}

TEST(AttemptLaw, CapAndValidation) {
  std::vector<std::uint32_t> nine(9);
  std::iota(nine.begin(), nine.end(), 0U);
  EXPECT_THROW(claim29_exact_law(nine), std::invalid_argument);
  EXPECT_THROW(claim29_exact_law({0, 0, 1}), std::invalid_argument);
  EXPECT_THROW(claim29_exact_law({}), std::invalid_argument);
}

TEST(AttemptLaw, MonteCarloCountsLookUniform) {
  Engine rng(4);
  std::vector<std::uint32_t> ranks(12);
  std::iota(ranks.begin(), ranks.end(), 0U);
  const auto hist = attempt_histograms_mc(ranks, 60000, rng);
  // The smallest attribute has 12 equally likely attempt counts.
  for (auto c : hist[0]) EXPECT_NEAR(static_cast<double>(c), 5000.0, 5.0 * std::sqrt(5000.0));
  EXPECT_EQ(hist[11].size(), 1u);
}

TEST(GapBounds, SmallExample) {
  const auto g = lemma2_gap_bound({0.1, 0.2}, 0.5);
  EXPECT_NEAR(g.gap, -std::log(0.9) - std::log(0.8) - 0.3, 1e-15);
  EXPECT_NEAR(g.bound9, 0.05 / 0.5, 1e-15);
  EXPECT_NEAR(g.bound10, 0.2 / 0.5 * 0.3, 1e-15);
  EXPECT_TRUE(g.holds9);
  EXPECT_TRUE(g.holds10);
}

TEST(GapBounds, TinyValuesUseSeries) {
  const auto g = lemma2_gap_bound({1e-9, 2e-9}, 0.1);
  // v^2 / 2 + v^3 / 3 summed; the quartic term is far below double resolution.
  EXPECT_NEAR(g.gap, 0.5 * 5e-18 + 9e-27 / 3.0, 1e-32);
  EXPECT_TRUE(g.holds9);
}

TEST(GapBounds, RejectsBadInput) {
  EXPECT_THROW(lemma2_gap_bound({0.1}, 1.0), std::invalid_argument);
  EXPECT_THROW(lemma2_gap_bound({0.6}, 0.5), std::invalid_argument);
  EXPECT_THROW(lemma2_gap_bound({0.0}, 0.5), std::invalid_argument);
}

// Reference values from an independent scipy quadrature over (0, 0.8), split
// at the kinks of the absolute value.
TEST(ConditionValues, ExactSums) {
  const auto one = corollary5_condition_values(1000, kUniform, RateFunction::constant(1.0), kWindow, 0);
  EXPECT_TRUE(one.exact);
  EXPECT_NEAR(one.val22, 0.004008051194337218, 1e-9);

  const auto half = RateFunction::constant(0.5);
  const auto c100 = corollary5_condition_values(100, kUniform, half, kWindow, 0);
  EXPECT_NEAR(c100.val22, 0.1634256519945898, 1e-8);
  EXPECT_NEAR(c100.val23, 0.2851896065925266, 1e-8);
  const auto c1000 = corollary5_condition_values(1000, kUniform, half, kWindow, 0);
  EXPECT_NEAR(c1000.val22, 0.01603220477734887, 1e-8);
  EXPECT_NEAR(c1000.val23, 0.09011878780654922, 1e-8);
}

TEST(ConditionValues, MonteCarloAboveExactLimit) {
  const auto half = RateFunction::constant(0.5);
  EXPECT_THROW(corollary5_condition_values(5000, kUniform, half, kWindow, 1000),
               std::invalid_argument);
  Engine rng(11);
  const auto mc = corollary5_condition_values(10000, kUniform, half, kWindow, 200000, &rng);
  EXPECT_FALSE(mc.exact);
  EXPECT_GT(mc.se23, 0.0);
  // val22 scales like 1/n; 10x the n = 1000 value is a tight check.
  EXPECT_NEAR(mc.val22, 0.001603, 4.0 * mc.se22 + 2e-5);
  EXPECT_LT(mc.val23, 0.09011878780654922);
}

TEST(ConditionValues, WindowAtSupremumRejected) {
  EXPECT_THROW(corollary5_condition_values(10, kUniform, RateFunction::constant(0.5),
                                           ObservationWindow::single(0.5, 1.0), 0),
               std::invalid_argument);
}

TEST(BernoulliArray, IidRowsApproachPoisson) {
  Engine rng(2);
  ProbabilityRule rule;
  rule.mean = 3.0;
  const auto res = bernoulli_array_limit(10000, rule, 200000, rng);
  EXPECT_LT(res.total_variation, 0.01);
  EXPECT_NEAR(res.mean, 3.0, 0.03);
}

TEST(BernoulliArray, TotalVariationOracle) {
  // Exact Binomial(10^4, 3e-4) pmf against Poisson(3).
  std::vector<double> pmf;
  for (int k = 0; k <= 60; ++k) pmf.push_back(std::exp(detail::binomial_log_pmf(10000, 3e-4, k)));
  EXPECT_NEAR(tv_to_poisson(pmf, 3.0), 7.506403273350972e-05, 1e-10);
  EXPECT_NEAR(tv_to_poisson({1.0}, 0.0), 0.0, 1e-15);
}

TEST(BernoulliArray, ExplicitListUsesItsOwnSize) {
  Engine rng(3);
  ProbabilityRule rule;
  rule.kind = ProbabilityRule::Kind::explicit_list;
  rule.probabilities = {1.0, 1.0, 0.0};
  const auto res = bernoulli_array_limit(999, rule, 100, rng);
  EXPECT_EQ(res.limit_mean, 2.0);
  ASSERT_EQ(res.pmf.size(), 3u);
  EXPECT_EQ(res.pmf[2], 1.0);
}

TEST(XiLimit, SingleArrivalAlwaysCounted) {
  Engine rng(6);
  const auto rows = xi_n_limit_experiment(1, kUniform, RateFunction::constant(0.5),
                                          {ObservationWindow::single(0.0, 1.0)}, 50, rng);
  ASSERT_EQ(rows.size(), 50u);
  for (const auto& r : rows) EXPECT_EQ(r[0], 1u);
}
