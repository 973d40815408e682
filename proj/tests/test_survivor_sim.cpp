#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "psurv/stats.hpp"
#include "psurv/survivor_sim.hpp"

using namespace psurv;

namespace {

const auto kUniform = AttributeDistribution::uniform(0.0, 1.0);

SimulationSpec basic(double a, double horizon) {
  SimulationSpec s;
  s.arrivals = PoissonArrivals{1.0};
  s.dist = kUniform;
  s.kernel = DeletionKernel::ranked(RateFunction::constant(a));
  s.horizon = horizon;
  return s;
}

}  // namespace

TEST(StepArrival, EmptyStateGainsOneParticle) {
  Engine rng(1);
  auto state = seed_initial_population({}, kUniform);
  const auto batch = step_arrival(state, 0.4, 1.0, DeletionKernel::ranked(RateFunction::constant(0.5)), rng);
  EXPECT_TRUE(batch.departed.empty());
  ASSERT_EQ(state.live.size(), 1u);
  EXPECT_EQ(state.live[0].attribute, 0.4);
  EXPECT_TRUE(state.conserved());
}

TEST(StepArrival, StrictRankWithCertainDeletion) {
  Engine rng(1);
  auto state = seed_initial_population({0.3, 0.7}, kUniform);
  const auto batch = step_arrival(state, 0.5, 1.0, DeletionKernel::ranked(RateFunction::constant(1.0)), rng);
  ASSERT_EQ(batch.departed.size(), 1u);
  EXPECT_EQ(batch.departed[0], 0.3);
  EXPECT_EQ(state.attributes(), (std::vector<double>{0.5, 0.7}));
  EXPECT_TRUE(state.conserved());
}

TEST(StepArrival, BatchIsBinomial) {
  Engine rng(2024);
  const auto kernel = DeletionKernel::ranked(RateFunction::constant(0.5));
  const std::vector<double> below{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  std::vector<double> sizes;
  for (int t = 0; t < 100000; ++t) {
    auto state = seed_initial_population(below, kUniform);
    sizes.push_back(static_cast<double>(step_arrival(state, 0.9, 1.0, kernel, rng).departed.size()));
  }
  const auto m = stats::mean_estimate(sizes);
  EXPECT_LE(std::abs(m.mean - 3.0), 3.0 * m.std_error);
}

TEST(StepArrival, AttemptsAndEpochs) {
  Engine rng(3);
  auto state = seed_initial_population({0.2}, kUniform);
  const auto kernel = DeletionKernel::ranked(RateFunction::constant(1e-9));
  step_arrival(state, 0.1, 1.0, kernel, rng);
  EXPECT_EQ(state.live[1].attempts, 0u);  // 0.1 is not above 0.2
  step_arrival(state, 0.5, 2.0, kernel, rng);
  for (const auto& p : state.live) {
    if (p.attribute < 0.5) {
      EXPECT_GE(p.attempts, 1u);
    }
  }
}

TEST(Seed, InitialPopulation) {
  EXPECT_TRUE(seed_initial_population({}, kUniform).live.empty());
  EXPECT_EQ(seed_initial_population({0.1, 0.2, 0.3}, kUniform).live.size(), 3u);
  EXPECT_THROW(seed_initial_population({1.5}, kUniform), std::invalid_argument);
}

TEST(Run, ConservationWithInitialPopulation) {
  auto spec = basic(0.3, 300.0);
  spec.initial.count = 200;
  spec.sample_epochs = {0.0, 100.0, 300.0};
  Engine rng(11);
  const auto rec = run_simulation(spec, rng);
  EXPECT_EQ(rec.initial_population, 200u);
  EXPECT_EQ(rec.count_samples.front().live, 200u);
  for (const auto& s : rec.count_samples) EXPECT_EQ(s.initial + s.arrivals, s.live + s.departed);
  EXPECT_EQ(rec.initial_population + rec.arrivals, rec.final_live + rec.departed);
}

TEST(Run, ZeroRateKeepsInitialPattern) {
  auto spec = basic(0.5, 50.0);
  spec.arrivals = PoissonArrivals{0.0};
  spec.initial.attributes = {0.1, 0.5};
  spec.windows = {ObservationWindow::single(0.0, 0.9)};
  spec.sample_epochs = {0.0, 25.0, 50.0};
  Engine rng(1);
  const auto rec = run_simulation(spec, rng);
  for (const auto& s : rec.count_samples) EXPECT_EQ(s.window_counts[0], 2u);
}

TEST(Run, DescendingScheduleNeverDeletes) {
  auto spec = basic(1.0, 10.0);
  spec.arrivals = ScheduledArrivals{{1.0, 2.0, 3.0}, {0.9, 0.5, 0.1}};
  Engine rng(1);
  const auto rec = run_simulation(spec, rng);
  EXPECT_EQ(rec.departed, 0u);
  EXPECT_EQ(rec.final_live, 3u);
}

TEST(Run, SamplesIncludeArrivalsAtTheEpoch) {
  auto spec = basic(1.0, 10.0);
  spec.arrivals = ScheduledArrivals{{2.0, 4.0}, {0.3, 0.6}};
  spec.windows = {ObservationWindow::single(0.0, 0.5)};
  spec.sample_epochs = {1.0, 2.0, 3.9, 4.0};
  Engine rng(1);
  const auto rec = run_simulation(spec, rng);
  ASSERT_EQ(rec.count_samples.size(), 4u);
  EXPECT_EQ(rec.count_samples[0].window_counts[0], 0u);
  EXPECT_EQ(rec.count_samples[1].window_counts[0], 1u);
  EXPECT_EQ(rec.count_samples[2].window_counts[0], 1u);
  EXPECT_EQ(rec.count_samples[3].window_counts[0], 0u);  // 0.6 deletes 0.3 with a = 1
}

TEST(Run, DeterministicForSameSeed) {
  auto spec = basic(0.2, 500.0);
  spec.windows = {ObservationWindow::single(0.0, 0.5)};
  Engine a(99), b(99);
  const auto ra = run_simulation(spec, a);
  const auto rb = run_simulation(spec, b);
  ASSERT_EQ(ra.batches.size(), rb.batches.size());
  for (std::size_t i = 0; i < ra.batches.size(); ++i) {
    EXPECT_EQ(ra.batches[i].epoch, rb.batches[i].epoch);
    EXPECT_EQ(ra.batches[i].departed, rb.batches[i].departed);
  }
  EXPECT_EQ(ra.count_samples.back().live_attributes, rb.count_samples.back().live_attributes);
}

TEST(Run, RunningMaximumNeverDeparts) {
  auto spec = basic(0.6, 2000.0);
  Engine rng(8);
  const auto rec = run_simulation(spec, rng);
  double best = -1.0;
  for (const auto& b : rec.batches) {
    best = std::max(best, b.trigger_attribute);
    for (double x : b.departed) {
      EXPECT_LT(x, b.trigger_attribute);
      EXPECT_LT(x, best);
    }
  }
}

TEST(Run, ArrivalCapAndGeometricGuard) {
  auto spec = basic(0.2, 1000.0);
  spec.max_arrivals = 10;
  Engine rng(1);
  EXPECT_THROW(run_simulation(spec, rng), ArrivalExplosionError);
  auto general = basic(0.2, 10.0);
  general.kernel = DeletionKernel::independent(RateFunction::constant(0.2));
  general.mode = DeletionMode::geometric;
  EXPECT_THROW(run_simulation(general, rng), std::invalid_argument);
}

TEST(Extract, CountsAreAdditive) {
  auto spec = basic(0.3, 400.0);
  spec.sample_epochs = {0.0, 200.0, 400.0};
  Engine rng(4);
  const auto rec = run_simulation(spec, rng);
  const std::vector<ObservationWindow> ws{ObservationWindow::single(0.0, 0.3),
                                          ObservationWindow::single(0.3, 0.7),
                                          ObservationWindow({{0.0, 0.3}, {0.3, 0.7}}),
                                          ObservationWindow::single(0.0, 1.0)};
  const auto m = extract_counts(rec, ws, {0.0, 200.0, 400.0});
  EXPECT_EQ(m[0], (std::vector<std::uint64_t>{0, 0, 0, 0}));
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(m[i][0] + m[i][1], m[i][2]);
    EXPECT_EQ(m[i][3], rec.count_samples[i].live);
  }
  EXPECT_THROW(extract_counts(rec, ws, {123.0}), std::out_of_range);
}

TEST(Extract, SojournDurationsAndCensoring) {
  auto spec = basic(1.0, 20.0);
  spec.arrivals = ScheduledArrivals{{10.0, 13.0, 15.0}, {0.2, 0.5, 0.1}};
  Engine rng(1);
  const auto rec = run_simulation(spec, rng);
  const auto all = extract_sojourns(rec, ObservationWindow::single(0.0, 0.9), 0.0, 1.0);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0].duration, 3.0);
  EXPECT_FALSE(all[0].censored);
  EXPECT_TRUE(all[1].censored);
  EXPECT_EQ(all[1].duration, 7.0);
}

TEST(Extract, RescaledSojournMeanNearOne) {
  auto spec = basic(0.5, 3000.0);
  spec.record = {false, true, false};
  Engine rng(21);
  const auto rec = run_simulation(spec, rng);
  std::vector<double> scaled;
  for (const auto& s : extract_sojourns(rec, ObservationWindow::single(0.45, 0.55), 0.0, 100.0)) {
    if (!s.censored) scaled.push_back(s.duration * 0.5 * (1.0 - s.attribute));
  }
  const auto m = stats::mean_estimate(scaled);
  ASSERT_GT(m.n, 100u);
  EXPECT_LE(std::abs(m.mean - 1.0), 4.0 * m.std_error);
}

TEST(Extract, DepartureBatches) {
  auto spec = basic(1.0, 10.0);
  spec.arrivals = ScheduledArrivals{{1.0, 2.0, 3.0}, {0.5, 0.4, 0.9}};
  spec.windows = {ObservationWindow::single(0.0, 0.45), ObservationWindow::single(0.45, 0.95)};
  Engine rng(1);
  const auto rec = run_simulation(spec, rng);
  const auto rows = extract_departure_batches(rec, 0.0, spec.windows);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].total, 0u);  // 0.4 arrives below every incumbent
  EXPECT_EQ(rows[2].total, 2u);
  EXPECT_EQ(rows[2].per_window, (std::vector<std::uint64_t>{1, 1}));
}

TEST(Modes, GeometricLifetimesMatchBernoulliBatches) {
  auto bern = basic(0.3, 300.0);
  auto geo = bern;
  geo.mode = DeletionMode::geometric;
  std::vector<std::uint64_t> a, b;
  for (int r = 0; r < 40; ++r) {
    Engine ra(1000 + r), rb(5000 + r);
    for (const auto& x : run_simulation(bern, ra).batches) a.push_back(x.departed.size());
    for (const auto& x : run_simulation(geo, rb).batches) b.push_back(x.departed.size());
  }
  EXPECT_GT(stats::homogeneity_test(a, b, 0.01).p_value, 0.01);
}
