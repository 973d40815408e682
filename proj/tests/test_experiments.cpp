#include <sstream>
#include <stdexcept>
#include <string>

#include <gtest/gtest.h>

#include "psurv/experiments.hpp"
#include "psurv/parallel.hpp"
#include "psurv/report.hpp"

using namespace psurv;

namespace {

SimulationSpec small_spec() {
  SimulationSpec s;
  s.arrivals = PoissonArrivals{1.0};
  s.dist = AttributeDistribution::uniform(0.0, 1.0);
  s.kernel = DeletionKernel::ranked(RateFunction::constant(0.3));
  s.windows = {ObservationWindow::single(0.0, 0.5), ObservationWindow::single(0.5, 0.8)};
  s.horizon = 60.0;
  s.sample_epochs = {20.0, 60.0};
  return s;
}

std::string csv_text(const CsvTable& t) {
  std::ostringstream os;
  write_csv(os, t);
  return os.str();
}

}  // namespace

TEST(Parallel, ResultsIndependentOfJobs) {
  auto body = [](std::size_t i) {
    Engine rng = make_stream(99, i);
    return rng();
  };
  const auto one = parallel_map(200, 1, body);
  EXPECT_EQ(one, parallel_map(200, 4, body));
  EXPECT_EQ(one, parallel_map(200, 64, body));
  EXPECT_TRUE(parallel_map(0, 4, body).empty());
}

TEST(Parallel, RethrowsTaskError) {
  auto body = [](std::size_t i) -> int {
    if (i == 17) throw std::runtime_error("boom");
    return static_cast<int>(i);
  };
  EXPECT_THROW(parallel_map(50, 3, body), std::runtime_error);
  EXPECT_THROW(parallel_map(50, 1, body), std::runtime_error);
}

TEST(Report, NumbersRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(3.0), "3");
  EXPECT_EQ(format_number(std::uint64_t{12345678901234ULL}), "12345678901234");
  const double x = 1.0 / 3.0;
  EXPECT_EQ(std::stod(format_number(x)), x);
}

TEST(Report, CsvLayout) {
  CsvTable t;
  t.header = {"a", "b", "c", "d"};
  t.add(1, 2.5, true, "x");
  t.add(std::size_t{7}, 1e-20, false, std::string("y"));
  EXPECT_EQ(csv_text(t), "a,b,c,d\n1,2.5,1,x\n7,1e-20,0,y\n");
}

TEST(Report, RecordJsonLines) {
  auto spec = small_spec();
  spec.record.sojourns = true;
  Engine rng(3);
  const auto rec = run_simulation(spec, rng);
  std::ostringstream os;
  write_record_jsonl(os, rec, 5);
  std::istringstream in(os.str());
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("replication"), 5);
    if (lines == 0) {
      EXPECT_EQ(j.at("type"), "record");
    }
    ++lines;
  }
  EXPECT_EQ(lines, 1 + rec.count_samples.size() + rec.sojourns.size() + rec.batches.size());
}

TEST(Simulate, ByteIdenticalAcrossJobs) {
  const auto spec = small_spec();
  const auto a = simulate_report(spec, 8, RunContext{11, 1, 0.01});
  const auto b = simulate_report(spec, 8, RunContext{11, 3, 0.01});
  ASSERT_EQ(a.tables.size(), b.tables.size());
  EXPECT_EQ(csv_text(a.tables[0].second), csv_text(b.tables[0].second));
  EXPECT_EQ(a.texts[0].second, b.texts[0].second);
  EXPECT_EQ(a.summary.dump(), b.summary.dump());
  const auto c = simulate_report(spec, 8, RunContext{12, 1, 0.01});
  EXPECT_NE(csv_text(a.tables[0].second), csv_text(c.tables[0].second));
}

TEST(Simulate, HorizonCountsMatchFullRecords) {
  const auto spec = small_spec();
  const RunContext ctx{21, 2, 0.01};
  const auto rows = horizon_counts(spec, 10, ctx);
  const auto recs = simulate_replications(spec, 10, ctx);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i], recs[i].count_samples.back().window_counts);
  }
}

TEST(Stationarity, ExpectationDrivesPass) {
  const auto dist = AttributeDistribution::uniform(0.0, 1.0);
  const auto fs = std::vector<TestFunction>{TestFunction::step(1.0, 0.0, 0.5)};
  const auto indep = DeletionKernel::independent(RateFunction::constant(0.5));
  EXPECT_TRUE(stationarity_study(indep, dist, fs, 1e-6, false).pass);
  EXPECT_FALSE(stationarity_study(indep, dist, fs, 1e-6, true).pass);
  const auto s = stationarity_study(indep, dist, fs, 1e-6, std::nullopt);
  EXPECT_TRUE(s.pass);
  EXPECT_FALSE(s.poisson_like);
}

TEST(Stationarity, DefaultFunctionsFitAnyLaw) {
  for (const auto& d : {AttributeDistribution::uniform(0.0, 1.0), AttributeDistribution::exponential(2.0),
                        AttributeDistribution::beta(2.0, 3.0)}) {
    const auto fs = default_test_functions(d);
    EXPECT_EQ(fs.size(), 10u);
    for (const auto& f : fs) EXPECT_GT(d.survival(f.support().hi), 0.0) << f.describe();
  }
}
