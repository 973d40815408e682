#include <algorithm>
#include <string>

#include <gtest/gtest.h>

#include "psurv/scenario.hpp"

using namespace psurv;

namespace {

const std::string kMinimal = R"({
  "seed": 42,
  "arrivals": {"process": "poisson", "rate": 1.0},
  "distribution": {"family": "uniform", "lo": 0.0, "hi": 1.0},
  "kernel": {"shape": "ranked", "a": {"family": "constant", "value": 0.2}},
  "windows": [[0.0, 0.25]],
  "horizon": 100
})";

std::vector<ConfigIssue> issues_of(const std::string& text) {
  try {
    parse_scenario_text(text);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}

bool has_pointer(const std::vector<ConfigIssue>& issues, const std::string& ptr) {
  return std::any_of(issues.begin(), issues.end(),
                     [&](const ConfigIssue& i) { return i.pointer == ptr; });
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST(Scenario, MinimalDefaults) {
  const auto cfg = parse_scenario_text(kMinimal);
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.replications, 1u);
  EXPECT_EQ(cfg.alpha, 0.01);
  EXPECT_EQ(cfg.output_dir, "out");
  EXPECT_EQ(cfg.sim.horizon, 100.0);
  ASSERT_EQ(cfg.sim.windows.size(), 1u);
  EXPECT_EQ(cfg.sim.windows[0].sup(), 0.25);
  EXPECT_TRUE(cfg.sim.kernel.is_ranked());
  EXPECT_TRUE(std::holds_alternative<PoissonArrivals>(cfg.sim.arrivals));
  EXPECT_EQ(cfg.stationarity.threshold, 1e-6);
  EXPECT_FALSE(cfg.stationarity.expect_poisson.has_value());
  EXPECT_EQ(cfg.digest.size(), 16u);
  EXPECT_EQ(cfg.sim.config_digest, cfg.digest);
}

TEST(Scenario, DigestTracksContent) {
  EXPECT_EQ(parse_scenario_text(kMinimal).digest, parse_scenario_text(kMinimal).digest);
  EXPECT_NE(parse_scenario_text(kMinimal).digest,
            parse_scenario_text(replace(kMinimal, "\"seed\": 42", "\"seed\": 43")).digest);
  // FNV-1a of the empty string.
  EXPECT_EQ(content_digest(""), "cbf29ce484222325");
}

TEST(Scenario, WindowTouchingSupremum) {
  const auto issues = issues_of(replace(kMinimal, "[[0.0, 0.25]]", "[[0.5, 1.0]]"));
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].pointer, "/windows/0");
}

TEST(Scenario, UnionWindow) {
  const auto cfg =
      parse_scenario_text(replace(kMinimal, "[[0.0, 0.25]]", "[[[0.0, 0.1], [0.3, 0.4]]]"));
  ASSERT_EQ(cfg.sim.windows[0].intervals().size(), 2u);
  EXPECT_TRUE(has_pointer(
      issues_of(replace(kMinimal, "[[0.0, 0.25]]", "[[[0.0, 0.3], [0.2, 0.4]]]")), "/windows/0"));
}

TEST(Scenario, DuplicateKeyPointer) {
  const auto issues = issues_of(replace(
      kMinimal, "{\"family\": \"constant\", \"value\": 0.2}",
      "{\"family\": \"constant\", \"value\": 0.2, \"value\": 0.3}"));
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].pointer, "/kernel/a/value");
}

TEST(Scenario, UnknownFamilyAndField) {
  EXPECT_TRUE(has_pointer(issues_of(replace(kMinimal, "\"uniform\"", "\"cauchy\"")),
                          "/distribution/family"));
  EXPECT_TRUE(
      has_pointer(issues_of(replace(kMinimal, "\"horizon\": 100", "\"horizon\": 100, \"hoirzon\": 1")),
                  "/hoirzon"));
}

TEST(Scenario, MissingSeed) {
  EXPECT_TRUE(has_pointer(issues_of(replace(kMinimal, "\"seed\": 42,", "")), "/seed"));
}

TEST(Scenario, CollectsEveryIssue) {
  std::string text = replace(kMinimal, "\"rate\": 1.0", "\"rate\": -1.0");
  text = replace(text, "\"value\": 0.2", "\"value\": 1.5");
  text = replace(text, "\"horizon\": 100", "\"horizon\": 100, \"alpha\": 2");
  const auto issues = issues_of(text);
  EXPECT_GE(issues.size(), 3u);
  EXPECT_TRUE(has_pointer(issues, "/arrivals"));
  EXPECT_TRUE(has_pointer(issues, "/alpha"));
}

TEST(Scenario, MalformedJson) {
  const auto issues = issues_of("{\"seed\": 1,");
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].pointer, "");
}

TEST(Scenario, MissingFile) {
  EXPECT_THROW(parse_scenario("/nonexistent/scenario.json"), ConfigError);
}

TEST(Scenario, StationarityBlock) {
  const auto cfg = parse_scenario_text(replace(
      kMinimal, "\"horizon\": 100",
      "\"horizon\": 100, \"stationarity\": {\"expect\": \"non_poisson\", \"threshold\": 1e-5,"
      " \"test_functions\": [{\"type\": \"step\", \"height\": 1, \"lo\": 0, \"hi\": 0.5},"
      " {\"type\": \"bump\", \"center\": 0.5, \"half_width\": 0.1, \"height\": 2}]}"));
  EXPECT_EQ(cfg.stationarity.test_functions.size(), 2u);
  EXPECT_EQ(cfg.stationarity.threshold, 1e-5);
  ASSERT_TRUE(cfg.stationarity.expect_poisson.has_value());
  EXPECT_FALSE(*cfg.stationarity.expect_poisson);
}

TEST(Scenario, GeometricModeNeedsRankedKernel) {
  std::string text = replace(kMinimal, "\"shape\": \"ranked\"", "\"shape\": \"independent\"");
  text = replace(text, "\"horizon\": 100", "\"horizon\": 100, \"deletion_mode\": \"geometric\"");
  EXPECT_TRUE(has_pointer(issues_of(text), "/deletion_mode"));
}

TEST(Scenario, RenewalArrivals) {
  const auto cfg = parse_scenario_text(replace(
      kMinimal, "{\"process\": \"poisson\", \"rate\": 1.0}",
      "{\"process\": \"renewal\", \"interarrival\": {\"family\": \"gamma\", \"shape\": 2, \"scale\": 0.5}}"));
  EXPECT_TRUE(std::holds_alternative<RenewalArrivals>(cfg.sim.arrivals));
}
