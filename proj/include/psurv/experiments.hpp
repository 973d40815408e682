#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "psurv/array_limits.hpp"
#include "psurv/model.hpp"
#include "psurv/parallel.hpp"
#include "psurv/report.hpp"
#include "psurv/rng.hpp"
#include "psurv/stats.hpp"
#include "psurv/survivor_sim.hpp"
#include "psurv/theory.hpp"

namespace psurv {

/// Master seed, worker count and test level shared by one experiment.
struct RunContext {
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  double alpha = 0.01;
};

/// What a command writes: a summary object, CSV tables keyed by file stem,
/// and extra text files (JSON lines).
struct ExperimentReport {
  std::string name;
  bool pass = true;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<std::pair<std::string, CsvTable>> tables;
  std::vector<std::pair<std::string, std::string>> texts;
  std::vector<std::string> failures;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failures.push_back(what);
    }
  }
};

inline std::vector<SimulationRecord> simulate_replications(const SimulationSpec& spec,
                                                           std::size_t reps,
                                                           const RunContext& ctx,
                                                           std::uint64_t stream_offset = 0) {
  return parallel_map(reps, ctx.jobs, [&](std::size_t i) {
    Engine rng = make_stream(ctx.seed, stream_offset + i);
    return run_simulation(spec, rng);
  });
}

/// Window counts at the horizon, one row per replication. Only the counts
/// are kept, so memory stays flat in the number of particles.
inline std::vector<std::vector<std::uint64_t>> horizon_counts(SimulationSpec spec, std::size_t reps,
                                                              const RunContext& ctx,
                                                              std::uint64_t stream_offset = 0) {
  spec.record = {false, false, false};
  spec.sample_epochs = {spec.horizon};
  return parallel_map(reps, ctx.jobs, [&](std::size_t i) {
    Engine rng = make_stream(ctx.seed, stream_offset + i);
    return run_simulation(spec, rng).count_samples.back().window_counts;
  });
}

inline std::vector<std::uint64_t> column(const std::vector<std::vector<std::uint64_t>>& rows,
                                         std::size_t j) {
  std::vector<std::uint64_t> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(j));
  return out;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

inline ExperimentReport simulate_report(const SimulationSpec& spec, std::size_t reps,
                                        const RunContext& ctx) {
  const auto records = simulate_replications(spec, reps, ctx);
  ExperimentReport rep;
  rep.name = "simulate";
  CsvTable samples;
  samples.header = {"replication", "epoch", "window", "count"};
  std::ostringstream jsonl;
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (const auto& s : records[r].count_samples) {
      for (std::size_t w = 0; w < s.window_counts.size(); ++w) {
        samples.add(r, s.epoch, w, s.window_counts[w]);
      }
    }
    write_record_jsonl(jsonl, records[r], r);
  }
  nlohmann::json epochs = nlohmann::json::array();
  if (!records.empty()) {
    for (std::size_t e = 0; e < records.front().count_samples.size(); ++e) {
      nlohmann::json windows = nlohmann::json::array();
      for (std::size_t w = 0; w < spec.windows.size(); ++w) {
        std::vector<std::uint64_t> xs;
        for (const auto& rec : records) xs.push_back(rec.count_samples[e].window_counts[w]);
        windows.push_back(to_json(stats::mean_estimate(xs)));
      }
      epochs.push_back({{"epoch", records.front().count_samples[e].epoch}, {"windows", windows}});
    }
  }
  std::uint64_t arrivals = 0, departed = 0, live = 0;
  for (const auto& rec : records) {
    arrivals += rec.arrivals;
    departed += rec.departed;
    live += rec.final_live;
  }
  rep.summary = {{"replications", reps},
                 {"epochs", epochs},
                 {"total_arrivals", arrivals},
                 {"total_departed", departed},
                 {"total_final_live", live}};
  rep.tables.emplace_back("samples", std::move(samples));
  rep.texts.emplace_back("records.jsonl", jsonl.str());
  return rep;
}

// ---------------------------------------------------------------------------
// limits: window counts against the Poisson limit
// ---------------------------------------------------------------------------

struct WindowLimit {
  double target = 0.0;
  stats::MeanEstimate estimate;
  bool within_3se = false;
  stats::TestReport gof;
  stats::Dispersion dispersion;
  bool dispersion_ok = false;
};

struct PairDependence {
  std::size_t first = 0;
  std::size_t second = 0;
  stats::TestReport test;
  bool small = false;  // |corr| < 0.1
};

struct LimitStudy {
  std::vector<std::vector<std::uint64_t>> counts;
  std::vector<WindowLimit> windows;
  std::vector<PairDependence> pairs;
  bool pass = true;
};

inline std::vector<PairDependence> pairwise_dependence(
    const std::vector<std::vector<std::uint64_t>>& rows, std::size_t windows, double alpha) {
  std::vector<PairDependence> out;
  for (std::size_t i = 0; i < windows; ++i) {
    for (std::size_t j = i + 1; j < windows; ++j) {
      PairDependence p;
      p.first = i;
      p.second = j;
      p.test = stats::cross_window_dependence(column(rows, i), column(rows, j), alpha);
      p.small = std::abs(p.test.statistic) < 0.1;
      out.push_back(p);
    }
  }
  return out;
}

inline LimitStudy limit_study(const SimulationSpec& spec, std::size_t reps, const RunContext& ctx) {
  LimitStudy out;
  out.counts = horizon_counts(spec, reps, ctx);
  for (std::size_t w = 0; w < spec.windows.size(); ++w) {
    WindowLimit wl;
    wl.target = mean_measure(spec.dist, spec.kernel, spec.windows[w]);
    const auto xs = column(out.counts, w);
    wl.estimate = stats::mean_estimate(xs);
    wl.within_3se = std::abs(wl.estimate.mean - wl.target) <= 3.0 * wl.estimate.std_error;
    wl.gof = stats::poisson_gof(xs, wl.target, ctx.alpha);
    wl.dispersion = stats::dispersion_index(xs);
    wl.dispersion_ok = wl.dispersion.index >= 0.9 && wl.dispersion.index <= 1.1;
    out.pass = out.pass && wl.within_3se && wl.gof.pass && wl.dispersion_ok;
    out.windows.push_back(wl);
  }
  out.pairs = pairwise_dependence(out.counts, spec.windows.size(), ctx.alpha);
  for (const auto& p : out.pairs) out.pass = out.pass && p.small;
  return out;
}

inline ExperimentReport limits_report(const SimulationSpec& spec, const LimitStudy& s) {
  ExperimentReport rep;
  rep.name = "limits";
  nlohmann::json windows = nlohmann::json::array();
  for (std::size_t w = 0; w < s.windows.size(); ++w) {
    const auto& wl = s.windows[w];
    windows.push_back({{"window", spec.windows[w].describe()},
                       {"target_mean", wl.target},
                       {"estimate", to_json(wl.estimate)},
                       {"within_3se", wl.within_3se},
                       {"poisson_gof", to_json(wl.gof)},
                       {"dispersion", to_json(wl.dispersion)},
                       {"dispersion_in_0.9_1.1", wl.dispersion_ok}});
    const std::string tag = "window " + std::to_string(w);
    rep.require(wl.within_3se, tag + ": mean outside 3 SE of the limit");
    rep.require(wl.gof.pass, tag + ": Poisson goodness of fit rejected");
    rep.require(wl.dispersion_ok, tag + ": dispersion index outside [0.9, 1.1]");
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : s.pairs) {
    pairs.push_back({{"windows", {p.first, p.second}},
                     {"correlation", p.test.statistic},
                     {"test", to_json(p.test)},
                     {"abs_below_0.1", p.small}});
    rep.require(p.small, "windows " + std::to_string(p.first) + "," + std::to_string(p.second) +
                             ": |correlation| >= 0.1");
  }
  rep.summary = {{"replications", s.counts.size()}, {"windows", windows}, {"pairs", pairs}};
  CsvTable counts;
  counts.header = {"replication", "window", "count"};
  for (std::size_t r = 0; r < s.counts.size(); ++r) {
    for (std::size_t w = 0; w < s.counts[r].size(); ++w) counts.add(r, w, s.counts[r][w]);
  }
  rep.tables.emplace_back("counts", std::move(counts));
  return rep;
}

// ---------------------------------------------------------------------------
// sojourn: rescaled sojourns against the unit exponential
// ---------------------------------------------------------------------------

struct SojournPlan {
  ObservationWindow window;
  double burn_in = 0.0;
  std::optional<double> margin;  // auto when empty
  double entry_span = 20.0;
  std::size_t replications = 6000;
  std::size_t min_samples = 5000;
  double censor_target = 0.001;  // per-particle censoring bound used for the auto margin
};

struct SojournRow {
  std::size_t replication = 0;
  double attribute = 0.0;
  double duration = 0.0;
  double rate = 0.0;
  bool censored = false;
};

struct SojournStudy {
  std::vector<SojournRow> rows;
  double margin = 0.0;
  double min_rate = 0.0;
  std::size_t uncensored = 0;
  double censored_fraction = 0.0;
  std::optional<stats::TestReport> ks;
  bool pass = false;
};

/// Smallest deletion rate lambda d(x) over the closure of the window.
inline double min_sojourn_rate(const SimulationSpec& spec, double lambda,
                               const ObservationWindow& w) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& iv : w.intervals()) {
    for (int k = 0; k <= 512; ++k) {
      const double x = iv.lo + (iv.hi - iv.lo) * k / 512.0;
      lo = std::min(lo, lambda * spec.kernel.denominator(x, spec.dist));
    }
  }
  return lo;
}

/// One sojourn per replication: the first particle entering the window
/// after burn_in, followed for `margin` time units past the entry span.
/// Each duration is multiplied by its own rate lambda d(x).
inline SojournStudy sojourn_study(SimulationSpec spec, const SojournPlan& plan,
                                  const RunContext& ctx) {
  const auto* poisson = std::get_if<PoissonArrivals>(&spec.arrivals);
  if (poisson == nullptr) {
    throw std::invalid_argument("the sojourn experiment needs Poisson arrivals");
  }
  const double lambda = poisson->rate;
  SojournStudy out;
  out.min_rate = min_sojourn_rate(spec, lambda, plan.window);
  if (!(out.min_rate > 0.0)) throw std::invalid_argument("deletion rate vanishes on the window");
  out.margin = plan.margin ? *plan.margin : std::log(1.0 / plan.censor_target) / out.min_rate;
  spec.horizon = plan.burn_in + plan.entry_span + out.margin;
  spec.sample_epochs = {spec.horizon};
  spec.record = {false, true, false};

  const auto firsts = parallel_map(plan.replications, ctx.jobs, [&](std::size_t i) {
    Engine rng = make_stream(ctx.seed, i);
    const auto rec = run_simulation(spec, rng);
    const auto all = extract_sojourns(rec, plan.window, plan.burn_in, out.margin);
    std::optional<SojournRow> row;
    if (!all.empty()) {
      const auto& s = all.front();
      row = SojournRow{i, s.attribute, s.duration,
                       lambda * spec.kernel.denominator(s.attribute, spec.dist), s.censored};
    }
    return row;
  });
  std::vector<double> rescaled;
  std::size_t censored = 0;
  for (const auto& r : firsts) {
    if (!r) continue;
    out.rows.push_back(*r);
    if (r->censored) {
      ++censored;
    } else {
      rescaled.push_back(r->duration * r->rate);
    }
  }
  out.uncensored = rescaled.size();
  out.censored_fraction =
      out.rows.empty() ? 1.0 : static_cast<double>(censored) / static_cast<double>(out.rows.size());
  if (rescaled.size() >= 200) out.ks = stats::ks_exponential_unit(rescaled, ctx.alpha);
  out.pass = out.uncensored >= plan.min_samples && out.censored_fraction < 0.005 && out.ks &&
             out.ks->pass;
  return out;
}

inline ExperimentReport sojourn_report(const SojournPlan& plan, const SojournStudy& s) {
  ExperimentReport rep;
  rep.name = "sojourn";
  rep.summary = {{"window", plan.window.describe()},
                 {"replications", plan.replications},
                 {"burn_in", plan.burn_in},
                 {"entry_span", plan.entry_span},
                 {"horizon_margin", s.margin},
                 {"min_rate", s.min_rate},
                 {"sojourns", s.rows.size()},
                 {"uncensored", s.uncensored},
                 {"censored_fraction", s.censored_fraction}};
  if (s.ks) rep.summary["ks_exponential_unit"] = to_json(*s.ks);
  rep.require(s.uncensored >= plan.min_samples,
              "only " + std::to_string(s.uncensored) + " uncensored sojourns, need " +
                  std::to_string(plan.min_samples));
  rep.require(s.censored_fraction < 0.005, "censored fraction is not below 0.5%");
  rep.require(s.ks && s.ks->pass, "KS test against the unit exponential rejected");
  CsvTable t;
  t.header = {"replication", "attribute", "duration", "rate", "rescaled", "censored"};
  for (const auto& r : s.rows) {
    t.add(r.replication, r.attribute, r.duration, r.rate, r.duration * r.rate, r.censored);
  }
  rep.tables.emplace_back("sojourns", std::move(t));
  return rep;
}

// ---------------------------------------------------------------------------
// departures: batch sizes after burn-in
// ---------------------------------------------------------------------------

struct DepartureReplication {
  std::size_t rows = 0;
  double mean_total = 0.0;
  std::vector<double> mean_window;
};

struct DepartureStudy {
  std::vector<DepartureReplication> replications;
  stats::MeanEstimate total;
  bool total_ok = false;
  std::vector<double> targets;
  std::vector<stats::MeanEstimate> windows;
  std::vector<bool> window_ok;
  std::vector<PairDependence> pairs;
  std::size_t pooled_rows = 0;
  bool pass = true;
};

/// Standard errors come from the spread of per-replication means, so the
/// serial dependence of batches inside a run does not shrink them.
inline DepartureStudy departure_study(SimulationSpec spec, std::size_t reps, double burn_in,
                                      double total_tolerance, const RunContext& ctx) {
  spec.record = {false, false, true};
  spec.sample_epochs = {spec.horizon};
  const std::size_t m = spec.windows.size();
  struct Rep {
    DepartureReplication summary;
    std::vector<std::vector<std::uint64_t>> rows;
  };
  auto per_rep = parallel_map(reps, ctx.jobs, [&](std::size_t i) {
    Engine rng = make_stream(ctx.seed, i);
    const auto rec = run_simulation(spec, rng);
    const auto batches = extract_departure_batches(rec, burn_in, spec.windows);
    Rep r;
    r.summary.rows = batches.size();
    r.summary.mean_window.assign(m, 0.0);
    for (const auto& b : batches) {
      r.summary.mean_total += static_cast<double>(b.total);
      for (std::size_t w = 0; w < m; ++w) r.summary.mean_window[w] += static_cast<double>(b.per_window[w]);
      r.rows.push_back(b.per_window);
    }
    if (!batches.empty()) {
      r.summary.mean_total /= static_cast<double>(batches.size());
      for (auto& v : r.summary.mean_window) v /= static_cast<double>(batches.size());
    }
    return r;
  });

  DepartureStudy out;
  std::vector<double> totals;
  std::vector<std::vector<double>> window_means(m);
  std::vector<std::vector<std::uint64_t>> pooled;
  for (auto& r : per_rep) {
    if (r.summary.rows == 0) continue;
    totals.push_back(r.summary.mean_total);
    for (std::size_t w = 0; w < m; ++w) window_means[w].push_back(r.summary.mean_window[w]);
    for (auto& row : r.rows) pooled.push_back(std::move(row));
    out.replications.push_back(r.summary);
  }
  out.pooled_rows = pooled.size();
  out.total = stats::mean_estimate(totals);
  out.total_ok = !totals.empty() && std::abs(out.total.mean - 1.0) <= total_tolerance;
  out.pass = out.total_ok;
  for (std::size_t w = 0; w < m; ++w) {
    const double target = spec.windows[w].probability(spec.dist);
    const auto est = stats::mean_estimate(window_means[w]);
    const bool ok = est.n > 1 && std::abs(est.mean - target) <= 3.0 * est.std_error;
    out.targets.push_back(target);
    out.windows.push_back(est);
    out.window_ok.push_back(ok);
    out.pass = out.pass && ok;
  }
  if (m > 1) {
    out.pairs = pairwise_dependence(pooled, m, ctx.alpha);
    for (const auto& p : out.pairs) out.pass = out.pass && p.small;
  }
  return out;
}

inline ExperimentReport departures_report(const SimulationSpec& spec, double total_tolerance,
                                          const DepartureStudy& s) {
  ExperimentReport rep;
  rep.name = "departures";
  nlohmann::json windows = nlohmann::json::array();
  for (std::size_t w = 0; w < s.windows.size(); ++w) {
    windows.push_back({{"window", spec.windows[w].describe()},
                       {"target_mean", s.targets[w]},
                       {"estimate", to_json(s.windows[w])},
                       {"within_3se", static_cast<bool>(s.window_ok[w])}});
    rep.require(s.window_ok[w], "window " + std::to_string(w) + ": batch mean outside 3 SE of F(B)");
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : s.pairs) {
    pairs.push_back({{"windows", {p.first, p.second}},
                     {"correlation", p.test.statistic},
                     {"abs_below_0.1", p.small}});
    rep.require(p.small, "windows " + std::to_string(p.first) + "," + std::to_string(p.second) +
                             ": |batch correlation| >= 0.1");
  }
  rep.require(s.total_ok, "long-run mean batch size outside 1 +/- " + format_number(total_tolerance));
  rep.summary = {{"replications", s.replications.size()},
                 {"pooled_batches", s.pooled_rows},
                 {"total", to_json(s.total)},
                 {"total_tolerance", total_tolerance},
                 {"total_ok", s.total_ok},
                 {"windows", windows},
                 {"pairs", pairs}};
  CsvTable t;
  t.header = {"replication", "batches", "mean_total"};
  for (std::size_t w = 0; w < s.windows.size(); ++w) t.header.push_back("mean_window_" + std::to_string(w));
  for (std::size_t r = 0; r < s.replications.size(); ++r) {
    const auto& d = s.replications[r];
    std::vector<std::string> row{std::to_string(r), std::to_string(d.rows), format_number(d.mean_total)};
    for (double v : d.mean_window) row.push_back(format_number(v));
    t.rows.push_back(std::move(row));
  }
  rep.tables.emplace_back("batch_means", std::move(t));
  return rep;
}

// ---------------------------------------------------------------------------
// two-population comparisons (initial-state insensitivity, deletion modes)
// ---------------------------------------------------------------------------

struct ComparisonStudy {
  std::vector<std::vector<std::uint64_t>> first;
  std::vector<std::vector<std::uint64_t>> second;
  std::vector<stats::TestReport> tests;  // one per window
  bool pass = true;
};

inline constexpr std::uint64_t kSecondArmOffset = 1ULL << 40;

inline ComparisonStudy compare_specs(const SimulationSpec& a, const SimulationSpec& b,
                                     std::size_t reps, const RunContext& ctx) {
  if (a.windows.size() != b.windows.size()) throw std::invalid_argument("window lists differ");
  ComparisonStudy out;
  out.first = horizon_counts(a, reps, ctx);
  out.second = horizon_counts(b, reps, ctx, kSecondArmOffset);
  for (std::size_t w = 0; w < a.windows.size(); ++w) {
    out.tests.push_back(stats::homogeneity_test(column(out.first, w), column(out.second, w), ctx.alpha));
    out.pass = out.pass && out.tests.back().pass;
  }
  return out;
}

// ---------------------------------------------------------------------------
// stationarity sweep
// ---------------------------------------------------------------------------

struct StationarityRow {
  TestFunction f = TestFunction::zero();
  StationarityResult general;
  std::optional<StationarityResult> reduced;
};

struct StationarityStudy {
  std::vector<StationarityRow> rows;
  double threshold = 1e-6;
  double max_residual = 0.0;
  bool poisson_like = true;
  bool converged = true;
  std::optional<bool> expect_poisson;
  bool pass = true;
};

/// Ten functions placed by quantiles so they fit any attribute law: five
/// steps and five smooth bumps of varying height.
inline std::vector<TestFunction> default_test_functions(const AttributeDistribution& dist) {
  struct Spot {
    double ulo, uhi, height;
  };
  const Spot steps[] = {{0.05, 0.3, 0.5}, {0.2, 0.5, 1.0}, {0.4, 0.7, 2.0}, {0.1, 0.9, 0.25},
                        {0.6, 0.95, 3.0}};
  const Spot bumps[] = {{0.1, 0.4, 1.0}, {0.3, 0.8, 0.5}, {0.5, 0.9, 2.0}, {0.02, 0.6, 4.0},
                        {0.7, 0.97, 1.5}};
  std::vector<TestFunction> out;
  for (const auto& s : steps) out.push_back(TestFunction::step(s.height, dist.quantile(s.ulo), dist.quantile(s.uhi)));
  for (const auto& s : bumps) {
    const double lo = dist.quantile(s.ulo);
    const double hi = dist.quantile(s.uhi);
    out.push_back(TestFunction::bump(0.5 * (lo + hi), 0.5 * (hi - lo), s.height));
  }
  return out;
}

inline StationarityStudy stationarity_study(const DeletionKernel& kernel,
                                            const AttributeDistribution& dist,
                                            const std::vector<TestFunction>& fs, double threshold,
                                            std::optional<bool> expect_poisson) {
  StationarityStudy out;
  out.threshold = threshold;
  out.expect_poisson = expect_poisson;
  for (const auto& f : fs) {
    StationarityRow row;
    row.f = f;
    if (kernel.is_ranked()) {
      const auto both = ranked_reduction_check(dist, kernel.rate_function(), f);
      row.general = both.general;
      row.reduced = both.reduced;
    } else {
      row.general = stationarity_residual(kernel, dist, f);
    }
    out.max_residual = std::max(out.max_residual, row.general.residual);
    out.converged = out.converged && row.general.converged;
    out.rows.push_back(row);
  }
  out.poisson_like = out.max_residual < threshold;
  out.pass = out.converged && (!expect_poisson || *expect_poisson == out.poisson_like);
  return out;
}

inline ExperimentReport stationarity_report(const DeletionKernel& kernel,
                                            const AttributeDistribution& dist,
                                            const StationarityStudy& s) {
  ExperimentReport rep;
  rep.name = "stationarity";
  nlohmann::json rows = nlohmann::json::array();
  CsvTable t;
  t.header = {"function", "lhs", "residual", "error", "converged", "reduced_residual"};
  for (const auto& r : s.rows) {
    nlohmann::json j{{"function", r.f.describe()},
                     {"lhs", r.general.lhs},
                     {"residual", r.general.residual},
                     {"error", r.general.error},
                     {"converged", r.general.converged}};
    if (r.reduced) j["reduced_residual"] = r.reduced->residual;
    rows.push_back(j);
    t.add(r.f.describe(), r.general.lhs, r.general.residual, r.general.error, r.general.converged,
          r.reduced ? format_number(r.reduced->residual) : std::string());
  }
  rep.summary = {{"kernel", kernel.describe()},
                 {"distribution", dist.describe()},
                 {"threshold", s.threshold},
                 {"max_residual", s.max_residual},
                 {"verdict", s.poisson_like ? "poisson" : "non_poisson"},
                 {"converged", s.converged},
                 {"functions", rows}};
  if (s.expect_poisson) rep.summary["expected"] = *s.expect_poisson ? "poisson" : "non_poisson";
  rep.require(s.converged, "quadrature did not reach its tolerance");
  if (s.expect_poisson) {
    rep.require(*s.expect_poisson == s.poisson_like, "verdict differs from the expected one");
  }
  rep.tables.emplace_back("residuals", std::move(t));
  return rep;
}

// ---------------------------------------------------------------------------
// arrays: permutation construction with n arrivals
// ---------------------------------------------------------------------------

struct XiStudy {
  std::size_t n = 0;
  std::vector<std::vector<std::uint64_t>> counts;
  std::vector<double> targets;
  std::vector<stats::TestReport> gof;
  bool pass = true;
};

inline XiStudy xi_study(std::size_t n, const AttributeDistribution& dist, const RateFunction& a,
                        const std::vector<ObservationWindow>& windows, std::size_t reps,
                        const RunContext& ctx) {
  XiStudy out;
  out.n = n;
  out.counts = parallel_map(reps, ctx.jobs, [&](std::size_t i) {
    Engine rng = make_stream(ctx.seed, i);
    return xi_n_limit_experiment(n, dist, a, windows, 1, rng).front();
  });
  const auto kernel = DeletionKernel::ranked(a);
  for (std::size_t w = 0; w < windows.size(); ++w) {
    out.targets.push_back(mean_measure(dist, kernel, windows[w]));
    out.gof.push_back(stats::poisson_gof(column(out.counts, w), out.targets.back(), ctx.alpha));
    out.pass = out.pass && out.gof.back().pass;
  }
  return out;
}

struct ConditionDecay {
  std::vector<std::uint64_t> n;
  std::vector<ConditionValues> values;
  std::vector<double> ratios;  // val22(n_i) / val22(n_{i+1})
  bool monotone = true;
  bool ratios_near_growth = true;  // within a factor 2 of n_{i+1} / n_i
};

inline ConditionDecay condition_decay(const std::vector<std::uint64_t>& ns,
                                      const AttributeDistribution& dist, const RateFunction& a,
                                      const ObservationWindow& window, std::size_t mc_budget,
                                      const RunContext& ctx) {
  ConditionDecay out;
  out.n = ns;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    Engine rng = make_stream(ctx.seed, i);
    out.values.push_back(corollary5_condition_values(ns[i], dist, a, window, mc_budget, &rng));
  }
  for (std::size_t i = 0; i + 1 < ns.size(); ++i) {
    const double r = out.values[i].val22 / out.values[i + 1].val22;
    const double growth = static_cast<double>(ns[i + 1]) / static_cast<double>(ns[i]);
    out.ratios.push_back(r);
    out.monotone = out.monotone && out.values[i + 1].val22 < out.values[i].val22;
    out.ratios_near_growth = out.ratios_near_growth && r >= growth / 2.0 && r <= growth * 2.0;
  }
  return out;
}

inline nlohmann::json to_json(const ConditionDecay& d) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < d.n.size(); ++i) {
    const auto& v = d.values[i];
    rows.push_back({{"n", d.n[i]},
                    {"val22", v.val22},
                    {"val23", v.val23},
                    {"se22", v.se22},
                    {"se23", v.se23},
                    {"exact", v.exact}});
  }
  return {{"values", rows},
          {"ratios", d.ratios},
          {"monotone", d.monotone},
          {"ratios_within_factor_2", d.ratios_near_growth}};
}

inline ExperimentReport arrays_report(const XiStudy& xi, const std::vector<ObservationWindow>& windows,
                                      const ObservationWindow& condition_window,
                                      const ConditionDecay& decay) {
  ExperimentReport rep;
  rep.name = "arrays";
  nlohmann::json ws = nlohmann::json::array();
  for (std::size_t w = 0; w < windows.size(); ++w) {
    ws.push_back({{"window", windows[w].describe()},
                  {"target_mean", xi.targets[w]},
                  {"estimate", to_json(stats::mean_estimate(column(xi.counts, w)))},
                  {"poisson_gof", to_json(xi.gof[w])}});
    rep.require(xi.gof[w].pass, "window " + std::to_string(w) + ": Poisson goodness of fit rejected");
  }
  rep.summary = {{"n", xi.n},
                 {"replications", xi.counts.size()},
                 {"windows", ws},
                 {"condition_window", condition_window.describe()},
                 {"condition_values", to_json(decay)}};
  if (decay.n.size() > 1) {
    rep.require(decay.monotone, "val22 does not decrease in n");
    rep.require(decay.ratios_near_growth, "val22 ratios are not within a factor 2 of the n ratios");
  }
  CsvTable t;
  t.header = {"replication", "window", "count"};
  for (std::size_t r = 0; r < xi.counts.size(); ++r) {
    for (std::size_t w = 0; w < xi.counts[r].size(); ++w) t.add(r, w, xi.counts[r][w]);
  }
  rep.tables.emplace_back("xi_counts", std::move(t));
  CsvTable c;
  c.header = {"n", "val22", "val23", "se22", "se23", "exact"};
  for (std::size_t i = 0; i < decay.n.size(); ++i) {
    const auto& v = decay.values[i];
    c.add(decay.n[i], v.val22, v.val23, v.se22, v.se23, v.exact);
  }
  rep.tables.emplace_back("condition_values", std::move(c));
  return rep;
}

/// Mean number of survivors of the permutation construction with a = 1,
/// where survivors are exactly the right-to-left records.
inline stats::MeanEstimate record_survivor_mean(std::size_t n, std::size_t reps,
                                                const RunContext& ctx) {
  const auto dist = AttributeDistribution::uniform(0.0, 1.0);
  const auto one = RateFunction::constant(1.0);
  const auto counts = parallel_map(reps, ctx.jobs, [&](std::size_t i) {
    Engine rng = make_stream(ctx.seed, i);
    return static_cast<std::uint64_t>(permutation_rank_realization(n, dist, one, rng).survivor_count());
  });
  return stats::mean_estimate(counts);
}

// ---------------------------------------------------------------------------
// calibration of the statistical tests under synthesized nulls
// ---------------------------------------------------------------------------

struct CalibrationRow {
  std::string test;
  std::size_t rejections = 0;
  std::size_t repetitions = 0;
  double rate = 0.0;
  double band = 0.0;
  bool within = false;
};

inline std::vector<CalibrationRow> calibration_study(std::size_t repetitions, double alpha,
                                                     const RunContext& ctx) {
  using Draw = std::function<bool(Engine&)>;  // true when the test rejects
  const std::size_t n = 1000;
  auto poisson_sample = [](Engine& rng, double mean, std::size_t count) {
    std::poisson_distribution<std::uint64_t> law(mean);
    std::vector<std::uint64_t> xs(count);
    for (auto& x : xs) x = law(rng);
    return xs;
  };
  const std::vector<std::pair<std::string, Draw>> tests = {
      {"poisson_gof",
       [&](Engine& rng) { return !stats::poisson_gof(poisson_sample(rng, 3.21888, n), 3.21888, alpha).pass; }},
      {"dispersion_index",
       [&](Engine& rng) {
         return !stats::dispersion_index(poisson_sample(rng, 5.0, n), 1.0 - alpha).covers(1.0);
       }},
      {"cross_window_dependence",
       [&](Engine& rng) {
         const auto a = poisson_sample(rng, 3.0, n);
         const auto b = poisson_sample(rng, 2.0, n);
         return !stats::cross_window_dependence(a, b, alpha).pass;
       }},
      {"ks_exponential_unit",
       [&](Engine& rng) {
         std::vector<double> xs(n);
         for (auto& x : xs) x = -std::log(uniform_open01(rng));
         return !stats::ks_exponential_unit(xs, alpha).pass;
       }},
      {"homogeneity_test",
       [&](Engine& rng) {
         const auto a = poisson_sample(rng, 3.0, 500);
         const auto b = poisson_sample(rng, 3.0, 500);
         return !stats::homogeneity_test(a, b, alpha).pass;
       }},
  };
  std::vector<CalibrationRow> out;
  const double band = 3.0 * std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(repetitions));
  for (std::size_t t = 0; t < tests.size(); ++t) {
    const auto rejected = parallel_map(repetitions, ctx.jobs, [&](std::size_t i) {
      Engine rng = make_stream(ctx.seed, (static_cast<std::uint64_t>(t) << 32) + i);
      return tests[t].second(rng) ? 1 : 0;
    });
    CalibrationRow row;
    row.test = tests[t].first;
    row.repetitions = repetitions;
    for (int r : rejected) row.rejections += static_cast<std::size_t>(r);
    row.rate = static_cast<double>(row.rejections) / static_cast<double>(repetitions);
    row.band = band;
    row.within = std::abs(row.rate - alpha) <= band;
    out.push_back(row);
  }
  return out;
}

}  // namespace psurv
