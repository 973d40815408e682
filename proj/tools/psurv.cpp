// psurv command-line driver.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "psurv/acceptance.hpp"
#include "psurv/experiments.hpp"
#include "psurv/report.hpp"
#include "psurv/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace psurv;

namespace {

enum Exit { kPass = 0, kTestFailure = 1, kConfigError = 2, kRuntimeError = 3 };

struct Invocation {
  std::string command;
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
};

json envelope(const Invocation& inv, const ScenarioConfig* cfg, std::uint64_t seed) {
  json j{{"version", kVersion}, {"command", inv.command}};
  if (cfg != nullptr) {
    j["config_digest"] = cfg->digest;
    j["seed"] = seed;
  }
  return j;
}

void write_manifest(const fs::path& dir, json manifest) {
  std::cerr << manifest.dump(2) << '\n';
  try {
    write_text_file(dir / "failure.json", manifest.dump(2) + "\n");
  } catch (const std::exception&) {
    // The manifest already went to stderr.
  }
}

void require(bool ok, const std::string& pointer, const std::string& message) {
  if (!ok) throw ConfigError(std::vector<ConfigIssue>{{pointer, message}});
}

ExperimentReport dispatch(const std::string& command, const ScenarioConfig& cfg,
                          const RunContext& ctx) {
  const auto& sim = cfg.sim;
  if (command == "simulate") {
    return simulate_report(sim, cfg.replications, ctx);
  }
  if (command == "limits") {
    require(!sim.windows.empty(), "/windows", "limits needs at least one window");
    require(sim.horizon > 0.0, "/horizon", "limits needs a positive horizon");
    require(cfg.replications >= 100, "/replications", "limits needs at least 100 replications");
    return limits_report(sim, limit_study(sim, cfg.replications, ctx));
  }
  if (command == "stationarity") {
    auto fs = cfg.stationarity.test_functions;
    if (fs.empty()) fs = default_test_functions(sim.dist);
    const auto study = stationarity_study(sim.kernel, sim.dist, fs, cfg.stationarity.threshold,
                                          cfg.stationarity.expect_poisson);
    return stationarity_report(sim.kernel, sim.dist, study);
  }
  if (command == "arrays") {
    require(sim.kernel.is_ranked(), "/kernel/shape", "arrays needs a ranked kernel");
    require(!sim.windows.empty(), "/windows", "arrays needs at least one window");
    require(cfg.arrays.replications >= 50, "/arrays/replications", "arrays needs >= 50 replications");
    const auto& a = sim.kernel.rate_function();
    const auto xi = xi_study(cfg.arrays.n, sim.dist, a, sim.windows, cfg.arrays.replications, ctx);
    const auto window = cfg.arrays.condition_window ? *cfg.arrays.condition_window : sim.windows.front();
    RunContext decay_ctx = ctx;
    decay_ctx.seed = stream_seed(ctx.seed, 1);
    const auto decay =
        condition_decay(cfg.arrays.condition_n, sim.dist, a, window, cfg.arrays.mc_budget, decay_ctx);
    return arrays_report(xi, sim.windows, window, decay);
  }
  if (command == "sojourn") {
    require(cfg.sojourn.window.has_value(), "/sojourn/window", "sojourn needs a window");
    require(std::holds_alternative<PoissonArrivals>(sim.arrivals), "/arrivals/process",
            "sojourn rescaling needs Poisson arrivals");
    SojournPlan plan;
    plan.window = *cfg.sojourn.window;
    plan.burn_in = cfg.sojourn.burn_in;
    plan.margin = cfg.sojourn.horizon_margin;
    plan.entry_span = cfg.sojourn.entry_span;
    plan.replications = cfg.replications;
    plan.min_samples = cfg.sojourn.min_samples;
    return sojourn_report(plan, sojourn_study(sim, plan, ctx));
  }
  if (command == "departures") {
    require(!sim.windows.empty(), "/windows", "departures needs at least one window");
    require(sim.horizon > cfg.departures.burn_in, "/horizon", "horizon must exceed the burn-in");
    require(cfg.replications >= 2, "/replications", "departures needs >= 2 replications");
    const auto study = departure_study(sim, cfg.replications, cfg.departures.burn_in,
                                       cfg.departures.total_tolerance, ctx);
    return departures_report(sim, cfg.departures.total_tolerance, study);
  }
  throw std::logic_error("unhandled command " + command);
}

int run(const Invocation& inv) {
  fs::path out_dir = inv.out ? fs::path(*inv.out) : fs::path("out");
  ScenarioConfig cfg;
  try {
    cfg = parse_scenario(inv.config_path);
  } catch (const ConfigError& e) {
    json m = envelope(inv, nullptr, 0);
    m["status"] = "config_error";
    m["errors"] = json::array();
    for (const auto& i : e.issues()) m["errors"].push_back({{"pointer", i.pointer}, {"message", i.message}});
    write_manifest(out_dir, m);
    return kConfigError;
  }
  if (!inv.out) out_dir = cfg.output_dir;
  const std::uint64_t seed = inv.seed ? *inv.seed : cfg.seed;
  const RunContext ctx{seed, inv.jobs, cfg.alpha};

  try {
    if (inv.command == "acceptance") {
      const auto results = run_acceptance(seed, inv.jobs, {}, [](const CriterionResult& r) {
        std::cout << format_criterion_line(r) << std::endl;
      });
      json summary = envelope(inv, &cfg, seed);
      json criteria = json::array();
      CsvTable t;
      t.header = {"criterion", "pass", "summary"};
      bool all = true;
      for (const auto& r : results) {
        all = all && r.pass;
        criteria.push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass},
                            {"summary", r.summary}, {"details", r.details}});
        std::string s = r.summary;
        for (auto& c : s) c = c == ',' ? ';' : c;
        t.add(r.id, r.pass, s);
      }
      summary["pass"] = all;
      summary["criteria"] = criteria;
      write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");
      write_csv_file(out_dir / "acceptance.csv", t);
      if (!all) {
        json m = envelope(inv, &cfg, seed);
        m["status"] = "test_failure";
        m["failures"] = json::array();
        for (const auto& r : results) {
          if (!r.pass) m["failures"].push_back("AC" + std::to_string(r.id) + ": " + r.summary);
        }
        write_manifest(out_dir, m);
        return kTestFailure;
      }
      return kPass;
    }

    const auto rep = dispatch(inv.command, cfg, ctx);
    json summary = envelope(inv, &cfg, seed);
    summary["pass"] = rep.pass;
    summary["failures"] = rep.failures;
    summary["result"] = rep.summary;
    write_text_file(out_dir / "summary.json", summary.dump(2) + "\n");
    for (const auto& [stem, table] : rep.tables) write_csv_file(out_dir / (stem + ".csv"), table);
    for (const auto& [name, text] : rep.texts) write_text_file(out_dir / name, text);
    std::cout << inv.command << ": " << (rep.pass ? "pass" : "FAIL") << " (" << out_dir.string()
              << "/summary.json)\n";
    for (const auto& f : rep.failures) std::cout << "  " << f << '\n';
    if (!rep.pass) {
      json m = envelope(inv, &cfg, seed);
      m["status"] = "test_failure";
      m["failures"] = rep.failures;
      write_manifest(out_dir, m);
      return kTestFailure;
    }
    return kPass;
  } catch (const ConfigError& e) {
    json m = envelope(inv, &cfg, seed);
    m["status"] = "config_error";
    m["errors"] = json::array();
    for (const auto& i : e.issues()) m["errors"].push_back({{"pointer", i.pointer}, {"message", i.message}});
    write_manifest(out_dir, m);
    return kConfigError;
  } catch (const std::exception& e) {
    json m = envelope(inv, &cfg, seed);
    m["status"] = "runtime_error";
    m["error"] = e.what();
    write_manifest(out_dir, m);
    return kRuntimeError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle survivor process experiments"};
  Invocation inv;
  app.add_option("command", inv.command, "simulate, limits, stationarity, arrays, sojourn, departures or acceptance")
      ->required()
      ->check(CLI::IsMember(
          {"simulate", "limits", "stationarity", "arrays", "sojourn", "departures", "acceptance"}));
  app.add_option("--config", inv.config_path, "scenario file (JSON)")->required();
  std::string out;
  auto* out_opt = app.add_option("--out", out, "output directory (overrides output_dir)");
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "master seed override");
  app.add_option("--jobs", inv.jobs, "worker threads for replications")->check(CLI::Range(1U, 1024U));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }
  if (*out_opt) inv.out = out;
  if (*seed_opt) inv.seed = seed;
  return run(inv);
}
