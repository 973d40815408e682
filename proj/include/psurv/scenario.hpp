#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "psurv/model.hpp"
#include "psurv/survivor_sim.hpp"
#include "psurv/theory.hpp"

namespace psurv {

struct ConfigIssue {
  std::string pointer;  // JSON pointer of the offending field
  std::string message;
};

/// Thrown by parse_scenario with every validation problem found.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues)
      : std::runtime_error(summarize(issues)), issues_(std::move(issues)) {}
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  static std::string summarize(const std::vector<ConfigIssue>& issues) {
    std::ostringstream os;
    os << issues.size() << " configuration error(s)";
    for (const auto& i : issues) os << "\n  " << i.pointer << ": " << i.message;
    return os.str();
  }
  std::vector<ConfigIssue> issues_;
};

struct StationarityBlock {
  std::vector<TestFunction> test_functions;
  double threshold = 1e-6;
  std::optional<bool> expect_poisson;
};

struct ArraysBlock {
  std::size_t n = 2000;
  std::size_t replications = 2000;
  std::vector<std::uint64_t> condition_n{100, 1000, 10000};
  std::size_t mc_budget = 400000;
  std::optional<ObservationWindow> condition_window;
};

struct SojournBlock {
  std::optional<ObservationWindow> window;
  double burn_in = 0.0;
  std::optional<double> horizon_margin;
  double entry_span = 20.0;
  std::size_t min_samples = 200;
};

struct DeparturesBlock {
  double burn_in = 0.0;
  double total_tolerance = 0.05;
};

/// Fully validated experiment description.
struct ScenarioConfig {
  SimulationSpec sim;
  std::uint64_t seed = 0;
  std::size_t replications = 1;
  double burn_in = 0.0;
  double alpha = 0.01;
  std::string output_dir = "out";
  std::string digest;
  StationarityBlock stationarity;
  ArraysBlock arrays;
  SojournBlock sojourn;
  DeparturesBlock departures;
};

/// Stable 64-bit FNV-1a hash of a byte string, as 16 hex digits.
inline std::string content_digest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

namespace detail {

using nlohmann::json;

/// Field reader that records every problem instead of stopping at the first.
class Reader {
 public:
  std::vector<ConfigIssue> issues;

  void fail(const std::string& ptr, const std::string& msg) { issues.push_back({ptr, msg}); }

  void allow_keys(const json& obj, const std::string& ptr, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) return;
    for (const auto& [k, v] : obj.items()) {
      bool known = false;
      for (const char* allowed : keys) known = known || k == allowed;
      if (!known) fail(ptr + "/" + k, "unknown field");
    }
  }

  const json* object(const json& parent, const std::string& ptr, const char* key, bool required) {
    if (!parent.contains(key)) {
      if (required) fail(ptr + "/" + key, "missing required section");
      return nullptr;
    }
    const json& v = parent.at(key);
    if (!v.is_object()) {
      fail(ptr + "/" + key, "expected an object");
      return nullptr;
    }
    return &v;
  }

  std::optional<double> number(const json& parent, const std::string& ptr, const char* key,
                               bool required) {
    if (!parent.contains(key)) {
      if (required) fail(ptr + "/" + key, "missing required number");
      return std::nullopt;
    }
    const json& v = parent.at(key);
    if (!v.is_number()) {
      fail(ptr + "/" + key, "expected a number");
      return std::nullopt;
    }
    return v.get<double>();
  }

  std::optional<std::uint64_t> unsigned_int(const json& parent, const std::string& ptr,
                                            const char* key, bool required) {
    if (!parent.contains(key)) {
      if (required) fail(ptr + "/" + key, "missing required integer");
      return std::nullopt;
    }
    const json& v = parent.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(ptr + "/" + key, "expected a nonnegative integer");
      return std::nullopt;
    }
    return v.get<std::uint64_t>();
  }

  std::optional<std::string> string(const json& parent, const std::string& ptr, const char* key,
                                    bool required) {
    if (!parent.contains(key)) {
      if (required) fail(ptr + "/" + key, "missing required string");
      return std::nullopt;
    }
    const json& v = parent.at(key);
    if (!v.is_string()) {
      fail(ptr + "/" + key, "expected a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  std::optional<std::vector<double>> numbers(const json& parent, const std::string& ptr,
                                             const char* key, bool required) {
    if (!parent.contains(key)) {
      if (required) fail(ptr + "/" + key, "missing required array");
      return std::nullopt;
    }
    const json& v = parent.at(key);
    if (!v.is_array()) {
      fail(ptr + "/" + key, "expected an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        fail(ptr + "/" + key + "/" + std::to_string(i), "expected a number");
        return std::nullopt;
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  template <class F>
  auto guarded(const std::string& ptr, F&& make) -> std::optional<decltype(make())> {
    try {
      return make();
    } catch (const std::invalid_argument& e) {
      fail(ptr, e.what());
      return std::nullopt;
    }
  }
};

inline std::optional<AttributeDistribution> read_distribution(Reader& r, const json& j,
                                                              const std::string& ptr) {
  const auto family = r.string(j, ptr, "family", true);
  if (!family) return std::nullopt;
  if (*family == "uniform") {
    r.allow_keys(j, ptr, {"family", "lo", "hi"});
    const auto lo = r.number(j, ptr, "lo", false).value_or(0.0);
    const auto hi = r.number(j, ptr, "hi", false).value_or(1.0);
    return r.guarded(ptr, [&] { return AttributeDistribution::uniform(lo, hi); });
  }
  if (*family == "exponential") {
    r.allow_keys(j, ptr, {"family", "rate"});
    const auto rate = r.number(j, ptr, "rate", true);
    if (!rate) return std::nullopt;
    return r.guarded(ptr, [&] { return AttributeDistribution::exponential(*rate); });
  }
  if (*family == "beta") {
    r.allow_keys(j, ptr, {"family", "alpha", "beta"});
    const auto a = r.number(j, ptr, "alpha", true);
    const auto b = r.number(j, ptr, "beta", true);
    if (!a || !b) return std::nullopt;
    return r.guarded(ptr, [&] { return AttributeDistribution::beta(*a, *b); });
  }
  r.fail(ptr + "/family", "unknown distribution family '" + *family + "'");
  return std::nullopt;
}

inline std::optional<RateFunction> read_rate(Reader& r, const json& parent, const std::string& ptr,
                                             const char* key,
                                             const std::optional<AttributeDistribution>& dist) {
  const json* j = r.object(parent, ptr, key, true);
  if (j == nullptr) return std::nullopt;
  const std::string here = ptr + "/" + key;
  const auto family = r.string(*j, here, "family", true);
  if (!family) return std::nullopt;
  if (*family == "constant") {
    r.allow_keys(*j, here, {"family", "value"});
    const auto v = r.number(*j, here, "value", true);
    if (!v) return std::nullopt;
    return RateFunction::constant(*v);
  }
  if (*family == "affine") {
    r.allow_keys(*j, here, {"family", "intercept", "slope", "argument"});
    const auto c0 = r.number(*j, here, "intercept", true);
    const auto c1 = r.number(*j, here, "slope", true);
    const auto arg = r.string(*j, here, "argument", false).value_or("x");
    if (!c0 || !c1) return std::nullopt;
    if (arg == "x") return RateFunction::affine(*c0, *c1);
    if (arg == "cdf") {
      if (!dist) return std::nullopt;
      return RateFunction::affine_in_cdf(*c0, *c1, *dist);
    }
    r.fail(here + "/argument", "expected 'x' or 'cdf'");
    return std::nullopt;
  }
  if (*family == "tabulated") {
    r.allow_keys(*j, here, {"family", "grid", "values"});
    auto grid = r.numbers(*j, here, "grid", true);
    auto values = r.numbers(*j, here, "values", true);
    if (!grid || !values) return std::nullopt;
    return r.guarded(here, [&] { return RateFunction::tabulated(*grid, *values); });
  }
  r.fail(here + "/family", "unknown rate family '" + *family + "'");
  return std::nullopt;
}

inline std::optional<ObservationWindow> read_window(Reader& r, const json& j,
                                                    const std::string& ptr) {
  auto pair_of = [&](const json& v, const std::string& p) -> std::optional<Interval> {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      r.fail(p, "malformed window: expected [lo, hi]");
      return std::nullopt;
    }
    return Interval{v[0].get<double>(), v[1].get<double>()};
  };
  if (!j.is_array() || j.empty()) {
    r.fail(ptr, "malformed window: expected [lo, hi] or a list of them");
    return std::nullopt;
  }
  std::vector<Interval> parts;
  if (j[0].is_number()) {
    auto iv = pair_of(j, ptr);
    if (!iv) return std::nullopt;
    parts.push_back(*iv);
  } else {
    for (std::size_t i = 0; i < j.size(); ++i) {
      auto iv = pair_of(j[i], ptr + "/" + std::to_string(i));
      if (!iv) return std::nullopt;
      parts.push_back(*iv);
    }
  }
  return r.guarded(ptr, [&] { return ObservationWindow(parts); });
}

inline std::optional<TestFunction> read_test_function(Reader& r, const json& j,
                                                      const std::string& ptr) {
  if (!j.is_object()) {
    r.fail(ptr, "expected an object");
    return std::nullopt;
  }
  const auto type = r.string(j, ptr, "type", true);
  if (!type) return std::nullopt;
  if (*type == "zero") {
    r.allow_keys(j, ptr, {"type"});
    return TestFunction::zero();
  }
  if (*type == "step") {
    r.allow_keys(j, ptr, {"type", "height", "lo", "hi"});
    const auto h = r.number(j, ptr, "height", true);
    const auto lo = r.number(j, ptr, "lo", true);
    const auto hi = r.number(j, ptr, "hi", true);
    if (!h || !lo || !hi) return std::nullopt;
    return r.guarded(ptr, [&] { return TestFunction::step(*h, *lo, *hi); });
  }
  if (*type == "bump") {
    r.allow_keys(j, ptr, {"type", "center", "half_width", "height"});
    const auto c = r.number(j, ptr, "center", true);
    const auto w = r.number(j, ptr, "half_width", true);
    const auto h = r.number(j, ptr, "height", true);
    if (!c || !w || !h) return std::nullopt;
    return r.guarded(ptr, [&] { return TestFunction::bump(*c, *w, *h); });
  }
  r.fail(ptr + "/type", "unknown test function type '" + *type + "'");
  return std::nullopt;
}

/// Parse JSON text, recording duplicate keys (which nlohmann would
/// otherwise silently overwrite) with a pointer to the repeated field.
inline json parse_rejecting_duplicates(const std::string& text, Reader& r) {
  struct Frame {
    std::string name;
    std::set<std::string> keys;
    std::string last_key;
  };
  std::vector<Frame> stack;
  auto path = [&]() {
    std::string p;
    for (std::size_t i = 1; i < stack.size(); ++i) p += "/" + stack[i].name;
    return p;
  };
  json::parser_callback_t cb = [&](int /*depth*/, json::parse_event_t event, json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start:
      case json::parse_event_t::array_start:
        stack.push_back({stack.empty() ? "" : (stack.back().last_key.empty() ? "*" : stack.back().last_key), {}, {}});
        break;
      case json::parse_event_t::object_end:
      case json::parse_event_t::array_end:
        if (!stack.empty()) stack.pop_back();
        if (!stack.empty()) stack.back().last_key.clear();
        break;
      case json::parse_event_t::key: {
        const auto k = parsed.get<std::string>();
        if (!stack.empty()) {
          if (!stack.back().keys.insert(k).second) r.fail(path() + "/" + k, "duplicate field");
          stack.back().last_key = k;
        }
        break;
      }
      case json::parse_event_t::value:
        if (!stack.empty()) stack.back().last_key.clear();
        break;
    }
    return true;
  };
  try {
    return json::parse(text, cb);
  } catch (const json::parse_error& e) {
    r.fail("", std::string("malformed JSON: ") + e.what());
    return json();
  }
}

}  // namespace detail

/// Parse and validate scenario text; throws ConfigError listing every issue.
inline ScenarioConfig parse_scenario_text(const std::string& text) {
  using detail::json;
  detail::Reader r;
  const json root = detail::parse_rejecting_duplicates(text, r);
  if (!r.issues.empty()) throw ConfigError(r.issues);
  if (!root.is_object()) throw ConfigError(std::vector<ConfigIssue>{{"", "top level must be an object"}});

  r.allow_keys(root, "",
               {"seed", "arrivals", "distribution", "kernel", "windows", "horizon", "burn_in",
                "replications", "sample_epochs", "max_arrivals", "deletion_mode",
                "initial_population", "alpha", "output_dir", "stationarity", "arrays", "sojourn",
                "departures"});

  ScenarioConfig cfg;
  cfg.digest = content_digest(text);
  cfg.sim.config_digest = cfg.digest;

  if (auto seed = r.unsigned_int(root, "", "seed", true)) cfg.seed = *seed;

  // Distribution first: affine-in-cdf rates and windows depend on it.
  std::optional<AttributeDistribution> dist;
  if (const json* d = r.object(root, "", "distribution", true)) {
    dist = detail::read_distribution(r, *d, "/distribution");
    if (dist) cfg.sim.dist = *dist;
  }

  if (const json* a = r.object(root, "", "arrivals", true)) {
    const std::string ptr = "/arrivals";
    const auto process = r.string(*a, ptr, "process", true);
    if (process == "poisson") {
      r.allow_keys(*a, ptr, {"process", "rate"});
      if (auto rate = r.number(*a, ptr, "rate", true)) cfg.sim.arrivals = PoissonArrivals{*rate};
    } else if (process == "renewal") {
      r.allow_keys(*a, ptr, {"process", "interarrival"});
      if (const json* ia = r.object(*a, ptr, "interarrival", true)) {
        const std::string p2 = ptr + "/interarrival";
        const auto fam = r.string(*ia, p2, "family", true);
        std::optional<InterarrivalLaw> law;
        if (fam == "deterministic") {
          r.allow_keys(*ia, p2, {"family", "spacing"});
          if (auto s = r.number(*ia, p2, "spacing", true))
            law = r.guarded(p2, [&] { return InterarrivalLaw::deterministic(*s); });
        } else if (fam == "exponential") {
          r.allow_keys(*ia, p2, {"family", "rate"});
          if (auto s = r.number(*ia, p2, "rate", true))
            law = r.guarded(p2, [&] { return InterarrivalLaw::exponential(*s); });
        } else if (fam == "uniform") {
          r.allow_keys(*ia, p2, {"family", "lo", "hi"});
          auto lo = r.number(*ia, p2, "lo", true);
          auto hi = r.number(*ia, p2, "hi", true);
          if (lo && hi) law = r.guarded(p2, [&] { return InterarrivalLaw::uniform(*lo, *hi); });
        } else if (fam == "gamma") {
          r.allow_keys(*ia, p2, {"family", "shape", "scale"});
          auto k = r.number(*ia, p2, "shape", true);
          auto s = r.number(*ia, p2, "scale", true);
          if (k && s) law = r.guarded(p2, [&] { return InterarrivalLaw::gamma(*k, *s); });
        } else if (fam) {
          r.fail(p2 + "/family", "unknown interarrival family '" + *fam + "'");
        }
        if (law) cfg.sim.arrivals = RenewalArrivals{*law};
      }
    } else if (process == "schedule") {
      r.allow_keys(*a, ptr, {"process", "epochs", "attributes"});
      ScheduledArrivals s;
      if (auto e = r.numbers(*a, ptr, "epochs", true)) s.epochs = *e;
      if (auto x = r.numbers(*a, ptr, "attributes", false)) s.attributes = *x;
      cfg.sim.arrivals = s;
    } else if (process) {
      r.fail(ptr + "/process", "unknown arrival process '" + *process + "'");
    }
    for (const auto& msg : arrival_problems(cfg.sim.arrivals)) r.fail(ptr, msg);
  }

  if (const json* k = r.object(root, "", "kernel", true)) {
    const std::string ptr = "/kernel";
    const auto shape = r.string(*k, ptr, "shape", true);
    std::optional<DeletionKernel> kernel;
    if (shape == "ranked" || shape == "independent") {
      r.allow_keys(*k, ptr, {"shape", "a"});
      if (auto a = detail::read_rate(r, *k, ptr, "a", dist)) {
        kernel = shape == "ranked" ? DeletionKernel::ranked(*a) : DeletionKernel::independent(*a);
      }
    } else if (shape == "product") {
      r.allow_keys(*k, ptr, {"shape", "a", "b"});
      auto a = detail::read_rate(r, *k, ptr, "a", dist);
      auto b = detail::read_rate(r, *k, ptr, "b", dist);
      if (a && b) kernel = DeletionKernel::product(*a, *b);
    } else if (shape) {
      r.fail(ptr + "/shape", "unknown kernel shape '" + *shape + "'");
    }
    if (kernel) {
      cfg.sim.kernel = *kernel;
      if (dist) {
        for (const auto& msg : kernel->problems(*dist)) r.fail(ptr, msg);
      }
    }
  }

  auto check_window = [&](const ObservationWindow& w, const std::string& ptr) {
    if (!dist) return;
    for (const auto& msg : window_problems(w, *dist)) r.fail(ptr, msg);
  };

  if (root.contains("windows")) {
    const json& ws = root.at("windows");
    if (!ws.is_array()) {
      r.fail("/windows", "expected an array of windows");
    } else {
      for (std::size_t i = 0; i < ws.size(); ++i) {
        const std::string ptr = "/windows/" + std::to_string(i);
        if (auto w = detail::read_window(r, ws[i], ptr)) {
          check_window(*w, ptr);
          cfg.sim.windows.push_back(*w);
        }
      }
    }
  }

  if (auto h = r.number(root, "", "horizon", false)) {
    if (!(*h >= 0.0) || !std::isfinite(*h)) r.fail("/horizon", "horizon must be finite and >= 0");
    cfg.sim.horizon = *h;
  }
  if (auto b = r.number(root, "", "burn_in", false)) cfg.burn_in = *b;
  if (auto n = r.unsigned_int(root, "", "replications", false)) {
    if (*n < 1) r.fail("/replications", "replications must be >= 1");
    cfg.replications = static_cast<std::size_t>(*n);
  }
  if (auto e = r.numbers(root, "", "sample_epochs", false)) {
    for (double v : *e) {
      if (v < 0.0 || v > cfg.sim.horizon) {
        r.fail("/sample_epochs", "sample epochs must lie in [0, horizon]");
        break;
      }
    }
    cfg.sim.sample_epochs = *e;
  }
  if (auto m = r.unsigned_int(root, "", "max_arrivals", false)) cfg.sim.max_arrivals = *m;
  if (auto mode = r.string(root, "", "deletion_mode", false)) {
    if (*mode == "bernoulli") {
      cfg.sim.mode = DeletionMode::bernoulli;
    } else if (*mode == "geometric") {
      cfg.sim.mode = DeletionMode::geometric;
      if (!cfg.sim.kernel.is_ranked()) {
        r.fail("/deletion_mode", "geometric mode requires a ranked kernel");
      }
    } else {
      r.fail("/deletion_mode", "expected 'bernoulli' or 'geometric'");
    }
  }
  if (auto a = r.number(root, "", "alpha", false)) {
    if (!(*a > 0.0 && *a < 1.0)) r.fail("/alpha", "alpha must lie in (0, 1)");
    cfg.alpha = *a;
  }
  if (auto o = r.string(root, "", "output_dir", false)) cfg.output_dir = *o;

  if (const json* ip = r.object(root, "", "initial_population", false)) {
    const std::string ptr = "/initial_population";
    r.allow_keys(*ip, ptr, {"attributes", "count", "distribution"});
    if (auto xs = r.numbers(*ip, ptr, "attributes", false)) {
      if (dist) {
        for (double x : *xs) {
          if (!dist->in_support(x)) {
            r.fail(ptr + "/attributes", "attribute outside the attribute space");
            break;
          }
        }
      }
      cfg.sim.initial.attributes = *xs;
    }
    if (auto c = r.unsigned_int(*ip, ptr, "count", false)) cfg.sim.initial.count = *c;
    if (const json* d = r.object(*ip, ptr, "distribution", false)) {
      cfg.sim.initial.dist = detail::read_distribution(r, *d, ptr + "/distribution");
      if (cfg.sim.initial.dist && dist) {
        const auto [lo, hi] = cfg.sim.initial.dist->support();
        if (lo < dist->support().first || hi > dist->support().second) {
          r.fail(ptr + "/distribution", "initial distribution must live inside the attribute space");
        }
      }
    }
  }

  if (const json* s = r.object(root, "", "stationarity", false)) {
    const std::string ptr = "/stationarity";
    r.allow_keys(*s, ptr, {"test_functions", "threshold", "expect"});
    if (s->contains("test_functions")) {
      const json& fs = s->at("test_functions");
      if (!fs.is_array()) {
        r.fail(ptr + "/test_functions", "expected an array");
      } else {
        for (std::size_t i = 0; i < fs.size(); ++i) {
          const std::string p = ptr + "/test_functions/" + std::to_string(i);
          if (auto f = detail::read_test_function(r, fs[i], p)) {
            if (dist && !f->is_zero() && !(dist->survival(f->support().hi) > 0.0)) {
              r.fail(p, "test function support reaches the supremum of the attribute space");
            }
            cfg.stationarity.test_functions.push_back(*f);
          }
        }
      }
    }
    if (auto t = r.number(*s, ptr, "threshold", false)) cfg.stationarity.threshold = *t;
    if (auto e = r.string(*s, ptr, "expect", false)) {
      if (*e == "poisson") cfg.stationarity.expect_poisson = true;
      else if (*e == "non_poisson") cfg.stationarity.expect_poisson = false;
      else r.fail(ptr + "/expect", "expected 'poisson' or 'non_poisson'");
    }
  }

  if (const json* a = r.object(root, "", "arrays", false)) {
    const std::string ptr = "/arrays";
    r.allow_keys(*a, ptr, {"n", "replications", "condition_n", "mc_budget", "condition_window"});
    if (auto n = r.unsigned_int(*a, ptr, "n", false)) cfg.arrays.n = *n;
    if (auto n = r.unsigned_int(*a, ptr, "replications", false)) cfg.arrays.replications = *n;
    if (auto n = r.unsigned_int(*a, ptr, "mc_budget", false)) cfg.arrays.mc_budget = *n;
    if (auto ns = r.numbers(*a, ptr, "condition_n", false)) {
      cfg.arrays.condition_n.clear();
      for (double v : *ns) cfg.arrays.condition_n.push_back(static_cast<std::uint64_t>(v));
    }
    if (a->contains("condition_window")) {
      if (auto w = detail::read_window(r, a->at("condition_window"), ptr + "/condition_window")) {
        check_window(*w, ptr + "/condition_window");
        cfg.arrays.condition_window = *w;
      }
    }
  }

  if (const json* s = r.object(root, "", "sojourn", false)) {
    const std::string ptr = "/sojourn";
    r.allow_keys(*s, ptr, {"window", "burn_in", "horizon_margin", "entry_span", "min_samples"});
    if (s->contains("window")) {
      if (auto w = detail::read_window(r, s->at("window"), ptr + "/window")) {
        check_window(*w, ptr + "/window");
        cfg.sojourn.window = *w;
      }
    }
    if (auto b = r.number(*s, ptr, "burn_in", false)) cfg.sojourn.burn_in = *b;
    if (auto m = r.number(*s, ptr, "horizon_margin", false)) cfg.sojourn.horizon_margin = *m;
    if (auto e = r.number(*s, ptr, "entry_span", false)) cfg.sojourn.entry_span = *e;
    if (auto n = r.unsigned_int(*s, ptr, "min_samples", false)) cfg.sojourn.min_samples = *n;
  }

  if (const json* d = r.object(root, "", "departures", false)) {
    const std::string ptr = "/departures";
    r.allow_keys(*d, ptr, {"burn_in", "total_tolerance"});
    if (auto b = r.number(*d, ptr, "burn_in", false)) cfg.departures.burn_in = *b;
    if (auto t = r.number(*d, ptr, "total_tolerance", false)) cfg.departures.total_tolerance = *t;
  }

  if (!r.issues.empty()) throw ConfigError(r.issues);
  return cfg;
}

/// Read and validate a scenario file.
inline ScenarioConfig parse_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(std::vector<ConfigIssue>{{"", "cannot open scenario file '" + path + "'"}});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

}  // namespace psurv
