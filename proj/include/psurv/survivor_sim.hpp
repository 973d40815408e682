#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "psurv/model.hpp"
#include "psurv/rng.hpp"

namespace psurv {

/// One particle in attribute space.
struct Particle {
  double attribute = 0.0;
  double arrival_epoch = 0.0;
  std::uint64_t arrival_index = 0;  // 0 for the initial population
  std::optional<double> deletion_epoch;
  std::uint64_t attempts = 0;
  std::uint64_t lifetime = 0;  // pre-drawn trial count, geometric mode only
};

/// How deletion attempts are resolved.
///
/// bernoulli: every eligible particle flips a fresh coin with prob p(x, y).
/// geometric: each particle pre-draws its lifetime L with
///            P{L > l} = (1 - a(x))^l and leaves at its L-th attempt.
///            Ranked kernels only.
enum class DeletionMode { bernoulli, geometric };

/// Live point pattern, kept sorted by attribute so a ranked arrival only
/// scans the prefix strictly below it.
struct SystemState {
  std::vector<Particle> live;
  double clock = 0.0;
  std::uint64_t arrivals_seen = 0;
  std::uint64_t initial_count = 0;
  std::uint64_t departed = 0;

  std::vector<double> attributes() const {
    std::vector<double> xs;
    xs.reserve(live.size());
    for (const auto& p : live) xs.push_back(p.attribute);
    return xs;
  }

  bool conserved() const { return initial_count + arrivals_seen == live.size() + departed; }
};

struct DepartureBatch {
  std::uint64_t trigger_index = 0;
  double epoch = 0.0;
  double trigger_attribute = 0.0;
  std::vector<double> departed;
};

/// Build the state at time 0 from an arbitrary finite pattern in E.
inline SystemState seed_initial_population(const std::vector<double>& pattern,
                                           const AttributeDistribution& dist,
                                           DeletionMode mode = DeletionMode::bernoulli,
                                           const DeletionKernel* kernel = nullptr,
                                           Engine* rng = nullptr) {
  SystemState state;
  state.live.reserve(pattern.size());
  for (double x : pattern) {
    if (!dist.in_support(x)) {
      throw std::invalid_argument("initial attribute " + std::to_string(x) +
                                  " lies outside the attribute space");
    }
    Particle p;
    p.attribute = x;
    if (mode == DeletionMode::geometric) {
      if (kernel == nullptr || rng == nullptr) {
        throw std::invalid_argument("geometric mode needs a kernel and a random stream");
      }
      p.lifetime = geometric_trials(*rng, kernel->rate(x));
    }
    state.live.push_back(p);
  }
  std::stable_sort(state.live.begin(), state.live.end(),
                   [](const Particle& a, const Particle& b) { return a.attribute < b.attribute; });
  state.initial_count = pattern.size();
  return state;
}

/// Process one arrival with attribute y at `epoch`.
///
/// Every eligible live particle has its attempt counter bumped and is
/// deleted independently with probability p(x, y); the new particle is then
/// inserted. Deleted particles (with deletion_epoch set) are appended to
/// `removed` when it is non-null.
inline DepartureBatch step_arrival(SystemState& state, double y, double epoch,
                                   const DeletionKernel& kernel, Engine& rng,
                                   DeletionMode mode = DeletionMode::bernoulli,
                                   std::vector<Particle>* removed = nullptr) {
  if (mode == DeletionMode::geometric && !kernel.is_ranked()) {
    throw std::invalid_argument("geometric deletion mode requires a ranked kernel");
  }
  DepartureBatch batch;
  state.clock = epoch;
  ++state.arrivals_seen;
  batch.trigger_index = state.arrivals_seen;
  batch.epoch = epoch;
  batch.trigger_attribute = y;

  auto& live = state.live;
  // Ranked: eligible particles are exactly the prefix with attribute < y.
  const std::size_t scan_end =
      kernel.is_ranked()
          ? static_cast<std::size_t>(
                std::lower_bound(live.begin(), live.end(), y,
                                 [](const Particle& p, double v) { return p.attribute < v; }) -
                live.begin())
          : live.size();

  std::size_t keep = 0;
  for (std::size_t i = 0; i < scan_end; ++i) {
    Particle& p = live[i];
    ++p.attempts;
    bool deleted;
    if (mode == DeletionMode::bernoulli) {
      deleted = bernoulli(rng, kernel.deletion_probability(p.attribute, y));
    } else {
      deleted = p.attempts >= p.lifetime;
    }
    if (deleted) {
      batch.departed.push_back(p.attribute);
      if (removed != nullptr) {
        p.deletion_epoch = epoch;
        removed->push_back(p);
      }
    } else {
      if (keep != i) live[keep] = std::move(p);
      ++keep;
    }
  }
  if (keep != scan_end) {
    std::move(live.begin() + static_cast<std::ptrdiff_t>(scan_end), live.end(),
              live.begin() + static_cast<std::ptrdiff_t>(keep));
    live.resize(live.size() - (scan_end - keep));
  }
  state.departed += batch.departed.size();

  Particle incoming;
  incoming.attribute = y;
  incoming.arrival_epoch = epoch;
  incoming.arrival_index = state.arrivals_seen;
  if (mode == DeletionMode::geometric) incoming.lifetime = geometric_trials(rng, kernel.rate(y));
  const auto at = std::upper_bound(live.begin(), live.end(), y,
                                   [](double v, const Particle& p) { return v < p.attribute; });
  live.insert(at, incoming);
  return batch;
}

// ---------------------------------------------------------------------------
// Full runs
// ---------------------------------------------------------------------------

/// Initial population: explicit attributes, or `count` i.i.d. draws from `dist`.
struct InitialPopulation {
  std::vector<double> attributes;
  std::uint64_t count = 0;
  std::optional<AttributeDistribution> dist;

  bool empty() const { return attributes.empty() && count == 0; }
};

struct RecordOptions {
  bool live_snapshots = true;
  bool sojourns = true;
  bool batches = true;
};

/// Everything needed for one simulated path.
struct SimulationSpec {
  ArrivalSpec arrivals = PoissonArrivals{1.0};
  AttributeDistribution dist = AttributeDistribution::uniform(0.0, 1.0);
  DeletionKernel kernel = DeletionKernel::ranked(RateFunction::constant(0.5));
  InitialPopulation initial;
  std::vector<ObservationWindow> windows;
  double horizon = 0.0;
  std::vector<double> sample_epochs;  // defaults to {horizon}
  std::uint64_t max_arrivals = 50'000'000;
  DeletionMode mode = DeletionMode::bernoulli;
  RecordOptions record;
  std::string config_digest;
};

struct CountSample {
  double epoch = 0.0;
  std::vector<std::uint64_t> window_counts;
  std::vector<double> live_attributes;  // sorted; empty unless snapshots kept
  std::uint64_t live = 0;
  std::uint64_t arrivals = 0;
  std::uint64_t departed = 0;
  std::uint64_t initial = 0;
};

struct SojournEntry {
  double attribute = 0.0;
  double arrival_epoch = 0.0;
  std::uint64_t arrival_index = 0;
  std::optional<double> deletion_epoch;  // nullopt means censored at the horizon
};

struct SimulationRecord {
  std::vector<CountSample> count_samples;
  std::vector<SojournEntry> sojourns;
  std::vector<DepartureBatch> batches;
  std::string config_digest;
  double horizon = 0.0;
  std::uint64_t initial_population = 0;
  std::uint64_t arrivals = 0;
  std::uint64_t departed = 0;
  std::uint64_t final_live = 0;
};

/// Raised when a run schedules more arrivals than the configured cap.
class ArrivalExplosionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Simulate one path of the particle process up to `spec.horizon`.
///
/// Deterministic in (spec, rng state). Count samples at epoch t reflect all
/// arrivals with T_n <= t.
inline SimulationRecord run_simulation(const SimulationSpec& spec, Engine& rng) {
  if (!(spec.horizon >= 0.0) || !std::isfinite(spec.horizon)) {
    throw std::invalid_argument("horizon must be finite and nonnegative");
  }
  if (spec.mode == DeletionMode::geometric && !spec.kernel.is_ranked()) {
    throw std::invalid_argument("geometric deletion mode requires a ranked kernel");
  }
  std::vector<double> epochs = spec.sample_epochs;
  if (epochs.empty()) epochs.push_back(spec.horizon);
  std::sort(epochs.begin(), epochs.end());
  for (double e : epochs) {
    if (e < 0.0 || e > spec.horizon) throw std::invalid_argument("sample epoch outside [0, horizon]");
  }

  SimulationRecord rec;
  rec.config_digest = spec.config_digest;
  rec.horizon = spec.horizon;

  std::vector<double> pattern = spec.initial.attributes;
  if (spec.initial.count > 0) {
    const AttributeDistribution& init_dist = spec.initial.dist ? *spec.initial.dist : spec.dist;
    for (std::uint64_t i = 0; i < spec.initial.count; ++i) {
      pattern.push_back(sample_attribute(init_dist, rng));
    }
  }
  SystemState state = seed_initial_population(pattern, spec.dist, spec.mode, &spec.kernel, &rng);
  rec.initial_population = state.initial_count;

  std::vector<Particle> removed;
  std::vector<Particle>* removed_sink = spec.record.sojourns ? &removed : nullptr;

  std::size_t next_epoch = 0;
  auto take_samples_before = [&](double t, bool inclusive) {
    while (next_epoch < epochs.size() &&
           (inclusive ? epochs[next_epoch] <= t : epochs[next_epoch] < t)) {
      CountSample s;
      s.epoch = epochs[next_epoch];
      const auto xs = state.attributes();
      for (const auto& w : spec.windows) s.window_counts.push_back(w.count_sorted(xs));
      if (spec.record.live_snapshots) s.live_attributes = xs;
      s.live = state.live.size();
      s.arrivals = state.arrivals_seen;
      s.departed = state.departed;
      s.initial = state.initial_count;
      rec.count_samples.push_back(std::move(s));
      ++next_epoch;
    }
  };

  ArrivalClock clock(spec.arrivals);
  while (true) {
    const auto t = clock.next(rng);
    if (!t || *t > spec.horizon) break;
    if (state.arrivals_seen >= spec.max_arrivals) {
      throw ArrivalExplosionError("arrival cap of " + std::to_string(spec.max_arrivals) +
                                  " exceeded before the horizon");
    }
    take_samples_before(*t, false);
    const auto forced = clock.scheduled_attribute();
    double y = forced ? *forced : sample_attribute(spec.dist, rng);
    if (forced && !spec.dist.in_support(y)) {
      throw std::invalid_argument("scheduled attribute outside the attribute space");
    }
    auto batch = step_arrival(state, y, *t, spec.kernel, rng, spec.mode, removed_sink);
    if (spec.record.batches) rec.batches.push_back(std::move(batch));
  }
  take_samples_before(spec.horizon, true);

  if (spec.record.sojourns) {
    for (const auto& p : removed) {
      if (p.arrival_index == 0) continue;
      rec.sojourns.push_back({p.attribute, p.arrival_epoch, p.arrival_index, p.deletion_epoch});
    }
    for (const auto& p : state.live) {
      if (p.arrival_index == 0) continue;
      rec.sojourns.push_back({p.attribute, p.arrival_epoch, p.arrival_index, std::nullopt});
    }
    std::sort(rec.sojourns.begin(), rec.sojourns.end(),
              [](const SojournEntry& a, const SojournEntry& b) {
                return a.arrival_index < b.arrival_index;
              });
  }
  rec.arrivals = state.arrivals_seen;
  rec.departed = state.departed;
  rec.final_live = state.live.size();
  return rec;
}

// ---------------------------------------------------------------------------
// Record extraction
// ---------------------------------------------------------------------------

/// Entry (i, j) = N_{epochs[i]}(windows[j]). Epochs must be sampled ones.
inline std::vector<std::vector<std::uint64_t>> extract_counts(
    const SimulationRecord& rec, const std::vector<ObservationWindow>& windows,
    const std::vector<double>& epochs) {
  std::vector<std::vector<std::uint64_t>> out;
  for (double e : epochs) {
    const auto it = std::find_if(rec.count_samples.begin(), rec.count_samples.end(),
                                 [e](const CountSample& s) { return s.epoch == e; });
    if (it == rec.count_samples.end()) {
      throw std::out_of_range("epoch " + std::to_string(e) + " was not sampled");
    }
    if (it->live_attributes.empty() && it->live > 0) {
      throw std::logic_error("record was produced without live snapshots");
    }
    std::vector<std::uint64_t> row;
    for (const auto& w : windows) row.push_back(w.count_sorted(it->live_attributes));
    out.push_back(std::move(row));
  }
  return out;
}

struct SojournOutcome {
  double attribute = 0.0;
  double duration = 0.0;  // time survived so far when censored
  bool censored = false;
};

/// Sojourns of particles arriving into B during [burn_in, horizon - margin].
inline std::vector<SojournOutcome> extract_sojourns(const SimulationRecord& rec,
                                                    const ObservationWindow& window,
                                                    double burn_in, double horizon_margin) {
  if (!(burn_in + horizon_margin < rec.horizon)) {
    throw std::invalid_argument("burn_in + horizon_margin must be below the horizon");
  }
  const double last_entry = rec.horizon - horizon_margin;
  std::vector<SojournOutcome> out;
  for (const auto& s : rec.sojourns) {
    if (s.arrival_epoch < burn_in || s.arrival_epoch > last_entry) continue;
    if (!window.contains(s.attribute)) continue;
    SojournOutcome o;
    o.attribute = s.attribute;
    o.censored = !s.deletion_epoch.has_value();
    o.duration = (o.censored ? rec.horizon : *s.deletion_epoch) - s.arrival_epoch;
    out.push_back(o);
  }
  return out;
}

struct BatchCounts {
  double epoch = 0.0;
  std::uint64_t total = 0;
  std::vector<std::uint64_t> per_window;
};

/// One row per arrival after burn_in, empty batches included.
inline std::vector<BatchCounts> extract_departure_batches(
    const SimulationRecord& rec, double burn_in, const std::vector<ObservationWindow>& windows) {
  if (!(burn_in < rec.horizon)) throw std::invalid_argument("burn_in must be below the horizon");
  std::vector<BatchCounts> out;
  for (const auto& b : rec.batches) {
    if (b.epoch <= burn_in) continue;
    BatchCounts row;
    row.epoch = b.epoch;
    row.total = b.departed.size();
    for (const auto& w : windows) {
      std::uint64_t n = 0;
      for (double x : b.departed) n += w.contains(x) ? 1 : 0;
      row.per_window.push_back(n);
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace psurv
