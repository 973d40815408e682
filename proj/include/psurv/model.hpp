#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/distributions/beta.hpp>

#include "psurv/quadrature.hpp"
#include "psurv/rng.hpp"

namespace psurv {

// ---------------------------------------------------------------------------
// Attribute distribution F
// ---------------------------------------------------------------------------

/// Continuous law of particle attributes, drawn from a closed set of families.
///
/// The attribute space is E = {x : 0 < F(x) < 1}. Every family here is
/// atomless, so quantile(cdf(x)) == x on E up to rounding and sampling by
/// quantile transform of an open-interval uniform variate never leaves E.
class AttributeDistribution {
 public:
  enum class Family { uniform, exponential, beta };

  static AttributeDistribution uniform(double lo, double hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
      throw std::invalid_argument("uniform(lo, hi) requires finite lo < hi");
    }
    return AttributeDistribution(Family::uniform, lo, hi);
  }

  static AttributeDistribution exponential(double rate) {
    if (!(std::isfinite(rate) && rate > 0)) {
      throw std::invalid_argument("exponential(rate) requires rate > 0");
    }
    return AttributeDistribution(Family::exponential, rate, 0.0);
  }

  static AttributeDistribution beta(double alpha, double beta) {
    if (!(std::isfinite(alpha) && std::isfinite(beta) && alpha > 0 && beta > 0)) {
      throw std::invalid_argument("beta(alpha, beta) requires alpha, beta > 0");
    }
    return AttributeDistribution(Family::beta, alpha, beta);
  }

  Family family() const { return family_; }
  double param1() const { return p1_; }
  double param2() const { return p2_; }

  double cdf(double x) const {
    switch (family_) {
      case Family::uniform:
        if (x <= p1_) return 0.0;
        if (x >= p2_) return 1.0;
        return (x - p1_) / (p2_ - p1_);
      case Family::exponential:
        return x <= 0 ? 0.0 : -std::expm1(-p1_ * x);
      case Family::beta:
        if (x <= 0) return 0.0;
        if (x >= 1) return 1.0;
        return boost::math::cdf(beta_law(), x);
    }
    return 0.0;
  }

  double survival(double x) const {
    switch (family_) {
      case Family::uniform:
        if (x <= p1_) return 1.0;
        if (x >= p2_) return 0.0;
        return (p2_ - x) / (p2_ - p1_);
      case Family::exponential:
        return x <= 0 ? 1.0 : std::exp(-p1_ * x);
      case Family::beta:
        if (x <= 0) return 1.0;
        if (x >= 1) return 0.0;
        return boost::math::cdf(boost::math::complement(beta_law(), x));
    }
    return 0.0;
  }

  /// Inverse cdf on (0, 1).
  double quantile(double u) const {
    switch (family_) {
      case Family::uniform:
        return p1_ + u * (p2_ - p1_);
      case Family::exponential:
        return -std::log1p(-u) / p1_;
      case Family::beta:
        if (u <= 0) return 0.0;
        if (u >= 1) return 1.0;
        return boost::math::quantile(beta_law(), u);
    }
    return 0.0;
  }

  /// Closure of E as (inf, sup); sup may be +infinity.
  std::pair<double, double> support() const {
    switch (family_) {
      case Family::uniform:
        return {p1_, p2_};
      case Family::exponential:
        return {0.0, std::numeric_limits<double>::infinity()};
      case Family::beta:
        return {0.0, 1.0};
    }
    return {0.0, 0.0};
  }

  bool in_support(double x) const {
    const double u = cdf(x);
    return u > 0.0 && u < 1.0;
  }

  std::string describe() const {
    std::ostringstream os;
    switch (family_) {
      case Family::uniform:
        os << "uniform(" << p1_ << "," << p2_ << ")";
        break;
      case Family::exponential:
        os << "exponential(" << p1_ << ")";
        break;
      case Family::beta:
        os << "beta(" << p1_ << "," << p2_ << ")";
        break;
    }
    return os.str();
  }

 private:
  AttributeDistribution(Family f, double p1, double p2) : family_(f), p1_(p1), p2_(p2) {}

  boost::math::beta_distribution<double> beta_law() const {
    return boost::math::beta_distribution<double>(p1_, p2_);
  }

  Family family_;
  double p1_;
  double p2_;
};

/// Draw one attribute by quantile transform; the result lies in E.
inline double sample_attribute(const AttributeDistribution& dist, Engine& rng) {
  double x = dist.quantile(uniform_open01(rng));
  const auto [lo, hi] = dist.support();
  if (x <= lo) x = std::nextafter(lo, hi);
  if (x >= hi) x = std::nextafter(hi, lo);
  return x;
}

// ---------------------------------------------------------------------------
// Deletion rates a(x) and kernels p(x, y)
// ---------------------------------------------------------------------------

/// Attribute-dependent deletion probability a(x).
class RateFunction {
 public:
  struct Constant {
    double value;
  };
  /// intercept + slope * x, or intercept + slope * F(x) when `dist` is set.
  struct Affine {
    double intercept;
    double slope;
    std::shared_ptr<const AttributeDistribution> dist;
  };
  /// Piecewise-linear interpolation on a strictly increasing grid, held
  /// constant beyond the end points.
  struct Tabulated {
    std::vector<double> grid;
    std::vector<double> values;
  };

  static RateFunction constant(double value) { return RateFunction(Constant{value}); }

  static RateFunction affine(double intercept, double slope) {
    return RateFunction(Affine{intercept, slope, nullptr});
  }

  static RateFunction affine_in_cdf(double intercept, double slope,
                                    const AttributeDistribution& dist) {
    return RateFunction(
        Affine{intercept, slope, std::make_shared<const AttributeDistribution>(dist)});
  }

  static RateFunction tabulated(std::vector<double> grid, std::vector<double> values) {
    if (grid.size() < 2 || grid.size() != values.size()) {
      throw std::invalid_argument("tabulated rate needs >= 2 grid points and matching values");
    }
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (!(grid[i] > grid[i - 1])) {
        throw std::invalid_argument("tabulated rate grid must be strictly increasing");
      }
    }
    return RateFunction(Tabulated{std::move(grid), std::move(values)});
  }

  double operator()(double x) const {
    return std::visit(
        [x](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Constant>) {
            return f.value;
          } else if constexpr (std::is_same_v<T, Affine>) {
            return f.intercept + f.slope * (f.dist ? f.dist->cdf(x) : x);
          } else {
            if (x <= f.grid.front()) return f.values.front();
            if (x >= f.grid.back()) return f.values.back();
            const auto it = std::upper_bound(f.grid.begin(), f.grid.end(), x);
            const auto i = static_cast<std::size_t>(it - f.grid.begin());
            const double t = (x - f.grid[i - 1]) / (f.grid[i] - f.grid[i - 1]);
            return f.values[i - 1] + t * (f.values[i] - f.values[i - 1]);
          }
        },
        impl_);
  }

  bool is_constant() const { return std::holds_alternative<Constant>(impl_); }

  std::string describe() const {
    std::ostringstream os;
    std::visit(
        [&os](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Constant>) {
            os << "constant(" << f.value << ")";
          } else if constexpr (std::is_same_v<T, Affine>) {
            os << "affine(" << f.intercept << "+" << f.slope << (f.dist ? "*F(x))" : "*x)");
          } else {
            os << "tabulated(" << f.grid.size() << " points)";
          }
        },
        impl_);
    return os.str();
  }

 private:
  explicit RateFunction(std::variant<Constant, Affine, Tabulated> impl) : impl_(std::move(impl)) {}
  std::variant<Constant, Affine, Tabulated> impl_;
};

/// Grid of attribute values at quantile levels strictly inside (0, 1).
inline std::vector<double> quantile_grid(const AttributeDistribution& dist, std::size_t points,
                                         double edge = 1e-6) {
  std::vector<double> xs;
  xs.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double u = edge + (1.0 - 2.0 * edge) * static_cast<double>(i) /
                                static_cast<double>(points - 1);
    xs.push_back(dist.quantile(u));
  }
  return xs;
}

/// Probability p(x, y) that an arriving y-particle deletes an x-particle.
///
/// ranked:      p(x, y) = 1(x < y) a(x)
/// independent: p(x, y) = a(x)
/// product:     p(x, y) = a(x) b(y)
class DeletionKernel {
 public:
  enum class Shape { ranked, independent, product };

  static DeletionKernel ranked(RateFunction a) {
    return DeletionKernel(Shape::ranked, std::move(a), RateFunction::constant(1.0));
  }
  static DeletionKernel independent(RateFunction a) {
    return DeletionKernel(Shape::independent, std::move(a), RateFunction::constant(1.0));
  }
  static DeletionKernel product(RateFunction a, RateFunction b) {
    return DeletionKernel(Shape::product, std::move(a), std::move(b));
  }

  Shape shape() const { return shape_; }
  bool is_ranked() const { return shape_ == Shape::ranked; }
  const RateFunction& rate() const { return a_; }

  double rate(double x) const { return a_(x); }
  const RateFunction& rate_function() const { return a_; }

  bool eligible(double x, double y) const { return shape_ != Shape::ranked || x < y; }

  double deletion_probability(double x, double y) const {
    switch (shape_) {
      case Shape::ranked:
        return x < y ? a_(x) : 0.0;
      case Shape::independent:
        return a_(x);
      case Shape::product:
        return a_(x) * b_(y);
    }
    return 0.0;
  }

  /// d(x) = integral of p(x, y) dF(y) by quadrature in quantile space.
  double denominator_by_quadrature(double x, const AttributeDistribution& dist,
                                   const QuadOptions& opts = {}) const {
    const double ux = dist.cdf(x);
    auto integrand = [&](double v) { return deletion_probability(x, dist.quantile(v)); };
    return integrate(integrand, 0.0, 1.0, opts, {ux}).value;
  }

  /// d(x), using the closed form where the family has one.
  double denominator(double x, const AttributeDistribution& dist,
                     const QuadOptions& opts = {}) const {
    switch (shape_) {
      case Shape::ranked:
        return a_(x) * dist.survival(x);
      case Shape::independent:
        return a_(x);
      case Shape::product:
        return denominator_by_quadrature(x, dist, opts);
    }
    return 0.0;
  }

  /// Checks the kernel invariants on a quantile grid; empty when valid.
  std::vector<std::string> problems(const AttributeDistribution& dist,
                                    std::size_t points = 401) const {
    std::vector<std::string> out;
    for (double x : quantile_grid(dist, points)) {
      const double ax = a_(x);
      if (shape_ == Shape::ranked) {
        if (!(ax > 0.0 && ax <= 1.0)) {
          out.push_back("ranked rate a(x) must lie in (0,1]; a(" + std::to_string(x) +
                        ") = " + std::to_string(ax));
          break;
        }
      } else {
        const double bx = b_(x);
        if (!(ax >= 0.0 && ax <= 1.0) || !(bx >= 0.0 && bx <= 1.0)) {
          out.push_back("kernel probability outside [0,1] at x = " + std::to_string(x));
          break;
        }
        if (!(denominator(x, dist) > 0.0)) {
          out.push_back("kernel denominator vanishes at x = " + std::to_string(x));
          break;
        }
      }
    }
    return out;
  }

  std::string describe() const {
    switch (shape_) {
      case Shape::ranked:
        return "ranked[" + a_.describe() + "]";
      case Shape::independent:
        return "independent[" + a_.describe() + "]";
      case Shape::product:
        return "product[" + a_.describe() + "," + b_.describe() + "]";
    }
    return {};
  }

 private:
  DeletionKernel(Shape s, RateFunction a, RateFunction b)
      : shape_(s), a_(std::move(a)), b_(std::move(b)) {}

  Shape shape_;
  RateFunction a_;
  RateFunction b_;
};

// ---------------------------------------------------------------------------
// Arrival processes
// ---------------------------------------------------------------------------

/// Law of i.i.d. interarrival times for renewal arrivals.
class InterarrivalLaw {
 public:
  enum class Family { deterministic, exponential, uniform, gamma };

  static InterarrivalLaw deterministic(double spacing) {
    if (!(spacing > 0)) throw std::invalid_argument("deterministic spacing must be > 0");
    return {Family::deterministic, spacing, 0.0};
  }
  static InterarrivalLaw exponential(double rate) {
    if (!(rate > 0)) throw std::invalid_argument("exponential interarrival rate must be > 0");
    return {Family::exponential, rate, 0.0};
  }
  static InterarrivalLaw uniform(double lo, double hi) {
    if (!(lo >= 0 && hi > lo)) throw std::invalid_argument("uniform interarrival needs 0 <= lo < hi");
    return {Family::uniform, lo, hi};
  }
  static InterarrivalLaw gamma(double shape, double scale) {
    if (!(shape > 0 && scale > 0)) throw std::invalid_argument("gamma interarrival needs shape, scale > 0");
    return {Family::gamma, shape, scale};
  }

  Family family() const { return family_; }
  double param1() const { return p1_; }
  double param2() const { return p2_; }
  bool is_deterministic() const { return family_ == Family::deterministic; }

  double sample(Engine& rng) const {
    switch (family_) {
      case Family::deterministic:
        return p1_;
      case Family::exponential:
        return -std::log(uniform_open01(rng)) / p1_;
      case Family::uniform:
        return p1_ + (p2_ - p1_) * uniform_open01(rng);
      case Family::gamma: {
        std::gamma_distribution<double> g(p1_, p2_);
        return g(rng);
      }
    }
    return 0.0;
  }

  double mean() const {
    switch (family_) {
      case Family::deterministic:
        return p1_;
      case Family::exponential:
        return 1.0 / p1_;
      case Family::uniform:
        return 0.5 * (p1_ + p2_);
      case Family::gamma:
        return p1_ * p2_;
    }
    return 0.0;
  }

  std::string describe() const {
    std::ostringstream os;
    switch (family_) {
      case Family::deterministic: os << "deterministic(" << p1_ << ")"; break;
      case Family::exponential: os << "exponential(" << p1_ << ")"; break;
      case Family::uniform: os << "uniform(" << p1_ << "," << p2_ << ")"; break;
      case Family::gamma: os << "gamma(" << p1_ << "," << p2_ << ")"; break;
    }
    return os.str();
  }

 private:
  InterarrivalLaw(Family f, double p1, double p2) : family_(f), p1_(p1), p2_(p2) {}
  Family family_;
  double p1_;
  double p2_;
};

struct PoissonArrivals {
  double rate;
};

struct RenewalArrivals {
  InterarrivalLaw interarrival;
};

/// Explicit epochs, optionally with the attribute each arrival carries.
struct ScheduledArrivals {
  std::vector<double> epochs;
  std::vector<double> attributes;
};

using ArrivalSpec = std::variant<PoissonArrivals, RenewalArrivals, ScheduledArrivals>;

inline std::vector<std::string> arrival_problems(const ArrivalSpec& spec) {
  std::vector<std::string> out;
  if (const auto* p = std::get_if<PoissonArrivals>(&spec)) {
    if (!(p->rate >= 0 && std::isfinite(p->rate))) out.push_back("poisson rate must be >= 0");
  } else if (const auto* s = std::get_if<ScheduledArrivals>(&spec)) {
    for (std::size_t i = 0; i < s->epochs.size(); ++i) {
      if (!(s->epochs[i] >= 0) || (i > 0 && s->epochs[i] < s->epochs[i - 1])) {
        out.push_back("schedule epochs must be nonnegative and nondecreasing");
        break;
      }
    }
    if (!s->attributes.empty() && s->attributes.size() != s->epochs.size()) {
      out.push_back("schedule attributes must match epochs in length");
    }
  }
  return out;
}

/// Sequential generator of arrival epochs T_1 <= T_2 <= ...
class ArrivalClock {
 public:
  explicit ArrivalClock(const ArrivalSpec& spec) : spec_(&spec) {}
  // Holds a pointer; the spec must outlive the clock.
  explicit ArrivalClock(ArrivalSpec&&) = delete;

  /// Next epoch, or nullopt when the process has no further arrivals.
  std::optional<double> next(Engine& rng) {
    if (const auto* p = std::get_if<PoissonArrivals>(spec_)) {
      if (p->rate <= 0) return std::nullopt;
      last_ += -std::log(uniform_open01(rng)) / p->rate;
    } else if (const auto* r = std::get_if<RenewalArrivals>(spec_)) {
      last_ += r->interarrival.sample(rng);
    } else {
      const auto& s = std::get<ScheduledArrivals>(*spec_);
      if (index_ >= s.epochs.size()) return std::nullopt;
      last_ = s.epochs[index_];
    }
    ++index_;
    return last_;
  }

  /// Attribute fixed by the schedule for the arrival just returned, if any.
  std::optional<double> scheduled_attribute() const {
    if (const auto* s = std::get_if<ScheduledArrivals>(spec_)) {
      if (!s->attributes.empty() && index_ >= 1) return s->attributes[index_ - 1];
    }
    return std::nullopt;
  }

 private:
  const ArrivalSpec* spec_;
  double last_ = 0.0;
  std::size_t index_ = 0;
};

// ---------------------------------------------------------------------------
// Observation windows
// ---------------------------------------------------------------------------

/// Half-open interval [lo, hi).
struct Interval {
  double lo;
  double hi;
};

/// Finite disjoint union of half-open intervals of attribute space.
class ObservationWindow {
 public:
  ObservationWindow() = default;

  explicit ObservationWindow(std::vector<Interval> parts) : parts_(std::move(parts)) {
    for (const auto& iv : parts_) {
      if (!(iv.lo < iv.hi)) throw std::invalid_argument("window interval needs lo < hi");
    }
    std::sort(parts_.begin(), parts_.end(),
              [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    for (std::size_t i = 1; i < parts_.size(); ++i) {
      if (parts_[i].lo < parts_[i - 1].hi) {
        throw std::invalid_argument("window intervals overlap");
      }
    }
  }

  static ObservationWindow single(double lo, double hi) { return ObservationWindow({{lo, hi}}); }

  const std::vector<Interval>& intervals() const { return parts_; }
  bool empty() const { return parts_.empty(); }
  double sup() const { return parts_.empty() ? -std::numeric_limits<double>::infinity() : parts_.back().hi; }
  double inf() const { return parts_.empty() ? std::numeric_limits<double>::infinity() : parts_.front().lo; }

  bool contains(double x) const {
    return std::any_of(parts_.begin(), parts_.end(),
                       [x](const Interval& iv) { return x >= iv.lo && x < iv.hi; });
  }

  /// Points of a sorted attribute sequence falling in the window.
  std::uint64_t count_sorted(const std::vector<double>& sorted) const {
    std::uint64_t n = 0;
    for (const auto& iv : parts_) {
      const auto lo = std::lower_bound(sorted.begin(), sorted.end(), iv.lo);
      const auto hi = std::lower_bound(sorted.begin(), sorted.end(), iv.hi);
      n += static_cast<std::uint64_t>(hi - lo);
    }
    return n;
  }

  /// F(B).
  double probability(const AttributeDistribution& dist) const {
    double p = 0.0;
    for (const auto& iv : parts_) p += dist.cdf(iv.hi) - dist.cdf(iv.lo);
    return p;
  }

  std::string describe() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      if (i) os << "+";
      os << "[" << parts_[i].lo << "," << parts_[i].hi << ")";
    }
    return parts_.empty() ? "{}" : os.str();
  }

 private:
  std::vector<Interval> parts_;
};

/// Violations of the window invariant under F; empty when valid.
inline std::vector<std::string> window_problems(const ObservationWindow& w,
                                                const AttributeDistribution& dist) {
  std::vector<std::string> out;
  if (w.empty()) return out;
  const auto [lo, hi] = dist.support();
  if (w.inf() < lo) out.push_back("window starts below the attribute support");
  if (!(dist.survival(w.sup()) > 0.0) || w.sup() >= hi) {
    out.push_back("window touches the supremum of the attribute space");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Closed-form laws
// ---------------------------------------------------------------------------

/// Limit mean measure mu(B).
///
/// Ranked kernels:  integral over B of dF(x) / (a(x) (1 - F(x))).
/// General kernels: integral over B of dF(x) / d(x), d(x) = integral p(x,y) dF(y).
/// Evaluated in quantile space u = F(x), where both are proper integrals as
/// long as B stays below sup E. Throws DivergenceError otherwise.
inline QuadResult mean_measure_detail(const AttributeDistribution& dist,
                                      const DeletionKernel& kernel,
                                      const ObservationWindow& window,
                                      const QuadOptions& opts = {}) {
  QuadResult total;
  if (window.empty()) return total;
  if (!(dist.survival(window.sup()) > 0.0)) {
    throw DivergenceError("mean measure diverges: window " + window.describe() +
                          " reaches the supremum of the attribute space");
  }
  for (const auto& iv : window.intervals()) {
    const double ulo = dist.cdf(iv.lo);
    const double uhi = dist.cdf(iv.hi);
    QuadResult part;
    if (kernel.is_ranked()) {
      auto f = [&](double u) { return 1.0 / (kernel.rate(dist.quantile(u)) * (1.0 - u)); };
      part = integrate(f, ulo, uhi, opts);
    } else {
      auto f = [&](double u) { return 1.0 / kernel.denominator(dist.quantile(u), dist, opts); };
      part = integrate(f, ulo, uhi, opts);
    }
    total.value += part.value;
    total.error += part.error;
    total.evaluations += part.evaluations;
    total.converged = total.converged && part.converged;
  }
  return total;
}

inline double mean_measure(const AttributeDistribution& dist, const DeletionKernel& kernel,
                           const ObservationWindow& window, const QuadOptions& opts = {}) {
  return mean_measure_detail(dist, kernel, window, opts).value;
}

/// P{L > l | X = x} = (1 - a(x))^l for a lifetime of geometric deletion trials.
inline double lifetime_survival(double a_x, std::uint64_t attempts) {
  if (attempts == 0) return 1.0;
  return std::pow(1.0 - a_x, static_cast<double>(attempts));
}

}  // namespace psurv
