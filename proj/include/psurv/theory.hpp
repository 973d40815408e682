#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "psurv/model.hpp"
#include "psurv/quadrature.hpp"
#include "psurv/rng.hpp"

namespace psurv {

// ---------------------------------------------------------------------------
// Test functions for Laplace-functional checks
// ---------------------------------------------------------------------------

/// Nonnegative, compactly supported f on attribute space.
class TestFunction {
 public:
  enum class Kind { zero, step, bump };

  static TestFunction zero() { return TestFunction(Kind::zero, 0.0, 0.0, 0.0); }

  /// height on [lo, hi), zero elsewhere.
  static TestFunction step(double height, double lo, double hi) {
    if (!(height > 0 && lo < hi)) throw std::invalid_argument("step needs height > 0, lo < hi");
    return TestFunction(Kind::step, height, lo, hi);
  }

  /// height * exp(1 - 1/(1 - t^2)) with t = (x - center)/half_width, |t| < 1.
  static TestFunction bump(double center, double half_width, double height) {
    if (!(height > 0 && half_width > 0)) {
      throw std::invalid_argument("bump needs height > 0, half_width > 0");
    }
    return TestFunction(Kind::bump, height, center - half_width, center + half_width);
  }

  Kind kind() const { return kind_; }
  bool is_zero() const { return kind_ == Kind::zero; }
  double height() const { return height_; }
  Interval support() const { return {lo_, hi_}; }

  double operator()(double x) const {
    switch (kind_) {
      case Kind::zero:
        return 0.0;
      case Kind::step:
        return (x >= lo_ && x < hi_) ? height_ : 0.0;
      case Kind::bump: {
        const double half = 0.5 * (hi_ - lo_);
        const double t = (x - (lo_ + half)) / half;
        if (!(std::abs(t) < 1.0)) return 0.0;
        return height_ * std::exp(1.0 - 1.0 / (1.0 - t * t));
      }
    }
    return 0.0;
  }

  std::string describe() const {
    std::ostringstream os;
    switch (kind_) {
      case Kind::zero:
        os << "zero";
        break;
      case Kind::step:
        os << "step(h=" << height_ << ",[" << lo_ << "," << hi_ << "))";
        break;
      case Kind::bump:
        os << "bump(c=" << 0.5 * (lo_ + hi_) << ",w=" << 0.5 * (hi_ - lo_) << ",h=" << height_
           << ")";
        break;
    }
    return os.str();
  }

 private:
  TestFunction(Kind k, double h, double lo, double hi) : kind_(k), height_(h), lo_(lo), hi_(hi) {}
  Kind kind_;
  double height_;
  double lo_;
  double hi_;
};

// ---------------------------------------------------------------------------
// Sojourn laws
// ---------------------------------------------------------------------------

struct SojournProbability {
  double value = 0.0;
  double std_error = 0.0;
  bool exact = true;
};

/// Palm-renewal draw of A(w): arrivals within w of an arrival epoch.
inline std::uint64_t sample_arrivals_within(const InterarrivalLaw& law, double w, Engine& rng) {
  std::uint64_t count = 0;
  double t = law.sample(rng);
  while (t <= w) {
    ++count;
    t += law.sample(rng);
  }
  return count;
}

namespace detail {

inline std::uint64_t scheduled_within(const ScheduledArrivals& s, double entry, double w) {
  const auto lo = std::upper_bound(s.epochs.begin(), s.epochs.end(), entry);
  const auto hi = std::upper_bound(s.epochs.begin(), s.epochs.end(), entry + w);
  return static_cast<std::uint64_t>(hi - lo);
}

/// Exact A(w) when the arrival process makes it deterministic or Poisson.
struct ArrivalCountLaw {
  enum class Kind { poisson, fixed, random } kind;
  double rate = 0.0;          // poisson
  std::uint64_t count = 0;    // fixed
};

inline ArrivalCountLaw arrival_count_law(const ArrivalSpec& arrivals, double w, double entry) {
  if (const auto* p = std::get_if<PoissonArrivals>(&arrivals)) {
    return {ArrivalCountLaw::Kind::poisson, p->rate, 0};
  }
  if (const auto* s = std::get_if<ScheduledArrivals>(&arrivals)) {
    return {ArrivalCountLaw::Kind::fixed, 0.0, scheduled_within(*s, entry, w)};
  }
  const auto& law = std::get<RenewalArrivals>(arrivals).interarrival;
  if (law.is_deterministic()) {
    return {ArrivalCountLaw::Kind::fixed, 0.0,
            static_cast<std::uint64_t>(std::floor(w / law.param1()))};
  }
  if (law.family() == InterarrivalLaw::Family::exponential) {
    return {ArrivalCountLaw::Kind::poisson, law.param1(), 0};
  }
  return {ArrivalCountLaw::Kind::random, 0.0, 0};
}

}  // namespace detail

/// P{W(x) > w} = E[(1 - a(x) Fbar(x))^{A(w)}] for a particle entering at
/// `entry_epoch`.
///
/// Poisson arrivals give exp(-lambda a(x) Fbar(x) w); schedules and
/// deterministic renewals give the power at the exact count A(w). General
/// renewals are estimated by Monte Carlo over `mc_draws` draws of A(w) and
/// returned with exact == false and a standard error.
inline SojournProbability sojourn_survival(const ArrivalSpec& arrivals,
                                           const AttributeDistribution& dist,
                                           const RateFunction& a, double x, double w,
                                           Engine* rng = nullptr,
                                           std::size_t mc_draws = 100000,
                                           double entry_epoch = 0.0) {
  const double deletion = a(x) * dist.survival(x);
  if (!(deletion > 0.0)) throw std::invalid_argument("a(x) * Fbar(x) must be positive");
  if (w <= 0.0) return {1.0, 0.0, true};

  const auto law = detail::arrival_count_law(arrivals, w, entry_epoch);
  switch (law.kind) {
    case detail::ArrivalCountLaw::Kind::poisson:
      return {std::exp(-law.rate * deletion * w), 0.0, true};
    case detail::ArrivalCountLaw::Kind::fixed:
      return {std::pow(1.0 - deletion, static_cast<double>(law.count)), 0.0, true};
    case detail::ArrivalCountLaw::Kind::random:
      break;
  }
  if (rng == nullptr || mc_draws < 2) {
    throw std::invalid_argument("renewal sojourn law needs a random stream and >= 2 draws");
  }
  const auto& inter = std::get<RenewalArrivals>(arrivals).interarrival;
  double sum = 0.0;
  double sumsq = 0.0;
  for (std::size_t i = 0; i < mc_draws; ++i) {
    const double v = std::pow(1.0 - deletion,
                              static_cast<double>(sample_arrivals_within(inter, w, *rng)));
    sum += v;
    sumsq += v * v;
  }
  const double m = static_cast<double>(mc_draws);
  const double mean = sum / m;
  const double var = std::max(0.0, (sumsq - m * mean * mean) / (m - 1.0));
  return {mean, std::sqrt(var / m), false};
}

/// P{W(B) > w}: the sojourn survival of a particle whose attribute is F
/// restricted to B.
inline SojournProbability sojourn_survival_window(const ArrivalSpec& arrivals,
                                                  const AttributeDistribution& dist,
                                                  const RateFunction& a,
                                                  const ObservationWindow& window, double w,
                                                  Engine* rng = nullptr,
                                                  std::size_t mc_draws = 100000,
                                                  double entry_epoch = 0.0,
                                                  const QuadOptions& opts = {}) {
  const double mass = window.probability(dist);
  if (!(mass > 0.0)) throw std::invalid_argument("window has zero probability under F");
  if (w <= 0.0) return {1.0, 0.0, true};

  // Integral over B of g(x) dF(x), divided by F(B), in quantile space.
  auto window_average = [&](const std::function<double(double)>& g) {
    double total = 0.0;
    for (const auto& iv : window.intervals()) {
      auto f = [&](double u) { return g(dist.quantile(u)); };
      total += integrate(f, dist.cdf(iv.lo), dist.cdf(iv.hi), opts).value;
    }
    return total / mass;
  };
  auto keep_prob = [&](double x) { return 1.0 - a(x) * dist.survival(x); };

  const auto law = detail::arrival_count_law(arrivals, w, entry_epoch);
  switch (law.kind) {
    case detail::ArrivalCountLaw::Kind::poisson:
      return {window_average([&](double x) {
                return std::exp(-law.rate * a(x) * dist.survival(x) * w);
              }),
              0.0, true};
    case detail::ArrivalCountLaw::Kind::fixed:
      return {window_average([&](double x) {
                return std::pow(keep_prob(x), static_cast<double>(law.count));
              }),
              0.0, true};
    case detail::ArrivalCountLaw::Kind::random:
      break;
  }
  if (rng == nullptr || mc_draws < 2) {
    throw std::invalid_argument("renewal sojourn law needs a random stream and >= 2 draws");
  }
  const auto& inter = std::get<RenewalArrivals>(arrivals).interarrival;
  std::map<std::uint64_t, std::size_t> histogram;
  for (std::size_t i = 0; i < mc_draws; ++i) ++histogram[sample_arrivals_within(inter, w, *rng)];
  double sum = 0.0;
  double sumsq = 0.0;
  for (const auto& [count, times] : histogram) {
    const double v = window_average(
        [&](double x) { return std::pow(keep_prob(x), static_cast<double>(count)); });
    sum += v * static_cast<double>(times);
    sumsq += v * v * static_cast<double>(times);
  }
  const double m = static_cast<double>(mc_draws);
  const double mean = sum / m;
  const double var = std::max(0.0, (sumsq - m * mean * mean) / (m - 1.0));
  return {mean, std::sqrt(var / m), false};
}

// ---------------------------------------------------------------------------
// Limit intensity and conditional survival
// ---------------------------------------------------------------------------

/// Density of the limit mean measure with respect to F: 1 / d(x), which is
/// 1 / (a(x) Fbar(x)) for ranked kernels.
inline double limit_intensity(const AttributeDistribution& dist, const DeletionKernel& kernel,
                              double x) {
  return 1.0 / kernel.denominator(x, dist);
}

/// Conditional survival probability of a particle with nu - 1 particles
/// above it: [1 - (1 - a)^nu] / (nu a), the average of (1 - a)^m over
/// m = 0..nu-1.
inline double conditional_survival_r(double a_x, std::uint64_t nu) {
  if (nu == 0) throw std::invalid_argument("nu must be positive");
  const double n = static_cast<double>(nu);
  if (a_x >= 1.0) return 1.0 / n;
  return -std::expm1(n * std::log1p(-a_x)) / (n * a_x);
}

// ---------------------------------------------------------------------------
// Binomial size-bias identity
// ---------------------------------------------------------------------------

namespace detail {

template <class Real>
std::vector<Real> binomial_pmf_direct(std::uint32_t n, Real p) {
  std::vector<Real> pmf(n + 1);
  Real choose = 1;
  for (std::uint32_t k = 0; k <= n; ++k) {
    if (k > 0) choose = choose * static_cast<Real>(n - k + 1) / static_cast<Real>(k);
    pmf[k] = choose * std::pow(p, static_cast<Real>(k)) * std::pow(1 - p, static_cast<Real>(n - k));
  }
  return pmf;
}

}  // namespace detail

/// Binomial(n, p) pmf by direct product; exact enough for n <= 25.
inline std::vector<double> binomial_pmf_small(std::uint32_t n, double p) {
  return detail::binomial_pmf_direct<double>(n, p);
}

struct IdentitySides {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// Both sides of E[f(S_n)] = E[S_{n+1} f(S_{n+1} - 1) 1(S_{n+1} >= 1)] / (p (n+1))
/// for S_m ~ Binomial(m, p), each by exact pmf summation.
inline IdentitySides binomial_size_bias_identity(std::uint32_t n, double p,
                                                 const std::function<double(std::uint32_t)>& f) {
  if (n == 0 || n > 25) throw std::invalid_argument("exact enumeration needs 1 <= n <= 25");
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in (0, 1]");
  // Sums in extended precision; terms reach n^2 in size for f(k) = k^2.
  using Real = long double;
  const auto pmf_n = detail::binomial_pmf_direct<Real>(n, static_cast<Real>(p));
  const auto pmf_n1 = detail::binomial_pmf_direct<Real>(n + 1, static_cast<Real>(p));
  Real lhs = 0;
  for (std::uint32_t k = 0; k <= n; ++k) lhs += static_cast<Real>(f(k)) * pmf_n[k];
  Real acc = 0;
  for (std::uint32_t k = 1; k <= n + 1; ++k) {
    acc += static_cast<Real>(k) * static_cast<Real>(f(k - 1)) * pmf_n1[k];
  }
  IdentitySides out;
  out.lhs = static_cast<double>(lhs);
  out.rhs = static_cast<double>(acc / (static_cast<Real>(p) * static_cast<Real>(n + 1)));
  return out;
}

// ---------------------------------------------------------------------------
// Poisson-stationarity functional
// ---------------------------------------------------------------------------

struct StationarityResult {
  double residual = 0.0;
  double lhs = 1.0;
  double error = 0.0;  // achieved quadrature error estimate
  bool converged = true;
};

struct StationarityOptions {
  QuadOptions outer{1e-11, 0.0, 4000, 1e12};
  QuadOptions inner{1e-12, 0.0, 2000, 1e12};
  QuadOptions denominator{1e-13, 0.0, 500, 1e12};
};

namespace detail {

inline std::pair<double, double> support_in_quantiles(const TestFunction& f,
                                                      const AttributeDistribution& dist) {
  const auto s = f.support();
  return {dist.cdf(s.lo), dist.cdf(s.hi)};
}

inline void check_test_function(const TestFunction& f, const AttributeDistribution& dist) {
  if (f.is_zero()) return;
  if (!(dist.survival(f.support().hi) > 0.0)) {
    throw std::invalid_argument("test function support reaches the supremum of E");
  }
}

}  // namespace detail

/// |LHS - 1| for the Poisson-stationarity functional
///
///   LHS = int exp{ int (1 - e^{-f(x)}) h(x, x1) dF(x) } e^{-f(x1)} dF(x1),
///   h(x, x1) = p(x, x1) / int p(x, y) dF(y).
///
/// Nested adaptive quadrature in quantile space. The kernel denominator is
/// always taken by quadrature here, never by the family closed form, so this
/// route stays independent of the ranked reduction below. Inner integrals
/// are memoized on the outer nodes for the duration of the call.
inline StationarityResult stationarity_residual(const DeletionKernel& kernel,
                                                const AttributeDistribution& dist,
                                                const TestFunction& f,
                                                const StationarityOptions& opts = {}) {
  if (f.is_zero()) return {0.0, 1.0, 0.0, true};
  detail::check_test_function(f, dist);
  const auto [su, sv] = detail::support_in_quantiles(f, dist);

  std::unordered_map<double, double> denom_cache;
  auto denom = [&](double v) {
    const auto it = denom_cache.find(v);
    if (it != denom_cache.end()) return it->second;
    const double d = kernel.denominator_by_quadrature(dist.quantile(v), dist, opts.denominator);
    denom_cache.emplace(v, d);
    return d;
  };

  bool converged = true;
  double worst_inner_err = 0.0;
  std::unordered_map<double, double> inner_cache;
  auto inner = [&](double u1) {
    const auto it = inner_cache.find(u1);
    if (it != inner_cache.end()) return it->second;
    const double x1 = dist.quantile(u1);
    auto g = [&](double v) {
      const double x = dist.quantile(v);
      const double weight = -std::expm1(-f(x));
      if (weight == 0.0) return 0.0;
      return weight * kernel.deletion_probability(x, x1) / denom(v);
    };
    std::vector<double> breaks;
    if (u1 > su && u1 < sv) breaks.push_back(u1);
    const auto r = integrate(g, su, sv, opts.inner, breaks);
    converged = converged && r.converged;
    worst_inner_err = std::max(worst_inner_err, r.error);
    inner_cache.emplace(u1, r.value);
    return r.value;
  };

  auto outer = [&](double u1) { return std::exp(inner(u1) - f(dist.quantile(u1))); };
  const auto r = integrate(outer, 0.0, 1.0, opts.outer, {su, sv});
  StationarityResult out;
  out.lhs = r.value;
  out.residual = std::abs(r.value - 1.0);
  out.error = r.error + worst_inner_err;
  out.converged = converged && r.converged;
  return out;
}

struct ReductionCheck {
  StationarityResult general;  // functional with h = p / d
  StationarityResult reduced;  // ranked-kernel reduction
};

/// Evaluates the general functional and its ranked-kernel reduction
///
///   int exp{ -int_{x < x1} e^{-f(x)} / Fbar(x) dF(x) } e^{-f(x1)} / Fbar(x1) dF(x1),
///
/// where the parts of the inner integral off the support of f use
/// int dF / Fbar = -log Fbar in closed form.
inline ReductionCheck ranked_reduction_check(const AttributeDistribution& dist,
                                             const RateFunction& a, const TestFunction& f,
                                             const StationarityOptions& opts = {}) {
  ReductionCheck out;
  const auto kernel = DeletionKernel::ranked(a);
  out.general = stationarity_residual(kernel, dist, f, opts);
  if (f.is_zero()) {
    out.reduced = {0.0, 1.0, 0.0, true};
    return out;
  }
  const auto [su, sv] = detail::support_in_quantiles(f, dist);

  bool converged = true;
  double worst_inner_err = 0.0;
  std::unordered_map<double, double> inner_cache;
  auto inner = [&](double u1) {
    const auto it = inner_cache.find(u1);
    if (it != inner_cache.end()) return it->second;
    double total = -std::log1p(-std::min(u1, su));
    const double top = std::min(u1, sv);
    if (top > su) {
      auto g = [&](double v) { return std::exp(-f(dist.quantile(v))) / (1.0 - v); };
      const auto r = integrate(g, su, top, opts.inner);
      converged = converged && r.converged;
      worst_inner_err = std::max(worst_inner_err, r.error);
      total += r.value;
    }
    if (u1 > sv) total += std::log((1.0 - sv) / (1.0 - u1));
    inner_cache.emplace(u1, total);
    return total;
  };
  auto outer = [&](double u1) {
    return std::exp(-inner(u1) - f(dist.quantile(u1))) / (1.0 - u1);
  };
  const auto r = integrate(outer, 0.0, 1.0, opts.outer, {su, sv});
  out.reduced.lhs = r.value;
  out.reduced.residual = std::abs(r.value - 1.0);
  out.reduced.error = r.error + worst_inner_err;
  out.reduced.converged = converged && r.converged;
  return out;
}

}  // namespace psurv
