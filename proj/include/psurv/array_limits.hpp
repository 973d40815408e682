#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "psurv/model.hpp"
#include "psurv/quadrature.hpp"
#include "psurv/rng.hpp"
#include "psurv/theory.hpp"

namespace psurv {

// ---------------------------------------------------------------------------
// Permutation construction of the particle process given n arrivals
// ---------------------------------------------------------------------------

/// n attributes, a uniformly random arrival order and the resulting deletion
/// attempts. Index k refers to the k-th attribute draw, not arrival order.
struct PermutationRealization {
  std::size_t n = 0;
  std::vector<double> attributes;
  std::vector<std::uint32_t> arrival_position;  // 1-based: 1 means first to arrive
  std::vector<std::uint32_t> attempts;          // Q_k = #{j : X_j > X_k, arrives after k}
  std::vector<std::uint32_t> above;             // nu_k = #{j : X_j >= X_k}
  std::vector<std::uint64_t> lifetimes;         // L_k, P{L > l} = (1 - a)^l
  std::vector<std::uint8_t> survivors;          // U_k = 1(L_k > Q_k)

  std::size_t survivor_count() const {
    return static_cast<std::size_t>(std::count(survivors.begin(), survivors.end(), 1));
  }
};

namespace detail {

/// Fenwick tree over ranks 0..n-1 counting inserted items.
class RankCounter {
 public:
  explicit RankCounter(std::size_t n) : tree_(n + 1, 0) {}
  void insert(std::size_t rank) {
    for (std::size_t i = rank + 1; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  /// Inserted items with rank < r.
  std::uint32_t below(std::size_t r) const {
    std::uint32_t s = 0;
    for (std::size_t i = r; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<std::uint32_t> tree_;
};

/// Q_k for every k given attribute ranks (0 = smallest) and arrival positions.
inline std::vector<std::uint32_t> attempts_from_order(const std::vector<std::uint32_t>& rank,
                                                      const std::vector<std::uint32_t>& position) {
  const std::size_t n = rank.size();
  std::vector<std::size_t> by_arrival(n);
  for (std::size_t k = 0; k < n; ++k) by_arrival[position[k] - 1] = k;
  std::vector<std::uint32_t> q(n, 0);
  RankCounter later(n);
  std::uint32_t inserted = 0;
  for (std::size_t i = n; i-- > 0;) {
    const std::size_t k = by_arrival[i];
    q[k] = inserted - later.below(rank[k] + 1);
    later.insert(rank[k]);
    ++inserted;
  }
  return q;
}

inline std::vector<std::uint32_t> ranks_of(const std::vector<double>& xs) {
  std::vector<std::uint32_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0U);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t i, std::uint32_t j) { return xs[i] < xs[j]; });
  std::vector<std::uint32_t> rank(xs.size());
  for (std::uint32_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  return rank;
}

}  // namespace detail

/// Draw X_1..X_n i.i.d. from F, a uniform arrival order, lifetimes L_k and
/// the survivor indicators U_k = 1(L_k > Q_k).
inline PermutationRealization permutation_rank_realization(std::size_t n,
                                                           const AttributeDistribution& dist,
                                                           const RateFunction& a, Engine& rng) {
  if (n == 0) throw std::invalid_argument("n must be >= 1");
  PermutationRealization out;
  out.n = n;
  out.attributes.resize(n);
  for (auto& x : out.attributes) x = sample_attribute(dist, rng);

  out.arrival_position.resize(n);
  std::iota(out.arrival_position.begin(), out.arrival_position.end(), 1U);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(out.arrival_position[i], out.arrival_position[pick(rng)]);
  }

  const auto rank = detail::ranks_of(out.attributes);
  out.attempts = detail::attempts_from_order(rank, out.arrival_position);
  out.above.resize(n);
  out.lifetimes.resize(n);
  out.survivors.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.above[k] = static_cast<std::uint32_t>(n - rank[k]);
    out.lifetimes[k] = geometric_trials(rng, a(out.attributes[k]));
    out.survivors[k] = out.lifetimes[k] > out.attempts[k] ? 1 : 0;
  }
  return out;
}

/// Indices surviving in a record-only world: arrivals that no later arrival
/// exceeds (right-to-left records of the attribute sequence in arrival order).
inline std::vector<std::uint8_t> right_to_left_records(const PermutationRealization& r) {
  std::vector<std::size_t> by_arrival(r.n);
  for (std::size_t k = 0; k < r.n; ++k) by_arrival[r.arrival_position[k] - 1] = k;
  std::vector<std::uint8_t> record(r.n, 0);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = r.n; i-- > 0;) {
    const std::size_t k = by_arrival[i];
    if (r.attributes[k] > best) {
      record[k] = 1;
      best = r.attributes[k];
    }
  }
  return record;
}

// ---------------------------------------------------------------------------
// Exact joint law of the attempt counts
// ---------------------------------------------------------------------------

/// Exact joint law of (Q_1..Q_n) over the n! equally likely arrival orders
/// for a fixed strict attribute ranking. Probabilities are count / total.
struct AttemptLaw {
  std::size_t n = 0;
  std::uint64_t total = 0;  // n!
  std::vector<std::uint32_t> above;
  std::map<std::vector<std::uint8_t>, std::uint64_t> joint;
  std::vector<std::vector<std::uint64_t>> marginal;  // marginal[k][m] counts

  /// Every Q_k uniform on {0..nu_k - 1}, exactly.
  bool marginals_uniform() const {
    for (std::size_t k = 0; k < n; ++k) {
      if (marginal[k].size() != above[k]) return false;
      for (auto c : marginal[k]) {
        if (c * above[k] != total) return false;
      }
    }
    return true;
  }

  /// Every cell of the support of prod_k Uniform{0..nu_k - 1} carries mass
  /// prod_k 1/nu_k, and no other cell is charged.
  bool product_form() const {
    std::uint64_t cells = 1;
    for (auto v : above) cells *= v;
    if (joint.size() != cells) return false;
    for (const auto& [q, count] : joint) {
      for (std::size_t k = 0; k < n; ++k) {
        if (q[k] >= above[k]) return false;
      }
      if (count * cells != total) return false;
    }
    return true;
  }
};

inline constexpr std::size_t kMaxExactAttemptLaw = 8;

/// `ranks[k]` is the position of X_k in increasing order (a permutation of
/// 0..n-1). Enumerates all n! arrival orders.
inline AttemptLaw claim29_exact_law(const std::vector<std::uint32_t>& ranks) {
  const std::size_t n = ranks.size();
  if (n == 0) throw std::invalid_argument("ranking must be nonempty");
  if (n > kMaxExactAttemptLaw) {
    throw std::invalid_argument("exact enumeration is capped at n = 8; use the Monte Carlo mode");
  }
  {
    std::vector<std::uint32_t> check = ranks;
    std::sort(check.begin(), check.end());
    for (std::uint32_t i = 0; i < n; ++i) {
      if (check[i] != i) throw std::invalid_argument("ranks must be a permutation of 0..n-1");
    }
  }
  AttemptLaw law;
  law.n = n;
  law.above.resize(n);
  law.marginal.assign(n, {});
  for (std::size_t k = 0; k < n; ++k) {
    law.above[k] = static_cast<std::uint32_t>(n - ranks[k]);
    law.marginal[k].assign(law.above[k], 0);
  }
  std::vector<std::uint32_t> position(n);
  std::iota(position.begin(), position.end(), 1U);
  std::vector<std::uint8_t> q(n);
  do {
    for (std::size_t k = 0; k < n; ++k) {
      std::uint8_t count = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (ranks[j] > ranks[k] && position[j] > position[k]) ++count;
      }
      q[k] = count;
      if (count >= law.above[k]) throw std::logic_error("attempt count exceeds nu - 1");
      ++law.marginal[k][count];
    }
    ++law.joint[q];
    ++law.total;
  } while (std::next_permutation(position.begin(), position.end()));
  return law;
}

/// Monte Carlo counterpart for n beyond the exact cap: observed counts of
/// Q_k over `draws` uniform arrival orders, one histogram per index.
inline std::vector<std::vector<std::uint64_t>> attempt_histograms_mc(
    const std::vector<std::uint32_t>& ranks, std::size_t draws, Engine& rng) {
  const std::size_t n = ranks.size();
  std::vector<std::vector<std::uint64_t>> hist(n);
  for (std::size_t k = 0; k < n; ++k) hist[k].assign(n - ranks[k], 0);
  std::vector<std::uint32_t> position(n);
  for (std::size_t d = 0; d < draws; ++d) {
    std::iota(position.begin(), position.end(), 1U);
    for (std::size_t i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(position[i], position[pick(rng)]);
    }
    const auto q = detail::attempts_from_order(ranks, position);
    for (std::size_t k = 0; k < n; ++k) ++hist[k][q[k]];
  }
  return hist;
}

// ---------------------------------------------------------------------------
// Product-to-sum gap bounds
// ---------------------------------------------------------------------------

struct GapBounds {
  double gap = 0.0;     // -sum log(1 - Y_k) - sum Y_k
  double bound9 = 0.0;  // sum Y_k^2 / (1 - c)
  double bound10 = 0.0; // max_k Y_k / (1 - c) * sum Y_k
  bool holds9 = true;
  bool holds10 = true;
};

/// Deterministic gap between -sum log(1 - Y) and sum Y, with its two bounds.
inline GapBounds lemma2_gap_bound(const std::vector<double>& y, double c) {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("c must lie in (0, 1)");
  GapBounds out;
  double sum = 0.0;
  double sumsq = 0.0;
  double peak = 0.0;
  for (double v : y) {
    if (!(v > 0.0 && v <= c)) throw std::invalid_argument("every Y_k must lie in (0, c]");
    // Series form sum_{m>=2} v^m / m avoids cancellation for small v.
    double term;
    if (v < 1e-3) {
      term = v * v * (0.5 + v * (1.0 / 3.0 + v * (0.25 + v * 0.2)));
    } else {
      term = -std::log1p(-v) - v;
    }
    out.gap += term;
    sum += v;
    sumsq += v * v;
    peak = std::max(peak, v);
  }
  out.bound9 = sumsq / (1.0 - c);
  out.bound10 = peak / (1.0 - c) * sum;
  out.holds9 = out.gap <= out.bound9;
  out.holds10 = out.gap <= out.bound10;
  return out;
}

// ---------------------------------------------------------------------------
// Sufficient-condition values for the particle process
// ---------------------------------------------------------------------------

struct ConditionValues {
  double val22 = 0.0;  // int_B n E[r_{n1}^2 | X = x] dF(x)
  double val23 = 0.0;  // int_B E[|n r_{n1} - r(x)| | X = x] dF(x)
  double se22 = 0.0;
  double se23 = 0.0;
  bool exact = true;
};

namespace detail {

/// log pmf of Binomial(m, p) at k.
inline double binomial_log_pmf(std::uint64_t m, double p, std::uint64_t k) {
  const double mm = static_cast<double>(m);
  const double kk = static_cast<double>(k);
  double lp = std::lgamma(mm + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(mm - kk + 1.0);
  if (k > 0) lp += kk * std::log(p);
  if (k < m) lp += (mm - kk) * std::log1p(-p);
  return lp;
}

/// E[g(S)] for S ~ Binomial(m, p), summing outward from the mode until the
/// remaining mass is negligible.
template <class G>
double binomial_expectation(std::uint64_t m, double p, const G& g) {
  if (p <= 0.0) return g(0);
  if (p >= 1.0) return g(m);
  const auto mode = static_cast<std::uint64_t>(std::floor((static_cast<double>(m) + 1.0) * p));
  const std::uint64_t center = std::min(mode, m);
  double total = 0.0;
  for (std::uint64_t k = center + 1; k-- > 0;) {
    const double w = std::exp(binomial_log_pmf(m, p, k));
    total += w * g(k);
    if (w < 1e-300 || (k < center && w < 1e-18)) break;
  }
  for (std::uint64_t k = center + 1; k <= m; ++k) {
    const double w = std::exp(binomial_log_pmf(m, p, k));
    total += w * g(k);
    if (w < 1e-18) break;
  }
  return total;
}

}  // namespace detail

inline constexpr std::uint64_t kExactConditionLimit = 1000;

/// Condition values for the ranked particle process with n arrivals.
///
/// r_{n1} = [1 - (1 - a(x))^nu] / (nu a(x)) with nu - 1 ~ Binomial(n - 1, Fbar(x)).
/// The inner expectations are exact binomial sums for n <= 1000; above that
/// both integrals are estimated jointly by Monte Carlo over
/// (X ~ F restricted to B, S ~ Binomial(n - 1, Fbar(X))) with `mc_budget` draws.
inline ConditionValues corollary5_condition_values(std::uint64_t n,
                                                   const AttributeDistribution& dist,
                                                   const RateFunction& a,
                                                   const ObservationWindow& window,
                                                   std::size_t mc_budget, Engine* rng = nullptr,
                                                   const QuadOptions& opts = {1e-10, 1e-9, 4000,
                                                                              1e12}) {
  if (n == 0) throw std::invalid_argument("n must be >= 1");
  if (!window_problems(window, dist).empty()) {
    throw std::invalid_argument("window must stay below the supremum of E");
  }
  const double nn = static_cast<double>(n);
  auto r_of = [&](double ax, std::uint64_t s) { return conditional_survival_r(ax, s + 1); };

  ConditionValues out;
  if (n <= kExactConditionLimit) {
    for (const auto& iv : window.intervals()) {
      const double ulo = dist.cdf(iv.lo);
      const double uhi = dist.cdf(iv.hi);
      auto g22 = [&](double u) {
        const double x = dist.quantile(u);
        const double ax = a(x);
        return detail::binomial_expectation(n - 1, 1.0 - u, [&](std::uint64_t s) {
          const double r = r_of(ax, s);
          return nn * r * r;
        });
      };
      auto g23 = [&](double u) {
        const double x = dist.quantile(u);
        const double ax = a(x);
        const double limit = 1.0 / (ax * (1.0 - u));
        return detail::binomial_expectation(n - 1, 1.0 - u, [&](std::uint64_t s) {
          return std::abs(nn * r_of(ax, s) - limit);
        });
      };
      out.val22 += integrate(g22, ulo, uhi, opts).value;
      out.val23 += integrate(g23, ulo, uhi, opts).value;
    }
    return out;
  }

  if (rng == nullptr || mc_budget < 2) {
    throw std::invalid_argument("Monte Carlo condition values need a random stream and budget");
  }
  out.exact = false;
  const double mass = window.probability(dist);
  std::vector<double> cum;  // cumulative quantile mass of the window pieces
  for (const auto& iv : window.intervals()) {
    cum.push_back((cum.empty() ? 0.0 : cum.back()) + dist.cdf(iv.hi) - dist.cdf(iv.lo));
  }
  double s22 = 0, q22 = 0, s23 = 0, q23 = 0;
  for (std::size_t i = 0; i < mc_budget; ++i) {
    // u uniform on the window's quantile image.
    double t = uniform_open01(*rng) * mass;
    std::size_t piece = 0;
    while (piece + 1 < cum.size() && t > cum[piece]) ++piece;
    const auto& iv = window.intervals()[piece];
    const double base = piece == 0 ? 0.0 : cum[piece - 1];
    const double u = dist.cdf(iv.lo) + (t - base);
    const double x = dist.quantile(u);
    const double ax = a(x);
    std::binomial_distribution<std::uint64_t> binom(n - 1, 1.0 - u);
    const std::uint64_t s = binom(*rng);
    const double r = r_of(ax, s);
    const double v22 = nn * r * r;
    const double v23 = std::abs(nn * r - 1.0 / (ax * (1.0 - u)));
    s22 += v22;
    q22 += v22 * v22;
    s23 += v23;
    q23 += v23 * v23;
  }
  const double m = static_cast<double>(mc_budget);
  auto se = [m](double s, double q) {
    const double mean = s / m;
    return std::sqrt(std::max(0.0, (q - m * mean * mean) / (m - 1.0)) / m);
  };
  out.val22 = mass * s22 / m;
  out.val23 = mass * s23 / m;
  out.se22 = mass * se(s22, q22);
  out.se23 = mass * se(s23, q23);
  return out;
}

// ---------------------------------------------------------------------------
// Bernoulli arrays
// ---------------------------------------------------------------------------

/// Row probability rule for sums of conditionally independent indicators.
struct ProbabilityRule {
  enum class Kind {
    iid,          // every p_k = mean / n
    exchangeable, // p_k = mean * W_k / sum W, W_k i.i.d. unit exponential
    explicit_list // fixed probabilities, n = list size
  } kind = Kind::iid;
  double mean = 0.0;
  std::vector<double> probabilities;
};

struct ArrayLimitResult {
  std::vector<double> pmf;  // empirical pmf of N_n
  double mean = 0.0;
  double total_variation = 0.0;  // to Poisson(limit_mean)
  double limit_mean = 0.0;
};

/// Total variation distance between an empirical pmf and Poisson(mean).
inline double tv_to_poisson(const std::vector<double>& pmf, double mean) {
  double tv = 0.0;
  double covered = 0.0;
  for (std::size_t k = 0; k < pmf.size(); ++k) {
    const double pk =
        mean == 0.0 ? (k == 0 ? 1.0 : 0.0)
                    : std::exp(static_cast<double>(k) * std::log(mean) - mean -
                               std::lgamma(static_cast<double>(k) + 1.0));
    tv += std::abs(pmf[k] - pk);
    covered += pk;
  }
  tv += std::max(0.0, 1.0 - covered);
  return 0.5 * tv;
}

/// Empirical law of N_n = sum_k U_{nk} over `reps` rows.
inline ArrayLimitResult bernoulli_array_limit(std::size_t n, const ProbabilityRule& rule,
                                              std::size_t reps, Engine& rng) {
  if (reps == 0) throw std::invalid_argument("reps must be >= 1");
  std::vector<std::uint64_t> hist;
  double limit_mean = rule.mean;
  if (rule.kind == ProbabilityRule::Kind::explicit_list) {
    n = rule.probabilities.size();
    limit_mean = std::accumulate(rule.probabilities.begin(), rule.probabilities.end(), 0.0);
  }
  if (n == 0) throw std::invalid_argument("n must be >= 1");
  std::vector<double> w(rule.kind == ProbabilityRule::Kind::exchangeable ? n : 0);
  for (std::size_t r = 0; r < reps; ++r) {
    std::uint64_t sum = 0;
    switch (rule.kind) {
      case ProbabilityRule::Kind::iid: {
        // Sum of n i.i.d. Bernoulli(mean/n) indicators.
        std::binomial_distribution<std::uint64_t> binom(n, rule.mean / static_cast<double>(n));
        sum = binom(rng);
        break;
      }
      case ProbabilityRule::Kind::exchangeable: {
        double total = 0.0;
        for (auto& v : w) {
          v = -std::log(uniform_open01(rng));
          total += v;
        }
        for (double v : w) sum += bernoulli(rng, std::min(1.0, rule.mean * v / total)) ? 1 : 0;
        break;
      }
      case ProbabilityRule::Kind::explicit_list:
        for (double p : rule.probabilities) sum += bernoulli(rng, p) ? 1 : 0;
        break;
    }
    if (sum >= hist.size()) hist.resize(sum + 1, 0);
    ++hist[sum];
  }
  ArrayLimitResult out;
  out.limit_mean = limit_mean;
  out.pmf.resize(hist.size());
  for (std::size_t k = 0; k < hist.size(); ++k) {
    out.pmf[k] = static_cast<double>(hist[k]) / static_cast<double>(reps);
    out.mean += static_cast<double>(k) * out.pmf[k];
  }
  out.total_variation = tv_to_poisson(out.pmf, limit_mean);
  return out;
}

/// Window counts of the permutation construction over `reps` independent
/// realizations; rows are replications, columns windows.
inline std::vector<std::vector<std::uint64_t>> xi_n_limit_experiment(
    std::size_t n, const AttributeDistribution& dist, const RateFunction& a,
    const std::vector<ObservationWindow>& windows, std::size_t reps, Engine& rng) {
  std::vector<std::vector<std::uint64_t>> out;
  out.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto real = permutation_rank_realization(n, dist, a, rng);
    std::vector<double> alive;
    for (std::size_t k = 0; k < n; ++k) {
      if (real.survivors[k]) alive.push_back(real.attributes[k]);
    }
    std::sort(alive.begin(), alive.end());
    std::vector<std::uint64_t> row;
    for (const auto& w : windows) row.push_back(w.count_sorted(alive));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace psurv
