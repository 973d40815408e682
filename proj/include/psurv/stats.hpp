#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/distributions/poisson.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace psurv::stats {

/// Outcome of one hypothesis test. pass <=> p_value > alpha.
struct TestReport {
  std::string method;
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t sample_size = 0;
  double degrees_of_freedom = 0.0;
  double alpha = 0.01;
  bool pass = true;
  std::string notes;
};

inline TestReport finish(TestReport r) {
  r.pass = r.p_value > r.alpha;
  return r;
}

/// Upper tail of the chi-square distribution.
inline double chi_square_sf(double statistic, double dof) {
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * statistic);
}

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

/// Kolmogorov limiting upper tail P{sup |B(t)| > lambda} for a Brownian bridge.
inline double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  constexpr double pi = 3.14159265358979323846;
  if (lambda < 1.18) {
    // Theta-function form converges fast for small lambda.
    const double y = -pi * pi / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int k = 1; k <= 7; k += 2) s += std::exp(y * k * k);
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct Cell {
  double observed = 0.0;
  double expected = 0.0;
};

/// Merge adjacent cells left to right until each expected count reaches
/// `min_expected`; a short remainder joins the last full cell.
inline std::vector<Cell> merge_cells(const std::vector<Cell>& cells, double min_expected = 5.0) {
  std::vector<Cell> out;
  Cell acc;
  for (const auto& c : cells) {
    acc.observed += c.observed;
    acc.expected += c.expected;
    if (acc.expected >= min_expected) {
      out.push_back(acc);
      acc = {};
    }
  }
  if (acc.expected > 0.0 || acc.observed > 0.0) {
    if (out.empty()) {
      out.push_back(acc);
    } else {
      out.back().observed += acc.observed;
      out.back().expected += acc.expected;
    }
  }
  return out;
}

/// Chi-square goodness of fit of counts to Poisson(mean), mean not fitted.
inline TestReport poisson_gof(const std::vector<std::uint64_t>& counts, double mean,
                              double alpha = 0.01) {
  if (counts.size() < 50) throw std::invalid_argument("poisson_gof needs at least 50 samples");
  if (!(mean > 0.0)) throw std::invalid_argument("poisson_gof needs a positive mean");
  const auto top = *std::max_element(counts.begin(), counts.end());
  std::vector<std::uint64_t> hist(top + 1, 0);
  for (auto c : counts) ++hist[c];

  const double n = static_cast<double>(counts.size());
  const boost::math::poisson_distribution<double> law(mean);
  std::vector<Cell> cells;
  for (std::uint64_t k = 0; k <= top; ++k) {
    cells.push_back({static_cast<double>(hist[k]), n * boost::math::pdf(law, static_cast<double>(k))});
  }
  cells.push_back({0.0, n * boost::math::cdf(boost::math::complement(law, static_cast<double>(top)))});
  const auto merged = merge_cells(cells);
  if (merged.size() < 2) throw std::invalid_argument("fewer than 2 cells after merging");

  TestReport r;
  r.method = "chi-square goodness of fit to Poisson";
  r.alpha = alpha;
  r.sample_size = counts.size();
  for (const auto& c : merged) r.statistic += (c.observed - c.expected) * (c.observed - c.expected) / c.expected;
  r.degrees_of_freedom = static_cast<double>(merged.size() - 1);
  r.p_value = chi_square_sf(r.statistic, r.degrees_of_freedom);
  r.notes = std::to_string(merged.size()) + " cells after merging to expected >= 5";
  return finish(r);
}

struct Dispersion {
  double index = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  std::size_t sample_size = 0;

  bool covers(double v) const { return lower <= v && v <= upper; }
};

/// Sample variance over sample mean with a normal-approximation interval,
/// standard error sqrt(2 / (n - 1)) under the Poisson null.
inline Dispersion dispersion_index(const std::vector<std::uint64_t>& counts,
                                   double confidence = 0.99) {
  if (counts.size() < 50) throw std::invalid_argument("dispersion_index needs at least 50 samples");
  const double n = static_cast<double>(counts.size());
  double mean = 0.0;
  for (auto c : counts) mean += static_cast<double>(c);
  mean /= n;
  if (!(mean > 0.0)) throw std::invalid_argument("dispersion_index undefined for zero mean");
  double ss = 0.0;
  for (auto c : counts) ss += (static_cast<double>(c) - mean) * (static_cast<double>(c) - mean);
  Dispersion d;
  d.sample_size = counts.size();
  d.mean = mean;
  d.variance = ss / (n - 1.0);
  d.index = d.variance / mean;
  // Two-sided normal quantile by bisection on the survival function.
  const double tail = 0.5 * (1.0 - confidence);
  double lo = 0.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_sf(mid) > tail ? lo : hi) = mid;
  }
  const double half = 0.5 * (lo + hi) * std::sqrt(2.0 / (n - 1.0));
  d.lower = d.index - half;
  d.upper = d.index + half;
  return d;
}

inline double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw std::invalid_argument("correlation undefined: zero variance");
  return sab / std::sqrt(saa * sbb);
}

/// Sample correlation of paired counts with a Fisher-z test against zero.
/// The statistic is the correlation itself.
inline TestReport cross_window_dependence(const std::vector<std::uint64_t>& a,
                                          const std::vector<std::uint64_t>& b,
                                          double alpha = 0.01) {
  if (a.size() != b.size()) throw std::invalid_argument("paired samples differ in length");
  if (a.size() < 100) throw std::invalid_argument("cross_window_dependence needs >= 100 pairs");
  std::vector<double> da(a.begin(), a.end());
  std::vector<double> db(b.begin(), b.end());
  TestReport r;
  r.method = "Pearson correlation, Fisher z";
  r.alpha = alpha;
  r.sample_size = a.size();
  r.statistic = pearson_correlation(da, db);
  const double clipped = std::clamp(r.statistic, -1.0, 1.0);
  if (std::abs(clipped) >= 1.0) {
    r.p_value = 0.0;
  } else {
    const double z = std::atanh(clipped) * std::sqrt(static_cast<double>(a.size()) - 3.0);
    r.p_value = 2.0 * normal_sf(std::abs(z));
  }
  return finish(r);
}

/// One-sample Kolmogorov-Smirnov test against the unit exponential law.
inline TestReport ks_exponential_unit(std::vector<double> samples, double alpha = 0.01) {
  if (samples.size() < 200) throw std::invalid_argument("ks_exponential_unit needs >= 200 samples");
  for (double s : samples) {
    if (!(s > 0.0)) throw std::invalid_argument("ks_exponential_unit needs positive samples");
  }
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = -std::expm1(-samples[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  TestReport r;
  r.method = "Kolmogorov-Smirnov vs Exp(1), asymptotic p-value";
  r.alpha = alpha;
  r.sample_size = samples.size();
  r.statistic = d;
  r.p_value = kolmogorov_sf(std::sqrt(n) * d);
  return finish(r);
}

/// Two-sample chi-square homogeneity test on count histograms.
inline TestReport homogeneity_test(const std::vector<std::uint64_t>& a,
                                   const std::vector<std::uint64_t>& b, double alpha = 0.01) {
  if (a.size() < 100 || b.size() < 100) {
    throw std::invalid_argument("homogeneity_test needs >= 100 samples per group");
  }
  const auto top = std::max(*std::max_element(a.begin(), a.end()),
                            *std::max_element(b.begin(), b.end()));
  std::vector<double> ha(top + 1, 0.0), hb(top + 1, 0.0);
  for (auto c : a) ha[c] += 1.0;
  for (auto c : b) hb[c] += 1.0;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double frac_a = na / (na + nb);

  // Merge on the smaller group's expected counts so both rows reach 5.
  struct Pair {
    double oa = 0, ob = 0;
  };
  std::vector<Pair> cells;
  Pair acc;
  const double smaller = std::min(frac_a, 1.0 - frac_a);
  for (std::uint64_t k = 0; k <= top; ++k) {
    acc.oa += ha[k];
    acc.ob += hb[k];
    if ((acc.oa + acc.ob) * smaller >= 5.0) {
      cells.push_back(acc);
      acc = {};
    }
  }
  if (acc.oa + acc.ob > 0.0) {
    if (cells.empty()) {
      cells.push_back(acc);
    } else {
      cells.back().oa += acc.oa;
      cells.back().ob += acc.ob;
    }
  }
  if (cells.size() < 2) throw std::invalid_argument("degenerate pooled histogram");

  TestReport r;
  r.method = "two-sample chi-square homogeneity";
  r.alpha = alpha;
  r.sample_size = a.size() + b.size();
  for (const auto& c : cells) {
    const double pooled = c.oa + c.ob;
    const double ea = pooled * frac_a;
    const double eb = pooled * (1.0 - frac_a);
    r.statistic += (c.oa - ea) * (c.oa - ea) / ea + (c.ob - eb) * (c.ob - eb) / eb;
  }
  r.degrees_of_freedom = static_cast<double>(cells.size() - 1);
  r.p_value = chi_square_sf(r.statistic, r.degrees_of_freedom);
  r.notes = std::to_string(cells.size()) + " cells after merging";
  return finish(r);
}

/// Mean and standard error of the mean.
struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double variance = 0.0;
  std::size_t n = 0;
};

template <class T>
MeanEstimate mean_estimate(const std::vector<T>& xs) {
  MeanEstimate m;
  m.n = xs.size();
  if (xs.empty()) return m;
  for (const auto& x : xs) m.mean += static_cast<double>(x);
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (const auto& x : xs) ss += (static_cast<double>(x) - m.mean) * (static_cast<double>(x) - m.mean);
    m.variance = ss / static_cast<double>(xs.size() - 1);
    m.std_error = std::sqrt(m.variance / static_cast<double>(xs.size()));
  }
  return m;
}

}  // namespace psurv::stats
