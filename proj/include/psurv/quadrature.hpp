#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace psurv {

/// Raised when an integrand exceeds the blow-up threshold inside the domain.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadOptions {
  double abs_tol = 1e-9;
  double rel_tol = 0.0;
  std::size_t max_intervals = 4000;
  double blowup = 1e12;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
  bool converged = true;
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double lo;
  double hi;
  double value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gk15(const F& f, double lo, double hi, double blowup, std::size_t& evals) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  auto eval = [&](double x) {
    const double y = static_cast<double>(f(x));
    ++evals;
    if (!std::isfinite(y) || std::abs(y) > blowup) {
      throw DivergenceError("integrand exceeds " + std::to_string(blowup) + " at x = " +
                            std::to_string(x));
    }
    return y;
  };
  const double fc = eval(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double pair = eval(center - dx) + eval(center + dx);
    kronrod += kWgk[j] * pair;
    if (j % 2 == 1) gauss += kWg[j / 2] * pair;
  }
  return {lo, hi, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod quadrature of f over [lo, hi].
///
/// `breaks` are interior points where f may be discontinuous or kinked; the
/// initial partition is split there so no panel straddles one. Panels with
/// the largest error estimate are bisected until the summed error estimate
/// drops below max(abs_tol, rel_tol * |value|) or the panel budget runs out,
/// in which case `converged` is false and `error` is what was achieved.
template <class F>
QuadResult integrate(const F& f, double lo, double hi, const QuadOptions& opts = {},
                     std::vector<double> breaks = {}) {
  if (hi < lo) {
    auto r = integrate(f, hi, lo, opts, std::move(breaks));
    r.value = -r.value;
    return r;
  }
  QuadResult out;
  if (!(hi > lo)) return out;

  breaks.push_back(lo);
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  std::priority_queue<detail::Panel> heap;
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = std::max(lo, breaks[i]);
    const double b = std::min(hi, breaks[i + 1]);
    if (!(b > a)) continue;
    auto panel = detail::gk15(f, a, b, opts.blowup, out.evaluations);
    total += panel.value;
    total_err += panel.error;
    heap.push(panel);
  }

  auto target = [&] { return std::max(opts.abs_tol, opts.rel_tol * std::abs(total)); };
  while (total_err > target()) {
    if (heap.size() >= opts.max_intervals) {
      out.converged = false;
      break;
    }
    const auto worst = heap.top();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (!(mid > worst.lo && mid < worst.hi)) {
      // Panel cannot be split further in double precision.
      out.converged = false;
      break;
    }
    heap.pop();
    auto left = detail::gk15(f, worst.lo, mid, opts.blowup, out.evaluations);
    auto right = detail::gk15(f, mid, worst.hi, opts.blowup, out.evaluations);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }

  // Re-sum to shed the drift from incremental updates.
  total = 0.0;
  total_err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    total_err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = total_err;
  if (total_err > target()) out.converged = false;
  return out;
}

}  // namespace psurv
