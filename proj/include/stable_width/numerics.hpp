#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"

namespace stable_width::numerics {

inline constexpr std::size_t kPairwiseLeaf = 16;

/// Pairwise (tree) summation. The tree depends only on the length, so the
/// result is independent of how callers schedule work.
[[nodiscard]] inline double pairwise_sum(std::span<const double> v) noexcept {
  if (v.size() <= kPairwiseLeaf) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// Pairwise-accumulated dot product.
[[nodiscard]] inline double pairwise_dot(std::span<const double> a, std::span<const double> b) noexcept {
  if (a.size() <= kPairwiseLeaf) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  }
  const std::size_t half = a.size() / 2;
  return pairwise_dot(a.first(half), b.first(half)) + pairwise_dot(a.subspan(half), b.subspan(half));
}

struct BisectionOptions {
  double rel_tol = 1e-10;
  int max_iter = 200;
};

/// For a nonincreasing predicate-style function f with f(lo) > 0 >= f(hi),
/// returns the smallest t (to rel_tol) with f(t) <= 0. The returned point
/// always satisfies f(t) <= 0.
template <class F>
[[nodiscard]] double bisect_down(F&& f, double lo, double hi, BisectionOptions opt = {},
                                 const char* what = "bisection") {
  if (!(f(hi) <= 0.0)) {
    std::ostringstream os;
    os << what << ": upper bracket " << hi << " does not satisfy the target";
    throw NumericError(os.str());
  }
  for (int it = 0; it < opt.max_iter; ++it) {
    if (hi - lo <= opt.rel_tol * hi) return hi;
    const double mid = 0.5 * (lo + hi);
    if (f(mid) <= 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  if (hi - lo <= 1e3 * opt.rel_tol * hi) return hi;
  std::ostringstream os;
  os << what << ": no convergence after " << opt.max_iter << " iterations, bracket [" << lo << ", " << hi
     << "]";
  throw NumericError(os.str());
}

/// Doubles `start` until f(t) <= 0. Throws with diagnostics after max_doublings.
template <class F>
[[nodiscard]] double bracket_up(F&& f, double start, int max_doublings = 1100, const char* what = "bracket") {
  double t = start;
  for (int i = 0; i < max_doublings; ++i) {
    if (f(t) <= 0.0) return t;
    t *= 2.0;
    if (!std::isfinite(t)) break;
  }
  std::ostringstream os;
  os << what << ": failed to bracket root starting from " << start << " (last t=" << t << ")";
  throw NumericError(os.str());
}

/// Adaptive 15-point Gauss-Kronrod on [a, b].
template <class F>
[[nodiscard]] double integrate(F&& f, double a, double b, double tol = 1e-11, const char* what = "quadrature") {
  if (b <= a) return 0.0;
  double err = 0.0;
  double l1 = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 30, tol, &err, &l1);
  if (!std::isfinite(v) || err > std::max(1e-9, 1e-7 * std::abs(l1))) {
    std::ostringstream os;
    os << what << ": quadrature did not converge on [" << a << ", " << b << "], error estimate " << err;
    throw NumericError(os.str());
  }
  return v;
}

}  // namespace stable_width::numerics
