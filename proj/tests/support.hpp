#pragma once

// Property checks and independent oracles shared by the unit tests and the
// acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include "stable_width/stable_width.hpp"

namespace sw_test {

namespace sw = stable_width;

/// Every tail spec the repository ships in configs or documents.
inline std::vector<std::pair<std::string, sw::TailSpec>> shipped_specs() {
  return {
      {"pareto(1.5)", sw::TailSpec::pareto(1.5)},
      {"pareto(1.2)", sw::TailSpec::pareto(1.2)},
      {"pareto(1.0)", sw::TailSpec::pareto(1.0)},
      {"log_power(1.0; 1, 1)", sw::TailSpec::heavy(1.0, sw::SlowlyVarying::log_power(1.0, 1.0))},
      {"log_power(1.5; 0.5, -1)", sw::TailSpec::heavy(1.5, sw::SlowlyVarying::log_power(0.5, -1.0))},
      {"iterated_log(1.5; 1)", sw::TailSpec::heavy(1.5, sw::SlowlyVarying::iterated_log(1.0))},
      {"table(1.3)", sw::TailSpec::heavy(1.3, sw::SlowlyVarying(sw::SvKind::kTable, {1.0, 1.0, 10.0, 1.5, 1000.0, 2.0}))},
      {"pareto(2.0)", sw::TailSpec::pareto(2.0)},
      {"uniform(1)", sw::TailSpec::uniform(1.0)},
      {"gaussian(1)", sw::TailSpec::gaussian(1.0)},
      {"stable(1.5)", sw::TailSpec::stable(1.5, 1.0)},
  };
}

/// Slowly varying functions for the L(lambda t)/L(t) -> 1 suite.
inline std::vector<std::pair<std::string, sw::SlowlyVarying>> shipped_sv() {
  return {
      {"constant", sw::SlowlyVarying::constant(2.0)},
      {"log_power(1, 1)", sw::SlowlyVarying::log_power(1.0, 1.0)},
      {"log_power(0.5, -1)", sw::SlowlyVarying::log_power(0.5, -1.0)},
      {"iterated_log(1)", sw::SlowlyVarying::iterated_log(1.0)},
      {"table", sw::SlowlyVarying(sw::SvKind::kTable, {1.0, 1.0, 10.0, 1.5, 1000.0, 2.0})},
  };
}

/// Smallest T = e^s on a log grid (s step 0.5, s <= 690) such that
/// |L(lambda t)/L(t) - 1| < tol for every grid t >= T.
inline std::optional<double> sv_threshold(const sw::SlowlyVarying& sv, double lambda, double tol = 0.01) {
  constexpr double kMaxLog = 690.0;
  std::optional<double> t_star;
  for (double s = kMaxLog; s >= 0.0; s -= 0.5) {
    const double t = std::exp(s);
    if (lambda * t > 1e300) continue;
    if (!(std::abs(sv(lambda * t) / sv(t) - 1.0) < tol)) break;
    t_star = t;
  }
  return t_star;
}

/// Potter-type bound for G(t) = t^-alpha L(t): beyond a threshold T,
///   b^-1 min(l^-(a-e), l^-(a+e)) <= G(l t)/G(t) <= b max(l^-(a-e), l^-(a+e))
/// for every lambda in the grid and every grid t >= T. Returns T.
inline std::optional<double> potter_threshold(const sw::TailSpec& spec, double eps = 0.1, double b = 1.1) {
  const double a = spec.alpha();
  const std::vector<double> lambdas{0.1, 0.5, 2.0, 10.0, 100.0};
  std::optional<double> t_star;
  for (double s = 250.0; s >= std::log(std::max(1.0, spec.t0())); s -= 0.5) {
    const double t = std::exp(s);
    bool ok = true;
    for (double l : lambdas) {
      if (l * t < spec.t0()) {
        ok = false;
        break;
      }
      const double r = spec.regular_part(l * t) / spec.regular_part(t);
      const double p1 = std::pow(l, -(a - eps)), p2 = std::pow(l, -(a + eps));
      ok = ok && r <= b * std::max(p1, p2) && r >= std::min(p1, p2) / b;
    }
    if (!ok) break;
    t_star = t;
  }
  return t_star;
}

struct ConvolutionTail {
  double t = 0.0;          // 99.9th percentile of |W1 + W2|
  double empirical = 0.0;  // P(|W1 + W2| > t)
  double predicted = 0.0;  // t^-alpha (L1(t) + L2(t))
  [[nodiscard]] double ratio() const { return empirical / predicted; }
};

inline ConvolutionTail convolution_tail(const sw::TailSpec& a, const sw::TailSpec& b, std::size_t n, std::uint64_t seed) {
  const auto k = sw::domain_key(seed, sw::Domain::kOracle);
  const auto x = sw::sample_heavy(a, n, k.child(1));
  const auto y = sw::sample_heavy(b, n, k.child(2));
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = std::abs(x[i] + y[i]);
  const auto q = s.begin() + static_cast<std::ptrdiff_t>(static_cast<double>(n) * 0.999);
  std::nth_element(s.begin(), q, s.end());
  ConvolutionTail c;
  c.t = *q;
  c.empirical = static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v > c.t; })) /
                static_cast<double>(n);
  c.predicted = a.regular_part(c.t) + b.regular_part(c.t);
  return c;
}

/// int_0^inf sin(u) u^-alpha du: tanh-sinh on (0, 1], then Ooura's
/// double-exponential Fourier rules on [1, inf) after the shift u = 1 + v.
inline double c_alpha_oracle(double alpha) {
  boost::math::quadrature::tanh_sinh<double> ts;
  const double head = ts.integrate([alpha](double u) { return (std::sin(u) / u) * std::pow(u, 1.0 - alpha); }, 0.0, 1.0);
  auto f = [alpha](double v) { return std::pow(1.0 + v, -alpha); };
  boost::math::quadrature::ooura_fourier_sin<double> fs(1e-13);
  boost::math::quadrature::ooura_fourier_cos<double> fc(1e-13);
  return head + std::cos(1.0) * fs.integrate(f, 1.0).first + std::sin(1.0) * fc.integrate(f, 1.0).first;
}

/// Bracketing root of f on [lo, hi] by TOMS 748.
template <class F>
double toms748_root(F f, double lo, double hi) {
  boost::uintmax_t iters = 500;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (r.first + r.second);
}

/// Binomial standard error of an empirical probability.
inline double binomial_se(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

inline sw::NetworkConfig pareto_tanh(std::size_t input_dim, std::size_t hidden, double alpha = 1.5, double sigma_b = 1.0) {
  sw::NetworkConfig net;
  net.input_dim = input_dim;
  net.activation = sw::Activation::tanh();
  for (std::size_t l = 0; l <= hidden; ++l) net.layers.push_back({alpha, sw::TailSpec::pareto(alpha), sigma_b});
  return net;
}

inline sw::RecursionOptions recursion(std::size_t n, std::uint64_t seed, std::size_t bootstrap = 50) {
  sw::RecursionOptions o;
  o.n_mc = n;
  o.bootstrap = bootstrap;
  o.seed = seed;
  return o;
}

}  // namespace sw_test
