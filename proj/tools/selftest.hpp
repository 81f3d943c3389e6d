#pragma once

// Closed-form checks that need no statistics beyond trivial tolerances.

#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "stable_width/stable_width.hpp"

namespace stable_width::selftest {

struct Check {
  std::string name;
  std::function<bool()> run;
};

namespace detail {
inline bool near(double a, double b, double tol = 1e-12) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

template <class E, class F>
bool throws(F&& f) {
  try {
    f();
  } catch (const E&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

inline NetworkConfig small_net(Activation phi, double sigma_bias, std::size_t input_dim = 1) {
  NetworkConfig net;
  net.input_dim = input_dim;
  net.activation = std::move(phi);
  net.layers = {{1.5, TailSpec::pareto(1.5), sigma_bias}, {1.5, TailSpec::pareto(1.5), sigma_bias},
                {1.5, TailSpec::pareto(1.5), sigma_bias}};
  return net;
}

inline RecursionOptions quick() {
  RecursionOptions o;
  o.n_mc = 1000;
  o.bootstrap = 10;
  return o;
}
}  // namespace detail

inline std::vector<Check> checks() {
  using detail::near;
  std::vector<Check> c;
  c.push_back({"c_alpha(2) = 1", [] { return c_alpha(2.0) == 1.0; }});
  c.push_back({"cf_sas at t = 0 is 1", [] { return cf_sas({2.0, 1.0}, 0.0) == 1.0; }});
  c.push_back({"cf_sas(2, 1, 1) = e^-1", [] { return near(cf_sas({2.0, 1.0}, 1.0), std::exp(-1.0)); }});
  c.push_back({"cf_sas(1, 2, 0.5) = e^-1", [] { return near(cf_sas({1.0, 2.0}, 0.5), std::exp(-1.0)); }});
  c.push_back({"multivariate cf at t = 0 is 1", [] {
                 SpectralMeasure g{2, 1.5, {{{1.0, 0.0}, 1.0}, {{0.0, 1.0}, 0.3}}};
                 const double t[2] = {0.0, 0.0};
                 return cf_multivariate_sas(g, 1.5, t) == 1.0;
               }});
  c.push_back({"single atom at (1,0) ignores t2", [] {
                 SpectralMeasure g{2, 1.5, {{{1.0, 0.0}, 1.0}}};
                 const double t[2] = {0.7, -4.0};
                 return near(cf_multivariate_sas(g, 1.5, t), std::exp(-std::pow(0.7, 1.5)));
               }});
  c.push_back({"E|X|^2 = 2 for SaS(2, 1)", [] { return near(frac_abs_moment({2.0, 1.0}, 2.0), 2.0); }});
  c.push_back({"fractional moment is homogeneous in sigma", [] {
                 return near(frac_abs_moment({1.5, 2.0}, 1.0), 2.0 * frac_abs_moment({1.5, 1.0}, 1.0));
               }});
  c.push_back({"Pareto(1.5) tail at 4 is 0.125", [] { return near(TailSpec::pareto(1.5).tail_prob(4.0), 0.125); }});
  c.push_back({"tail at 0 is 1", [] { return TailSpec::pareto(1.5).tail_prob(0.0) == 1.0; }});
  c.push_back({"log-power tail at e", [] {
                 const auto s = TailSpec::heavy(1.0, SlowlyVarying::log_power(1.0, 1.0));
                 return near(s.tail_prob(std::numbers::e), 2.0 / std::numbers::e);
               }});
  c.push_back({"Pareto(1) a_100 = 100", [] { return near(TailSpec::pareto(1.0).a_n(100.0), 100.0); }});
  c.push_back({"Pareto b_n = 1", [] { return near(TailSpec::pareto(1.5).b_n(1000.0), 1.0); }});
  c.push_back({"uniform L~(x) = 1/6 for x >= 1", [] { return near(TailSpec::uniform().l_tilde(3.0), 1.0 / 6.0, 1e-10); }});
  c.push_back({"L~(0) = 0", [] { return TailSpec::pareto(1.5).l_tilde(0.0) == 0.0; }});
  c.push_back({"zero bias and zero input propagate zeros", [] {
                 const auto net = detail::small_net(Activation::tanh(), 0.0);
                 const auto y = forward(net, {0.0}, {50, 50}, {3, 3, 3}, 1);
                 for (const auto& layer : y)
                   for (double v : layer)
                     if (v != 0.0) return false;
                 return true;
               }});
  c.push_back({"identical inputs give identical outputs", [] {
                 const auto net = detail::small_net(Activation::tanh(), 1.0, 2);
                 const auto y = forward_joint(net, {{0.3, -1.0}, {0.3, -1.0}}, {40, 40}, {4, 4, 4}, 2);
                 for (const auto& layer : y)
                   for (std::size_t i = 0; i + 1 < layer.size(); i += 2)
                     if (layer[i] != layer[i + 1]) return false;
                 return true;
               }});
  c.push_back({"k = 1 joint pass equals the single pass", [] {
                 const auto net = detail::small_net(Activation::tanh(), 1.0, 2);
                 return forward_joint(net, {{0.3, -1.0}}, {40, 40}, {4, 4, 4}, 3) ==
                        forward(net, {0.3, -1.0}, {40, 40}, {4, 4, 4}, 3);
               }});
  c.push_back({"zero second input without bias gives zero layer-1 coordinate", [] {
                 const auto net = detail::small_net(Activation::tanh(), 0.0, 2);
                 const auto y = forward_joint(net, {{0.3, -1.0}, {0.0, 0.0}}, {40, 40}, {5, 1, 1}, 4);
                 for (std::size_t i = 1; i < y[0].size(); i += 2)
                   if (y[0][i] != 0.0) return false;
                 return true;
               }});
  c.push_back({"phi = 0 gives sigma_l = sigma_B", [] {
                 auto net = detail::small_net(Activation::clipped_linear(0.0), 0.7);
                 const auto law = sigma_recursion(net, {1.0}, detail::quick());
                 for (const auto& l : law.layers)
                   if (!near(l.sigma, 0.7)) return false;
                 return true;
               }});
  c.push_back({"constant phi gives the closed form", [] {
                 auto net = detail::small_net(Activation::constant(0.5), 0.7);
                 const auto law = sigma_recursion(net, {1.0}, detail::quick());
                 const double expect = std::pow(std::pow(0.7, 1.5) + c_alpha(1.5) * std::pow(0.5, 1.5), 1.0 / 1.5);
                 return near(law.at(3).sigma, expect);
               }});
  c.push_back({"product tail at z = 1 is 1/2", [] { return near(product_tail(1.0, 1.3), 0.5); }});
  c.push_back({"product tail at e for alpha = 1", [] {
                 return near(product_tail(std::numbers::e, 1.0), std::exp(-1.0));
               }});
  c.push_back({"ECF of zeros is 1", [] {
                 const std::vector<double> x(10, 0.0), t{0.5, 1.0, 2.0};
                 const auto e = ecf(x, t);
                 for (double v : e.re)
                   if (v != 1.0) return false;
                 return true;
               }});
  c.push_back({"ECF of +-1 is cos t", [] {
                 const std::vector<double> x{1.0, -1.0, 1.0, -1.0}, t{0.5, 1.0, 2.0};
                 const auto e = ecf(x, t);
                 for (std::size_t i = 0; i < t.size(); ++i)
                   if (!near(e.re[i], std::cos(t[i]))) return false;
                 return true;
               }});
  c.push_back({"scale estimate of zeros is 0", [] {
                 const std::vector<double> x(2000, 0.0);
                 return scale_estimator(x, 1.5).sigma == 0.0;
               }});
  c.push_back({"Hill rejects equal magnitudes", [] {
                 const std::vector<double> x(100, 2.0);
                 return detail::throws<NumericError>([&] { (void)hill_estimator(x, 10); });
               }});
  c.push_back({"cf_distance rejects an empty grid", [] {
                 const std::vector<double> x{1.0, 2.0}, t;
                 return detail::throws<ConfigError>([&] { (void)cf_distance(x, [](double) { return 1.0; }, t); });
               }});
  c.push_back({"independence score rejects m = 0", [] {
                 const std::vector<double> x, t{1.0};
                 return detail::throws<ConfigError>([&] { (void)independence_score(x, x, t); });
               }});
  c.push_back({"counterexample rejects m = 0", [] {
                 CounterexampleConfig cfg;
                 cfg.replicates = 0;
                 return detail::throws<ConfigError>([&] { (void)divergence_experiment(cfg); });
               }});
  return c;
}

/// Prints one line per check; returns the number of failures.
inline int run(std::ostream& os) {
  int failures = 0;
  for (const auto& c : checks()) {
    bool ok = false;
    std::string err;
    try {
      ok = c.run();
    } catch (const std::exception& e) {
      err = e.what();
    }
    os << (ok ? "PASS " : "FAIL ") << c.name;
    if (!err.empty()) os << " (" << err << ")";
    os << '\n';
    failures += ok ? 0 : 1;
  }
  return failures;
}

}  // namespace stable_width::selftest
