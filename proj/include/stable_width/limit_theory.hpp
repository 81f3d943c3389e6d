#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "activation.hpp"
#include "errors.hpp"
#include "heavy_tail.hpp"
#include "mlp.hpp"
#include "numerics.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "stable_dist.hpp"

namespace stable_width {

struct RecursionOptions {
  std::size_t n_mc = 1'000'000;
  std::size_t bootstrap = 200;
  /// Atom budget of the reduced measure used to sample the next layer
  /// (and of the reported measure when `cluster_output` is set).
  std::size_t atoms_budget = 256;
  bool cluster_output = false;
  std::uint64_t seed = 0;
  Parallelism par;
};

/// Predicted limit at one layer l >= 2.
struct LayerLimit {
  std::size_t layer = 2;
  double alpha = 2.0;
  double sigma_bias = 0.0;
  /// MC mean of |phi(y)|^alpha over the previous layer's limit, and its SE.
  double integral = 0.0;
  double integral_se = 0.0;
  /// sigma_l and its delta-method SE (propagated through earlier layers).
  double sigma = 0.0;
  double sigma_se = 0.0;
  bool closed_form = false;
  std::optional<SpectralMeasure> gamma;
  std::optional<GaussianCov> cov;
  /// sup |CF change| per unit |t|^alpha caused by clustering (0 if none).
  double cluster_cf_bound = 0.0;

  [[nodiscard]] StableParams params() const { return {alpha, sigma}; }
};

struct LimitLaw {
  std::size_t inputs = 1;
  std::size_t n_mc = 0;
  std::size_t bootstrap = 0;
  std::uint64_t seed = 0;
  std::vector<LayerLimit> layers;  // layers[i] is layer i + 2

  [[nodiscard]] const LayerLimit& at(std::size_t l) const {
    if (l < 2 || l - 2 >= layers.size()) throw ConfigError("limit law: layer " + std::to_string(l) + " not computed");
    return layers[l - 2];
  }
};

inline void to_json(nlohmann::json& j, const LayerLimit& l) {
  j = nlohmann::json{{"layer", l.layer},          {"alpha", l.alpha},
                     {"sigma_bias", l.sigma_bias}, {"integral", l.integral},
                     {"integral_se", l.integral_se}, {"sigma", l.sigma},
                     {"sigma_se", l.sigma_se},     {"closed_form", l.closed_form},
                     {"kind", l.alpha < 2.0 ? "stable" : "gaussian"}};
  if (l.gamma) {
    j["spectral_measure"] = *l.gamma;
    j["cluster_cf_bound"] = l.cluster_cf_bound;
  }
  if (l.cov) j["covariance"] = *l.cov;
}

inline void to_json(nlohmann::json& j, const LimitLaw& law) {
  j = nlohmann::json{{"inputs", law.inputs}, {"n_mc", law.n_mc}, {"bootstrap", law.bootstrap},
                     {"seed", law.seed},     {"layers", law.layers}};
}

namespace limit_detail {

/// Bootstrap SE of the mean of g; resample indices come from `key`.
inline double bootstrap_se(std::span<const double> g, std::size_t resamples, StreamKey key, Parallelism par) {
  if (resamples < 2 || g.size() < 2) return 0.0;
  std::vector<double> means(resamples);
  parallel_for(resamples, par, [&](std::size_t b) {
    CounterStream cs(key.child(b));
    std::vector<double> pick(g.size());
    for (auto& v : pick) v = g[cs.below(g.size())];
    means[b] = numerics::pairwise_sum(pick) / static_cast<double>(g.size());
  });
  const double mu = numerics::pairwise_sum(means) / static_cast<double>(resamples);
  double ss = 0.0;
  for (double m : means) ss += (m - mu) * (m - mu);
  return std::sqrt(ss / static_cast<double>(resamples - 1));
}

inline double mean_of(std::span<const double> v) { return numerics::pairwise_sum(v) / static_cast<double>(v.size()); }

/// sigma from the integral: sigma^alpha = sigma_B^alpha + c_alpha * I.
inline void finish_sigma(LayerLimit& out, double integral_var) {
  const double ca = c_alpha(out.alpha);
  const double sa = std::pow(out.sigma_bias, out.alpha) + ca * out.integral;
  out.sigma = std::pow(sa, 1.0 / out.alpha);
  out.integral_se = std::sqrt(std::max(0.0, integral_var));
  out.sigma_se = out.sigma > 0.0 ? ca * out.integral_se / (out.alpha * std::pow(out.sigma, out.alpha - 1.0)) : 0.0;
}

/// Exact law of Y^(1)(x) when layer-1 weights are stable or Gaussian.
inline std::optional<StableParams> exact_nu1(const NetworkConfig& net, std::span<const double> x) {
  const auto& l1 = net.layer(1);
  if (l1.weights.mode() == TailMode::kStable) {
    double sa = std::pow(l1.sigma_bias, l1.alpha);
    for (double v : x) sa += std::pow(l1.weights.scale() * std::abs(v), l1.alpha);
    return StableParams{l1.alpha, std::pow(sa, 1.0 / l1.alpha)};
  }
  if (l1.weights.mode() == TailMode::kFinite && l1.weights.finite_law() == FiniteLaw::kGaussian) {
    double var = 2.0 * l1.sigma_bias * l1.sigma_bias;
    for (double v : x) var += l1.weights.variance() * v * v;
    return StableParams{2.0, std::sqrt(var / 2.0)};
  }
  return std::nullopt;
}

/// E|phi(Y)|^alpha for phi = |y|^p and Y ~ SaS(inner) when finite.
inline std::optional<double> closed_form_integral(const Activation& phi, const StableParams& inner, double alpha) {
  if (phi.kind() != ActivationKind::kAbsPower) return std::nullopt;
  const double nu = phi.params()[0] * alpha;
  if (inner.alpha < 2.0 && nu >= inner.alpha) {
    throw ConfigError("activation abs_power: E|phi(Y)|^alpha is infinite for the previous layer's tail index");
  }
  return frac_abs_moment(inner, nu);
}

}  // namespace limit_detail

/// n draws of Y^(1)(x_1..x_k) = W^(1) x_s + B^(1) with shared weights and
/// bias. Row-major n x k.
[[nodiscard]] inline std::vector<double> nu1_sampler_joint(const NetworkConfig& net,
                                                           const std::vector<std::vector<double>>& xs, std::size_t n,
                                                           StreamKey key, Parallelism par = {}) {
  validate_inputs(net, xs);
  if (n == 0) throw ConfigError("nu1_sampler: n must be >= 1");
  const auto& l1 = net.layer(1);
  const SasTransform bias(l1.alpha, l1.sigma_bias);
  const std::size_t k = xs.size();
  const std::size_t dim = net.input_dim;
  std::vector<double> out(n * k);
  parallel_chunks(n, par, [&](std::size_t b, std::size_t e) {
    std::vector<double> w(dim);
    const StreamKey bkey = key.child(0xB1A5);
    for (std::size_t i = b; i < e; ++i) {
      l1.weights.fill(key.child(i), w);
      const double bi = bias.keyed(bkey, i);
      for (std::size_t s = 0; s < k; ++s) out[i * k + s] = numerics::pairwise_dot(w, xs[s]) + bi;
    }
  });
  return out;
}

[[nodiscard]] inline std::vector<double> nu1_sampler(const NetworkConfig& net, const std::vector<double>& x,
                                                     std::size_t n, StreamKey key, Parallelism par = {}) {
  return nu1_sampler_joint(net, {x}, n, key, par);
}

/// sigma_l for l = 2..L+1 at a single input.
[[nodiscard]] inline LimitLaw sigma_recursion(const NetworkConfig& net, const std::vector<double>& x,
                                              const RecursionOptions& opt) {
  net.validate();
  validate_inputs(net, {x});
  if (opt.n_mc < 2) throw ConfigError("sigma_recursion: N must be >= 2");
  LimitLaw law;
  law.inputs = 1;
  law.n_mc = opt.n_mc;
  law.bootstrap = opt.bootstrap;
  law.seed = opt.seed;
  const auto& phi = net.activation;
  std::vector<double> g(opt.n_mc);

  // Layer 2 over nu1.
  {
    LayerLimit out;
    out.layer = 2;
    out.alpha = net.layer(2).alpha;
    out.sigma_bias = net.layer(2).sigma_bias;
    const auto exact = limit_detail::exact_nu1(net, x);
    std::optional<double> cf;
    if (exact) cf = limit_detail::closed_form_integral(phi, *exact, out.alpha);
    if (cf) {
      out.integral = *cf;
      out.closed_form = true;
      limit_detail::finish_sigma(out, 0.0);
    } else {
      const auto y = nu1_sampler(net, x, opt.n_mc, domain_key(opt.seed, Domain::kNu1), opt.par);
      for (std::size_t i = 0; i < y.size(); ++i) g[i] = std::pow(std::abs(phi(y[i])), out.alpha);
      out.integral = limit_detail::mean_of(g);
      const double se =
          limit_detail::bootstrap_se(g, opt.bootstrap, domain_key(opt.seed, Domain::kBootstrap).child(2), opt.par);
      limit_detail::finish_sigma(out, se * se);
    }
    law.layers.push_back(out);
  }

  // Layers 3..L+1 over SaS(alpha_{l-1}, sigma_{l-1}).
  for (std::size_t l = 3; l <= net.output_layer(); ++l) {
    const LayerLimit& prev = law.layers.back();
    LayerLimit out;
    out.layer = l;
    out.alpha = net.layer(l).alpha;
    out.sigma_bias = net.layer(l).sigma_bias;
    const auto cf = limit_detail::closed_form_integral(phi, prev.params(), out.alpha);
    double var = 0.0;
    double slope = 0.0;  // dI / dsigma_{l-1}
    if (cf) {
      out.integral = *cf;
      out.closed_form = prev.closed_form;
      slope = prev.sigma > 0.0 ? phi.params()[0] * out.alpha * out.integral / prev.sigma : 0.0;
    } else {
      const auto z = sample_sas({prev.alpha, 1.0}, opt.n_mc, domain_key(opt.seed, Domain::kRecursion).child(l));
      auto integral_at = [&](double sigma) {
        std::vector<double> h(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) h[i] = std::pow(std::abs(phi(sigma * z[i])), out.alpha);
        return h;
      };
      g = integral_at(prev.sigma);
      out.integral = limit_detail::mean_of(g);
      const double se =
          limit_detail::bootstrap_se(g, opt.bootstrap, domain_key(opt.seed, Domain::kBootstrap).child(l), opt.par);
      var = se * se;
      if (prev.sigma_se > 0.0) {
        // Common random numbers: the same z at sigma (1 +- h).
        const double h = 1e-3;
        const double up = limit_detail::mean_of(integral_at(prev.sigma * (1.0 + h)));
        const double dn = limit_detail::mean_of(integral_at(prev.sigma * (1.0 - h)));
        slope = (up - dn) / (2.0 * h * prev.sigma);
      }
    }
    var += slope * slope * prev.sigma_se * prev.sigma_se;
    limit_detail::finish_sigma(out, var);
    law.layers.push_back(out);
  }
  return law;
}

// ---------------------------------------------------------------------------
// Multivariate limits

struct ClusterResult {
  SpectralMeasure measure;
  /// Bound on |CF(t) - CF_reduced(t)| / |t|^alpha.
  double cf_bound = 0.0;
};

/// Spherical k-means on canonical hemispheres (s and -s are the same point
/// of a symmetric measure). Cluster weight is the member total; the center
/// is the normalized weighted mean direction.
[[nodiscard]] inline ClusterResult cluster_measure(const SpectralMeasure& gamma, std::size_t budget, StreamKey key,
                                                   int iterations = 25) {
  if (budget < 1) throw ConfigError("cluster_measure: budget must be >= 1");
  const std::size_t k = gamma.dim;
  const std::size_t na = gamma.atoms.size();
  ClusterResult res;
  res.measure.dim = k;
  res.measure.alpha = gamma.alpha;
  if (na <= budget) {
    res.measure.atoms = gamma.atoms;
    return res;
  }
  // Canonical representatives.
  std::vector<double> pts(na * k);
  for (std::size_t a = 0; a < na; ++a) {
    const auto& s = gamma.atoms[a].s;
    double sign = 1.0;
    for (double v : s) {
      if (v != 0.0) {
        sign = v > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (std::size_t i = 0; i < k; ++i) pts[a * k + i] = sign * s[i];
  }
  auto dist2 = [&](const double* p, const double* c) {
    double d = 0.0;
    for (std::size_t i = 0; i < k; ++i) d += (p[i] - c[i]) * (p[i] - c[i]);
    return d;
  };
  // Weighted k-means++ seeding.
  CounterStream cs(key);
  std::vector<double> centers;
  centers.reserve(budget * k);
  std::vector<double> best(na, std::numeric_limits<double>::infinity());
  {
    double total = gamma.total_mass();
    double r = cs.uniform() * total;
    std::size_t first = 0;
    for (; first + 1 < na && r > gamma.atoms[first].w; ++first) r -= gamma.atoms[first].w;
    centers.insert(centers.end(), pts.begin() + first * k, pts.begin() + (first + 1) * k);
  }
  while (centers.size() / k < budget) {
    const double* c = centers.data() + centers.size() - k;
    double total = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
      best[a] = std::min(best[a], dist2(&pts[a * k], c));
      total += gamma.atoms[a].w * best[a];
    }
    if (total <= 0.0) break;
    double r = cs.uniform() * total;
    std::size_t pick = 0;
    for (; pick + 1 < na && r > gamma.atoms[pick].w * best[pick]; ++pick) r -= gamma.atoms[pick].w * best[pick];
    centers.insert(centers.end(), pts.begin() + pick * k, pts.begin() + (pick + 1) * k);
  }
  const std::size_t nc = centers.size() / k;
  std::vector<std::size_t> assign(na, 0);
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (std::size_t a = 0; a < na; ++a) {
      std::size_t arg = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < nc; ++c) {
        const double d = dist2(&pts[a * k], &centers[c * k]);
        if (d < bd) {
          bd = d;
          arg = c;
        }
      }
      changed = changed || assign[a] != arg || it == 0;
      assign[a] = arg;
    }
    if (!changed) break;
    std::vector<double> acc(nc * k, 0.0);
    for (std::size_t a = 0; a < na; ++a) {
      for (std::size_t i = 0; i < k; ++i) acc[assign[a] * k + i] += gamma.atoms[a].w * pts[a * k + i];
    }
    for (std::size_t c = 0; c < nc; ++c) {
      double nrm = 0.0;
      for (std::size_t i = 0; i < k; ++i) nrm += acc[c * k + i] * acc[c * k + i];
      nrm = std::sqrt(nrm);
      if (nrm > 0.0) {
        for (std::size_t i = 0; i < k; ++i) centers[c * k + i] = acc[c * k + i] / nrm;
      }
    }
  }
  std::vector<double> mass(nc, 0.0);
  for (std::size_t a = 0; a < na; ++a) mass[assign[a]] += gamma.atoms[a].w;
  const double alpha = gamma.alpha;
  for (std::size_t a = 0; a < na; ++a) {
    const double d = std::sqrt(dist2(&pts[a * k], &centers[assign[a] * k]));
    // ||<t,s>|^a - |<t,c>|^a| <= |t|^a d^a (a <= 1) or a |t|^a d (a > 1).
    res.cf_bound += gamma.atoms[a].w * (alpha <= 1.0 ? std::pow(d, alpha) : alpha * d);
  }
  for (std::size_t c = 0; c < nc; ++c) {
    if (mass[c] <= 0.0) continue;
    std::vector<double> s(centers.begin() + c * k, centers.begin() + (c + 1) * k);
    double nrm = 0.0;
    for (double v : s) nrm += v * v;
    nrm = std::sqrt(nrm);
    for (double& v : s) v /= nrm;
    res.measure.atoms.push_back({std::move(s), mass[c]});
  }
  return res;
}

/// Gamma_l or M_l for every layer l >= 2 at k inputs. Stable layers get a
/// spectral measure, alpha = 2 layers a covariance.
[[nodiscard]] inline LimitLaw joint_recursion(const NetworkConfig& net, const std::vector<std::vector<double>>& xs,
                                              const RecursionOptions& opt) {
  net.validate();
  validate_inputs(net, xs);
  if (opt.n_mc < 2) throw ConfigError("joint recursion: N must be >= 2");
  const std::size_t k = xs.size();
  const std::size_t n = opt.n_mc;
  const auto& phi = net.activation;
  LimitLaw law;
  law.inputs = k;
  law.n_mc = n;
  law.bootstrap = opt.bootstrap;
  law.seed = opt.seed;

  std::vector<double> y = nu1_sampler_joint(net, xs, n, domain_key(opt.seed, Domain::kNu1), opt.par);
  std::vector<double> f(n * k);
  for (std::size_t l = 2; l <= net.output_layer(); ++l) {
    if (l >= 3) {
      const LayerLimit& prev = law.layers.back();
      const StreamKey key = domain_key(opt.seed, Domain::kRecursion).child({l, 0x501});
      if (prev.cov) {
        y = prev.cov->sample(n, key);
      } else {
        const auto reduced = cluster_measure(*prev.gamma, opt.atoms_budget, key.child(1));
        y = sample_multivariate_sas(reduced.measure, prev.alpha, n, key);
      }
    }
    for (std::size_t i = 0; i < n * k; ++i) f[i] = phi(y[i]);

    LayerLimit out;
    out.layer = l;
    out.alpha = net.layer(l).alpha;
    out.sigma_bias = net.layer(l).sigma_bias;
    const double alpha = out.alpha;
    const double ca = c_alpha(alpha);
    std::vector<double> norm_pow(n);
    for (std::size_t r = 0; r < n; ++r) {
      double n2 = 0.0;
      for (std::size_t s = 0; s < k; ++s) n2 += f[r * k + s] * f[r * k + s];
      norm_pow[r] = std::pow(std::sqrt(n2), alpha);
    }
    out.integral = limit_detail::mean_of(norm_pow);
    const double se =
        limit_detail::bootstrap_se(norm_pow, opt.bootstrap, domain_key(opt.seed, Domain::kBootstrap).child({l, 7}), opt.par);
    out.integral_se = se;

    if (alpha < 2.0) {
      SpectralMeasure g;
      g.dim = k;
      g.alpha = alpha;
      if (out.sigma_bias > 0.0) {
        const double rk = std::sqrt(static_cast<double>(k));
        g.atoms.push_back({std::vector<double>(k, 1.0 / rk), std::pow(out.sigma_bias * rk, alpha)});
      }
      for (std::size_t r = 0; r < n; ++r) {
        if (norm_pow[r] == 0.0) continue;
        std::vector<double> s(f.begin() + static_cast<std::ptrdiff_t>(r * k), f.begin() + static_cast<std::ptrdiff_t>((r + 1) * k));
        double nrm = 0.0;
        for (double v : s) nrm += v * v;
        nrm = std::sqrt(nrm);
        for (double& v : s) v /= nrm;
        g.atoms.push_back({std::move(s), ca * norm_pow[r] / static_cast<double>(n)});
      }
      if (opt.cluster_output) {
        auto reduced = cluster_measure(g, opt.atoms_budget, domain_key(opt.seed, Domain::kRecursion).child({l, 0xC1}));
        out.cluster_cf_bound = reduced.cf_bound;
        g = std::move(reduced.measure);
      }
      out.gamma = std::move(g);
    } else {
      Eigen::MatrixXd m = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k),
                                                    2.0 * out.sigma_bias * out.sigma_bias);
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a; b < k; ++b) {
          std::vector<double> prod(n);
          for (std::size_t r = 0; r < n; ++r) prod[r] = f[r * k + a] * f[r * k + b];
          const double e = 2.0 * limit_detail::mean_of(prod);
          m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += e;
          if (a != b) m(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) += e;
        }
      }
      GaussianCov cov{m, false};
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
      const double lo = es.eigenvalues().minCoeff();
      if (lo < -1e-10) {
        std::ostringstream os;
        os << "covariance at layer " << l << " is not positive semidefinite (smallest eigenvalue " << lo << ")";
        throw NumericError(os.str());
      }
      if (lo < 0.0) {
        const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
        cov.matrix = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
        cov.matrix = 0.5 * (cov.matrix + cov.matrix.transpose()).eval();
        cov.psd_projected = true;
      }
      out.cov = std::move(cov);
    }
    // Diagonal summary: the scale of coordinate 1 when k = 1.
    limit_detail::finish_sigma(out, se * se);
    if (k > 1) {
      out.sigma = 0.0;
      out.sigma_se = 0.0;
    }
    law.layers.push_back(std::move(out));
  }
  return law;
}

/// Joint recursion restricted to networks whose layers l >= 2 are all stable.
[[nodiscard]] inline LimitLaw spectral_recursion(const NetworkConfig& net, const std::vector<std::vector<double>>& xs,
                                                 const RecursionOptions& opt) {
  for (std::size_t l = 2; l <= net.output_layer(); ++l) {
    if (net.layer(l).alpha >= 2.0) {
      throw ConfigError("spectral_recursion: layer " + std::to_string(l) + " has alpha = 2; use gaussian_recursion");
    }
  }
  return joint_recursion(net, xs, opt);
}

/// Joint recursion restricted to networks whose layers l >= 2 all have alpha = 2.
[[nodiscard]] inline LimitLaw gaussian_recursion(const NetworkConfig& net, const std::vector<std::vector<double>>& xs,
                                                 const RecursionOptions& opt) {
  for (std::size_t l = 2; l <= net.output_layer(); ++l) {
    if (net.layer(l).alpha < 2.0) {
      throw ConfigError("gaussian_recursion: layer " + std::to_string(l) + " is stable; use spectral_recursion");
    }
  }
  return joint_recursion(net, xs, opt);
}

/// exp(-|sigma_l t|^alpha_l).
[[nodiscard]] inline double predicted_cf(const LimitLaw& law, std::size_t layer, double t) {
  const auto& l = law.at(layer);
  if (law.inputs != 1) throw ConfigError("predicted_cf: univariate evaluation of a multi-input law");
  return cf_sas(l.params(), t);
}

/// Joint CF at t in R^k.
[[nodiscard]] inline double predicted_cf(const LimitLaw& law, std::size_t layer, std::span<const double> t) {
  const auto& l = law.at(layer);
  if (t.size() != law.inputs) throw ConfigError("predicted_cf: t has the wrong dimension");
  if (l.gamma) return cf_multivariate_sas(*l.gamma, l.alpha, t);
  if (l.cov) return l.cov->cf(t);
  return cf_sas(l.params(), t[0]);
}

/// CF of the product law over a node set: prod_i exp(-|sigma t_i|^alpha).
[[nodiscard]] inline double predicted_cf_nodes(const LimitLaw& law, std::size_t layer, std::span<const double> t) {
  double v = 1.0;
  for (double ti : t) v *= predicted_cf(law, layer, ti);
  return v;
}

}  // namespace stable_width
