#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "io.hpp"
#include "limit_theory.hpp"
#include "mlp.hpp"
#include "numerics.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace stable_width {

struct Ecf {
  std::vector<double> re;
  std::vector<double> im;
};

namespace stats_detail {
inline void check_samples(std::span<const double> x, std::size_t min_n, const char* what) {
  if (x.size() < min_n) throw ConfigError(std::string(what) + ": need at least " + std::to_string(min_n) + " samples");
  for (double v : x) {
    if (std::isnan(v)) throw NumericError(std::string(what) + ": NaN in samples");
  }
}
}  // namespace stats_detail

/// Empirical CF: mean cos(tX) and mean sin(tX) at every grid point.
[[nodiscard]] inline Ecf ecf(std::span<const double> x, std::span<const double> t_grid, Parallelism par = {}) {
  stats_detail::check_samples(x, 2, "ecf");
  Ecf out;
  out.re.resize(t_grid.size());
  out.im.resize(t_grid.size());
  const double m = static_cast<double>(x.size());
  parallel_for(t_grid.size(), par, [&](std::size_t g) {
    std::vector<double> c(x.size()), s(x.size());
    const double t = t_grid[g];
    for (std::size_t i = 0; i < x.size(); ++i) {
      c[i] = std::cos(t * x[i]);
      s[i] = std::sin(t * x[i]);
    }
    out.re[g] = numerics::pairwise_sum(c) / m;
    out.im[g] = numerics::pairwise_sum(s) / m;
  });
  return out;
}

struct CfDistance {
  double sup = 0.0;
  double l2 = 0.0;        // root mean square over the grid
  double imag_max = 0.0;  // symmetry diagnostic
};

[[nodiscard]] inline CfDistance cf_distance(std::span<const double> x, const std::function<double(double)>& predicted,
                                            std::span<const double> t_grid, Parallelism par = {}) {
  if (t_grid.empty()) throw ConfigError("cf_distance: empty t grid");
  const Ecf e = ecf(x, t_grid, par);
  CfDistance d;
  double ss = 0.0;
  for (std::size_t g = 0; g < t_grid.size(); ++g) {
    const double diff = std::abs(e.re[g] - predicted(t_grid[g]));
    d.sup = std::max(d.sup, diff);
    ss += diff * diff;
    d.imag_max = std::max(d.imag_max, std::abs(e.im[g]));
  }
  d.l2 = std::sqrt(ss / static_cast<double>(t_grid.size()));
  return d;
}

/// `points` equispaced values on [-range/sigma, range/sigma] with the dead
/// zone |t| < 0.05/sigma removed.
[[nodiscard]] inline std::vector<double> default_grid(double sigma_pred, std::size_t points = 61, double range = 3.0) {
  if (!(sigma_pred > 0.0)) throw ConfigError("default_grid: predicted scale must be > 0");
  if (points < 2) throw ConfigError("default_grid: need at least 2 points");
  std::vector<double> g;
  const double lo = -range / sigma_pred;
  const double step = 2.0 * range / sigma_pred / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = lo + step * static_cast<double>(i);
    if (std::abs(t) >= 0.05 / sigma_pred) g.push_back(t);
  }
  return g;
}

struct HillResult {
  double alpha = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t k = 0;
};

/// alpha = k / sum_{i<=k} log(|X|_(i) / |X|_(k+1)), order statistics descending.
[[nodiscard]] inline HillResult hill_estimator(std::span<const double> x, std::size_t k) {
  stats_detail::check_samples(x, 3, "hill_estimator");
  if (k < 2 || k >= x.size()) throw ConfigError("hill_estimator: need 2 <= k < m");
  std::vector<double> mag(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mag[i] = std::abs(x[i]);
  std::nth_element(mag.begin(), mag.begin() + static_cast<std::ptrdiff_t>(k), mag.end(), std::greater<>());
  const double ref = mag[k];
  std::vector<double> logs(k);
  for (std::size_t i = 0; i < k; ++i) logs[i] = std::log(mag[i] / ref);
  std::sort(logs.begin(), logs.end());
  const double denom = numerics::pairwise_sum(logs);
  if (!(ref > 0.0) || !(denom > 0.0) || !std::isfinite(denom)) throw NumericError("hill_estimator: degenerate magnitudes");
  HillResult h;
  h.k = k;
  h.alpha = static_cast<double>(k) / denom;
  const double half = 1.96 / std::sqrt(static_cast<double>(k));
  h.lo = h.alpha * (1.0 - half);
  h.hi = h.alpha * (1.0 + half);
  return h;
}

[[nodiscard]] inline std::size_t hill_default_k(std::size_t m) {
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(m), 2.0 / 3.0))), 2,
                                 m > 3 ? m - 1 : 2);
}

/// Hill estimates at 9 log-spaced k in [m^{1/2}, m^{0.8}].
[[nodiscard]] inline std::vector<HillResult> hill_sensitivity(std::span<const double> x) {
  std::vector<HillResult> out;
  const double m = static_cast<double>(x.size());
  for (int i = 0; i < 9; ++i) {
    const double e = 0.5 + 0.3 * i / 8.0;
    const auto k = static_cast<std::size_t>(std::llround(std::pow(m, e)));
    if (k >= 2 && k < x.size()) out.push_back(hill_estimator(x, k));
  }
  return out;
}

struct ScaleEstimate {
  double sigma = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double se = 0.0;
  std::vector<double> t_used;
};

struct ScaleOptions {
  std::size_t bootstrap = 100;
  StreamKey key{0x5CA1E};
  double psi_lo = 0.6;
  double psi_hi = 0.95;
  std::size_t max_points = 12;
};

namespace stats_detail {
inline double slope_through_origin(std::span<const double> t, std::span<const double> psi, double alpha) {
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(psi[i] > 0.0)) throw NumericError("scale_estimator: grid too wide (ECF <= 0)");
    const double xv = std::pow(std::abs(t[i]), alpha);
    sxy += xv * -std::log(psi[i]);
    sxx += xv * xv;
  }
  return sxy / sxx;
}

inline double mean_cos(std::span<const double> x, double t) {
  std::vector<double> c(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) c[i] = std::cos(t * x[i]);
  return numerics::pairwise_sum(c) / static_cast<double>(x.size());
}
}  // namespace stats_detail

/// sigma from the regression of -log ECF(t) on |t|^alpha through the origin,
/// over t where the ECF lies in [0.6, 0.95]. The t range is anchored at
/// median |X| so the estimate is scale-equivariant.
[[nodiscard]] inline ScaleEstimate scale_estimator(std::span<const double> x, double alpha, const ScaleOptions& opt = {}) {
  stats_detail::check_samples(x, 2, "scale_estimator");
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("scale_estimator: alpha must lie in (0, 2]");
  std::vector<double> mag(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mag[i] = std::abs(x[i]);
  const auto mid = mag.begin() + static_cast<std::ptrdiff_t>(mag.size() / 2);
  std::nth_element(mag.begin(), mid, mag.end());
  double med = *mid;
  if (med == 0.0) med = *std::max_element(mag.begin(), mag.end());
  ScaleEstimate res;
  if (med == 0.0) return res;  // all samples zero
  if (!std::isfinite(med)) throw NumericError("scale_estimator: non-finite samples");

  // Pilot: 48 log-spaced t on [1e-3, 1e2] / median.
  std::vector<double> pilot_t, pilot_psi;
  for (int i = 0; i < 48; ++i) {
    const double t = std::pow(10.0, -3.0 + 5.0 * i / 47.0) / med;
    const double psi = stats_detail::mean_cos(x, t);
    if (psi >= opt.psi_lo && psi <= opt.psi_hi) {
      pilot_t.push_back(t);
      pilot_psi.push_back(psi);
    }
  }
  if (pilot_t.size() < 2) {
    // Refine between the last point above psi_hi and the first below psi_lo.
    pilot_t.clear();
    pilot_psi.clear();
    double a = 1e-3 / med, b = 1e2 / med;
    for (int i = 0; i < 48; ++i) {
      const double t = std::pow(10.0, -3.0 + 5.0 * i / 47.0) / med;
      const double psi = stats_detail::mean_cos(x, t);
      if (psi > opt.psi_hi) a = t;
      if (psi < opt.psi_lo) {
        b = t;
        break;
      }
    }
    for (int i = 0; i < 32; ++i) {
      const double t = a * std::pow(b / a, i / 31.0);
      const double psi = stats_detail::mean_cos(x, t);
      if (psi >= opt.psi_lo && psi <= opt.psi_hi) {
        pilot_t.push_back(t);
        pilot_psi.push_back(psi);
      }
    }
  }
  if (pilot_t.empty()) throw NumericError("scale_estimator: grid too wide (no t with ECF in [0.6, 0.95])");
  // Thin to at most max_points.
  std::vector<double> t, psi;
  const std::size_t stride = (pilot_t.size() + opt.max_points - 1) / opt.max_points;
  for (std::size_t i = 0; i < pilot_t.size(); i += stride) {
    t.push_back(pilot_t[i]);
    psi.push_back(pilot_psi[i]);
  }
  res.t_used = t;
  res.sigma = std::pow(stats_detail::slope_through_origin(t, psi, alpha), 1.0 / alpha);
  if (opt.bootstrap >= 2) {
    std::vector<double> sig(opt.bootstrap);
    std::vector<double> xb(x.size());
    for (std::size_t b = 0; b < opt.bootstrap; ++b) {
      CounterStream cs(opt.key.child(b));
      for (auto& v : xb) v = x[cs.below(x.size())];
      std::vector<double> pb(t.size());
      for (std::size_t i = 0; i < t.size(); ++i) pb[i] = stats_detail::mean_cos(xb, t[i]);
      double slope = 0.0;
      try {
        slope = stats_detail::slope_through_origin(t, pb, alpha);
      } catch (const NumericError&) {
        slope = std::numeric_limits<double>::quiet_NaN();
      }
      sig[b] = std::pow(slope, 1.0 / alpha);
    }
    std::erase_if(sig, [](double v) { return !std::isfinite(v); });
    if (sig.size() >= 2) {
      double mu = 0.0;
      for (double v : sig) mu += v;
      mu /= static_cast<double>(sig.size());
      double ss = 0.0;
      for (double v : sig) ss += (v - mu) * (v - mu);
      res.se = std::sqrt(ss / static_cast<double>(sig.size() - 1));
    }
  }
  res.lo = res.sigma - 1.96 * res.se;
  res.hi = res.sigma + 1.96 * res.se;
  return res;
}

namespace stats_detail {
/// E[g, r] = exp(i t_g x_r), G x m.
inline Eigen::MatrixXcd phase_matrix(std::span<const double> x, std::span<const double> t) {
  Eigen::MatrixXcd e(static_cast<Eigen::Index>(t.size()), static_cast<Eigen::Index>(x.size()));
  for (std::size_t r = 0; r < x.size(); ++r) {
    for (std::size_t g = 0; g < t.size(); ++g) {
      const double a = t[g] * x[r];
      e(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(r)) = {std::cos(a), std::sin(a)};
    }
  }
  return e;
}
}  // namespace stats_detail

/// Complex joint ECF of pairs (x_r, y_r) on t1 x t2: J[a, b].
[[nodiscard]] inline Eigen::MatrixXcd joint_ecf(std::span<const double> x, std::span<const double> y,
                                                std::span<const double> t1, std::span<const double> t2) {
  if (x.size() != y.size()) throw ConfigError("joint_ecf: sample sizes differ");
  if (x.empty()) throw ConfigError("joint_ecf: need at least one pair");
  stats_detail::check_samples(x, 1, "joint_ecf");
  stats_detail::check_samples(y, 1, "joint_ecf");
  // Chunked so the phase matrices stay small.
  constexpr std::size_t kChunk = 4096;
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(t1.size()), static_cast<Eigen::Index>(t2.size()));
  for (std::size_t b = 0; b < x.size(); b += kChunk) {
    const std::size_t n = std::min(kChunk, x.size() - b);
    const auto ex = stats_detail::phase_matrix(x.subspan(b, n), t1);
    const auto ey = stats_detail::phase_matrix(y.subspan(b, n), t2);
    acc.noalias() += ex * ey.transpose();
  }
  return acc / static_cast<double>(x.size());
}

/// sup over the grid square of |ECF_joint(t1, t2) - ECF_x(t1) ECF_y(t2)|.
[[nodiscard]] inline double independence_score(std::span<const double> x, std::span<const double> y,
                                               std::span<const double> t_grid) {
  if (x.empty()) throw ConfigError("independence_score: m must be >= 1");
  if (t_grid.empty()) throw ConfigError("independence_score: empty t grid");
  const Eigen::MatrixXcd j = joint_ecf(x, y, t_grid, t_grid);
  const std::vector<double> zero{0.0};
  const Eigen::MatrixXcd mx = joint_ecf(x, y, t_grid, zero);
  const Eigen::MatrixXcd my = joint_ecf(x, y, zero, t_grid);
  double sup = 0.0;
  for (Eigen::Index a = 0; a < j.rows(); ++a) {
    for (Eigen::Index b = 0; b < j.cols(); ++b) sup = std::max(sup, std::abs(j(a, b) - mx(a, 0) * my(0, b)));
  }
  return sup;
}

struct JointCfDistance {
  double sup = 0.0;
  double imag_max = 0.0;
};

/// sup over t1 x t2 of |Re ECF(t1, t2) - predicted(t1, t2)| for row-major pairs.
[[nodiscard]] inline JointCfDistance joint_cf_distance(std::span<const double> pairs,
                                                       const std::function<double(double, double)>& predicted,
                                                       std::span<const double> t1, std::span<const double> t2) {
  if (pairs.size() % 2 != 0 || pairs.empty()) throw ConfigError("joint_cf_distance: expected row-major pairs");
  if (t1.empty() || t2.empty()) throw ConfigError("joint_cf_distance: empty t grid");
  const std::size_t m = pairs.size() / 2;
  std::vector<double> x(m), y(m);
  for (std::size_t r = 0; r < m; ++r) {
    x[r] = pairs[2 * r];
    y[r] = pairs[2 * r + 1];
  }
  const Eigen::MatrixXcd j = joint_ecf(x, y, t1, t2);
  JointCfDistance d;
  for (std::size_t a = 0; a < t1.size(); ++a) {
    for (std::size_t b = 0; b < t2.size(); ++b) {
      const auto v = j(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      d.sup = std::max(d.sup, std::abs(v.real() - predicted(t1[a], t2[b])));
      d.imag_max = std::max(d.imag_max, std::abs(v.imag()));
    }
  }
  return d;
}

struct KsResult {
  double d = 0.0;
  double p = 1.0;
};

/// Kolmogorov survival Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
[[nodiscard]] inline double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double s = 0.0;
  for (int j = 1; j <= 200; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 == 1 ? 1.0 : -1.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

/// Two-sample Kolmogorov-Smirnov statistic with the asymptotic p-value
/// (Stephens' small-sample correction).
[[nodiscard]] inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  stats_detail::check_samples(a, 1, "ks_two_sample");
  stats_detail::check_samples(b, 1, "ks_two_sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double sq = std::sqrt(ne);
  return {d, kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)};
}

// ---------------------------------------------------------------------------
// Convergence sweeps

struct WidthResult {
  std::size_t width = 0;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  CfDistance distance;
  std::vector<double> ecf;
  HillResult hill;
  std::vector<HillResult> hill_sensitivity;
  ScaleEstimate scale;
  std::optional<double> independence;
  std::optional<JointCfDistance> joint;
};

struct ConvergenceReport {
  std::size_t layer = 2;
  std::size_t inputs = 1;
  std::vector<double> t_grid;
  std::vector<double> predicted;
  double alpha_pred = 0.0;
  double sigma_pred = 0.0;
  double sigma_pred_se = 0.0;
  std::size_t replicates = 0;
  std::size_t nodes_per_replicate = 0;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
  std::optional<double> joint_tolerance;
  std::vector<WidthResult> widths;
  bool trend_checked = false;
  bool decreasing = true;
  bool within_tolerance = false;
  bool pass = false;

  void write_csv(std::ostream& os) const {
    os << "width,t,ecf,predicted,abs_diff\n";
    for (const auto& w : widths) {
      for (std::size_t g = 0; g < t_grid.size(); ++g) {
        os << w.width << ',' << io::format_real(t_grid[g]) << ',' << io::format_real(w.ecf[g]) << ','
           << io::format_real(predicted[g]) << ',' << io::format_real(std::abs(w.ecf[g] - predicted[g])) << '\n';
      }
    }
  }
};

inline void to_json(nlohmann::json& j, const HillResult& h) {
  j = nlohmann::json{{"alpha", h.alpha}, {"lo", h.lo}, {"hi", h.hi}, {"k", h.k}};
}

inline void to_json(nlohmann::json& j, const WidthResult& w) {
  j = nlohmann::json{{"width", w.width},
                     {"seed", w.seed},
                     {"samples", w.samples},
                     {"sup_distance", w.distance.sup},
                     {"l2_distance", w.distance.l2},
                     {"imag_max", w.distance.imag_max},
                     {"hill", w.hill},
                     {"hill_sensitivity", w.hill_sensitivity},
                     {"sigma_hat", w.scale.sigma},
                     {"sigma_hat_lo", w.scale.lo},
                     {"sigma_hat_hi", w.scale.hi}};
  if (w.independence) j["independence_score"] = *w.independence;
  if (w.joint) j["joint_sup_distance"] = w.joint->sup;
}

inline void to_json(nlohmann::json& j, const ConvergenceReport& r) {
  j = nlohmann::json{{"layer", r.layer},
                     {"inputs", r.inputs},
                     {"alpha_pred", r.alpha_pred},
                     {"sigma_pred", r.sigma_pred},
                     {"sigma_pred_se", r.sigma_pred_se},
                     {"replicates", r.replicates},
                     {"nodes_per_replicate", r.nodes_per_replicate},
                     {"seed", r.seed},
                     {"tolerance", r.tolerance},
                     {"widths", r.widths},
                     {"trend_checked", r.trend_checked},
                     {"decreasing", r.decreasing},
                     {"within_tolerance", r.within_tolerance},
                     {"pass", r.pass},
                     {"trend_note", "the decreasing-distance gate is a heuristic; weak convergence carries no rate"}};
  if (r.joint_tolerance) j["joint_tolerance"] = *r.joint_tolerance;
}

struct SweepOptions {
  std::size_t replicates = 1000;
  /// Nodes read per realization. Nodes of one realization are conditionally
  /// i.i.d. given the earlier layers; pooling them estimates the same
  /// marginal law at lower cost.
  std::size_t nodes_per_replicate = 1;
  std::optional<double> tolerance;
  std::optional<double> joint_tolerance;
  bool independence = false;
  std::size_t grid_points = 61;
  std::size_t joint_grid_points = 21;
  std::size_t scale_bootstrap = 100;
  std::uint64_t seed = 0;
  Parallelism par;
};

/// Per-width seed so sweep points use disjoint streams.
[[nodiscard]] inline std::uint64_t sweep_seed(std::uint64_t seed, std::size_t width) {
  return domain_key(seed, Domain::kSweep).child(width).value;
}

/// Simulates layer `layer` at every width (all hidden widths equal) and
/// compares with the predicted law. With two inputs the joint CF is also
/// checked against `joint_law` on a 2-d grid.
[[nodiscard]] inline ConvergenceReport convergence_sweep(const NetworkConfig& net,
                                                         const std::vector<std::vector<double>>& xs, std::size_t layer,
                                                         const std::vector<std::size_t>& widths,
                                                         const SweepOptions& opt, const LimitLaw& marginal_law,
                                                         const LimitLaw* joint_law = nullptr) {
  if (widths.empty()) throw ConfigError("convergence_sweep: empty width list");
  for (std::size_t i = 1; i < widths.size(); ++i) {
    if (widths[i] <= widths[i - 1]) throw ConfigError("convergence_sweep: widths must be strictly increasing");
  }
  if (opt.replicates < 1) throw ConfigError("convergence_sweep: m must be >= 1");
  if (opt.nodes_per_replicate < 1) throw ConfigError("convergence_sweep: nodes per replicate must be >= 1");
  if (opt.independence && opt.nodes_per_replicate < 2) {
    throw ConfigError("convergence_sweep: the independence score needs two nodes per replicate");
  }
  if (xs.size() > 2 || (xs.size() == 2 && !joint_law)) {
    throw ConfigError("convergence_sweep: supports one input, or two inputs with a joint law");
  }
  if (layer < 2 || layer > net.output_layer()) throw ConfigError("convergence_sweep: layer must be in [2, L+1]");
  const auto& pred = marginal_law.at(layer);
  ConvergenceReport rep;
  rep.layer = layer;
  rep.inputs = xs.size();
  rep.alpha_pred = pred.alpha;
  rep.sigma_pred = pred.sigma;
  rep.sigma_pred_se = pred.sigma_se;
  rep.replicates = opt.replicates;
  rep.nodes_per_replicate = opt.nodes_per_replicate;
  rep.seed = opt.seed;
  const double total = static_cast<double>(opt.replicates * opt.nodes_per_replicate);
  rep.tolerance = opt.tolerance.value_or(std::max(0.02, 5.0 / std::sqrt(total)));
  if (rep.tolerance < 0.0) throw ConfigError("convergence_sweep: tolerance must be >= 0");
  if (xs.size() == 2) rep.joint_tolerance = opt.joint_tolerance.value_or(std::max(0.03, 5.0 / std::sqrt(total)));
  rep.t_grid = default_grid(pred.sigma, opt.grid_points);
  for (double t : rep.t_grid) rep.predicted.push_back(cf_sas(pred.params(), t));
  const auto joint_grid = default_grid(pred.sigma, opt.joint_grid_points);

  std::vector<std::size_t> nodes(opt.nodes_per_replicate);
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = i;
  for (std::size_t w : widths) {
    WidthResult wr;
    wr.width = w;
    wr.seed = sweep_seed(opt.seed, w);
    const std::vector<std::size_t> ws(net.depth(), w);
    const auto batch = replicate_layer(net, xs, ws, {layer, nodes, opt.replicates, 0}, wr.seed, opt.par);
    const auto y = batch.pooled(0);
    wr.samples = y.size();
    const Ecf e = ecf(y, rep.t_grid, opt.par);
    wr.ecf = e.re;
    double ss = 0.0;
    for (std::size_t g = 0; g < rep.t_grid.size(); ++g) {
      const double d = std::abs(e.re[g] - rep.predicted[g]);
      wr.distance.sup = std::max(wr.distance.sup, d);
      wr.distance.imag_max = std::max(wr.distance.imag_max, std::abs(e.im[g]));
      ss += d * d;
    }
    wr.distance.l2 = std::sqrt(ss / static_cast<double>(rep.t_grid.size()));
    if (y.size() > 16) {
      try {
        wr.hill = hill_estimator(y, hill_default_k(y.size()));
        wr.hill_sensitivity = hill_sensitivity(y);
      } catch (const NumericError&) {
        // Degenerate magnitudes: leave the tail estimate empty.
      }
    }
    ScaleOptions so;
    so.bootstrap = opt.scale_bootstrap;
    so.key = domain_key(wr.seed, Domain::kBootstrap);
    wr.scale = scale_estimator(y, pred.alpha, so);
    if (opt.independence) {
      wr.independence = independence_score(batch.column(0, 0), batch.column(1, 0), rep.t_grid);
    }
    if (xs.size() == 2) {
      std::vector<double> pairs = batch.values;  // [replicate][node][input] == pooled pairs
      wr.joint = joint_cf_distance(
          pairs,
          [&](double a, double b) {
            const double t[2] = {a, b};
            return predicted_cf(*joint_law, layer, std::span<const double>(t, 2));
          },
          joint_grid, joint_grid);
    }
    rep.widths.push_back(std::move(wr));
  }
  const auto& last = rep.widths.back();
  rep.trend_checked = rep.widths.size() > 1;
  rep.decreasing = !rep.trend_checked || last.distance.sup < rep.widths.front().distance.sup;
  rep.within_tolerance = last.distance.sup < rep.tolerance;
  if (rep.joint_tolerance) rep.within_tolerance = rep.within_tolerance && last.joint->sup < *rep.joint_tolerance;
  rep.pass = rep.decreasing && rep.within_tolerance;
  return rep;
}

}  // namespace stable_width
