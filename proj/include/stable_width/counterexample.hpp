#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "activation.hpp"
#include "errors.hpp"
#include "heavy_tail.hpp"
#include "io.hpp"
#include "mlp.hpp"
#include "numerics.hpp"
#include "parallel.hpp"
#include "stats.hpp"

namespace stable_width {

/// ReLU network with Pareto(alpha) weights (L = 1 beyond 1), no biases and
/// input x = (1). Naive scaling n^{1/alpha} is not the right normalizer here.
struct CounterexampleConfig {
  double alpha = 1.5;
  std::vector<std::size_t> widths{1000, 10000, 100000};
  std::size_t replicates = 10000;
  std::uint64_t seed = 0;
  std::size_t scale_bootstrap = 100;
  Parallelism par;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 2.0)) throw ConfigError("counterexample: alpha must lie in (0, 2)");
    if (replicates < 1) throw ConfigError("counterexample: m must be >= 1");
    if (widths.empty()) throw ConfigError("counterexample: empty width list");
    for (std::size_t i = 0; i < widths.size(); ++i) {
      if (widths[i] < 2) throw ConfigError("counterexample: widths must be >= 2");
      if (i > 0 && widths[i] <= widths[i - 1]) throw ConfigError("counterexample: widths must be strictly increasing");
    }
  }

  [[nodiscard]] NetworkConfig network() const {
    NetworkConfig net;
    net.input_dim = 1;
    net.activation = Activation::relu();
    net.unguarded = true;
    net.layers = {{alpha, TailSpec::pareto(alpha), 0.0}, {alpha, TailSpec::pareto(alpha), 0.0}};
    return net;
  }
};

/// P(|W2 W1 1{W1 > 0}| > z) = z^{-alpha} (1 + alpha log z) / 2 for z >= 1.
[[nodiscard]] inline double product_tail(double z, double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("product_tail: alpha must lie in (0, 2)");
  if (!(z >= 1.0)) throw DomainError("product_tail: z must be >= 1");
  return 0.5 * std::pow(z, -alpha) * (1.0 + alpha * std::log(z));
}

/// inf{ x >= 1 : x^{-alpha} (1 + alpha log x) / 2 <= 1/n }.
[[nodiscard]] inline double a_hat_n(double alpha, double n) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("a_hat_n: alpha must lie in (0, 2)");
  if (!(n >= 2.0)) throw DomainError("a_hat_n: n must be >= 2");
  const double target = 1.0 / n;
  auto f = [&](double x) { return product_tail(x, alpha) - target; };
  if (f(1.0) <= 0.0) return 1.0;
  const double hi = numerics::bracket_up(f, 2.0, 1100, "a_hat_n");
  return numerics::bisect_down(f, std::max(1.0, hi / 2.0), hi, {1e-14, 400}, "a_hat_n");
}

struct DivergenceRow {
  std::size_t width = 0;
  std::string scaling_mode;  // "naive" or "corrected"
  double scale = 0.0;        // the normalizer used
  double median_abs = 0.0;
  ScaleEstimate sigma_hat;
};

struct DivergenceReport {
  double alpha = 1.5;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  std::vector<DivergenceRow> rows;
  double naive_growth = 0.0;        // sigma_hat(n_max) / sigma_hat(n_min), naive scaling
  double growth_bound = 0.0;        // 0.5 ((1 + a log a_hat(n_max)) / (1 + a log a_hat(n_min)))^{1/a}
  bool naive_monotone = false;      // sigma_hat and median strictly increasing
  double corrected_ratio = 0.0;     // sigma_hat(n_max) / sigma_hat(n_min), corrected scaling
  bool diverges = false;
  bool stabilizes = false;          // exploratory

  [[nodiscard]] bool pass() const { return diverges && stabilizes; }

  void write_csv(std::ostream& os) const {
    os << "width,scaling_mode,median_abs,sigma_hat\n";
    for (const auto& r : rows) {
      os << r.width << ',' << r.scaling_mode << ',' << io::format_real(r.median_abs) << ','
         << io::format_real(r.sigma_hat.sigma) << '\n';
    }
  }
};

inline void to_json(nlohmann::json& j, const DivergenceRow& r) {
  j = nlohmann::json{{"width", r.width},           {"scaling_mode", r.scaling_mode},  {"scale", r.scale},
                     {"median_abs", r.median_abs}, {"sigma_hat", r.sigma_hat.sigma}, {"sigma_hat_lo", r.sigma_hat.lo},
                     {"sigma_hat_hi", r.sigma_hat.hi}};
}

inline void to_json(nlohmann::json& j, const DivergenceReport& r) {
  j = nlohmann::json{{"alpha", r.alpha},
                     {"replicates", r.replicates},
                     {"seed", r.seed},
                     {"rows", r.rows},
                     {"naive_growth", r.naive_growth},
                     {"growth_bound", r.growth_bound},
                     {"naive_monotone", r.naive_monotone},
                     {"corrected_ratio", r.corrected_ratio},
                     {"diverges", r.diverges},
                     {"stabilizes", r.stabilizes},
                     {"stabilization_note", "exploratory: convergence under the corrected scaling is not established"},
                     {"pass", r.pass()}};
}

namespace counterexample_detail {
inline double median_abs(std::vector<double> v) {
  for (double& x : v) x = std::abs(x);
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}
}  // namespace counterexample_detail

/// Simulates Y^(2) under naive n^{1/alpha} scaling at every width, then
/// rescales the same draws by n^{1/alpha} / a_hat_n.
[[nodiscard]] inline DivergenceReport divergence_experiment(const CounterexampleConfig& cfg) {
  cfg.validate();
  const NetworkConfig net = cfg.network();
  DivergenceReport rep;
  rep.alpha = cfg.alpha;
  rep.replicates = cfg.replicates;
  rep.seed = cfg.seed;
  std::vector<DivergenceRow> naive, corrected;
  for (std::size_t w : cfg.widths) {
    const std::uint64_t seed = sweep_seed(cfg.seed, w);
    const ScalingPlan plan = ScalingPlan::from_config(net, {w});
    const auto batch = replicate_layer(net, {{1.0}}, {w}, {2, {0}, cfg.replicates, 0}, seed, cfg.par, &plan);
    if (batch.values.size() < 2) throw ConfigError("counterexample: need at least 2 replicates");
    const double naive_scale = plan.a[2];
    const double hat = a_hat_n(cfg.alpha, static_cast<double>(w));
    std::vector<double> y = batch.values;
    for (double v : y) {
      if (std::isnan(v)) throw NumericError("counterexample: NaN pre-activation");
    }
    ScaleOptions so;
    so.bootstrap = cfg.scale_bootstrap;
    so.key = domain_key(seed, Domain::kBootstrap);
    DivergenceRow rn{w, "naive", naive_scale, counterexample_detail::median_abs(y), scale_estimator(y, cfg.alpha, so)};
    const double factor = naive_scale / hat;
    for (double& v : y) v *= factor;
    DivergenceRow rc{w, "corrected", hat, counterexample_detail::median_abs(y), scale_estimator(y, cfg.alpha, so)};
    naive.push_back(rn);
    corrected.push_back(rc);
  }
  for (std::size_t i = 0; i < naive.size(); ++i) {
    rep.rows.push_back(naive[i]);
    rep.rows.push_back(corrected[i]);
  }
  rep.naive_monotone = true;
  for (std::size_t i = 1; i < naive.size(); ++i) {
    rep.naive_monotone = rep.naive_monotone && naive[i].sigma_hat.sigma > naive[i - 1].sigma_hat.sigma &&
                         naive[i].median_abs > naive[i - 1].median_abs;
  }
  const double a_lo = a_hat_n(cfg.alpha, static_cast<double>(cfg.widths.front()));
  const double a_hi = a_hat_n(cfg.alpha, static_cast<double>(cfg.widths.back()));
  rep.growth_bound =
      0.5 * std::pow((1.0 + cfg.alpha * std::log(a_hi)) / (1.0 + cfg.alpha * std::log(a_lo)), 1.0 / cfg.alpha);
  rep.naive_growth = naive.back().sigma_hat.sigma / naive.front().sigma_hat.sigma;
  rep.corrected_ratio = corrected.back().sigma_hat.sigma / corrected.front().sigma_hat.sigma;
  rep.diverges = naive.size() > 1 && rep.naive_monotone && rep.naive_growth >= rep.growth_bound;
  rep.stabilizes = corrected.size() > 1 && rep.corrected_ratio >= 0.7 && rep.corrected_ratio <= 1.4;
  return rep;
}

}  // namespace stable_width
