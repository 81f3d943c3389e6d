#pragma once

// Regularly varying symmetric weight laws P(|W| > t) = t^-alpha L(t), their
// finite-variance counterparts, and the per-layer scaling sequence a_n.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "numerics.hpp"
#include "rng.hpp"
#include "stable_dist.hpp"

namespace stable_width {

// ---------------------------------------------------------------------------
// Slowly varying functions

enum class SvKind { kConstant, kLogPower, kIteratedLog, kTable };

/// L(t). Shipped families:
///   constant     [c]           L = c
///   log_power    [beta, gamma] L = (1 + beta log+ t)^gamma
///   iterated_log [gamma]       L = (1 + log(1 + log+ t))^gamma
///   table        [t0, L0, t1, L1, ...] log-log interpolation, flat outside
class SlowlyVarying {
 public:
  SlowlyVarying() = default;
  SlowlyVarying(SvKind kind, std::vector<double> params) : kind_(kind), params_(std::move(params)) { check(); }

  static SlowlyVarying constant(double c = 1.0) { return {SvKind::kConstant, {c}}; }
  static SlowlyVarying log_power(double beta, double gamma) { return {SvKind::kLogPower, {beta, gamma}}; }
  static SlowlyVarying iterated_log(double gamma) { return {SvKind::kIteratedLog, {gamma}}; }

  [[nodiscard]] SvKind kind() const noexcept { return kind_; }
  [[nodiscard]] const std::vector<double>& params() const noexcept { return params_; }
  [[nodiscard]] bool is_constant() const noexcept { return kind_ == SvKind::kConstant; }

  [[nodiscard]] double operator()(double t) const noexcept {
    const double lp = t > 1.0 ? std::log(t) : 0.0;
    switch (kind_) {
      case SvKind::kConstant:
        return params_[0];
      case SvKind::kLogPower:
        return std::pow(1.0 + params_[0] * lp, params_[1]);
      case SvKind::kIteratedLog:
        return std::pow(1.0 + std::log1p(lp), params_[0]);
      case SvKind::kTable:
        return table_value(t);
    }
    return 1.0;
  }

  /// d log L / d log t.
  [[nodiscard]] double elasticity(double t) const noexcept {
    if (t <= 1.0 && kind_ != SvKind::kTable) return 0.0;
    const double lp = std::log(t);
    switch (kind_) {
      case SvKind::kConstant:
        return 0.0;
      case SvKind::kLogPower:
        return params_[1] * params_[0] / (1.0 + params_[0] * lp);
      case SvKind::kIteratedLog:
        return params_[0] / ((1.0 + std::log1p(lp)) * (1.0 + lp));
      case SvKind::kTable:
        return table_slope(t);
    }
    return 0.0;
  }

  [[nodiscard]] static std::string kind_name(SvKind k) {
    switch (k) {
      case SvKind::kConstant: return "constant";
      case SvKind::kLogPower: return "log_power";
      case SvKind::kIteratedLog: return "iterated_log";
      case SvKind::kTable: return "table";
    }
    return "?";
  }

  [[nodiscard]] static SvKind parse_kind(const std::string& s) {
    if (s == "constant") return SvKind::kConstant;
    if (s == "log_power") return SvKind::kLogPower;
    if (s == "iterated_log") return SvKind::kIteratedLog;
    if (s == "table") return SvKind::kTable;
    throw ConfigError("slowly varying: unknown kind '" + s + "'");
  }

 private:
  void check() const {
    auto need = [&](std::size_t n) {
      if (params_.size() != n) {
        throw ConfigError("slowly varying '" + kind_name(kind_) + "' expects " + std::to_string(n) + " parameters");
      }
    };
    switch (kind_) {
      case SvKind::kConstant:
        need(1);
        if (!(params_[0] > 0.0)) throw ConfigError("slowly varying constant must be > 0");
        break;
      case SvKind::kLogPower:
        need(2);
        if (!(params_[0] >= 0.0)) throw ConfigError("log_power: beta must be >= 0");
        break;
      case SvKind::kIteratedLog:
        need(1);
        break;
      case SvKind::kTable:
        if (params_.size() < 4 || params_.size() % 2 != 0) {
          throw ConfigError("table: expects an even number (>= 4) of parameters t0, L0, t1, L1, ...");
        }
        for (std::size_t i = 0; i < params_.size(); i += 2) {
          if (!(params_[i] > 0.0) || !(params_[i + 1] > 0.0)) throw ConfigError("table: t and L must be > 0");
          if (i > 0 && !(params_[i] > params_[i - 2])) throw ConfigError("table: t values must increase");
        }
        break;
    }
  }

  [[nodiscard]] double table_value(double t) const noexcept {
    const std::size_t n = params_.size() / 2;
    if (t <= params_[0]) return params_[1];
    if (t >= params_[2 * (n - 1)]) return params_[2 * n - 1];
    std::size_t i = 0;
    while (params_[2 * (i + 1)] < t) ++i;
    const double x0 = std::log(params_[2 * i]), x1 = std::log(params_[2 * i + 2]);
    const double y0 = std::log(params_[2 * i + 1]), y1 = std::log(params_[2 * i + 3]);
    return std::exp(y0 + (y1 - y0) * (std::log(t) - x0) / (x1 - x0));
  }

  [[nodiscard]] double table_slope(double t) const noexcept {
    const std::size_t n = params_.size() / 2;
    if (t <= params_[0] || t >= params_[2 * (n - 1)]) return 0.0;
    std::size_t i = 0;
    while (params_[2 * (i + 1)] < t) ++i;
    return (std::log(params_[2 * i + 3]) - std::log(params_[2 * i + 1])) /
           (std::log(params_[2 * i + 2]) - std::log(params_[2 * i]));
  }

  SvKind kind_ = SvKind::kConstant;
  std::vector<double> params_{1.0};
};

// ---------------------------------------------------------------------------
// Tail specifications

enum class TailMode {
  kHeavy,   // P(|W| > t) = t^-alpha L(t) beyond t0, magnitudes supported on [t0, inf)
  kFinite,  // named square-integrable law, alpha = 2
  kStable,  // exact SaS(alpha, scale) weights, alpha < 2
};

enum class FiniteLaw { kUniform, kGaussian };

class TailSpec {
 public:
  TailSpec() : TailSpec(heavy(1.5, SlowlyVarying::constant())) {}

  /// Heavy-tailed law with tail t^-alpha L(t). Validates monotonicity of the
  /// tail on 10^3 log-spaced points of [t0, 1e6].
  static TailSpec heavy(double alpha, SlowlyVarying sv) {
    TailSpec s(TailMode::kHeavy, alpha);
    s.sv_ = std::move(sv);
    s.prepare();
    return s;
  }

  /// Pareto tail (L = c) from t0 = c^{1/alpha}.
  static TailSpec pareto(double alpha, double c = 1.0) { return heavy(alpha, SlowlyVarying::constant(c)); }

  /// Uniform on [-a, a]: variance a^2/3.
  static TailSpec uniform(double a = 1.0) {
    TailSpec s(TailMode::kFinite, 2.0);
    s.finite_law_ = FiniteLaw::kUniform;
    s.finite_scale_ = a;
    s.prepare();
    return s;
  }

  /// Centered Gaussian with standard deviation sd.
  static TailSpec gaussian(double sd = 1.0) {
    TailSpec s(TailMode::kFinite, 2.0);
    s.finite_law_ = FiniteLaw::kGaussian;
    s.finite_scale_ = sd;
    s.prepare();
    return s;
  }

  /// Exact SaS(alpha, scale) weights. The tail is regularly varying with the
  /// constant L = scale^alpha / c_alpha; tail_prob reports that asymptotic
  /// form since stable CDFs are not evaluated anywhere in the library.
  static TailSpec stable(double alpha, double scale = 1.0) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw ConfigError("stable weights require alpha in (0, 2)");
    if (!(scale > 0.0)) throw ConfigError("stable weights require scale > 0");
    TailSpec s(TailMode::kStable, alpha);
    s.finite_scale_ = scale;
    s.sv_ = SlowlyVarying::constant(std::pow(scale, alpha) / c_alpha(alpha));
    s.prepare();
    return s;
  }

  [[nodiscard]] double alpha() const noexcept { return alpha_; }
  [[nodiscard]] TailMode mode() const noexcept { return mode_; }
  [[nodiscard]] const SlowlyVarying& sv() const noexcept { return sv_; }
  [[nodiscard]] FiniteLaw finite_law() const noexcept { return finite_law_; }
  /// Uniform half-width, Gaussian sd, or stable scale.
  [[nodiscard]] double scale() const noexcept { return finite_scale_; }
  [[nodiscard]] double t0() const noexcept { return t0_; }

  /// Var(W) for finite-variance laws.
  [[nodiscard]] double variance() const {
    if (mode_ != TailMode::kFinite) throw DomainError("variance: only finite-variance laws have one");
    return finite_law_ == FiniteLaw::kUniform ? finite_scale_ * finite_scale_ / 3.0 : finite_scale_ * finite_scale_;
  }

  /// P(|W| > t).
  [[nodiscard]] double tail_prob(double t) const {
    if (t < 0.0) throw DomainError("tail_prob: t must be >= 0");
    if (mode_ == TailMode::kFinite) {
      if (finite_law_ == FiniteLaw::kUniform) return std::max(0.0, 1.0 - t / finite_scale_);
      return std::erfc(t / (finite_scale_ * std::numbers::sqrt2));
    }
    if (t <= t0_) return 1.0;
    return std::min(1.0, regular_part(t));
  }

  /// t^-alpha L(t), without the cap at 1.
  [[nodiscard]] double regular_part(double t) const noexcept { return std::pow(t, -alpha_) * sv_(t); }

  /// L~(x) = integral over [0, x] of y P(|W| > y) dy.
  [[nodiscard]] double l_tilde(double x) const {
    if (x < 0.0) throw DomainError("l_tilde: x must be >= 0");
    if (x == 0.0) return 0.0;
    if (mode_ == TailMode::kFinite) {
      const double hi = finite_law_ == FiniteLaw::kUniform ? std::min(x, finite_scale_) : std::min(x, 40.0 * finite_scale_);
      return numerics::integrate([this](double y) { return y * tail_prob(y); }, 0.0, hi, 1e-12, "l_tilde");
    }
    if (x <= t0_) return 0.5 * x * x;
    if (sv_.is_constant() && alpha_ == 2.0) return 0.5 * t0_ * t0_ + sv_(1.0) * std::log(x / t0_);
    // y P(|W|>y) dy = e^{(2-alpha)s} L(e^s) ds with y = e^s.
    const double tail = numerics::integrate(
        [this](double s) { return std::exp((2.0 - alpha_) * s) * sv_(std::exp(s)); }, std::log(t0_), std::log(x), 1e-12,
        "l_tilde");
    return 0.5 * t0_ * t0_ + tail;
  }

  /// L0 = L for alpha < 2 and L~ for alpha = 2.
  [[nodiscard]] double l0(double t) const { return alpha_ < 2.0 ? sv_(t) : l_tilde(t); }

  /// t^-alpha L0(t).
  [[nodiscard]] double g0(double t) const { return std::pow(t, -alpha_) * l0(t); }

  /// a_n = inf{ t > 0 : t^-alpha L0(t) <= 1/n }.
  [[nodiscard]] double a_n(double n) const {
    if (!(n >= 1.0)) throw ConfigError("a_n: n must be >= 1");
    const double target = 1.0 / n;
    if (alpha_ < 2.0) {
      if (sv_.is_constant()) return std::pow(sv_(1.0) * n, 1.0 / alpha_);
      if (n == 1.0) return t0_;
      auto f = [&](double t) { return regular_part(t) - target; };
      double hi = numerics::bracket_up(f, std::max(1.0, t0_), 1100, "a_n");
      const double lo = std::max(t0_, hi / 2.0);
      if (lo >= hi) return hi;
      return numerics::bisect_down(f, lo, hi, {}, "a_n");
    }
    // alpha = 2: t^-2 L~(t) decreases from P(|W|>0)/2 = 1/2 at 0+.
    if (n <= 2.0) {
      throw NumericError("a_n: degenerate scaling (a_n = 0) for alpha = 2 and n <= 2");
    }
    auto f = [&](double t) { return g0(t) - target; };
    double lo = 1.0;
    for (int i = 0; i < 2000 && f(lo) <= 0.0; ++i) lo /= 2.0;
    const double hi = numerics::bracket_up(f, std::max(lo * 2.0, 1.0), 1100, "a_n");
    return numerics::bisect_down(f, lo, hi, {}, "a_n");
  }

  /// b_n = n a_n^-alpha L0(a_n); tends to 1.
  [[nodiscard]] double b_n(double n) const { return n * g0(a_n(n)); }

  /// |W| for a uniform u in (0,1): the solution of P(|W| > t) = u.
  [[nodiscard]] double invert_tail(double u) const {
    if (sv_.is_constant()) return std::exp((log_c_ - std::log(u)) * inv_alpha_);
    return invert_general(u);
  }

  /// Draw j of the keyed stream `key`. Pure function of (key, j).
  [[nodiscard]] double keyed(StreamKey key, std::uint64_t j) const {
    switch (mode_) {
      case TailMode::kHeavy: {
        const std::uint64_t b = key.bits(j);
        return sign_from_top_bit(b) * invert_tail(to_open_unit_low(b));
      }
      case TailMode::kFinite:
        if (finite_law_ == FiniteLaw::kUniform) return finite_scale_ * (2.0 * to_open_unit(key.bits(j)) - 1.0);
        return finite_scale_ * std::sqrt(-2.0 * std::log(to_open_unit(key.bits(2 * j + 1)))) *
               std::cos(2.0 * std::numbers::pi * to_open_unit(key.bits(2 * j)));
      case TailMode::kStable:
        return stable_.keyed(key, j);
    }
    return 0.0;
  }

  /// out[i] = keyed(key, i) with the dispatch hoisted out of the loop.
  void fill(StreamKey key, std::span<double> out) const {
    const std::size_t n = out.size();
    if (mode_ == TailMode::kHeavy && sv_.is_constant()) {
      // Same arithmetic as keyed(), split into passes that pipeline better.
      constexpr std::size_t kBlock = 256;
      double u[kBlock];
      double sg[kBlock];
      for (std::size_t base = 0; base < n; base += kBlock) {
        const std::size_t m = std::min(kBlock, n - base);
        for (std::size_t j = 0; j < m; ++j) {
          const std::uint64_t b = key.bits(base + j);
          u[j] = to_open_unit_low(b);
          sg[j] = sign_from_top_bit(b);
        }
        for (std::size_t j = 0; j < m; ++j) u[j] = log_c_ - std::log(u[j]);
        for (std::size_t j = 0; j < m; ++j) out[base + j] = sg[j] * std::exp(u[j] * inv_alpha_);
      }
      return;
    }
    if (mode_ == TailMode::kFinite && finite_law_ == FiniteLaw::kUniform) {
      const double a = finite_scale_;
      for (std::size_t j = 0; j < n; ++j) out[j] = a * (2.0 * to_open_unit(key.bits(j)) - 1.0);
      return;
    }
    if (mode_ == TailMode::kStable) {
      stable_.fill(key, out);
      return;
    }
    for (std::size_t j = 0; j < n; ++j) out[j] = keyed(key, j);
  }

  [[nodiscard]] static std::string mode_name(TailMode m) {
    switch (m) {
      case TailMode::kHeavy: return "heavy";
      case TailMode::kFinite: return "finite";
      case TailMode::kStable: return "stable";
    }
    return "?";
  }

 private:
  TailSpec(TailMode mode, double alpha) : mode_(mode), alpha_(alpha) {}

  void prepare() {
    if (!(alpha_ > 0.0 && alpha_ <= 2.0)) {
      throw DomainError("tail spec: alpha must lie in (0, 2], got " + std::to_string(alpha_));
    }
    inv_alpha_ = 1.0 / alpha_;
    if (mode_ == TailMode::kFinite) {
      if (!(finite_scale_ > 0.0)) throw ConfigError("finite-variance law: scale must be > 0");
      t0_ = 0.0;
      return;
    }
    if (mode_ == TailMode::kStable) stable_ = SasTransform(alpha_, finite_scale_);
    if (sv_.is_constant()) {
      log_c_ = std::log(sv_(1.0));
      t0_ = std::pow(sv_(1.0), inv_alpha_);
    } else {
      t0_ = find_t0();
    }
    validate_monotone();
  }

  // First t where t^-alpha L(t) drops to 1.
  [[nodiscard]] double find_t0() const {
    auto f = [this](double t) { return regular_part(t) - 1.0; };
    double lo = 1.0;
    for (int i = 0; i < 2000 && f(lo) <= 0.0; ++i) lo /= 2.0;
    if (f(lo) <= 0.0) throw ConfigError("tail spec: t^-alpha L(t) never exceeds 1");
    const double hi = numerics::bracket_up(f, lo, 1100, "tail spec t0");
    if (hi == lo) return hi;
    return numerics::bisect_down(f, lo, hi, {}, "tail spec t0");
  }

  void validate_monotone() const {
    const double lo = t0_;
    const double hi = std::max(1e6, 1e3 * t0_);
    constexpr int kPoints = 1000;
    double prev = regular_part(lo);
    for (int i = 1; i <= kPoints; ++i) {
      const double t = lo * std::pow(hi / lo, static_cast<double>(i) / kPoints);
      const double v = regular_part(t);
      if (!(sv_(t) > 0.0) || !std::isfinite(v)) {
        throw ConfigError("tail spec: L(t) must be positive and finite on [t0, 1e6]");
      }
      if (v > prev * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "tail spec: t^-alpha L(t) is not nonincreasing near t=" << t << "; inversion sampling needs a monotone tail";
        throw ConfigError(os.str());
      }
      prev = v;
    }
  }

  // Safeguarded Newton on s = log t for log(t^-alpha L(t)) = log u.
  [[nodiscard]] double invert_general(double u) const {
    const double target = std::log(u);
    double lo = std::log(t0_);
    double hi = lo - target / alpha_ + 1.0;
    auto h = [&](double s) { return -alpha_ * s + std::log(sv_(std::exp(s))) - target; };
    while (h(hi) > 0.0) hi += (hi - lo) + 1.0;
    double s = std::clamp(lo - target / alpha_, lo, hi);
    for (int it = 0; it < 100; ++it) {
      const double v = h(s);
      if (std::abs(v) < 1e-13) break;
      if (v > 0.0) lo = s; else hi = s;
      const double d = -alpha_ + sv_.elasticity(std::exp(s));
      double next = d < 0.0 ? s - v / d : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - s) < 1e-14 * std::max(1.0, std::abs(s))) {
        s = next;
        break;
      }
      s = next;
    }
    return std::exp(s);
  }

  TailMode mode_ = TailMode::kHeavy;
  double alpha_ = 1.5;
  SlowlyVarying sv_;
  FiniteLaw finite_law_ = FiniteLaw::kUniform;
  double finite_scale_ = 1.0;
  double t0_ = 1.0;
  double log_c_ = 0.0;
  double inv_alpha_ = 1.0;
  SasTransform stable_;
};

inline void to_json(nlohmann::json& j, const TailSpec& s) {
  j = nlohmann::json{{"alpha", s.alpha()}, {"mode", TailSpec::mode_name(s.mode())}};
  switch (s.mode()) {
    case TailMode::kHeavy:
      j["sv"] = {{"kind", SlowlyVarying::kind_name(s.sv().kind())}, {"params", s.sv().params()}};
      break;
    case TailMode::kFinite:
      j["law"] = {{"name", s.finite_law() == FiniteLaw::kUniform ? "uniform" : "gaussian"},
                  {"params", std::vector<double>{s.scale()}}};
      break;
    case TailMode::kStable:
      j["scale"] = s.scale();
      break;
  }
}

namespace detail {
inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + k + "'");
  }
}

template <class T>
T get_required(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing key '" + std::string(key) + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + ": key '" + std::string(key) + "' has the wrong type");
  }
}
}  // namespace detail

inline void from_json(const nlohmann::json& j, TailSpec& s) {
  const std::string where = "tail spec";
  detail::reject_unknown(j, {"alpha", "mode", "sv", "law", "scale"}, where);
  const auto alpha = detail::get_required<double>(j, "alpha", where);
  const auto mode = j.contains("mode") ? detail::get_required<std::string>(j, "mode", where) : std::string("heavy");
  if (mode == "heavy") {
    const auto sv = detail::get_required<nlohmann::json>(j, "sv", where);
    detail::reject_unknown(sv, {"kind", "params"}, where + ".sv");
    s = TailSpec::heavy(alpha, SlowlyVarying(SlowlyVarying::parse_kind(detail::get_required<std::string>(sv, "kind", where + ".sv")),
                                             detail::get_required<std::vector<double>>(sv, "params", where + ".sv")));
  } else if (mode == "finite") {
    if (alpha != 2.0) throw ConfigError("tail spec: finite-variance mode forces alpha = 2");
    const auto law = detail::get_required<nlohmann::json>(j, "law", where);
    detail::reject_unknown(law, {"name", "params"}, where + ".law");
    const auto name = detail::get_required<std::string>(law, "name", where + ".law");
    const auto params = detail::get_required<std::vector<double>>(law, "params", where + ".law");
    if (params.size() != 1) throw ConfigError("tail spec: finite law expects one scale parameter");
    if (name == "uniform") {
      s = TailSpec::uniform(params[0]);
    } else if (name == "gaussian") {
      s = TailSpec::gaussian(params[0]);
    } else {
      throw ConfigError("tail spec: unknown finite law '" + name + "'");
    }
  } else if (mode == "stable") {
    s = TailSpec::stable(alpha, detail::get_required<double>(j, "scale", where));
  } else {
    throw ConfigError("tail spec: unknown mode '" + mode + "'");
  }
}

/// n i.i.d. symmetric draws with P(|W| > t) = tail_prob(t).
[[nodiscard]] inline std::vector<double> sample_heavy(const TailSpec& spec, std::size_t n, StreamKey key) {
  if (n == 0) throw ConfigError("sample_heavy: n must be >= 1");
  std::vector<double> out(n);
  spec.fill(key, out);
  return out;
}

struct SmallTRow {
  double t = 0.0;
  double lhs = 0.0;     // 1 - ECF(t)
  double lhs_se = 0.0;  // Monte Carlo standard error of lhs
  double rhs = 0.0;     // c_alpha |t|^alpha L(1/|t|), or t^2 L~(1/|t|) at alpha = 2
  [[nodiscard]] double ratio() const { return lhs / rhs; }
};

/// Compares 1 - ECF(t) of n_draws weights with the leading small-t term of
/// the characteristic function.
[[nodiscard]] inline std::vector<SmallTRow> small_t_cf_check(const TailSpec& spec, std::span<const double> t_grid,
                                                             std::size_t n_draws, StreamKey key) {
  for (double t : t_grid) {
    if (!(t > 0.0 && t <= 0.1)) throw DomainError("small_t_cf_check: t must lie in (0, 0.1]");
  }
  const auto w = sample_heavy(spec, n_draws, key);
  std::vector<SmallTRow> rows;
  std::vector<double> terms(n_draws);
  for (double t : t_grid) {
    for (std::size_t i = 0; i < n_draws; ++i) {
      const double h = std::sin(0.5 * t * w[i]);
      terms[i] = 2.0 * h * h;  // 1 - cos(t w)
    }
    const double mean = numerics::pairwise_sum(terms) / static_cast<double>(n_draws);
    double ss = 0.0;
    for (double v : terms) ss += (v - mean) * (v - mean);
    SmallTRow r;
    r.t = t;
    r.lhs = mean;
    r.lhs_se = std::sqrt(ss / static_cast<double>(n_draws - 1) / static_cast<double>(n_draws));
    r.rhs = spec.alpha() < 2.0 ? c_alpha(spec.alpha()) * std::pow(t, spec.alpha()) * spec.sv()(1.0 / t)
                               : t * t * spec.l_tilde(1.0 / t);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace stable_width
