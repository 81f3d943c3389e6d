#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"

namespace stable_width {

enum class ActivationKind {
  kTanh,
  kCos,
  kClippedLinear,  // clamp(y, -c, c); c = 0 gives phi = 0
  kConstant,       // phi = c
  kRelu,
  kAbsPower,       // |y|^p
};

/// Activation phi with the metadata used to validate unbounded choices:
/// bounded kinds report a finite sup-norm, unbounded kinds a polynomial
/// envelope |phi(y)| <= a + b |y|^beta.
class Activation {
 public:
  Activation() = default;
  Activation(ActivationKind kind, std::vector<double> params) : kind_(kind), params_(std::move(params)) { check(); }

  static Activation tanh() { return {ActivationKind::kTanh, {}}; }
  static Activation cos() { return {ActivationKind::kCos, {}}; }
  static Activation clipped_linear(double c) { return {ActivationKind::kClippedLinear, {c}}; }
  static Activation constant(double c) { return {ActivationKind::kConstant, {c}}; }
  static Activation relu() { return {ActivationKind::kRelu, {}}; }
  static Activation abs_power(double p) { return {ActivationKind::kAbsPower, {p}}; }

  [[nodiscard]] double operator()(double y) const noexcept {
    switch (kind_) {
      case ActivationKind::kTanh: return std::tanh(y);
      case ActivationKind::kCos: return std::cos(y);
      case ActivationKind::kClippedLinear: return std::clamp(y, -params_[0], params_[0]);
      case ActivationKind::kConstant: return params_[0];
      case ActivationKind::kRelu: return y > 0.0 ? y : 0.0;
      case ActivationKind::kAbsPower: return std::pow(std::abs(y), params_[0]);
    }
    return 0.0;
  }

  /// Applies phi to every element of `in`.
  void apply(const double* in, double* out, std::size_t n) const noexcept {
    switch (kind_) {
      case ActivationKind::kTanh:
        for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(in[i]);
        return;
      case ActivationKind::kRelu:
        for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
        return;
      default:
        for (std::size_t i = 0; i < n; ++i) out[i] = (*this)(in[i]);
    }
  }

  [[nodiscard]] ActivationKind kind() const noexcept { return kind_; }
  [[nodiscard]] const std::vector<double>& params() const noexcept { return params_; }

  [[nodiscard]] bool bounded() const noexcept {
    return kind_ != ActivationKind::kRelu && kind_ != ActivationKind::kAbsPower;
  }

  [[nodiscard]] double sup_norm() const noexcept {
    switch (kind_) {
      case ActivationKind::kTanh:
      case ActivationKind::kCos: return 1.0;
      case ActivationKind::kClippedLinear:
      case ActivationKind::kConstant: return std::abs(params_[0]);
      default: return std::numeric_limits<double>::infinity();
    }
  }

  /// Growth exponent beta of the envelope a + b|y|^beta (0 for bounded kinds).
  [[nodiscard]] double envelope_exponent() const noexcept {
    switch (kind_) {
      case ActivationKind::kRelu: return 1.0;
      case ActivationKind::kAbsPower: return params_[0];
      default: return 0.0;
    }
  }

  [[nodiscard]] std::string name() const { return kind_name(kind_); }

  static std::string kind_name(ActivationKind k) {
    switch (k) {
      case ActivationKind::kTanh: return "tanh";
      case ActivationKind::kCos: return "cos";
      case ActivationKind::kClippedLinear: return "clipped_linear";
      case ActivationKind::kConstant: return "constant";
      case ActivationKind::kRelu: return "relu";
      case ActivationKind::kAbsPower: return "abs_power";
    }
    return "?";
  }

  static ActivationKind parse_kind(const std::string& s) {
    for (auto k : {ActivationKind::kTanh, ActivationKind::kCos, ActivationKind::kClippedLinear, ActivationKind::kConstant,
                   ActivationKind::kRelu, ActivationKind::kAbsPower}) {
      if (kind_name(k) == s) return k;
    }
    throw ConfigError("activation: unknown kind '" + s + "'");
  }

 private:
  void check() const {
    const std::size_t expected =
        (kind_ == ActivationKind::kClippedLinear || kind_ == ActivationKind::kConstant || kind_ == ActivationKind::kAbsPower) ? 1 : 0;
    if (params_.size() != expected) {
      throw ConfigError("activation '" + kind_name(kind_) + "' expects " + std::to_string(expected) + " parameter(s)");
    }
    if (kind_ == ActivationKind::kClippedLinear && !(params_[0] >= 0.0)) {
      throw ConfigError("activation clipped_linear: clip must be >= 0");
    }
    if (kind_ == ActivationKind::kAbsPower && !(params_[0] > 0.0)) {
      throw ConfigError("activation abs_power: exponent must be > 0");
    }
  }

  ActivationKind kind_ = ActivationKind::kTanh;
  std::vector<double> params_;
};

inline void to_json(nlohmann::json& j, const Activation& a) {
  j = nlohmann::json{{"kind", a.name()}, {"params", a.params()}};
}

inline void from_json(const nlohmann::json& j, Activation& a) {
  if (!j.is_object()) throw ConfigError("activation: expected an object");
  for (const auto& [k, v] : j.items()) {
    if (k != "kind" && k != "params") throw ConfigError("activation: unknown key '" + k + "'");
  }
  if (!j.contains("kind")) throw ConfigError("activation: missing key 'kind'");
  const auto params = j.contains("params") ? j.at("params").get<std::vector<double>>() : std::vector<double>{};
  a = Activation(Activation::parse_kind(j.at("kind").get<std::string>()), params);
}

}  // namespace stable_width
