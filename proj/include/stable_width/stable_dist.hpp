#pragma once

// Symmetric alpha-stable laws.
//
// Convention throughout: SaS(alpha, sigma) has characteristic function
// exp(-|sigma t|^alpha); alpha = 2 is the Gaussian with variance 2 sigma^2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace stable_width {

struct StableParams {
  double alpha = 2.0;
  double sigma = 1.0;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 2.0)) {
      throw DomainError("stable law: alpha must lie in (0, 2], got " + std::to_string(alpha));
    }
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
      throw DomainError("stable law: sigma must be finite and >= 0, got " + std::to_string(sigma));
    }
  }
};

/// c_alpha = (pi/2) / (Gamma(alpha) sin(pi alpha / 2)) for alpha < 2, and 1 at
/// alpha = 2. It is the improper integral of sin(u) u^-alpha over (0, inf).
[[nodiscard]] inline double c_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw DomainError("c_alpha: alpha must lie in (0, 2], got " + std::to_string(alpha));
  }
  if (alpha == 2.0) return 1.0;
  return (std::numbers::pi / 2.0) / (std::tgamma(alpha) * std::sin(std::numbers::pi * alpha / 2.0));
}

[[nodiscard]] inline double cf_sas(const StableParams& p, double t) {
  return std::exp(-std::pow(std::abs(p.sigma * t), p.alpha));
}

/// Chambers-Mallows-Stuck transform, symmetric case. Maps two independent
/// uniforms on (0,1) to one SaS(alpha, sigma) variate.
class SasTransform {
 public:
  SasTransform() = default;
  SasTransform(double alpha, double sigma)
      : alpha_(alpha), sigma_(sigma), inv_alpha_(1.0 / alpha), expo_((1.0 - alpha) / alpha) {
    StableParams{alpha, sigma}.validate();
  }

  [[nodiscard]] double operator()(double u1, double u2) const noexcept {
    if (sigma_ == 0.0) return 0.0;
    if (alpha_ == 2.0) {
      // sqrt(2) sigma times a standard normal.
      return std::numbers::sqrt2 * sigma_ * std::sqrt(-2.0 * std::log(u2)) *
             std::cos(2.0 * std::numbers::pi * u1);
    }
    const double v = std::numbers::pi * (u1 - 0.5);
    if (alpha_ == 1.0) return sigma_ * std::tan(v);
    const double e = -std::log(u2);
    const double cv = std::cos(v);
    return sigma_ * std::sin(alpha_ * v) / std::pow(cv, inv_alpha_) *
           std::pow(std::cos(v - alpha_ * v) / e, expo_);
  }

  /// Draw number j of a keyed stream (consumes counters 2j and 2j+1).
  [[nodiscard]] double keyed(StreamKey key, std::uint64_t j) const noexcept {
    return (*this)(to_open_unit(key.bits(2 * j)), to_open_unit(key.bits(2 * j + 1)));
  }

  /// out[j] = keyed(key, j), bitwise. The general branch runs in passes so
  /// the libm calls pipeline.
  void fill(StreamKey key, std::span<double> out) const noexcept {
    const std::size_t n = out.size();
    if (sigma_ == 0.0 || alpha_ == 2.0 || alpha_ == 1.0) {
      for (std::size_t j = 0; j < n; ++j) out[j] = keyed(key, j);
      return;
    }
    constexpr std::size_t kBlock = 128;
    double v[kBlock], e[kBlock], a[kBlock], b[kBlock], c[kBlock];
    for (std::size_t base = 0; base < n; base += kBlock) {
      const std::size_t m = std::min(kBlock, n - base);
      for (std::size_t j = 0; j < m; ++j) {
        v[j] = std::numbers::pi * (to_open_unit(key.bits(2 * (base + j))) - 0.5);
        e[j] = to_open_unit(key.bits(2 * (base + j) + 1));
      }
      for (std::size_t j = 0; j < m; ++j) e[j] = -std::log(e[j]);
      for (std::size_t j = 0; j < m; ++j) a[j] = std::sin(alpha_ * v[j]);
      for (std::size_t j = 0; j < m; ++j) b[j] = std::pow(std::cos(v[j]), inv_alpha_);
      for (std::size_t j = 0; j < m; ++j) c[j] = std::pow(std::cos(v[j] - alpha_ * v[j]) / e[j], expo_);
      for (std::size_t j = 0; j < m; ++j) out[base + j] = sigma_ * a[j] / b[j] * c[j];
    }
  }

  [[nodiscard]] double alpha() const noexcept { return alpha_; }
  [[nodiscard]] double sigma() const noexcept { return sigma_; }

 private:
  double alpha_ = 2.0;
  double sigma_ = 1.0;
  double inv_alpha_ = 0.5;
  double expo_ = -0.5;
};

/// n i.i.d. SaS(alpha, sigma) draws from the stream `key`.
[[nodiscard]] inline std::vector<double> sample_sas(const StableParams& p, std::size_t n, StreamKey key) {
  p.validate();
  if (n == 0) throw ConfigError("sample_sas: n must be >= 1");
  std::vector<double> out(n);
  SasTransform(p.alpha, p.sigma).fill(key, out);
  return out;
}

/// K_{nu,alpha} = E|X|^nu for X ~ SaS(alpha, 1).
[[nodiscard]] inline double frac_abs_moment_constant(double alpha, double nu) {
  StableParams{alpha, 1.0}.validate();
  if (!(nu > 0.0)) throw DomainError("frac_abs_moment: nu must be > 0");
  const double gauss_part = std::pow(2.0, nu) * std::tgamma((1.0 + nu) / 2.0) / std::sqrt(std::numbers::pi);
  if (alpha == 2.0) return gauss_part;
  if (nu >= alpha) {
    std::ostringstream os;
    os << "frac_abs_moment: E|X|^nu is infinite for nu=" << nu << " >= alpha=" << alpha;
    throw DomainError(os.str());
  }
  return gauss_part * std::tgamma(1.0 - nu / alpha) / std::tgamma(1.0 - nu / 2.0);
}

/// E|X|^nu for X ~ SaS(alpha, sigma).
[[nodiscard]] inline double frac_abs_moment(const StableParams& p, double nu) {
  p.validate();
  return frac_abs_moment_constant(p.alpha, nu) * std::pow(p.sigma, nu);
}

// ---------------------------------------------------------------------------
// Multivariate laws

struct SpectralAtom {
  std::vector<double> s;  // unit vector
  double w = 0.0;         // mass >= 0
};

/// Discrete finite measure on the unit sphere of R^dim. Atoms are stored as
/// given; every evaluation uses the symmetrization (s, w) -> (s, w/2), (-s, w/2).
struct SpectralMeasure {
  std::size_t dim = 1;
  double alpha = 1.0;
  std::vector<SpectralAtom> atoms;

  void validate() const {
    if (dim == 0) throw ConfigError("spectral measure: dim must be >= 1");
    if (!(alpha > 0.0 && alpha < 2.0)) {
      throw DomainError("spectral measure: alpha must lie in (0, 2), got " + std::to_string(alpha));
    }
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const auto& a = atoms[i];
      if (a.s.size() != dim) throw ConfigError("spectral measure: atom " + std::to_string(i) + " has wrong dimension");
      double n2 = 0.0;
      for (double x : a.s) n2 += x * x;
      if (std::abs(std::sqrt(n2) - 1.0) > 1e-12) {
        throw ConfigError("spectral measure: atom " + std::to_string(i) + " direction is not a unit vector");
      }
      if (!(a.w >= 0.0) || !std::isfinite(a.w)) {
        throw ConfigError("spectral measure: atom " + std::to_string(i) + " has invalid weight");
      }
    }
  }

  [[nodiscard]] double total_mass() const noexcept {
    double m = 0.0;
    for (const auto& a : atoms) m += a.w;
    return m;
  }

  /// The stored atoms with every atom split into a symmetric pair.
  [[nodiscard]] std::vector<SpectralAtom> symmetrized() const {
    std::vector<SpectralAtom> out;
    out.reserve(2 * atoms.size());
    for (const auto& a : atoms) {
      SpectralAtom neg{a.s, a.w / 2.0};
      for (double& x : neg.s) x = -x;
      out.push_back({a.s, a.w / 2.0});
      out.push_back(std::move(neg));
    }
    return out;
  }
};

inline void to_json(nlohmann::json& j, const SpectralMeasure& g) {
  j = nlohmann::json{{"dim", g.dim}, {"alpha", g.alpha}, {"atoms", nlohmann::json::array()}};
  for (const auto& a : g.atoms) j["atoms"].push_back({{"s", a.s}, {"w", a.w}});
}

inline void from_json(const nlohmann::json& j, SpectralMeasure& g) {
  for (const auto& [k, v] : j.items()) {
    if (k != "dim" && k != "alpha" && k != "atoms") throw ConfigError("spectral measure: unknown key '" + k + "'");
  }
  g.dim = j.at("dim").get<std::size_t>();
  g.alpha = j.at("alpha").get<double>();
  g.atoms.clear();
  for (const auto& a : j.at("atoms")) {
    for (const auto& [k, v] : a.items()) {
      if (k != "s" && k != "w") throw ConfigError("spectral measure atom: unknown key '" + k + "'");
    }
    g.atoms.push_back({a.at("s").get<std::vector<double>>(), a.at("w").get<double>()});
  }
  g.validate();
}

/// exp(-sum over the symmetrized atoms of w |<t, s>|^alpha).
[[nodiscard]] inline double cf_multivariate_sas(const SpectralMeasure& gamma, double alpha, std::span<const double> t) {
  if (t.size() != gamma.dim) {
    throw ConfigError("cf_multivariate_sas: t has dimension " + std::to_string(t.size()) + ", measure has " +
                      std::to_string(gamma.dim));
  }
  double expo = 0.0;
  for (const auto& a : gamma.atoms) {
    double ip = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) ip += t[i] * a.s[i];
    // (w/2)|<t,s>|^a + (w/2)|<t,-s>|^a
    expo += a.w * std::pow(std::abs(ip), alpha);
  }
  return std::exp(-expo);
}

/// n draws of X = sum_j w_j^{1/alpha} s_j Z_j, Z_j i.i.d. SaS(alpha, 1).
/// Row-major n x dim. A stored atom (s, w) and its symmetrized pair give the
/// same law because Z is symmetric.
[[nodiscard]] inline std::vector<double> sample_multivariate_sas(const SpectralMeasure& gamma, double alpha,
                                                                 std::size_t n, StreamKey key) {
  if (gamma.atoms.empty()) throw ConfigError("sample_multivariate_sas: measure has no atoms");
  if (n == 0) throw ConfigError("sample_multivariate_sas: n must be >= 1");
  const SasTransform tr(alpha, 1.0);
  const std::size_t k = gamma.dim;
  const std::size_t na = gamma.atoms.size();
  std::vector<double> scale(na);
  for (std::size_t a = 0; a < na; ++a) scale[a] = std::pow(gamma.atoms[a].w, 1.0 / alpha);
  std::vector<double> out(n * k, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const StreamKey rk = key.child(r);
    double* row = out.data() + r * k;
    for (std::size_t a = 0; a < na; ++a) {
      if (scale[a] == 0.0) continue;
      const double z = scale[a] * tr.keyed(rk, a);
      for (std::size_t i = 0; i < k; ++i) row[i] += z * gamma.atoms[a].s[i];
    }
  }
  return out;
}

/// Covariance of a centered k-variate Gaussian.
struct GaussianCov {
  Eigen::MatrixXd matrix;
  bool psd_projected = false;

  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix.rows()); }

  void validate() const {
    if (matrix.rows() != matrix.cols() || matrix.rows() == 0) throw ConfigError("gaussian covariance: not square");
    if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, matrix.cwiseAbs().maxCoeff())) {
      throw ConfigError("gaussian covariance: matrix is not symmetric");
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix);
    if (es.eigenvalues().minCoeff() < -1e-10) {
      std::ostringstream os;
      os << "gaussian covariance: smallest eigenvalue " << es.eigenvalues().minCoeff() << " < -1e-10";
      throw NumericError(os.str());
    }
  }

  /// exp(-<t, M t> / 2).
  [[nodiscard]] double cf(std::span<const double> t) const {
    if (t.size() != dim()) throw ConfigError("gaussian covariance: dimension mismatch in cf");
    const Eigen::Map<const Eigen::VectorXd> tv(t.data(), static_cast<Eigen::Index>(t.size()));
    return std::exp(-0.5 * tv.dot(matrix * tv));
  }

  /// n draws, row-major n x dim.
  [[nodiscard]] std::vector<double> sample(std::size_t n, StreamKey key) const {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Eigen::MatrixXd root = es.eigenvectors() * ev.asDiagonal();
    const std::size_t k = dim();
    std::vector<double> out(n * k);
    Eigen::VectorXd z(static_cast<Eigen::Index>(k));
    for (std::size_t r = 0; r < n; ++r) {
      CounterStream cs(key.child(r));
      for (std::size_t i = 0; i < k; ++i) z[static_cast<Eigen::Index>(i)] = cs.normal();
      const Eigen::VectorXd x = root * z;
      for (std::size_t i = 0; i < k; ++i) out[r * k + i] = x[static_cast<Eigen::Index>(i)];
    }
    return out;
  }
};

inline void to_json(nlohmann::json& j, const GaussianCov& g) {
  std::vector<std::vector<double>> rows(g.dim(), std::vector<double>(g.dim()));
  for (std::size_t i = 0; i < g.dim(); ++i)
    for (std::size_t c = 0; c < g.dim(); ++c) rows[i][c] = g.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
  j = nlohmann::json{{"dim", g.dim()}, {"matrix", rows}, {"psd_projected", g.psd_projected}};
}

}  // namespace stable_width
