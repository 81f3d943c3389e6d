// Golden sigma_2 for configs/tanh_a15.json from a brute-force oracle that
// shares no sampling code with the library: mt19937_64, inverse-CDF Pareto
// weights, and sub-Gaussian stable biases X = sqrt(A) G with A a positive
// (alpha/2)-stable variable from Kanter's representation.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace {

constexpr double kAlpha = 1.5;
constexpr double kSigmaBias = 1.0;
constexpr double kX1 = 1.0;
constexpr double kX2 = 0.5;

/// Positive a-stable A with E exp(-s A) = exp(-s^a), 0 < a < 1.
double kanter(double a, std::mt19937_64& g) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  double u = unif(g);
  while (u == 0.0) u = unif(g);
  const double pi = std::numbers::pi;
  const double k = std::pow(std::sin(a * pi * u), a / (1.0 - a)) * std::sin((1.0 - a) * pi * u) /
                   std::pow(std::sin(pi * u), 1.0 / (1.0 - a));
  return std::pow(k / expo(g), (1.0 - a) / a);
}

/// SaS(alpha, sigma) with CF exp(-|sigma t|^alpha): E exp(itX) = E exp(-A sigma^2 t^2).
double stable(double alpha, double sigma, std::mt19937_64& g) {
  std::normal_distribution<double> norm(0.0, std::numbers::sqrt2);
  return sigma * std::sqrt(kanter(alpha / 2.0, g)) * norm(g);
}

/// Symmetric Pareto: P(|W| > t) = t^-alpha for t >= 1.
double pareto(double alpha, std::mt19937_64& g) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(g);
  while (u == 0.0) u = unif(g);
  const double mag = std::pow(u, -1.0 / alpha);
  return unif(g) < 0.5 ? -mag : mag;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the golden sigma_2 for the tanh / Pareto(1.5) config"};
  std::string out = "data/golden_tanh_a15.json";
  std::size_t draws = 10'000'000;
  std::uint64_t seed = 20261015;
  app.add_option("--out", out, "Output JSON");
  app.add_option("--draws", draws, "Monte Carlo draws");
  app.add_option("--seed", seed, "mt19937_64 seed");
  CLI11_PARSE(app, argc, argv);

  std::mt19937_64 g(seed);
  // Self-check of the bias sampler against its CF at t = 1.
  double cf = 0.0;
  const std::size_t n_check = 1'000'000;
  for (std::size_t i = 0; i < n_check; ++i) cf += std::cos(stable(kAlpha, 1.0, g));
  cf /= static_cast<double>(n_check);
  std::cerr << "bias sampler CF(1) = " << cf << " (expected " << std::exp(-1.0) << ")\n";
  if (std::abs(cf - std::exp(-1.0)) > 5.0 / std::sqrt(static_cast<double>(n_check))) return 1;

  // Welford accumulation of |tanh(Y1)|^alpha.
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double y = pareto(kAlpha, g) * kX1 + pareto(kAlpha, g) * kX2 + stable(kAlpha, kSigmaBias, g);
    const double v = std::pow(std::abs(std::tanh(y)), kAlpha);
    const double d = v - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (v - mean);
  }
  const double se_i = std::sqrt(m2 / static_cast<double>(draws - 1) / static_cast<double>(draws));
  const double c = (std::numbers::pi / 2.0) / (std::tgamma(kAlpha) * std::sin(std::numbers::pi * kAlpha / 2.0));
  const double sa = std::pow(kSigmaBias, kAlpha) + c * mean;
  const double sigma = std::pow(sa, 1.0 / kAlpha);
  const double se = c * se_i / (kAlpha * std::pow(sigma, kAlpha - 1.0));

  nlohmann::json j{{"config", "configs/tanh_a15.json"},
                   {"layer", 2},
                   {"sigma", sigma},
                   {"sigma_se", se},
                   {"integral", mean},
                   {"integral_se", se_i},
                   {"draws", draws},
                   {"seed", seed},
                   {"method", "mt19937_64; inverse-CDF Pareto weights; sub-Gaussian Kanter stable bias"}};
  std::ofstream(out) << j.dump(2) << '\n';
  std::cerr << "sigma_2 = " << sigma << " +- " << se << '\n';
  return 0;
}
