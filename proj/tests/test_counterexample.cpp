#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "support.hpp"

namespace sw = stable_width;

TEST(ProductTail, ClosedForms) {
  for (double a : {0.5, 1.0, 1.3, 1.9}) EXPECT_DOUBLE_EQ(sw::product_tail(1.0, a), 0.5);
  EXPECT_NEAR(sw::product_tail(std::numbers::e, 1.0), std::exp(-1.0), 1e-15);
  EXPECT_THROW((void)sw::product_tail(0.5, 1.5), sw::DomainError);
  EXPECT_THROW((void)sw::product_tail(2.0, 2.0), sw::DomainError);
}

TEST(ProductTail, NonincreasingSurvivalFunction) {
  for (double a : {0.5, 1.0, 1.5}) {
    double prev = 1.0;
    for (double s = 0.0; s <= 60.0; s += 0.01) {
      const double p = sw::product_tail(std::exp(s), a);
      ASSERT_LE(p, prev) << "alpha " << a << " at log z " << s;
      prev = p;
    }
    EXPECT_LT(prev, 1e-10);
  }
}

TEST(ProductTail, MatchesBruteForceProductSampling) {
  const std::size_t n = 10'000'000;
  const auto key = sw::domain_key(1, sw::Domain::kOracle);
  const auto w1 = sw::sample_heavy(sw::TailSpec::pareto(1.5), n, key.child(1));
  const auto w2 = sw::sample_heavy(sw::TailSpec::pareto(1.5), n, key.child(2));
  for (double z : {2.0, 4.0, 8.0}) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += (w1[i] > 0.0 && std::abs(w2[i] * w1[i]) > z) ? 1 : 0;
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    const double expect = sw::product_tail(z, 1.5);
    EXPECT_LE(std::abs(p - expect), 3.0 * sw_test::binomial_se(expect, n)) << "z=" << z;
  }
}

TEST(AHat, SolvesTheDefiningEquation) {
  for (double a : {0.7, 1.0, 1.5, 1.9}) {
    for (double n : {2.0, 10.0, 1e3, 1e6, 1e9}) {
      const double x = sw::a_hat_n(a, n);
      const double lhs = n * std::pow(x, -a) * (1.0 + a * std::log(x)) / 2.0;
      EXPECT_LE(lhs, 1.0) << "alpha " << a << ", n " << n;
      EXPECT_GE(lhs, 1.0 - 1e-9) << "alpha " << a << ", n " << n;
    }
  }
  EXPECT_THROW((void)sw::a_hat_n(1.5, 1.0), sw::DomainError);
  EXPECT_THROW((void)sw::a_hat_n(2.0, 10.0), sw::DomainError);
}

TEST(AHat, StrictlyLargerOrderThanNaive) {
  double prev = 0.0;
  for (double n : {1e2, 1e3, 1e4, 1e5, 1e6}) {
    const double r = sw::a_hat_n(1.5, n) / std::pow(n, 1.0 / 1.5);
    EXPECT_GT(r, prev) << "n " << n;
    prev = r;
  }
}

TEST(AHat, Toms748Oracle) {
  const double n = 1e3;
  const double oracle =
      sw_test::toms748_root([&](double x) { return (1.0 + std::log(x)) / (2.0 * x) - 1.0 / n; }, 10.0, 1e5);
  EXPECT_NEAR(sw::a_hat_n(1.0, n) / oracle, 1.0, 1e-6);
}

TEST(AHat, AsymptoticDisplay) {
  for (double a : {1.0, 1.5}) {
    for (double n : {1e6, 1e8, 1e10}) {
      const double x = sw::a_hat_n(a, n);
      const double display = std::pow((1.0 + a * std::log(x)) / 2.0, 1.0 / a);
      EXPECT_NEAR((x / std::pow(n, 1.0 / a)) / display, 1.0, 0.01);
    }
  }
}

TEST(Divergence, ConfigValidation) {
  sw::CounterexampleConfig cfg;
  cfg.replicates = 0;
  EXPECT_THROW((void)sw::divergence_experiment(cfg), sw::ConfigError);
  cfg.replicates = 10;
  cfg.widths = {100, 100};
  EXPECT_THROW((void)sw::divergence_experiment(cfg), sw::ConfigError);
  cfg.widths = {100};
  cfg.alpha = 2.0;
  EXPECT_THROW((void)sw::divergence_experiment(cfg), sw::ConfigError);

  const auto net = sw::CounterexampleConfig{}.network();
  EXPECT_TRUE(net.unguarded);
  EXPECT_EQ(net.activation.kind(), sw::ActivationKind::kRelu);
  EXPECT_EQ(net.layer(1).sigma_bias, 0.0);
  EXPECT_EQ(net.layer(2).sigma_bias, 0.0);
}

TEST(Divergence, CorrectedRowsArePureRescaling) {
  sw::CounterexampleConfig cfg;
  cfg.alpha = 1.5;
  cfg.widths = {100, 10000};
  cfg.replicates = 2000;
  cfg.seed = 3;
  cfg.scale_bootstrap = 20;
  const auto rep = sw::divergence_experiment(cfg);
  ASSERT_EQ(rep.rows.size(), 4u);
  for (std::size_t i = 0; i < rep.rows.size(); i += 2) {
    const auto& naive = rep.rows[i];
    const auto& corr = rep.rows[i + 1];
    EXPECT_EQ(naive.scaling_mode, "naive");
    EXPECT_EQ(corr.scaling_mode, "corrected");
    EXPECT_EQ(naive.scale, std::pow(static_cast<double>(naive.width), 1.0 / 1.5));
    EXPECT_EQ(corr.scale, sw::a_hat_n(1.5, static_cast<double>(corr.width)));
    EXPECT_EQ(corr.median_abs, naive.median_abs * (naive.scale / corr.scale));
  }

  // Same draws through a plan that uses a_hat_n directly.
  const auto net = cfg.network();
  const std::size_t w = 100;
  auto plan = sw::ScalingPlan::from_config(net, {w});
  const double naive_scale = plan.a[2];
  const auto naive = sw::replicate_layer(net, {{1.0}}, {w}, {2, {0}, 50, 0}, 9, {}, &plan);
  plan.a[2] = sw::a_hat_n(1.5, static_cast<double>(w));
  const auto corr = sw::replicate_layer(net, {{1.0}}, {w}, {2, {0}, 50, 0}, 9, {}, &plan);
  for (std::size_t r = 0; r < 50; ++r) {
    EXPECT_NEAR(corr.at(r, 0), naive.at(r, 0) * naive_scale / plan.a[2], 1e-12 * std::abs(naive.at(r, 0)));
  }

  // Naive scaling grows; the growth gate is the sigma-hat ratio.
  EXPECT_GT(rep.naive_growth, 1.0);
  EXPECT_GT(rep.growth_bound, 0.5);
}

TEST(Divergence, ReportExportsAndDeterminism) {
  sw::CounterexampleConfig cfg;
  cfg.widths = {50, 100, 200};
  cfg.replicates = 300;
  cfg.seed = 4;
  cfg.scale_bootstrap = 10;
  const auto a = sw::divergence_experiment(cfg);
  const auto b = sw::divergence_experiment(cfg);
  EXPECT_EQ(nlohmann::json(a).dump(), nlohmann::json(b).dump());
  std::ostringstream os;
  a.write_csv(os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "width,scaling_mode,median_abs,sigma_hat");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 6u);
  const nlohmann::json j = a;
  EXPECT_TRUE(j.contains("stabilization_note"));
  EXPECT_EQ(j.at("pass").get<bool>(), a.pass());
}
