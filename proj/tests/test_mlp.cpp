#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "support.hpp"

namespace sw = stable_width;

namespace {

sw::NetworkConfig net_with(sw::Activation phi, std::vector<sw::TailSpec> specs, double sigma_b, std::size_t input_dim = 1) {
  sw::NetworkConfig net;
  net.input_dim = input_dim;
  net.activation = std::move(phi);
  for (auto& s : specs) net.layers.push_back({s.alpha(), s, sigma_b});
  return net;
}

double median_abs(std::vector<double> v) {
  for (double& x : v) x = std::abs(x);
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

/// Real part of the ECF at t and its Monte Carlo standard error.
std::pair<double, double> ecf_re(const std::vector<double>& x, double t) {
  double s = 0.0, ss = 0.0;
  for (double v : x) {
    const double c = std::cos(t * v);
    s += c;
    ss += c * c;
  }
  const double n = static_cast<double>(x.size());
  const double mean = s / n;
  return {mean, std::sqrt(std::max(0.0, ss / n - mean * mean) / n)};
}

}  // namespace

TEST(Forward, ZeroInputZeroBiasPropagatesZeros) {
  const auto net = sw_test::pareto_tanh(3, 2, 1.5, 0.0);
  const auto y = sw::forward(net, {0.0, 0.0, 0.0}, {50, 60}, {5, 5, 5}, 17);
  ASSERT_EQ(y.size(), 3u);
  for (const auto& layer : y) {
    for (double v : layer) EXPECT_EQ(v, 0.0);
  }
}

TEST(Forward, LayerOneMatchesDirectSampler) {
  const auto net = sw_test::pareto_tanh(1, 1, 1.5, 1.0);
  const double x1 = 0.8;
  const std::size_t m = 100000;
  const auto batch = sw::replicate_layer(net, {{x1}}, {100}, {1, {0}, m, 0}, 31);
  const auto fwd = batch.column(0);

  const auto key = sw::domain_key(31, sw::Domain::kOracle);
  const auto w = sw::sample_heavy(sw::TailSpec::pareto(1.5), 1'000'000, key.child(1));
  const auto b = sw::sample_sas({1.5, 1.0}, 1'000'000, key.child(2));
  std::vector<double> direct(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) direct[i] = w[i] * x1 + b[i];

  const std::vector<double> sub(direct.begin(), direct.begin() + static_cast<std::ptrdiff_t>(m));
  EXPECT_GT(sw::ks_two_sample(fwd, sub).p, 0.001);

  // ECF agreement on 20 grid points within 3 combined standard errors.
  for (int g = 1; g <= 20; ++g) {
    const double t = 0.1 * g;
    const auto [ef, sf] = ecf_re(fwd, t);
    const auto [ed, sd] = ecf_re(direct, t);
    EXPECT_LE(std::abs(ef - ed), 3.0 * std::hypot(sf, sd)) << "t=" << t;
  }
}

TEST(Forward, LayerTwoScaleStabilizesInWidth) {
  const auto net = sw_test::pareto_tanh(2, 1, 1.5, 1.0);
  std::vector<std::size_t> nodes(50);
  std::iota(nodes.begin(), nodes.end(), std::size_t{0});
  const auto small = sw::replicate_layer(net, {{1.0, 0.5}}, {1000}, {2, nodes, 200, 0}, 41);
  const auto large = sw::replicate_layer(net, {{1.0, 0.5}}, {10000}, {2, nodes, 200, 0}, 42);
  const double ratio = median_abs(small.pooled()) / median_abs(large.pooled());
  EXPECT_GE(ratio, 0.8);
  EXPECT_LE(ratio, 1.25);
}

TEST(Forward, OutputsAreFinite) {
  const auto net = sw_test::pareto_tanh(2, 2, 1.2, 1.0);
  const auto y = sw::forward(net, {3.0, -2.0}, {200, 200}, {200, 200, 10}, 5);
  for (const auto& layer : y) {
    for (double v : layer) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(ForwardJoint, IdenticalInputsGiveIdenticalCoordinates) {
  const auto net = sw_test::pareto_tanh(2, 2);
  const auto y = sw::forward_joint(net, {{0.3, -1.0}, {0.3, -1.0}}, {40, 50}, {4, 4, 4}, 2);
  for (const auto& layer : y) {
    for (std::size_t i = 0; i + 1 < layer.size(); i += 2) EXPECT_EQ(layer[i], layer[i + 1]);
  }
}

TEST(ForwardJoint, SingleInputEqualsForward) {
  const auto net = sw_test::pareto_tanh(2, 2);
  EXPECT_EQ(sw::forward_joint(net, {{0.3, -1.0}}, {40, 50}, {4, 4, 4}, 3),
            sw::forward(net, {0.3, -1.0}, {40, 50}, {4, 4, 4}, 3));
}

TEST(ForwardJoint, ZeroSecondInputWithoutBias) {
  const auto net = sw_test::pareto_tanh(2, 1, 1.5, 0.0);
  const auto y = sw::forward_joint(net, {{0.3, -1.0}, {0.0, 0.0}}, {40}, {5, 1}, 4);
  for (std::size_t i = 1; i < y[0].size(); i += 2) EXPECT_EQ(y[0][i], 0.0);
  for (std::size_t i = 0; i < y[0].size(); i += 2) EXPECT_NE(y[0][i], 0.0);
}

TEST(ForwardJoint, NodesBeyondWidthDoNotFeedForward) {
  const auto net = sw_test::pareto_tanh(1, 1);
  const auto narrow = sw::forward(net, {1.0}, {30}, {30, 3}, 9);
  const auto wide = sw::forward(net, {1.0}, {30}, {80, 3}, 9);
  EXPECT_EQ(narrow[1], wide[1]);
  EXPECT_TRUE(std::equal(narrow[0].begin(), narrow[0].end(), wide[0].begin()));
}

TEST(ReplicateLayer, SingleReplicateIsForward) {
  const auto net = sw_test::pareto_tanh(2, 2);
  const auto batch = sw::replicate_layer(net, {{0.5, 1.0}}, {30, 40}, {3, {0, 2, 5}, 1, 7}, 11);
  const auto y = sw::forward(net, {0.5, 1.0}, {30, 40}, {1, 1, 6}, 11, 7);
  EXPECT_EQ(batch.at(0, 0), y[2][0]);
  EXPECT_EQ(batch.at(0, 1), y[2][2]);
  EXPECT_EQ(batch.at(0, 2), y[2][5]);
}

TEST(ReplicateLayer, DisjointSeedsAgreeInLaw) {
  const auto net = sw_test::pareto_tanh(1, 1);
  const auto a = sw::replicate_layer(net, {{1.0}}, {200}, {2, {0, 1}, 3000, 0}, 100);
  const auto b = sw::replicate_layer(net, {{1.0}}, {200}, {2, {0, 1}, 3000, 0}, 200);
  for (std::size_t p = 0; p < 2; ++p) EXPECT_GT(sw::ks_two_sample(a.column(p), b.column(p)).p, 0.001) << "node " << p;
}

TEST(ReplicateLayer, NodesAsymptoticallyIndependentAndExchangeable) {
  const auto net = sw_test::pareto_tanh(2, 1);
  const std::size_t m = 2000;
  const auto batch = sw::replicate_layer(net, {{1.0, 0.5}}, {10000}, {2, {0, 1}, m, 0}, 51);
  auto g0 = batch.column(0), g1 = batch.column(1);
  std::vector<double> t0(m), t1(m);
  for (std::size_t r = 0; r < m; ++r) {
    t0[r] = std::tanh(g0[r]);
    t1[r] = std::tanh(g1[r]);
  }
  EXPECT_LE(std::abs(correlation(t0, t1)), 4.0 / std::sqrt(static_cast<double>(m)));

  // (Y1, Y2) versus (Y2, Y1) through the paired transform u + 2v, on
  // disjoint halves so the two samples are independent.
  std::vector<double> fwd, swp;
  for (std::size_t r = 0; r < m / 2; ++r) fwd.push_back(g0[r] + 2.0 * g1[r]);
  for (std::size_t r = m / 2; r < m; ++r) swp.push_back(g1[r] + 2.0 * g0[r]);
  EXPECT_GT(sw::ks_two_sample(fwd, swp).p, 0.001);
}

TEST(ReplicateLayer, DeterministicAcrossRunsAndThreadCounts) {
  const auto net = sw_test::pareto_tanh(2, 2);
  const sw::ReplicateRequest req{3, {0, 4}, 37, 3};
  const auto a = sw::replicate_layer(net, {{1.0, 0.5}, {-0.2, 0.1}}, {60, 70}, req, 77, sw::Parallelism{1});
  const auto b = sw::replicate_layer(net, {{1.0, 0.5}, {-0.2, 0.1}}, {60, 70}, req, 77, sw::Parallelism{1});
  const auto c = sw::replicate_layer(net, {{1.0, 0.5}, {-0.2, 0.1}}, {60, 70}, req, 77, sw::Parallelism{4});
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.values, c.values);
  const auto d = sw::replicate_layer(net, {{1.0, 0.5}, {-0.2, 0.1}}, {60, 70}, req, 78, sw::Parallelism{1});
  EXPECT_NE(a.values, d.values);
}

TEST(ReplicateLayer, ReplicatesAreIndependentOfBatchSplit) {
  const auto net = sw_test::pareto_tanh(1, 1);
  const auto whole = sw::replicate_layer(net, {{1.0}}, {50}, {2, {0}, 20, 0}, 3);
  const auto tail = sw::replicate_layer(net, {{1.0}}, {50}, {2, {0}, 10, 10}, 3);
  for (std::size_t r = 0; r < 10; ++r) EXPECT_EQ(whole.at(10 + r, 0), tail.at(r, 0));
}

TEST(Scaling, PlanUsesDownstreamLayerTail) {
  auto net = net_with(sw::Activation::tanh(), {sw::TailSpec::pareto(1.0), sw::TailSpec::pareto(1.5),
                                               sw::TailSpec::heavy(1.2, sw::SlowlyVarying::log_power(1.0, 1.0))},
                      1.0);
  for (std::size_t n : {100, 1000}) {
    const auto p = sw::ScalingPlan::from_config(net, {n, 2 * n});
    EXPECT_EQ(p.a[2], net.layer(2).weights.a_n(static_cast<double>(n)));
    EXPECT_EQ(p.a[3], net.layer(3).weights.a_n(static_cast<double>(2 * n)));
    const auto q = sw::ScalingPlan::from_config(net, {2 * n, 2 * n});
    EXPECT_EQ(q.a[2] / p.a[2], net.layer(2).weights.a_n(2.0 * n) / net.layer(2).weights.a_n(static_cast<double>(n)));
    EXPECT_NEAR(q.a[2] / p.a[2], std::pow(2.0, 1.0 / 1.5), 1e-12);
  }
}

TEST(Scaling, PlanDividesTheLayerSum) {
  const auto net = sw_test::pareto_tanh(1, 1, 1.5, 0.0);
  auto plan = sw::ScalingPlan::from_config(net, {64});
  const auto base = sw::forward(net, {1.0}, {64}, {1, 4}, 8, 0, &plan);
  plan.a[2] *= 2.0;
  const auto doubled = sw::forward(net, {1.0}, {64}, {1, 4}, 8, 0, &plan);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(doubled[1][i], base[1][i] / 2.0);
}

TEST(Envelope, UnboundedActivationNeedsARecipe) {
  const auto pareto = sw_test::pareto_tanh(1, 1);
  auto relu = pareto;
  relu.activation = sw::Activation::relu();
  try {
    relu.validate();
    FAIL() << "ReLU with Pareto weights must be rejected";
  } catch (const sw::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("counterexample"), std::string::npos);
  }

  auto stable = net_with(sw::Activation::abs_power(0.6), {sw::TailSpec::stable(1.5), sw::TailSpec::stable(1.5)}, 1.0);
  EXPECT_NO_THROW(stable.validate());
  stable.activation = sw::Activation::relu();  // beta = 1 is not < alpha_1/alpha_2 = 1
  EXPECT_THROW(stable.validate(), sw::ConfigError);

  auto gauss = net_with(sw::Activation::relu(), {sw::TailSpec::gaussian(), sw::TailSpec::gaussian()}, 1.0);
  EXPECT_NO_THROW(gauss.validate());

  relu.unguarded = true;
  EXPECT_NO_THROW(relu.validate());
}

TEST(Guards, WidthsInputsAndOverflow) {
  const auto net = sw_test::pareto_tanh(1, 1);
  EXPECT_THROW((void)sw::forward(net, {1.0}, {1}, {1, 1}, 1), sw::ConfigError);
  EXPECT_THROW((void)sw::forward(net, {1.0}, {10, 10}, {1, 1}, 1), sw::ConfigError);
  EXPECT_THROW((void)sw::forward(net, {std::nan("")}, {10}, {1, 1}, 1), sw::ConfigError);
  EXPECT_THROW((void)sw::replicate_layer(net, {{1.0}}, {10}, {2, {0}, 0, 0}, 1), sw::ConfigError);

  // |y|^60 under Gaussian weights overflows by the third layer.
  auto blow = net_with(sw::Activation::abs_power(60.0),
                       {sw::TailSpec::gaussian(3.0), sw::TailSpec::gaussian(3.0), sw::TailSpec::gaussian(3.0)}, 1.0);
  try {
    (void)sw::forward(blow, {5.0}, {20, 20}, {1, 1, 1}, 1);
    FAIL() << "overflow must be flagged";
  } catch (const sw::NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("overflow"), std::string::npos);
  }
}

TEST(SampleBatch, CsvColumns) {
  const auto net = sw_test::pareto_tanh(1, 1);
  const auto batch = sw::replicate_layer(net, {{1.0}, {2.0}}, {20}, {2, {3, 5}, 4, 0}, 6);
  std::ostringstream os;
  batch.write_csv(os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "replicate,node,input_index,value");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 4u * 2u * 2u);
}

TEST(NetworkConfig, JsonRoundTripAndErrors) {
  const auto net = net_with(sw::Activation::clipped_linear(2.0),
                            {sw::TailSpec::pareto(1.5), sw::TailSpec::heavy(1.5, sw::SlowlyVarying::iterated_log(1.0))},
                            0.5, 3);
  const nlohmann::json j = net;
  EXPECT_EQ(j.at("depth"), 1);
  const auto back = j.get<sw::NetworkConfig>();
  EXPECT_EQ(nlohmann::json(back), j);

  auto bad = j;
  bad["depth"] = 4;
  EXPECT_THROW((void)bad.get<sw::NetworkConfig>(), sw::ConfigError);
  bad = j;
  bad["layers"][0]["momentum"] = 1;
  EXPECT_THROW((void)bad.get<sw::NetworkConfig>(), sw::ConfigError);
  bad = j;
  bad["layers"][1]["alpha"] = 1.2;
  EXPECT_THROW(bad.get<sw::NetworkConfig>().validate(), sw::ConfigError);
}
