#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kRoot = STABLE_WIDTH_SOURCE_DIR;
const std::string kCli = STABLE_WIDTH_CLI;

struct Run {
  int code = -1;
  std::string output;  // stdout and stderr
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Fresh scratch directory named after the running test.
fs::path scratch() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path dir = fs::temp_directory_path() / "stable_width_cli" / (std::string(info->test_suite_name()) + "." + info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Run run(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "cli.log";
  const std::string cmd = "\"" + kCli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = slurp(log);
  return r;
}

fs::path write_config(const fs::path& dir, const json& j, const std::string& name = "config.json") {
  const fs::path p = dir / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

json pareto_layer(double alpha, double sigma_b) {
  return {{"weights", {{"alpha", alpha}, {"sv", {{"kind", "constant"}, {"params", {1.0}}}}}}, {"sigma_bias", sigma_b}};
}

/// Small verification config: one hidden layer, Pareto(1.5), tanh.
json small_config() {
  return {{"schema_version", 1},
          {"seed", 123},
          {"network",
           {{"input_dim", 1},
            {"layers", {pareto_layer(1.5, 1.0), pareto_layer(1.5, 1.0)}},
            {"activation", {{"kind", "tanh"}}}}},
          {"inputs", {{1.0}}},
          {"widths", {20, 40}},
          {"replicates", 50},
          {"nodes_per_replicate", 10},
          {"monte_carlo", {{"n", 2000}, {"bootstrap", 10}}},
          {"output", {{"prefix", "small"}}}};
}

std::string args(const fs::path& cfg, const fs::path& out, const std::string& cmd) {
  return "--config \"" + cfg.string() + "\" --out \"" + out.string() + "\" " + cmd;
}

}  // namespace

TEST(Cli, PredictZeroActivationGivesBiasScale) {
  const auto dir = scratch();
  auto cfg = small_config();
  cfg["network"]["activation"] = {{"kind", "clipped_linear"}, {"params", {0.0}}};
  cfg["network"]["layers"] = {pareto_layer(1.5, 0.4), pareto_layer(1.5, 0.4), pareto_layer(1.5, 0.4)};
  const auto r = run(args(write_config(dir, cfg), dir, "predict"), dir);
  ASSERT_EQ(r.code, 0) << r.output;
  const auto out = json::parse(slurp(dir / "small_limit.json"));
  const auto& layers = out.at("marginals")[0].at("layers");
  ASSERT_EQ(layers.size(), 2u);
  for (const auto& l : layers) EXPECT_NEAR(l.at("sigma").get<double>(), 0.4, 1e-14);
}

TEST(Cli, PredictShippedConfigMatchesGolden) {
  const auto dir = scratch();
  const auto r = run(args(kRoot + "/configs/tanh_a15.json", dir, "predict"), dir);
  ASSERT_EQ(r.code, 0) << r.output;
  const auto out = json::parse(slurp(dir / "tanh_a15_limit.json"));
  const auto golden = json::parse(slurp(kRoot + "/data/golden_tanh_a15.json"));
  const auto& l2 = out.at("marginals")[0].at("layers")[0];
  const double diff = std::abs(l2.at("sigma").get<double>() - golden.at("sigma").get<double>());
  EXPECT_LE(diff, 3.0 * std::hypot(l2.at("sigma_se").get<double>(), golden.at("sigma_se").get<double>()));
  EXPECT_EQ(out.at("config_hash").get<std::string>().size(), 16u);
  EXPECT_TRUE(out.contains("module_versions"));
}

TEST(Cli, ConfigErrorsExitTwo) {
  const auto dir = scratch();
  {
    const fs::path p = dir / "bad.json";
    std::ofstream(p) << "{\"schema_version\": 1, \"seed\": ";
    const auto r = run(args(p, dir, "predict"), dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("malformed JSON"), std::string::npos) << r.output;
  }
  {
    auto cfg = small_config();
    cfg["network"]["layers"][1]["sigma_bais"] = 1.0;
    const auto r = run(args(write_config(dir, cfg), dir, "predict"), dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("sigma_bais"), std::string::npos) << r.output;
  }
  {
    auto cfg = small_config();
    cfg.erase("seed");
    const auto r = run(args(write_config(dir, cfg), dir, "predict"), dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("seed"), std::string::npos) << r.output;
  }
  {
    auto cfg = small_config();
    cfg["widths"] = {40, 20};
    EXPECT_EQ(run(args(write_config(dir, cfg), dir, "verify"), dir).code, 2);
  }
  {
    auto cfg = small_config();
    cfg["network"]["activation"] = {{"kind", "relu"}};
    const auto r = run(args(write_config(dir, cfg), dir, "verify"), dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("counterexample"), std::string::npos) << r.output;
  }
  EXPECT_EQ(run("predict", dir).code, 2);
  EXPECT_EQ(run("--bogus-flag predict", dir).code, 2);
}

TEST(Cli, ZeroToleranceExitsOne) {
  const auto dir = scratch();
  auto cfg = small_config();
  cfg["tolerances"] = {{"sup_cf", 0.0}};
  const auto r = run(args(write_config(dir, cfg), dir, "verify"), dir);
  EXPECT_EQ(r.code, 1) << r.output;
  EXPECT_NE(r.output.find("FAIL"), std::string::npos);
  const auto rep = json::parse(slurp(dir / "small_report.json"));
  EXPECT_FALSE(rep.at("report").at("pass").get<bool>());
}

TEST(Cli, VerifyIsByteIdenticalAcrossRuns) {
  const auto dir = scratch();
  const auto cfg = write_config(dir, small_config());
  fs::create_directories(dir / "a");
  fs::create_directories(dir / "b");
  const auto ra = run(args(cfg, dir / "a", "verify"), dir);
  const auto rb = run(args(cfg, dir / "b", "--threads 2 verify"), dir);
  ASSERT_NE(ra.code, 2) << ra.output;
  EXPECT_EQ(ra.code, rb.code);
  for (const char* f : {"small_report.json", "small_report.csv"}) {
    const auto a = slurp(dir / "a" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(dir / "b" / f)) << f;
  }
}

TEST(Cli, OutputsCarryConfigHash) {
  const auto dir = scratch();
  const auto cfg = write_config(dir, small_config());
  ASSERT_NE(run(args(cfg, dir, "verify"), dir).code, 2);
  const auto rep = json::parse(slurp(dir / "small_report.json"));
  const std::string hash = rep.at("config_hash");
  const std::string csv = slurp(dir / "small_report.csv");
  EXPECT_EQ(csv.rfind("# config_hash=" + hash + " module_versions=", 0), 0u);
  EXPECT_NE(csv.find("\nwidth,t,ecf,predicted,abs_diff\n"), std::string::npos);

  // The seed override changes the hash and the recorded seed.
  fs::create_directories(dir / "s");
  ASSERT_EQ(run(args(cfg, dir / "s", "--seed 999 predict"), dir).code, 0);
  const auto pred = json::parse(slurp(dir / "s" / "small_limit.json"));
  EXPECT_EQ(pred.at("seed").get<std::uint64_t>(), 999u);
  EXPECT_NE(pred.at("config_hash").get<std::string>(), hash);
}

TEST(Cli, SweepBlocksAndEmptyGrid) {
  const auto dir = scratch();
  auto cfg = small_config();
  cfg["sweep"] = json::object();
  EXPECT_EQ(run(args(write_config(dir, cfg), dir, "sweep"), dir).code, 2);
  cfg.erase("sweep");
  EXPECT_EQ(run(args(write_config(dir, cfg), dir, "sweep"), dir).code, 2);

  cfg["sweep"] = {{"alpha", {1.0, 1.5}}};
  const auto r = run(args(write_config(dir, cfg), dir, "sweep"), dir);
  ASSERT_NE(r.code, 2) << r.output;
  const auto out = json::parse(slurp(dir / "small_sweep.json"));
  ASSERT_EQ(out.at("blocks").size(), 2u);
  EXPECT_EQ(out["blocks"][0].at("alpha").get<double>(), 1.0);
  EXPECT_EQ(out["blocks"][1].at("alpha").get<double>(), 1.5);
  EXPECT_NE(out["blocks"][0].at("seed"), out["blocks"][1].at("seed"));
  const std::string csv = slurp(dir / "small_sweep.csv");
  EXPECT_NE(csv.find("\nblock,alpha,activation,block_seed,width,t,ecf,predicted,abs_diff\n"), std::string::npos);
  EXPECT_NE(csv.find("\n1,1.5,tanh,"), std::string::npos);
}

TEST(Cli, CounterexampleRows) {
  const auto dir = scratch();
  const json cfg = {{"schema_version", 1},
                    {"seed", 7},
                    {"counterexample", {{"alpha", 1.5}, {"widths", {100, 1000}}, {"replicates", 500}}},
                    {"output", {{"prefix", "cx"}}}};
  const auto r = run(args(write_config(dir, cfg), dir, "counterexample"), dir);
  ASSERT_TRUE(r.code == 0 || r.code == 1) << r.output;
  const std::string csv = slurp(dir / "cx_counterexample.csv");
  EXPECT_EQ(csv.rfind("# config_hash=", 0), 0u);
  EXPECT_NE(csv.find("\nwidth,scaling_mode,median_abs,sigma_hat\n"), std::string::npos);
  EXPECT_NE(csv.find("\n100,naive,"), std::string::npos);
  EXPECT_NE(csv.find("\n1000,corrected,"), std::string::npos);
  const auto out = json::parse(slurp(dir / "cx_counterexample.json"));
  EXPECT_EQ(out.at("report").at("rows").size(), 4u);
  EXPECT_EQ(r.code == 0, out.at("report").at("pass").get<bool>());
}

TEST(Cli, SelftestPasses) {
  const auto dir = scratch();
  const auto r = run("selftest", dir);
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("selftest: all checks passed"), std::string::npos);
  EXPECT_EQ(r.output.find("FAIL"), std::string::npos) << r.output;
}
