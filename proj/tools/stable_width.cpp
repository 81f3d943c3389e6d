// stable-width: predict, verify and stress the infinite-width limits of
// MLPs with heavy-tailed weights.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "selftest.hpp"
#include "stable_width/stable_width.hpp"

namespace sw = stable_width;
namespace fs = std::filesystem;

namespace {

enum ExitCode { kPass = 0, kToleranceFail = 1, kConfigError = 2, kNumericError = 3 };

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::string out_dir = ".";
};

sw::ExperimentConfig load(const Globals& g) {
  if (g.config_path.empty()) throw sw::ConfigError("--config is required for this command");
  auto cfg = sw::load_config(g.config_path, g.seed);
  cfg.recursion.par = g.threads > 0 ? sw::Parallelism{g.threads} : sw::Parallelism::from_env();
  if (cfg.counterexample) cfg.counterexample->par = cfg.recursion.par;
  return cfg;
}

void write_json(const Globals& g, const std::string& name, const nlohmann::json& j) {
  const fs::path p = fs::path(g.out_dir) / name;
  sw::io::write_text(p, j.dump(2) + "\n");
  std::cout << "wrote " << p.string() << '\n';
}

void write_csv(const Globals& g, const sw::ExperimentConfig& cfg, const std::string& name, const std::string& body) {
  const fs::path p = fs::path(g.out_dir) / name;
  sw::io::write_text(p, sw::csv_stamp(cfg) + body);
  std::cout << "wrote " << p.string() << '\n';
}

nlohmann::json predict_json(const sw::ExperimentConfig& cfg) {
  const auto& net = cfg.require_network();
  nlohmann::json out = sw::provenance(cfg);
  out["marginals"] = nlohmann::json::array();
  for (const auto& x : cfg.inputs) out["marginals"].push_back(sw::sigma_recursion(net, x, cfg.recursion));
  if (cfg.inputs.size() >= 2 || cfg.joint) out["joint"] = sw::joint_recursion(net, cfg.inputs, cfg.recursion);
  return out;
}

int cmd_predict(const Globals& g) {
  const auto cfg = load(g);
  const auto j = predict_json(cfg);
  write_json(g, cfg.prefix + "_limit.json", j);
  for (const auto& layer : j["marginals"][0]["layers"]) {
    std::cout << "layer " << layer["layer"] << ": alpha=" << layer["alpha"] << " sigma=" << layer["sigma"]
              << " (se " << layer["sigma_se"] << ")\n";
  }
  return kPass;
}

/// One verification run: limit law plus width sweep.
sw::ConvergenceReport run_verify(const sw::ExperimentConfig& cfg, nlohmann::json& law_json) {
  const auto& net = cfg.require_network();
  if (cfg.widths.empty()) throw sw::ConfigError("config: 'widths' is required for verification");
  if (cfg.inputs.size() > 2) throw sw::ConfigError("config: verification supports one or two inputs");
  const auto marginal = sw::sigma_recursion(net, cfg.inputs.front(), cfg.recursion);
  law_json = nlohmann::json{{"marginal", marginal}};
  std::optional<sw::LimitLaw> joint;
  if (cfg.inputs.size() == 2) {
    joint = sw::joint_recursion(net, cfg.inputs, cfg.recursion);
    law_json["joint_layers"] = joint->layers.size();
  }
  auto inputs = cfg.inputs;
  return sw::convergence_sweep(net, inputs, cfg.target_layer(), cfg.widths, cfg.sweep_options(), marginal,
                               joint ? &*joint : nullptr);
}

int cmd_verify(const Globals& g) {
  const auto cfg = load(g);
  nlohmann::json law;
  const auto rep = run_verify(cfg, law);
  nlohmann::json j = sw::provenance(cfg);
  j["report"] = rep;
  j["limit"] = law["marginal"];
  write_json(g, cfg.prefix + "_report.json", j);
  std::ostringstream csv;
  rep.write_csv(csv);
  write_csv(g, cfg, cfg.prefix + "_report.csv", csv.str());
  for (const auto& w : rep.widths) {
    std::cout << "width " << w.width << ": sup CF distance " << w.distance.sup << ", sigma_hat " << w.scale.sigma;
    if (w.independence) std::cout << ", independence " << *w.independence;
    if (w.joint) std::cout << ", joint " << w.joint->sup;
    std::cout << '\n';
  }
  std::cout << (rep.pass ? "PASS" : "FAIL") << " (tolerance " << rep.tolerance << ", predicted sigma "
            << rep.sigma_pred << ")\n";
  return rep.pass ? kPass : kToleranceFail;
}

int cmd_counterexample(const Globals& g) {
  const auto cfg = load(g);
  sw::CounterexampleConfig cc = cfg.counterexample.value_or(sw::CounterexampleConfig{});
  cc.seed = cfg.seed;
  cc.par = cfg.recursion.par;
  const auto rep = sw::divergence_experiment(cc);
  nlohmann::json j = sw::provenance(cfg);
  j["report"] = rep;
  write_json(g, cfg.prefix + "_counterexample.json", j);
  std::ostringstream csv;
  rep.write_csv(csv);
  write_csv(g, cfg, cfg.prefix + "_counterexample.csv", csv.str());
  std::cout << "naive growth " << rep.naive_growth << " (bound " << rep.growth_bound << "), corrected ratio "
            << rep.corrected_ratio << '\n'
            << (rep.pass() ? "PASS" : "FAIL") << '\n';
  return rep.pass() ? kPass : kToleranceFail;
}

/// Re-targets every layer to tail index a, keeping the weight family.
sw::NetworkConfig with_alpha(sw::NetworkConfig net, double a) {
  for (auto& l : net.layers) {
    switch (l.weights.mode()) {
      case sw::TailMode::kHeavy: l.weights = sw::TailSpec::heavy(a, l.weights.sv()); break;
      case sw::TailMode::kStable: l.weights = sw::TailSpec::stable(a, l.weights.scale()); break;
      case sw::TailMode::kFinite:
        if (a != 2.0) throw sw::ConfigError("sweep: finite-variance layers only admit alpha = 2");
        break;
    }
    l.alpha = a;
  }
  net.validate();
  return net;
}

int cmd_sweep(const Globals& g) {
  const auto cfg = load(g);
  if (!cfg.sweep || cfg.sweep->empty()) throw sw::ConfigError("sweep: empty sweep grid");
  const auto& grid = *cfg.sweep;
  const auto& base = cfg.require_network();
  const std::vector<std::optional<double>> alphas = [&] {
    std::vector<std::optional<double>> v(grid.alpha.begin(), grid.alpha.end());
    if (v.empty()) v.push_back(std::nullopt);
    return v;
  }();
  std::vector<std::optional<std::size_t>> widths(grid.width.begin(), grid.width.end());
  if (widths.empty()) widths.push_back(std::nullopt);
  std::vector<std::optional<sw::Activation>> acts(grid.activation.begin(), grid.activation.end());
  if (acts.empty()) acts.push_back(std::nullopt);

  nlohmann::json j = sw::provenance(cfg);
  j["blocks"] = nlohmann::json::array();
  std::ostringstream csv;
  csv << "block,alpha,activation,block_seed,width,t,ecf,predicted,abs_diff\n";
  bool all_pass = true;
  std::size_t block = 0;
  for (const auto& a : alphas) {
    for (const auto& w : widths) {
      for (const auto& act : acts) {
        sw::ExperimentConfig point = cfg;
        sw::NetworkConfig net = base;
        if (act) net.activation = *act;
        if (a) net = with_alpha(net, *a);
        net.validate();
        point.network = net;
        if (w) point.widths = {*w};
        point.seed = sw::domain_key(cfg.seed, sw::Domain::kSweep).child({0x5EE9, block}).value;
        point.recursion.seed = point.seed;
        nlohmann::json law;
        const auto rep = run_verify(point, law);
        all_pass = all_pass && rep.pass;
        j["blocks"].push_back({{"block", block},
                               {"alpha", net.layer(2).alpha},
                               {"activation", net.activation},
                               {"seed", point.seed},
                               {"report", rep},
                               {"limit", law["marginal"]}});
        std::ostringstream body;
        rep.write_csv(body);
        std::istringstream lines(body.str());
        std::string line;
        std::getline(lines, line);  // header
        while (std::getline(lines, line)) {
          csv << block << ',' << sw::io::format_real(net.layer(2).alpha) << ',' << net.activation.name() << ','
              << point.seed << ',' << line << '\n';
        }
        std::cout << "block " << block << ": alpha " << net.layer(2).alpha << ", activation "
                  << net.activation.name() << ": " << (rep.pass ? "PASS" : "FAIL") << '\n';
        ++block;
      }
    }
  }
  write_json(g, cfg.prefix + "_sweep.json", j);
  write_csv(g, cfg, cfg.prefix + "_sweep.csv", csv.str());
  return all_pass ? kPass : kToleranceFail;
}

int cmd_selftest() {
  const int failures = sw::selftest::run(std::cout);
  std::cout << (failures == 0 ? "selftest: all checks passed" : "selftest: failures: " + std::to_string(failures)) << '\n';
  return failures == 0 ? kPass : kToleranceFail;
}

template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const sw::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const sw::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-width MLPs with heavy-tailed weights versus their stable limits"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sw::kLibraryVersion));
  Globals g;
  app.add_option("--config", g.config_path, "Experiment config (JSON, schema_version 1)");
  app.add_option("--seed", g.seed, "Seed (overrides the config file)");
  app.add_option("--threads", g.threads, "Worker threads (default: STABLE_WIDTH_THREADS or 1)");
  app.add_option("--out", g.out_dir, "Output directory");

  auto* predict = app.add_subcommand("predict", "Compute the limit laws layer by layer");
  auto* verify = app.add_subcommand("verify", "Simulate a width sweep and compare with the limit");
  auto* counter = app.add_subcommand("counterexample", "ReLU/Pareto divergence experiment");
  auto* sweep = app.add_subcommand("sweep", "Verify over a grid of alpha, width and activation");
  auto* self = app.add_subcommand("selftest", "Run the closed-form checks");
  for (auto* sub : {predict, verify, counter, sweep, self}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  if (*predict) return guarded([&] { return cmd_predict(g); });
  if (*verify) return guarded([&] { return cmd_verify(g); });
  if (*counter) return guarded([&] { return cmd_counterexample(g); });
  if (*sweep) return guarded([&] { return cmd_sweep(g); });
  return guarded([&] { return cmd_selftest(); });
}
