#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "counterexample.hpp"
#include "errors.hpp"
#include "heavy_tail.hpp"
#include "io.hpp"
#include "limit_theory.hpp"
#include "mlp.hpp"
#include "stats.hpp"
#include "version.hpp"

namespace stable_width {

inline constexpr int kSchemaVersion = 1;

struct SweepGrid {
  std::vector<double> alpha;
  std::vector<std::size_t> width;
  std::vector<Activation> activation;

  [[nodiscard]] bool empty() const { return alpha.empty() && width.empty() && activation.empty(); }
};

/// Everything one CLI run needs. The seed is mandatory.
struct ExperimentConfig {
  nlohmann::json source;  // the parsed document, after overrides
  std::uint64_t seed = 0;
  std::optional<NetworkConfig> network;
  std::vector<std::vector<double>> inputs;
  std::optional<std::size_t> layer;
  std::vector<std::size_t> widths;
  std::size_t replicates = 1000;
  std::size_t nodes_per_replicate = 1;
  bool independence = false;
  bool joint = false;
  RecursionOptions recursion;
  std::optional<double> tol_sup;
  std::optional<double> tol_joint;
  std::string prefix = "run";
  std::optional<CounterexampleConfig> counterexample;
  std::optional<SweepGrid> sweep;

  [[nodiscard]] std::string hash() const { return io::hash_json(source); }

  [[nodiscard]] std::size_t target_layer() const { return layer.value_or(require_network().output_layer()); }

  [[nodiscard]] const NetworkConfig& require_network() const {
    if (!network) throw ConfigError("config: this command needs a 'network' section");
    return *network;
  }

  [[nodiscard]] SweepOptions sweep_options() const {
    SweepOptions o;
    o.replicates = replicates;
    o.nodes_per_replicate = nodes_per_replicate;
    o.tolerance = tol_sup;
    o.joint_tolerance = tol_joint;
    o.independence = independence;
    o.seed = seed;
    o.par = recursion.par;
    return o;
  }
};

namespace config_detail {
inline std::uint64_t parse_seed(const nlohmann::json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ConfigError("config: 'seed' must be a non-negative integer");
}

inline std::optional<double> parse_tolerance(const nlohmann::json& t, const char* key) {
  if (!t.contains(key)) return std::nullopt;
  const auto v = detail::get_required<double>(t, key, "config.tolerances");
  if (!(v >= 0.0)) throw ConfigError(std::string("config.tolerances: '") + key + "' must be >= 0");
  return v;
}
}  // namespace config_detail

/// Parses and validates a config document. `seed_override` replaces the
/// file's seed (and is folded into the hash).
[[nodiscard]] inline ExperimentConfig parse_config(nlohmann::json doc, std::optional<std::uint64_t> seed_override = {}) {
  using detail::get_required;
  detail::reject_unknown(doc,
                         {"schema_version", "seed", "network", "inputs", "layer", "widths", "replicates",
                          "nodes_per_replicate", "independence", "joint", "monte_carlo", "tolerances", "output",
                          "counterexample", "sweep", "description"},
                         "config");
  const int version = get_required<int>(doc, "schema_version", "config");
  if (version != kSchemaVersion) {
    throw ConfigError("config: unsupported schema_version " + std::to_string(version) + " (expected 1)");
  }
  if (seed_override) doc["seed"] = *seed_override;
  if (!doc.contains("seed")) throw ConfigError("config: missing key 'seed' (no wall-clock seeding)");
  ExperimentConfig cfg;
  cfg.seed = config_detail::parse_seed(doc.at("seed"));
  cfg.recursion.seed = cfg.seed;
  if (doc.contains("network")) cfg.network = get_required<NetworkConfig>(doc, "network", "config");
  if (doc.contains("inputs")) cfg.inputs = get_required<std::vector<std::vector<double>>>(doc, "inputs", "config");
  if (doc.contains("layer")) cfg.layer = get_required<std::size_t>(doc, "layer", "config");
  if (doc.contains("widths")) cfg.widths = get_required<std::vector<std::size_t>>(doc, "widths", "config");
  if (doc.contains("replicates")) cfg.replicates = get_required<std::size_t>(doc, "replicates", "config");
  if (doc.contains("nodes_per_replicate")) {
    cfg.nodes_per_replicate = get_required<std::size_t>(doc, "nodes_per_replicate", "config");
  }
  if (doc.contains("independence")) cfg.independence = get_required<bool>(doc, "independence", "config");
  if (doc.contains("joint")) cfg.joint = get_required<bool>(doc, "joint", "config");
  if (doc.contains("monte_carlo")) {
    const auto& mc = doc.at("monte_carlo");
    detail::reject_unknown(mc, {"n", "bootstrap", "atoms_budget", "cluster_output"}, "config.monte_carlo");
    if (mc.contains("n")) cfg.recursion.n_mc = get_required<std::size_t>(mc, "n", "config.monte_carlo");
    if (mc.contains("bootstrap")) cfg.recursion.bootstrap = get_required<std::size_t>(mc, "bootstrap", "config.monte_carlo");
    if (mc.contains("atoms_budget")) {
      cfg.recursion.atoms_budget = get_required<std::size_t>(mc, "atoms_budget", "config.monte_carlo");
    }
    if (mc.contains("cluster_output")) {
      cfg.recursion.cluster_output = get_required<bool>(mc, "cluster_output", "config.monte_carlo");
    }
  }
  if (doc.contains("tolerances")) {
    const auto& t = doc.at("tolerances");
    detail::reject_unknown(t, {"sup_cf", "joint_sup_cf"}, "config.tolerances");
    cfg.tol_sup = config_detail::parse_tolerance(t, "sup_cf");
    cfg.tol_joint = config_detail::parse_tolerance(t, "joint_sup_cf");
  }
  if (doc.contains("output")) {
    const auto& o = doc.at("output");
    detail::reject_unknown(o, {"prefix"}, "config.output");
    if (o.contains("prefix")) cfg.prefix = get_required<std::string>(o, "prefix", "config.output");
  }
  if (doc.contains("counterexample")) {
    const auto& c = doc.at("counterexample");
    detail::reject_unknown(c, {"alpha", "widths", "replicates"}, "config.counterexample");
    CounterexampleConfig cc;
    if (c.contains("alpha")) cc.alpha = get_required<double>(c, "alpha", "config.counterexample");
    if (c.contains("widths")) cc.widths = get_required<std::vector<std::size_t>>(c, "widths", "config.counterexample");
    if (c.contains("replicates")) cc.replicates = get_required<std::size_t>(c, "replicates", "config.counterexample");
    cc.seed = cfg.seed;
    cc.validate();
    cfg.counterexample = cc;
  }
  if (doc.contains("sweep")) {
    const auto& s = doc.at("sweep");
    detail::reject_unknown(s, {"alpha", "width", "activation"}, "config.sweep");
    SweepGrid g;
    if (s.contains("alpha")) g.alpha = get_required<std::vector<double>>(s, "alpha", "config.sweep");
    if (s.contains("width")) g.width = get_required<std::vector<std::size_t>>(s, "width", "config.sweep");
    if (s.contains("activation")) g.activation = get_required<std::vector<Activation>>(s, "activation", "config.sweep");
    cfg.sweep = g;
  }

  if (cfg.network) {
    const auto& net = *cfg.network;
    if (cfg.inputs.empty()) throw ConfigError("config: 'inputs' must list at least one input vector");
    validate_inputs(net, cfg.inputs);
    if (cfg.layer && (*cfg.layer < 2 || *cfg.layer > net.output_layer())) {
      throw ConfigError("config: 'layer' must lie in [2, depth + 1]");
    }
    for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
      if (cfg.widths[i] < 2) throw ConfigError("config: 'widths' entries must be >= 2");
      if (i > 0 && cfg.widths[i] <= cfg.widths[i - 1]) throw ConfigError("config: 'widths' must be strictly increasing");
    }
    if (cfg.replicates < 1) throw ConfigError("config: 'replicates' must be >= 1");
    if (cfg.recursion.n_mc < 2) throw ConfigError("config.monte_carlo: 'n' must be >= 2");
  }
  cfg.source = std::move(doc);
  return cfg;
}

[[nodiscard]] inline ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override = {}) {
  const std::string text = io::read_text(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: malformed JSON in '" + path + "': " + e.what());
  }
  return parse_config(std::move(doc), seed_override);
}

/// Provenance stamped into every output.
[[nodiscard]] inline nlohmann::json provenance(const ExperimentConfig& cfg) {
  return {{"config_hash", cfg.hash()}, {"module_versions", std::string(kModuleVersions)}, {"seed", cfg.seed}};
}

[[nodiscard]] inline std::string csv_stamp(const ExperimentConfig& cfg) {
  return "# config_hash=" + cfg.hash() + " module_versions=" + std::string(kModuleVersions) + "\n";
}

}  // namespace stable_width
