#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "activation.hpp"
#include "errors.hpp"
#include "heavy_tail.hpp"
#include "io.hpp"
#include "numerics.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "stable_dist.hpp"

namespace stable_width {

struct LayerConfig {
  double alpha = 1.5;
  TailSpec weights;
  double sigma_bias = 0.0;
};

/// Layers are 1-based: layers[0] is layer 1 (unscaled), layers[L] is the
/// output layer L+1.
struct NetworkConfig {
  std::size_t input_dim = 1;
  std::vector<LayerConfig> layers;
  Activation activation;
  /// Lets overflow propagate and skips the envelope check. NaN still throws.
  bool unguarded = false;

  [[nodiscard]] std::size_t depth() const noexcept { return layers.empty() ? 0 : layers.size() - 1; }
  [[nodiscard]] std::size_t output_layer() const noexcept { return layers.size(); }
  [[nodiscard]] const LayerConfig& layer(std::size_t l) const {
    if (l < 1 || l > layers.size()) throw ConfigError("layer index " + std::to_string(l) + " out of range");
    return layers[l - 1];
  }

  void validate() const {
    if (input_dim < 1) throw ConfigError("network: input_dim must be >= 1");
    if (layers.size() < 2) throw ConfigError("network: need at least one hidden layer plus the output layer");
    for (std::size_t l = 1; l <= layers.size(); ++l) {
      const auto& lc = layers[l - 1];
      const std::string where = "network.layers[" + std::to_string(l - 1) + "]";
      if (!(lc.alpha > 0.0 && lc.alpha <= 2.0)) throw ConfigError(where + ": alpha must lie in (0, 2]");
      if (lc.weights.alpha() != lc.alpha) throw ConfigError(where + ": weight tail index differs from the layer alpha");
      if (!(lc.sigma_bias >= 0.0) || !std::isfinite(lc.sigma_bias)) throw ConfigError(where + ": sigma_bias must be >= 0");
    }
    if (!activation.bounded() && !unguarded) check_envelope();
  }

  /// Unbounded activations need either Gaussian weights on every layer or
  /// exact stable weights with beta < min_{l>=2} alpha_{l-1}/alpha_l.
  void check_envelope() const {
    const bool all_gaussian = std::all_of(layers.begin(), layers.end(), [](const LayerConfig& lc) {
      return lc.weights.mode() == TailMode::kFinite && lc.weights.finite_law() == FiniteLaw::kGaussian;
    });
    if (all_gaussian) return;
    const bool all_stable = std::all_of(layers.begin(), layers.end(),
                                        [](const LayerConfig& lc) { return lc.weights.mode() == TailMode::kStable; });
    const double beta = activation.envelope_exponent();
    std::ostringstream os;
    os << "activation '" << activation.name() << "' is unbounded (envelope exponent " << beta << ")";
    if (all_stable) {
      double bound = std::numeric_limits<double>::infinity();
      for (std::size_t l = 2; l <= layers.size(); ++l) bound = std::min(bound, layer(l - 1).alpha / layer(l).alpha);
      if (beta < bound) return;
      os << " and beta >= min alpha_{l-1}/alpha_l = " << bound << ".";
    } else {
      os << " and the weights are neither Gaussian on every layer nor exact stable on every layer.";
    }
    os << " The limit does not exist in this regime: see the ReLU/Pareto divergence counterexample "
          "(`stable-width counterexample`), where naive n^{1/alpha} scaling diverges.";
    throw ConfigError(os.str());
  }
};

inline void to_json(nlohmann::json& j, const LayerConfig& l) {
  j = nlohmann::json{{"alpha", l.alpha}, {"weights", l.weights}, {"sigma_bias", l.sigma_bias}};
}

inline void from_json(const nlohmann::json& j, LayerConfig& l) {
  detail::reject_unknown(j, {"alpha", "weights", "sigma_bias"}, "layer");
  l.weights = detail::get_required<TailSpec>(j, "weights", "layer");
  l.alpha = j.contains("alpha") ? detail::get_required<double>(j, "alpha", "layer") : l.weights.alpha();
  l.sigma_bias = detail::get_required<double>(j, "sigma_bias", "layer");
}

inline void to_json(nlohmann::json& j, const NetworkConfig& n) {
  j = nlohmann::json{{"input_dim", n.input_dim}, {"depth", n.depth()}, {"layers", n.layers}, {"activation", n.activation}};
}

inline void from_json(const nlohmann::json& j, NetworkConfig& n) {
  const std::string where = "network";
  detail::reject_unknown(j, {"input_dim", "depth", "layers", "activation"}, where);
  n.input_dim = detail::get_required<std::size_t>(j, "input_dim", where);
  n.layers = detail::get_required<std::vector<LayerConfig>>(j, "layers", where);
  n.activation = detail::get_required<Activation>(j, "activation", where);
  if (j.contains("depth") && detail::get_required<std::size_t>(j, "depth", where) != n.depth()) {
    throw ConfigError("network: depth must equal the number of layers minus one");
  }
  n.validate();
}

/// Per-layer normalizers a[l] (l = 2..L+1); a[0] and a[1] are unused.
struct ScalingPlan {
  std::vector<double> a;

  /// a_{n_{l-1}}(l) from layer l's own tail.
  static ScalingPlan from_config(const NetworkConfig& net, const std::vector<std::size_t>& widths) {
    ScalingPlan p;
    p.a.assign(net.output_layer() + 1, 1.0);
    for (std::size_t l = 2; l <= net.output_layer(); ++l) {
      p.a[l] = net.layer(l).weights.a_n(static_cast<double>(widths.at(l - 2)));
    }
    return p;
  }
};

inline void validate_widths(const NetworkConfig& net, const std::vector<std::size_t>& widths) {
  if (widths.size() != net.depth()) {
    throw ConfigError("widths: expected " + std::to_string(net.depth()) + " entries, got " + std::to_string(widths.size()));
  }
  for (auto w : widths) {
    if (w < 2) throw ConfigError("widths: every hidden width must be >= 2");
  }
}

inline void validate_inputs(const NetworkConfig& net, const std::vector<std::vector<double>>& xs) {
  if (xs.empty()) throw ConfigError("inputs: need at least one input vector");
  for (const auto& x : xs) {
    if (x.size() != net.input_dim) throw ConfigError("inputs: every input must have input_dim coordinates");
    for (double v : x) {
      if (!std::isfinite(v)) throw ConfigError("inputs: coordinates must be finite");
    }
  }
}

/// Replicates of a pre-activation vector. values is indexed
/// [replicate][node position][input]. Node ids are 0-based.
struct SampleBatch {
  std::size_t layer = 0;
  std::vector<std::size_t> widths;
  std::vector<std::size_t> nodes;
  std::size_t inputs = 1;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  std::uint64_t first_replicate = 0;
  std::vector<double> values;

  [[nodiscard]] double at(std::size_t r, std::size_t p, std::size_t s = 0) const {
    return values[(r * nodes.size() + p) * inputs + s];
  }

  /// One node/input across replicates.
  [[nodiscard]] std::vector<double> column(std::size_t p, std::size_t s = 0) const {
    std::vector<double> out(replicates);
    for (std::size_t r = 0; r < replicates; ++r) out[r] = at(r, p, s);
    return out;
  }

  /// Every requested node of every replicate for one input.
  [[nodiscard]] std::vector<double> pooled(std::size_t s = 0) const {
    std::vector<double> out;
    out.reserve(replicates * nodes.size());
    for (std::size_t r = 0; r < replicates; ++r) {
      for (std::size_t p = 0; p < nodes.size(); ++p) out.push_back(at(r, p, s));
    }
    return out;
  }

  /// Row-major (replicates * nodes) x inputs matrix of the pooled vectors.
  [[nodiscard]] std::vector<double> pooled_vectors() const { return values; }

  [[nodiscard]] std::string lineage() const {
    std::ostringstream os;
    os << "seed=" << seed << ";replicates=[" << first_replicate << "," << first_replicate + replicates << ");layer=" << layer;
    return os.str();
  }

  void write_csv(std::ostream& os) const {
    os << "replicate,node,input_index,value\n";
    for (std::size_t r = 0; r < replicates; ++r) {
      for (std::size_t p = 0; p < nodes.size(); ++p) {
        for (std::size_t s = 0; s < inputs; ++s) {
          os << first_replicate + r << ',' << nodes[p] << ',' << s << ',' << io::format_real(at(r, p, s)) << '\n';
        }
      }
    }
  }
};

namespace mlp_detail {

inline constexpr std::uint64_t kBiasTag = 0xB1A5;

/// Evaluates one network realization. Weights are regenerated from keys
/// (replicate, layer, node) and never stored.
class Realizer {
 public:
  Realizer(const NetworkConfig& net, const std::vector<std::vector<double>>& xs, const std::vector<std::size_t>& widths,
           const ScalingPlan& plan, std::uint64_t seed)
      : net_(net), widths_(widths), plan_(plan), k_(xs.size()), seed_(seed) {
    x_.reserve(k_ * net.input_dim);
    for (const auto& x : xs) x_.insert(x_.end(), x.begin(), x.end());
    for (std::size_t l = 1; l <= net.output_layer(); ++l) {
      bias_.emplace_back(net.layer(l).alpha, net.layer(l).sigma_bias);
    }
  }

  /// Computes layers 1..target for replicate r. Layer l < target gets
  /// max(n_l, extra[l]) nodes (extra may be empty); layer target gets `nodes`.
  /// `sink(l, node, y)` receives the k values of each computed node.
  template <class Sink>
  void run(std::uint64_t r, std::size_t target, const std::vector<std::size_t>& nodes,
           const std::vector<std::size_t>& extra, Sink&& sink) {
    const StreamKey wkey = domain_key(seed_, Domain::kWeight).child(r);
    const StreamKey bkey = domain_key(seed_, Domain::kBias).child(r);
    std::size_t n_prev = net_.input_dim;
    for (std::size_t l = 1; l <= target; ++l) {
      const bool last = l == target;
      const std::size_t width = last ? 0 : widths_[l - 1];
      const std::size_t extra_l = (!last && l < extra.size()) ? extra[l] : 0;
      const std::size_t count = last ? nodes.size() : std::max(width, extra_l);
      prepare_active(l, n_prev);
      next_phi_.assign(last ? 0 : k_ * width, 0.0);
      for (std::size_t p = 0; p < count; ++p) {
        const std::size_t i = last ? nodes[p] : p;
        compute_node(l, i, n_prev, wkey, bkey);
        sink(l, i, std::span<const double>(y_));
        if (i < width) {
          for (std::size_t s = 0; s < k_; ++s) {
            const double a = net_.activation(y_[s]);
            if (!std::isfinite(a) && !net_.unguarded) {
              throw NumericError("overflow at layer " + std::to_string(l) + ", node " + std::to_string(i) +
                                 " (activation output is infinite)");
            }
            next_phi_[s * width + i] = a;
          }
        }
      }
      if (!last) {
        phi_.swap(next_phi_);
        n_prev = width;
      }
    }
  }

 private:
  void prepare_active(std::size_t l, std::size_t n_prev) {
    sparse_ = false;
    if (l == 1) return;
    active_.clear();
    for (std::size_t j = 0; j < n_prev; ++j) {
      bool nz = false;
      for (std::size_t s = 0; s < k_ && !nz; ++s) nz = phi_[s * n_prev + j] != 0.0;
      if (nz) active_.push_back(static_cast<std::uint32_t>(j));
    }
    sparse_ = active_.size() * 4 < n_prev * 3;
  }

  void compute_node(std::size_t l, std::size_t i, std::size_t n_prev, StreamKey wkey, StreamKey bkey) {
    const auto& lc = net_.layer(l);
    const StreamKey row = wkey.child({l, i});
    w_.resize(n_prev);
    y_.resize(k_);
    if (sparse_) {
      std::fill(w_.begin(), w_.end(), 0.0);
      for (auto j : active_) w_[j] = lc.weights.keyed(row, j);
    } else {
      lc.weights.fill(row, w_);
    }
    const double bias = lc.sigma_bias > 0.0 ? bias_[l - 1].keyed(bkey.child(l), i) : 0.0;
    for (std::size_t s = 0; s < k_; ++s) {
      double v;
      if (l == 1) {
        v = numerics::pairwise_dot(w_, std::span<const double>(x_.data() + s * n_prev, n_prev));
      } else {
        v = numerics::pairwise_dot(w_, std::span<const double>(phi_.data() + s * n_prev, n_prev)) / plan_.a[l];
      }
      v += bias;
      if (!std::isfinite(v)) report_nonfinite(v, l, i);
      y_[s] = v;
    }
  }

  void report_nonfinite(double v, std::size_t l, std::size_t i) const {
    std::ostringstream os;
    if (std::isnan(v)) {
      os << "NaN pre-activation at layer " << l << ", node " << i;
      throw NumericError(os.str());
    }
    if (!net_.unguarded) {
      os << "overflow at layer " << l << ", node " << i << " (pre-activation is infinite)";
      throw NumericError(os.str());
    }
  }

  const NetworkConfig& net_;
  const std::vector<std::size_t>& widths_;
  const ScalingPlan& plan_;
  std::size_t k_;
  std::uint64_t seed_;
  std::vector<double> x_;
  std::vector<SasTransform> bias_;
  std::vector<double> phi_, next_phi_, w_, y_;
  std::vector<std::uint32_t> active_;
  bool sparse_ = false;
};

}  // namespace mlp_detail

/// Pre-activations of one realization for k inputs sharing weights.
/// Result[l-1][node * k + s] for node < node_counts[l-1]. node_counts may
/// exceed the widths; extra nodes are materialized but feed nothing.
[[nodiscard]] inline std::vector<std::vector<double>> forward_joint(const NetworkConfig& net,
                                                                    const std::vector<std::vector<double>>& xs,
                                                                    const std::vector<std::size_t>& widths,
                                                                    const std::vector<std::size_t>& node_counts,
                                                                    std::uint64_t seed, std::uint64_t replicate = 0,
                                                                    const ScalingPlan* plan = nullptr) {
  net.validate();
  validate_widths(net, widths);
  validate_inputs(net, xs);
  if (node_counts.size() != net.output_layer()) throw ConfigError("node_counts: need one entry per layer");
  const ScalingPlan own = plan ? *plan : ScalingPlan::from_config(net, widths);
  const std::size_t k = xs.size();
  std::vector<std::vector<double>> out(net.output_layer());
  for (std::size_t l = 0; l < out.size(); ++l) out[l].assign(node_counts[l] * k, 0.0);
  std::vector<std::size_t> extra(net.output_layer() + 1, 0);
  for (std::size_t l = 1; l <= net.output_layer(); ++l) extra[l] = node_counts[l - 1];
  std::vector<std::size_t> last_nodes(node_counts.back());
  std::iota(last_nodes.begin(), last_nodes.end(), std::size_t{0});
  mlp_detail::Realizer real(net, xs, widths, own, seed);
  real.run(replicate, net.output_layer(), last_nodes, extra, [&](std::size_t l, std::size_t i, std::span<const double> y) {
    if (i < node_counts[l - 1]) std::copy(y.begin(), y.end(), out[l - 1].begin() + static_cast<std::ptrdiff_t>(i * k));
  });
  return out;
}

[[nodiscard]] inline std::vector<std::vector<double>> forward(const NetworkConfig& net, const std::vector<double>& x,
                                                              const std::vector<std::size_t>& widths,
                                                              const std::vector<std::size_t>& node_counts,
                                                              std::uint64_t seed, std::uint64_t replicate = 0,
                                                              const ScalingPlan* plan = nullptr) {
  return forward_joint(net, {x}, widths, node_counts, seed, replicate, plan);
}

struct ReplicateRequest {
  std::size_t layer = 2;
  std::vector<std::size_t> nodes{0};
  std::size_t replicates = 1;
  std::uint64_t first_replicate = 0;
};

/// m independent realizations of layer `req.layer` at the requested nodes.
/// Output is identical for any thread count.
[[nodiscard]] inline SampleBatch replicate_layer(const NetworkConfig& net, const std::vector<std::vector<double>>& xs,
                                                 const std::vector<std::size_t>& widths, const ReplicateRequest& req,
                                                 std::uint64_t seed, Parallelism par = {},
                                                 const ScalingPlan* plan = nullptr) {
  net.validate();
  validate_widths(net, widths);
  validate_inputs(net, xs);
  if (req.replicates < 1) throw ConfigError("replicate_layer: m must be >= 1");
  if (req.layer < 1 || req.layer > net.output_layer()) throw ConfigError("replicate_layer: layer out of range");
  if (req.nodes.empty()) throw ConfigError("replicate_layer: need at least one node");
  const ScalingPlan own = plan ? *plan : ScalingPlan::from_config(net, widths);
  SampleBatch batch;
  batch.layer = req.layer;
  batch.widths = widths;
  batch.nodes = req.nodes;
  batch.inputs = xs.size();
  batch.replicates = req.replicates;
  batch.seed = seed;
  batch.first_replicate = req.first_replicate;
  batch.values.assign(req.replicates * req.nodes.size() * xs.size(), 0.0);
  const std::size_t k = xs.size();
  const std::size_t stride = req.nodes.size() * k;
  parallel_chunks(req.replicates, par, [&](std::size_t b, std::size_t e) {
    mlp_detail::Realizer real(net, xs, widths, own, seed);
    const std::vector<std::size_t> no_extra;
    for (std::size_t r = b; r < e; ++r) {
      std::size_t pos = 0;
      real.run(req.first_replicate + r, req.layer, req.nodes, no_extra,
               [&](std::size_t l, std::size_t, std::span<const double> y) {
                 if (l != req.layer) return;
                 std::copy(y.begin(), y.end(), batch.values.begin() + static_cast<std::ptrdiff_t>(r * stride + pos * k));
                 ++pos;
               });
    }
  });
  return batch;
}

}  // namespace stable_width
