#pragma once

// Edge-directed multi-head graph attention network.
//
// One conv layer, for an edge j -> i and head k (row-vector convention, so a
// weight of shape in x out is applied as x * W):
//
//   score    = LeakyReLU( a_k . [h_i W_n,k || h_j W_n,k || e_ji W_e,k] )
//   alpha_k  = softmax of score over the in-edges of i
//   h_i'     = h_i W_s + ||_k sum_{j->i} alpha_k (h_j W_n,k + e_ji W_e,k) + b
//   e_ji'    = ||_k alpha_k [h_j W_n,k || e_ji W_e,k]
//
// h' passes through ReLU between layers and is left linear after the last.
// Edge embeddings carry no activation. A linear decoder maps the final edge
// embedding to class logits; softmax gives class probabilities.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "edgmat/autograd.hpp"
#include "edgmat/flow_graph.hpp"
#include "edgmat/kv_config.hpp"
#include "edgmat/optim.hpp"
#include "edgmat/rng.hpp"

namespace edgmat {

struct ModelConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t hidden = 32;
  double dropout = 0.2;
  double lr = 0.01;
  std::size_t epochs = 150;
  double leaky_slope = 0.2;
  std::size_t classes = 2;
  std::uint64_t seed = 42;
  std::size_t node_in = 0;
  std::size_t edge_in = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
  AdamOptions adam() const noexcept { return {lr, beta1, beta2, eps}; }

  KvConfig to_kv() const;
  static ModelConfig from_kv(const KvConfig& kv);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct EdgmatLayerParams {
  std::size_t node_in = 0;
  std::size_t edge_in = 0;
  std::size_t out = 0;
  std::size_t heads = 0;
  std::vector<Parameter> node_weight;  // per head: node_in x out
  std::vector<Parameter> edge_weight;  // per head: edge_in x out
  std::vector<Parameter> attention;    // per head: 3*out x 1
  Parameter residual;                  // node_in x heads*out
  Parameter bias;                      // heads*out

  std::size_t node_out() const noexcept { return heads * out; }
  std::size_t edge_out() const noexcept { return heads * 2 * out; }
};

class EdgmatModel {
 public:
  /// Glorot-uniform weights and zero biases, drawn from (config.seed, "init").
  explicit EdgmatModel(const ModelConfig& config);

  const ModelConfig& config() const noexcept { return config_; }
  std::span<EdgmatLayerParams> layers() noexcept { return layers_; }
  std::span<const EdgmatLayerParams> layers() const noexcept { return layers_; }
  Parameter& decoder_weight() noexcept { return decoder_weight_; }
  const Parameter& decoder_weight() const noexcept { return decoder_weight_; }
  Parameter& decoder_bias() noexcept { return decoder_bias_; }
  const Parameter& decoder_bias() const noexcept { return decoder_bias_; }

  /// Every parameter in a fixed canonical order (checkpoint manifest order).
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  std::size_t node_embedding_dim() const noexcept { return config_.heads * config_.hidden; }
  std::size_t edge_embedding_dim() const noexcept { return config_.heads * 2 * config_.hidden; }

 private:
  ModelConfig config_;
  std::vector<EdgmatLayerParams> layers_;
  Parameter decoder_weight_;
  Parameter decoder_bias_;
};

/// Per-head linear projections shared by attention and both updates.
struct HeadProjection {
  Var node;      // |V| x out:  H W_n
  Var edge;      // |E| x out:  E W_e
  Var at_dst;    // |E| x out:  row i of H W_n for each edge j -> i
  Var at_src;    // |E| x out:  row j of H W_n
};

std::vector<HeadProjection> project_heads(Tape& tape, const EdgmatLayerParams& layer,
                                          const FlowGraph& graph, Var node_features,
                                          Var edge_features);

/// Softmax-normalised attention per edge for one head (|E| x 1).
Var attention_coefficients(Tape& tape, const EdgmatLayerParams& layer, const FlowGraph& graph,
                           const HeadProjection& proj, std::size_t head, double leaky_slope);

/// |V| x heads*out node embeddings.
Var node_update(Tape& tape, const EdgmatLayerParams& layer, const FlowGraph& graph,
                Var node_features, std::span<const HeadProjection> proj,
                std::span<const Var> alpha, bool relu_output);

/// |E| x heads*2*out edge embeddings.
Var edge_update(std::span<const HeadProjection> proj, std::span<const Var> alpha);

struct LayerOutput {
  Var node;
  Var edge;
  std::vector<Var> attention;  // per head, before dropout
};

LayerOutput edgmat_layer(Tape& tape, const EdgmatLayerParams& layer, const FlowGraph& graph,
                         Var node_features, Var edge_features, bool relu_output, bool training,
                         double dropout, double leaky_slope, CounterRng& rng);

struct ForwardOutput {
  Var node_embedding;
  Var edge_embedding;
  Var logits;
  std::vector<std::vector<Var>> attention;  // [layer][head]
};

ForwardOutput forward(Tape& tape, const EdgmatModel& model, const FlowGraph& graph,
                      bool training, CounterRng& rng);

/// w_c = n / (C * n_c) over train-masked edges; absent classes get 0 and a
/// warning, appended to `warnings` if given and logged otherwise.
std::vector<double> class_weights(const FlowGraph& graph, std::size_t classes,
                                  std::vector<std::string>* warnings = nullptr);

/// Class-weighted cross-entropy over the train-masked edges of `graph`.
Var training_loss(Tape& tape, const EdgmatModel& model, const FlowGraph& graph,
                  std::span<const double> weights, bool training, CounterRng& rng);

struct TrainReport {
  std::vector<double> loss_trace;  // loss at the start of each epoch, before its update
  std::vector<double> class_weights;
  std::vector<std::string> warnings;
};

/// Full-graph training on the train-masked edges, config.epochs Adam steps.
TrainReport train(EdgmatModel& model, const FlowGraph& graph);

Tensor softmax_rows(const Tensor& logits);
/// Lowest index wins ties.
std::vector<ClassId> argmax_rows(const Tensor& logits);

struct Prediction {
  std::vector<ClassId> labels;
  Tensor probabilities;
  Tensor logits;
  Tensor edge_embedding;
};

Prediction predict(const EdgmatModel& model, const FlowGraph& graph);

}  // namespace edgmat
