#include "edgmat/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include "edgmat/log.hpp"

namespace edgmat {

// ------------------------------------------------------------------ config ---

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("model config: " + m); };
  if (layers < 1) fail("layers must be >= 1");
  if (heads < 1) fail("heads must be >= 1");
  if (hidden < 1) fail("hidden must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(lr >= 0.0)) fail("lr must be >= 0");
  if (!(leaky_slope >= 0.0)) fail("leaky_slope must be >= 0");
  if (classes < 1) fail("classes must be >= 1");
  if (node_in < 1) fail("node_in must be >= 1");
  if (edge_in < 1) fail("edge_in must be >= 1");
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

KvConfig ModelConfig::to_kv() const {
  KvConfig kv;
  kv.set("layers", std::to_string(layers));
  kv.set("heads", std::to_string(heads));
  kv.set("hidden", std::to_string(hidden));
  kv.set("dropout", fmt_double(dropout));
  kv.set("lr", fmt_double(lr));
  kv.set("epochs", std::to_string(epochs));
  kv.set("leaky_slope", fmt_double(leaky_slope));
  kv.set("classes", std::to_string(classes));
  kv.set("seed", std::to_string(seed));
  kv.set("node_in", std::to_string(node_in));
  kv.set("edge_in", std::to_string(edge_in));
  kv.set("beta1", fmt_double(beta1));
  kv.set("beta2", fmt_double(beta2));
  kv.set("eps", fmt_double(eps));
  return kv;
}

ModelConfig ModelConfig::from_kv(const KvConfig& kv) {
  auto size = [&](const char* key) {
    const long long v = parse_int(kv.require(key));
    if (v < 0) throw ConfigError(std::string("negative value for ") + key);
    return static_cast<std::size_t>(v);
  };
  ModelConfig c;
  c.layers = size("layers");
  c.heads = size("heads");
  c.hidden = size("hidden");
  c.dropout = parse_double(kv.require("dropout"));
  c.lr = parse_double(kv.require("lr"));
  c.epochs = size("epochs");
  c.leaky_slope = parse_double(kv.require("leaky_slope"));
  c.classes = size("classes");
  c.seed = std::stoull(kv.require("seed"));
  c.node_in = size("node_in");
  c.edge_in = size("edge_in");
  c.beta1 = parse_double(kv.require("beta1"));
  c.beta2 = parse_double(kv.require("beta2"));
  c.eps = parse_double(kv.require("eps"));
  return c;
}

// ------------------------------------------------------------------- model ---

namespace {

Tensor glorot(std::size_t rows, std::size_t cols, CounterRng& rng) {
  Tensor t({rows, cols});
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& v : t.data()) v = (2.0 * rng.next_uniform() - 1.0) * limit;
  return t;
}

}  // namespace

EdgmatModel::EdgmatModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  CounterRng rng(config_.seed, "init");
  const std::size_t k = config_.heads, d = config_.hidden;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    EdgmatLayerParams layer;
    layer.node_in = l == 0 ? config_.node_in : k * d;
    layer.edge_in = l == 0 ? config_.edge_in : k * 2 * d;
    layer.out = d;
    layer.heads = k;
    const std::string prefix = "layer" + std::to_string(l) + ".";
    for (std::size_t h = 0; h < k; ++h) {
      const std::string head = prefix + "head" + std::to_string(h) + ".";
      layer.node_weight.emplace_back(head + "node_weight", glorot(layer.node_in, d, rng));
      layer.edge_weight.emplace_back(head + "edge_weight", glorot(layer.edge_in, d, rng));
      layer.attention.emplace_back(head + "attention", glorot(3 * d, 1, rng));
    }
    layer.residual = Parameter(prefix + "residual", glorot(layer.node_in, k * d, rng));
    layer.bias = Parameter(prefix + "bias", Tensor({k * d}));
    layers_.push_back(std::move(layer));
  }
  decoder_weight_ = Parameter("decoder.weight", glorot(k * 2 * d, config_.classes, rng));
  decoder_bias_ = Parameter("decoder.bias", Tensor({config_.classes}));
}

std::vector<Parameter*> EdgmatModel::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    for (std::size_t h = 0; h < layer.heads; ++h) {
      out.push_back(&layer.node_weight[h]);
      out.push_back(&layer.edge_weight[h]);
      out.push_back(&layer.attention[h]);
    }
    out.push_back(&layer.residual);
    out.push_back(&layer.bias);
  }
  out.push_back(&decoder_weight_);
  out.push_back(&decoder_bias_);
  return out;
}

std::vector<const Parameter*> EdgmatModel::parameters() const {
  auto mut = const_cast<EdgmatModel*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

// ----------------------------------------------------------------- forward ---

std::vector<HeadProjection> project_heads(Tape& tape, const EdgmatLayerParams& layer,
                                          const FlowGraph& graph, Var node_features,
                                          Var edge_features) {
  const Tensor& h = tape.value(node_features);
  const Tensor& e = tape.value(edge_features);
  if (h.rows() != graph.node_count() || h.cols() != layer.node_in) {
    throw ShapeError("node features " + shape_string(h.shape()) + " do not match graph with " +
                     std::to_string(graph.node_count()) + " nodes and layer input width " +
                     std::to_string(layer.node_in));
  }
  if (e.rows() != graph.edge_count() || e.cols() != layer.edge_in) {
    throw ShapeError("edge features " + shape_string(e.shape()) + " do not match graph with " +
                     std::to_string(graph.edge_count()) + " edges and layer input width " +
                     std::to_string(layer.edge_in));
  }
  std::vector<HeadProjection> out;
  out.reserve(layer.heads);
  for (std::size_t k = 0; k < layer.heads; ++k) {
    HeadProjection p;
    p.node = ops::matmul(node_features, tape.parameter(layer.node_weight[k]));
    p.edge = ops::matmul(edge_features, tape.parameter(layer.edge_weight[k]));
    p.at_dst = ops::gather_rows(p.node, graph.by_destination());
    p.at_src = ops::gather_rows(p.node, graph.by_source());
    out.push_back(p);
  }
  return out;
}

Var attention_coefficients(Tape& tape, const EdgmatLayerParams& layer, const FlowGraph& graph,
                           const HeadProjection& proj, std::size_t head, double leaky_slope) {
  const Var parts[] = {proj.at_dst, proj.at_src, proj.edge};
  const Var z = ops::concat(parts, 1);
  const Var score = ops::leaky_relu(ops::matmul(z, tape.parameter(layer.attention.at(head))),
                                    leaky_slope);
  return ops::segment_softmax(score, graph.by_destination());
}

Var node_update(Tape& tape, const EdgmatLayerParams& layer, const FlowGraph& graph,
                Var node_features, std::span<const HeadProjection> proj,
                std::span<const Var> alpha, bool relu_output) {
  std::vector<Var> heads;
  heads.reserve(proj.size());
  for (std::size_t k = 0; k < proj.size(); ++k) {
    const Var message = ops::add(proj[k].at_src, proj[k].edge);
    heads.push_back(ops::segment_sum(ops::scale_rows(message, alpha[k]), graph.by_destination()));
  }
  const Var aggregated = ops::concat(heads, 1);
  const Var residual = ops::matmul(node_features, tape.parameter(layer.residual));
  const Var h = ops::add_row_bias(ops::add(residual, aggregated), tape.parameter(layer.bias));
  return relu_output ? ops::relu(h) : h;
}

Var edge_update(std::span<const HeadProjection> proj, std::span<const Var> alpha) {
  std::vector<Var> blocks;
  blocks.reserve(proj.size());
  for (std::size_t k = 0; k < proj.size(); ++k) {
    const Var parts[] = {proj[k].at_src, proj[k].edge};
    blocks.push_back(ops::scale_rows(ops::concat(parts, 1), alpha[k]));
  }
  return ops::concat(blocks, 1);
}

LayerOutput edgmat_layer(Tape& tape, const EdgmatLayerParams& layer, const FlowGraph& graph,
                         Var node_features, Var edge_features, bool relu_output, bool training,
                         double dropout, double leaky_slope, CounterRng& rng) {
  const Var h = ops::dropout(node_features, dropout, training, rng);
  const auto proj = project_heads(tape, layer, graph, h, edge_features);
  LayerOutput out;
  std::vector<Var> dropped;
  for (std::size_t k = 0; k < layer.heads; ++k) {
    out.attention.push_back(attention_coefficients(tape, layer, graph, proj[k], k, leaky_slope));
    dropped.push_back(ops::dropout(out.attention.back(), dropout, training, rng));
  }
  out.node = node_update(tape, layer, graph, h, proj, dropped, relu_output);
  out.edge = edge_update(proj, dropped);
  return out;
}

ForwardOutput forward(Tape& tape, const EdgmatModel& model, const FlowGraph& graph,
                      bool training, CounterRng& rng) {
  const ModelConfig& cfg = model.config();
  if (graph.edge_count() > 0 &&
      (graph.node_feature_dim() != cfg.node_in || graph.edge_feature_dim() != cfg.edge_in)) {
    throw ShapeError("graph feature widths (node " + std::to_string(graph.node_feature_dim()) +
                     ", edge " + std::to_string(graph.edge_feature_dim()) +
                     ") do not match model (node " + std::to_string(cfg.node_in) + ", edge " +
                     std::to_string(cfg.edge_in) + ")");
  }
  Var h = tape.constant(graph.node_count() ? graph.node_features() : Tensor({0, cfg.node_in}));
  Var e = tape.constant(graph.edge_count() ? graph.edge_features() : Tensor({0, cfg.edge_in}));

  ForwardOutput out;
  const auto layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const bool last = l + 1 == layers.size();
    LayerOutput lo = edgmat_layer(tape, layers[l], graph, h, e, !last, training, cfg.dropout,
                                  cfg.leaky_slope, rng);
    h = lo.node;
    e = lo.edge;
    out.attention.push_back(std::move(lo.attention));
  }
  out.node_embedding = h;
  out.edge_embedding = e;
  out.logits = ops::add_row_bias(ops::matmul(e, tape.parameter(model.decoder_weight())),
                                 tape.parameter(model.decoder_bias()));
  return out;
}

// ---------------------------------------------------------------- training ---

std::vector<double> class_weights(const FlowGraph& graph, std::size_t classes,
                                  std::vector<std::string>* warnings) {
  std::vector<std::size_t> counts(classes, 0);
  std::size_t total = 0;
  for (const auto& e : graph.edges()) {
    if (e.mask != EdgeMask::train) continue;
    if (e.label >= classes) {
      throw std::out_of_range("edge label " + std::to_string(e.label) + " >= class count " +
                              std::to_string(classes));
    }
    ++counts[e.label];
    ++total;
  }
  std::vector<double> w(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] == 0) {
      const std::string msg = "class " + std::to_string(c) + " has no training edges; weight 0";
      if (warnings) {
        warnings->push_back(msg);
      } else {
        log::warn("{}", msg);
      }
      continue;
    }
    w[c] = static_cast<double>(total) /
           (static_cast<double>(classes) * static_cast<double>(counts[c]));
  }
  return w;
}

Var training_loss(Tape& tape, const EdgmatModel& model, const FlowGraph& graph,
                  std::span<const double> weights, bool training, CounterRng& rng) {
  const auto train_edges = graph.edges_with_mask(EdgeMask::train);
  if (train_edges.empty()) throw std::invalid_argument("train: graph has no train-masked edges");
  std::vector<std::uint32_t> labels;
  labels.reserve(train_edges.size());
  for (EdgeId e : train_edges) labels.push_back(graph.edges()[e].label);
  const auto select = std::make_shared<const Segments>(
      Segments::build({train_edges.begin(), train_edges.end()}, graph.edge_count()));
  const ForwardOutput out = forward(tape, model, graph, training, rng);
  return ops::weighted_cross_entropy(ops::gather_rows(out.logits, select), labels, weights);
}

TrainReport train(EdgmatModel& model, const FlowGraph& graph) {
  const ModelConfig& cfg = model.config();
  if (graph.edges_with_mask(EdgeMask::train).empty()) {
    throw std::invalid_argument("train: graph has no train-masked edges");
  }

  TrainReport report;
  report.class_weights = class_weights(graph, cfg.classes, &report.warnings);

  auto params = model.parameters();
  for (Parameter* p : params) p->zero_grad();
  CounterRng rng(cfg.seed, "dropout");
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tape tape;
    const Var loss = training_loss(tape, model, graph, report.class_weights, true, rng);
    report.loss_trace.push_back(tape.value(loss).item());
    tape.backward(loss);
    for (Parameter* p : params) {
      if (const Tensor* g = tape.gradient_of(*p)) {
        for (std::size_t i = 0; i < g->numel(); ++i) p->grad[i] += (*g)[i];
      }
    }
    adam_step(params, cfg.adam());
    log::debug("epoch {} loss {:.6f}", epoch + 1, report.loss_trace.back());
  }
  return report;
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor p(logits.shape());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i);
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) s += (p(i, j) = std::exp(z[j] - mx));
    for (std::size_t j = 0; j < z.size(); ++j) p(i, j) /= s;
  }
  return p;
}

std::vector<ClassId> argmax_rows(const Tensor& logits) {
  std::vector<ClassId> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i);
    out[i] = static_cast<ClassId>(std::max_element(z.begin(), z.end()) - z.begin());
  }
  return out;
}

Prediction predict(const EdgmatModel& model, const FlowGraph& graph) {
  Tape tape;
  CounterRng unused(model.config().seed, "inference");
  const ForwardOutput out = forward(tape, model, graph, false, unused);
  Prediction p;
  p.logits = tape.value(out.logits);
  p.edge_embedding = tape.value(out.edge_embedding);
  p.probabilities = softmax_rows(p.logits);
  p.labels = argmax_rows(p.logits);
  return p;
}

}  // namespace edgmat
