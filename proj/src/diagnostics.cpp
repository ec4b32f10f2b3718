#include "edgmat/diagnostics.hpp"

#include <stdexcept>
#include <string>

namespace edgmat {

FlowGraph random_graph(const RandomGraphSpec& spec, CounterRng& rng) {
  if (spec.max_nodes == 0 || spec.max_edges == 0 || spec.classes == 0) {
    throw std::invalid_argument("random_graph: empty spec");
  }
  const std::size_t n = 1 + rng.next_below(spec.max_nodes);
  const std::size_t m = 1 + rng.next_below(spec.max_edges);
  const std::size_t node_dim = spec.node_features ? spec.node_features : spec.edge_features;

  std::vector<SocketNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i].key = {"10.0.0." + std::to_string(i), static_cast<std::uint16_t>(1000 + i)};
    nodes[i].index = static_cast<NodeId>(i);
    for (std::size_t f = 0; f < node_dim; ++f) nodes[i].h0.push_back(rng.next_normal());
  }
  std::vector<FlowEdge> edges(m);
  for (std::size_t e = 0; e < m; ++e) {
    FlowEdge& edge = edges[e];
    edge.src = static_cast<NodeId>(rng.next_below(n));
    edge.dst = static_cast<NodeId>(rng.next_below(n));
    for (std::size_t f = 0; f < spec.edge_features; ++f) edge.features.push_back(rng.next_normal());
    edge.label = static_cast<ClassId>(rng.next_below(spec.classes));
    edge.record_index = e;
    edge.mask = (e == 0 || rng.next_uniform() < spec.train_fraction) ? EdgeMask::train
                                                                     : EdgeMask::test;
  }
  return FlowGraph::from_parts(std::move(nodes), std::move(edges));
}

ModelGradcheck gradcheck_model(std::uint64_t seed, double kink_margin, double h,
                               std::size_t max_attempts) {
  CounterRng rng(seed, "gradcheck");
  for (std::size_t attempt = 1; attempt <= max_attempts; ++attempt) {
    RandomGraphSpec gspec;
    gspec.edge_features = 1 + rng.next_below(4);
    gspec.classes = 2 + rng.next_below(2);
    const FlowGraph graph = random_graph(gspec, rng);

    ModelConfig cfg;
    cfg.layers = 2;
    cfg.heads = 1 + rng.next_below(2);
    cfg.hidden = 1 + rng.next_below(4);
    cfg.classes = gspec.classes;
    cfg.node_in = graph.node_feature_dim();
    cfg.edge_in = graph.edge_feature_dim();
    cfg.dropout = 0.2;
    cfg.seed = rng.next();
    EdgmatModel model(cfg);
    // Zero biases would hide bias-gradient errors behind a symmetric point.
    for (Parameter* p : model.parameters()) {
      if (p->name.ends_with("bias")) {
        for (std::size_t i = 0; i < p->value.numel(); ++i) p->value[i] = 0.5 * rng.next_normal();
      }
    }

    std::vector<std::string> absent;  // classes missing from a tiny graph are expected
    const auto weights = class_weights(graph, cfg.classes, &absent);
    const LossBuilder loss = [&](Tape& tape) {
      CounterRng dropout_rng(cfg.seed, "dropout");  // same masks on every evaluation
      return training_loss(tape, model, graph, weights, true, dropout_rng);
    };

    Tape probe;
    loss(probe);
    if (probe.min_kink_distance() < kink_margin) continue;

    auto params = model.parameters();
    ModelGradcheck out;
    out.result = gradcheck(params, loss, h);
    out.config = cfg;
    out.nodes = graph.node_count();
    out.edges = graph.edge_count();
    out.attempts = attempt;
    return out;
  }
  throw std::runtime_error("gradcheck_model: no kink-free draw in " +
                           std::to_string(max_attempts) + " attempts (seed " +
                           std::to_string(seed) + ")");
}

}  // namespace edgmat
