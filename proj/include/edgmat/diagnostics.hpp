#pragma once

// Small random graphs and a whole-model gradient check, shared by the test
// suite, the acceptance binary and the `gradcheck` subcommand.

#include <cstddef>
#include <cstdint>

#include "edgmat/flow_graph.hpp"
#include "edgmat/gradcheck.hpp"
#include "edgmat/model.hpp"
#include "edgmat/rng.hpp"

namespace edgmat {

struct RandomGraphSpec {
  std::size_t max_nodes = 5;
  std::size_t max_edges = 8;
  std::size_t edge_features = 4;  // exact width
  std::size_t node_features = 0;  // 0 => same as edge_features
  std::size_t classes = 2;
  double train_fraction = 0.7;    // per-edge probability of the train mask
};

/// Uniform random endpoints, so parallel edges, self loops and nodes without
/// in-edges all occur. Node and edge features are standard normal. At least
/// one edge is train-masked; the rest are train or test.
FlowGraph random_graph(const RandomGraphSpec& spec, CounterRng& rng);

struct ModelGradcheck {
  GradcheckResult result;
  ModelConfig config;
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t attempts = 0;  // draws needed to stay clear of activation kinks
};

/// Draws a random graph (<= 5 nodes, <= 8 edges, F_E <= 4) and a random
/// two-layer model (K <= 2, d_out <= 4, non-zero biases, dropout active with a
/// fixed mask) and checks the gradient of the class-weighted training loss for
/// every parameter group. Draws whose base point lies within `kink_margin` of
/// a ReLU/LeakyReLU kink are rejected and redrawn.
ModelGradcheck gradcheck_model(std::uint64_t seed, double kink_margin = 1e-4, double h = 1e-6,
                               std::size_t max_attempts = 50);

}  // namespace edgmat
