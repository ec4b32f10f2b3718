#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "edgmat/diagnostics.hpp"
#include "edgmat/model.hpp"
#include "edgmat/synthetic.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace edgmat;
using edgmat::testing::record;

namespace {

ModelConfig config_for(const FlowGraph& g, std::size_t heads, std::size_t hidden,
                        std::size_t classes = 2, std::size_t layers = 2) {
  ModelConfig c;
  c.layers = layers;
  c.heads = heads;
  c.hidden = hidden;
  c.classes = classes;
  c.node_in = g.node_feature_dim();
  c.edge_in = g.edge_feature_dim();
  c.seed = 5;
  return c;
}

Tensor eval_logits(const EdgmatModel& m, const FlowGraph& g) {
  Tape tape;
  CounterRng rng(0, "unused");
  return forward(tape, m, g, false, rng).logits.value();
}

FlowGraph graph_of(std::vector<FlowRecord> recs) { return build_graph(recs, InitRule{}, EdgeMask::train); }

// Sets every parameter of a single-layer, single-head model by hand.
void set_layer(EdgmatModel& m, const Tensor& wn, const Tensor& we, const Tensor& a, const Tensor& ws,
               const Tensor& b) {
  auto& l = m.layers()[0];
  l.node_weight[0].value = wn;
  l.edge_weight[0].value = we;
  l.attention[0].value = a;
  l.residual.value = ws;
  l.bias.value = b;
}

}  // namespace

TEST(Model, ParameterShapesAndNames) {
  ModelConfig c;
  c.node_in = 3;
  c.edge_in = 5;
  c.heads = 2;
  c.hidden = 4;
  c.classes = 3;
  EdgmatModel m(c);
  const auto params = m.parameters();
  ASSERT_EQ(params.size(), 2 * (3 * 2 + 2) + 2u);
  EXPECT_EQ(params[0]->name, "layer0.head0.node_weight");
  EXPECT_EQ(m.layers()[0].node_weight[1].value.shape(), (Shape{3, 4}));
  EXPECT_EQ(m.layers()[0].edge_weight[0].value.shape(), (Shape{5, 4}));
  EXPECT_EQ(m.layers()[0].attention[0].value.shape(), (Shape{12, 1}));
  EXPECT_EQ(m.layers()[0].residual.value.shape(), (Shape{3, 8}));
  // Later layers consume the concatenated head outputs.
  EXPECT_EQ(m.layers()[1].node_weight[0].value.shape(), (Shape{8, 4}));
  EXPECT_EQ(m.layers()[1].edge_weight[0].value.shape(), (Shape{16, 4}));
  EXPECT_EQ(m.decoder_weight().value.shape(), (Shape{16, 3}));
  EXPECT_EQ(params.back()->name, "decoder.bias");
}

TEST(Model, GlorotInitWithinBoundsAndZeroBiases) {
  ModelConfig c;
  c.node_in = 6;
  c.edge_in = 6;
  EdgmatModel m(c);
  for (const Parameter* p : m.parameters()) {
    if (p->name.ends_with("bias")) {
      for (double v : p->value.data()) EXPECT_EQ(v, 0.0);
      continue;
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(p->value.rows() + p->value.cols()));
    for (double v : p->value.data()) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_LE(std::abs(v), bound);
    }
  }
  EdgmatModel same(c);
  EXPECT_EQ(same.decoder_weight().value, m.decoder_weight().value);
}

TEST(Model, ConfigValidationAndKvRoundTrip) {
  ModelConfig c;
  c.node_in = 2;
  c.edge_in = 3;
  c.heads = 3;
  c.dropout = 0.25;
  EXPECT_EQ(ModelConfig::from_kv(c.to_kv()), c);
  c.heads = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.heads = 1;
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Forward, MatchesReferenceImplementation) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    CounterRng rng(seed, "test.forward");
    RandomGraphSpec spec;
    spec.max_nodes = 6;
    spec.max_edges = 12;
    spec.edge_features = 1 + rng.next_below(4);
    spec.node_features = 1 + rng.next_below(3);
    const auto g = random_graph(spec, rng);
    auto cfg = config_for(g, 1 + rng.next_below(3), 1 + rng.next_below(4), 3,
                          1 + rng.next_below(3));
    cfg.seed = seed;
    EdgmatModel m(cfg);
    for (Parameter* p : m.parameters()) {
      if (p->name.ends_with("bias")) {
        for (double& v : p->value.data()) v = rng.next_normal();
      }
    }
    const auto ref = oracle::reference_forward(m, g);
    Tape tape;
    CounterRng unused(0, "x");
    const auto out = forward(tape, m, g, false, unused);
    const Tensor& logits = out.logits.value();
    for (std::size_t e = 0; e < g.edge_count(); ++e)
      for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(logits(e, c), ref.logits[e][c], 1e-10);
    for (std::size_t l = 0; l < cfg.layers; ++l)
      for (std::size_t k = 0; k < cfg.heads; ++k)
        for (std::size_t e = 0; e < g.edge_count(); ++e)
          EXPECT_NEAR(out.attention[l][k].value()[e], ref.attention[l][k][e], 1e-12);
    const Tensor& h = out.node_embedding.value();
    for (std::size_t i = 0; i < g.node_count(); ++i)
      for (std::size_t c = 0; c < h.cols(); ++c) EXPECT_NEAR(h(i, c), ref.node_embedding[i][c], 1e-10);
  }
}

TEST(Forward, ShapesAndHeadConcatenation) {
  const auto g = graph_of({record("a", 1, "b", 2, {1, 2}), record("b", 2, "c", 3, {3, 4}),
                           record("c", 3, "a", 1, {5, 6})});
  EdgmatModel m(config_for(g, 2, 3, 4));
  Tape tape;
  CounterRng rng(1, "x");
  const auto out = forward(tape, m, g, false, rng);
  EXPECT_EQ(out.logits.value().shape(), (Shape{3, 4}));
  EXPECT_EQ(out.edge_embedding.value().cols(), 2u * 2 * 3);
  EXPECT_EQ(out.node_embedding.value().cols(), 2u * 3);
  EXPECT_EQ(m.edge_embedding_dim(), 12u);
}

TEST(Forward, EmptyGraphGivesEmptyLogits) {
  ModelConfig c;
  c.node_in = 2;
  c.edge_in = 2;
  EdgmatModel m(c);
  const auto logits = eval_logits(m, build_graph({}, InitRule{}));
  EXPECT_EQ(logits.rows(), 0u);
  EXPECT_EQ(logits.cols(), 2u);
}

TEST(Forward, InferenceIsBitReproducible) {
  CounterRng rng(3, "g");
  const auto g = random_graph({}, rng);
  EdgmatModel m(config_for(g, 2, 4));
  EXPECT_EQ(eval_logits(m, g), eval_logits(m, g));
}

TEST(Forward, RejectsMismatchedFeatureWidths) {
  const auto g = graph_of({record("a", 1, "b", 2, {1, 2})});
  ModelConfig c;
  c.node_in = 2;
  c.edge_in = 3;
  EdgmatModel m(c);
  EXPECT_THROW(eval_logits(m, g), ShapeError);
}

TEST(Attention, SingletonNeighbourhoodIsOne) {
  CounterRng rng(4, "g");
  const auto g = graph_of({record("a", 1, "b", 2, {0.3}), record("c", 3, "d", 4, {-2})});
  EdgmatModel m(config_for(g, 2, 3));
  Tape tape;
  const auto out = forward(tape, m, g, false, rng);
  for (const auto& layer : out.attention)
    for (const auto& head : layer) EXPECT_EQ(head.value(), Tensor({2, 1}, 1.0));
}

TEST(Attention, IdenticalInEdgesShareEqually) {
  const auto g = graph_of({record("a", 1, "z", 9, {0.5, 1}), record("a", 1, "z", 9, {0.5, 1}),
                           record("a", 1, "z", 9, {0.5, 1})});
  EdgmatModel m(config_for(g, 2, 2));
  Tape tape;
  CounterRng rng(1, "x");
  const auto out = forward(tape, m, g, false, rng);
  for (const auto& layer : out.attention)
    for (const auto& head : layer)
      for (double a : head.value().data()) EXPECT_NEAR(a, 1.0 / 3.0, 1e-15);
}

TEST(Attention, ConstructedScoresGiveQuarterAndThreeQuarters) {
  // W_n = 0 removes node terms; W_e = 1 and a = (0, 0, 1) make each score the
  // edge feature itself, so features (0, ln 3) give scores (0, ln 3).
  const auto g = graph_of({record("a", 1, "c", 3, {0.0}), record("b", 2, "c", 3, {std::log(3.0)})});
  EdgmatModel m(config_for(g, 1, 1, 2, 1));
  set_layer(m, Tensor::matrix({{0}}), Tensor::matrix({{1}}), Tensor::matrix({{0}, {0}, {1}}),
            Tensor::matrix({{0}}), Tensor::vector({0}));
  Tape tape;
  CounterRng rng(1, "x");
  const auto alpha = forward(tape, m, g, false, rng).attention[0][0].value();
  EXPECT_NEAR(alpha[0], 0.25, 1e-15);
  EXPECT_NEAR(alpha[1], 0.75, 1e-15);
}

TEST(NodeUpdate, NoInEdgesUsesResidualOnly) {
  // Node a has no in-edges: h'_a = ReLU(h_a W_s + b) after the first layer.
  const auto g = graph_of({record("a", 1, "b", 2, {1.0, -1.0})});
  EdgmatModel m(config_for(g, 2, 2));
  auto& l = m.layers()[0];
  for (double& v : l.bias.value.data()) v = -0.3;
  Tape tape;
  CounterRng rng(1, "x");
  const Tensor h = forward(tape, m, g, false, rng).node_embedding.value();
  (void)h;
  Tape t2;
  const auto lo = edgmat_layer(t2, l, g, t2.constant(g.node_features()), t2.constant(g.edge_features()),
                               true, false, 0.0, 0.2, rng);
  const Tensor& out = lo.node.value();
  for (std::size_t c = 0; c < 4; ++c) {
    double v = -0.3;
    for (std::size_t k = 0; k < 2; ++k) v += 1.0 * l.residual.value(k, c);  // h0 = ones
    EXPECT_NEAR(out(0, c), std::max(0.0, v), 1e-15);
  }
}

TEST(NodeUpdate, SingleEdgeWithoutResidualIsProjectedMessage) {
  const auto g = graph_of({record("a", 1, "b", 2, {2.0, -1.0})});
  EdgmatModel m(config_for(g, 1, 2, 2, 1));
  const Tensor wn = Tensor::matrix({{1, 0}, {0, 1}});
  const Tensor we = Tensor::matrix({{0.5, 0}, {0, 2}});
  set_layer(m, wn, we, Tensor::matrix({{0.1}, {0.2}, {0.3}, {0.4}, {0.5}, {0.6}}), Tensor({2, 2}),
            Tensor::vector({0, 0}));
  CounterRng rng(1, "x");
  Tape t;
  const auto lo = edgmat_layer(t, m.layers()[0], g, t.constant(g.node_features()),
                               t.constant(g.edge_features()), true, false, 0.0, 0.2, rng);
  // h_a = (1, 1): W_n h = (1, 1); W_e e = (1, -2); sum = (2, -1) -> ReLU (2, 0).
  EXPECT_EQ(lo.node.value().row(1)[0], 2.0);
  EXPECT_EQ(lo.node.value().row(1)[1], 0.0);
  // Edge embedding with alpha = 1: [W_n h_src || W_e e].
  EXPECT_EQ(lo.edge.value(), Tensor::matrix({{1, 1, 1, -2}}));
}

TEST(NodeUpdate, InvariantToConstantShiftOfScores) {
  CounterRng rng(6, "g");
  const auto g = random_graph({}, rng);
  EdgmatModel m(config_for(g, 2, 3));
  const auto& layer = m.layers()[0];
  Tape t;
  const Var h = t.constant(g.node_features());
  const auto proj = project_heads(t, layer, g, h, t.constant(g.edge_features()));
  std::vector<Var> alpha, shifted;
  for (std::size_t k = 0; k < 2; ++k) {
    const Var parts[] = {proj[k].at_dst, proj[k].at_src, proj[k].edge};
    Tensor scores = ops::matmul(ops::concat(parts, 1), t.parameter(layer.attention[k])).value();
    Tensor moved = scores;
    for (std::size_t e = 0; e < g.edge_count(); ++e) moved[e] += 3.0 + g.edges()[e].dst;
    alpha.push_back(ops::segment_softmax(t.constant(scores), g.by_destination()));
    shifted.push_back(ops::segment_softmax(t.constant(moved), g.by_destination()));
  }
  const Tensor a = node_update(t, layer, g, h, proj, alpha, true).value();
  const Tensor b = node_update(t, layer, g, h, proj, shifted, true).value();
  EXPECT_LE(edgmat::testing::max_abs_diff(a, b), 1e-12);
}

TEST(EdgeUpdate, LinearInAlpha) {
  CounterRng rng(7, "g");
  const auto g = random_graph({}, rng);
  EdgmatModel m(config_for(g, 1, 3));
  Tape t;
  const auto proj = project_heads(t, m.layers()[0], g, t.constant(g.node_features()),
                                  t.constant(g.edge_features()));
  const Var half[] = {t.constant(Tensor({g.edge_count(), 1}, 0.5))};
  const Var one[] = {t.constant(Tensor({g.edge_count(), 1}, 1.0))};
  const Tensor a = edge_update(proj, half).value();
  const Tensor b = edge_update(proj, one).value();
  for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_DOUBLE_EQ(2.0 * a[i], b[i]);
}

TEST(Forward, EmptyNeighbourhoodsNeverProduceNaN) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CounterRng rng(seed, "nan");
    RandomGraphSpec spec;
    spec.max_nodes = 8;
    spec.max_edges = 3;  // most nodes have no in-edges
    const auto g = random_graph(spec, rng);
    EdgmatModel m(config_for(g, 2, 3));
    Tape tape;
    const auto out = forward(tape, m, g, true, rng);
    for (double v : out.node_embedding.value().data()) ASSERT_TRUE(std::isfinite(v));
    for (double v : out.logits.value().data()) ASSERT_TRUE(std::isfinite(v));
  }
}

TEST(Forward, DropoutOnlyInTraining) {
  CounterRng grng(8, "g");
  const auto g = random_graph({}, grng);
  auto cfg = config_for(g, 2, 3);
  cfg.dropout = 0.5;
  EdgmatModel m(cfg);
  Tape t1, t2;
  CounterRng r1(1, "dropout"), r2(1, "dropout");
  const Tensor train_logits = forward(t1, m, g, true, r1).logits.value();
  const Tensor eval = eval_logits(m, g);
  EXPECT_NE(train_logits, eval);
  EXPECT_EQ(forward(t2, m, g, true, r2).logits.value(), train_logits);
}

TEST(ClassWeights, InverseFrequencyOnTrainEdges) {
  std::vector<FlowRecord> train = {record("a", 1, "b", 2, {1}, 0, 0), record("a", 1, "b", 2, {1}, 0, 1),
                                   record("a", 1, "b", 2, {1}, 0, 2), record("a", 1, "b", 2, {1}, 1, 3)};
  std::vector<FlowRecord> test = {record("a", 1, "b", 2, {1}, 2, 4)};
  const auto g = assemble_transductive(train, test, InitRule{});
  std::vector<std::string> warnings;
  const auto w = class_weights(g, 3, &warnings);
  EXPECT_DOUBLE_EQ(w[0], 4.0 / (3 * 3));
  EXPECT_DOUBLE_EQ(w[1], 4.0 / (3 * 1));
  EXPECT_EQ(w[2], 0.0);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("class 2"), std::string::npos);
}

TEST(Decoder, SoftmaxAndArgmaxRules) {
  const Tensor logits = Tensor::matrix({{0, 0, 0}, {0, 10, 0}, {5, 5, 1}});
  const Tensor p = softmax_rows(logits);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(p(0, c), 1.0 / 3.0, 1e-15);
  EXPECT_GT(p(1, 1), 0.9999);
  EXPECT_EQ(argmax_rows(logits), (std::vector<ClassId>{0, 1, 0}));

  const Tensor shifted = Tensor::matrix({{7, 7, 7}, {-3, 7, -3}, {105, 105, 101}});
  EXPECT_LE(edgmat::testing::max_abs_diff(softmax_rows(shifted), p), 1e-15);
  EXPECT_NEAR(softmax_rows(Tensor::matrix({{0, 10}}))(0, 1), 1.0 / (1.0 + std::exp(-10.0)), 1e-15);
}

TEST(Train, ZeroEpochsLeavesInitialisation) {
  CounterRng rng(9, "g");
  const auto g = random_graph({}, rng);
  auto cfg = config_for(g, 2, 3);
  cfg.epochs = 0;
  EdgmatModel m(cfg), fresh(cfg);
  const auto report = train(m, g);
  EXPECT_TRUE(report.loss_trace.empty());
  EXPECT_EQ(m.decoder_weight().value, fresh.decoder_weight().value);
  EXPECT_EQ(m.layers()[0].attention[0].value, fresh.layers()[0].attention[0].value);
}

TEST(Train, LossDecreasesAndTraceIsReproducible) {
  synthetic::ThresholdSpec spec;
  spec.flows = 200;
  const auto recs = synthetic::threshold_flows(spec);
  const auto split = stratified_split(recs, {SplitMode::transductive, 0.7, 1});
  const auto g = assemble_transductive(split.train, split.test, InitRule{});
  auto cfg = config_for(g, 2, 8);
  cfg.epochs = 60;
  EdgmatModel a(cfg), b(cfg);
  const auto ra = train(a, g), rb = train(b, g);
  ASSERT_EQ(ra.loss_trace.size(), 60u);
  EXPECT_LT(ra.loss_trace.back(), ra.loss_trace.front());
  EXPECT_EQ(ra.loss_trace, rb.loss_trace);
}

TEST(Train, RequiresTrainEdges) {
  const std::vector<FlowRecord> r = {record("a", 1, "b", 2)};
  const auto g = build_graph(r, InitRule{}, EdgeMask::test);
  EdgmatModel m(config_for(g, 1, 2));
  EXPECT_THROW(train(m, g), std::invalid_argument);
}

TEST(Predict, OnlyTestEdgesNeededAndShapesMatch) {
  CounterRng rng(10, "g");
  const auto g = random_graph({}, rng);
  EdgmatModel m(config_for(g, 2, 2, 3));
  const auto p = predict(m, g);
  EXPECT_EQ(p.labels.size(), g.edge_count());
  EXPECT_EQ(p.probabilities.shape(), (Shape{g.edge_count(), 3}));
  EXPECT_EQ(p.edge_embedding.cols(), m.edge_embedding_dim());
  EXPECT_EQ(p.labels, argmax_rows(p.logits));
}

TEST(ModelGradient, FullLossOnRandomGraphs) {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const auto r = gradcheck_model(seed);
    EXPECT_LT(r.result.max_error, 1e-4) << "seed " << seed;
    EXPECT_LE(r.nodes, 5u);
    EXPECT_LE(r.edges, 8u);
    for (const auto& g : r.result.groups) EXPECT_LT(g.max_error, 1e-4) << g.name;
  }
}
