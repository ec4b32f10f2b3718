#include "edgmat/flow_graph.hpp"

#include <cstdio>
#include <functional>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

namespace edgmat {

namespace {

struct SocketKeyHash {
  std::size_t operator()(const SocketKey& k) const noexcept {
    return std::hash<std::string>{}(k.ip) * 31u + k.port;
  }
};

class GraphBuilder {
 public:
  explicit GraphBuilder(const InitRule& init) : init_(init) {}

  void add(std::span<const FlowRecord> records, EdgeMask mask) {
    for (const auto& r : records) {
      if (!edge_dim_set_) {
        edge_dim_ = r.features.size();
        edge_dim_set_ = true;
      } else if (r.features.size() != edge_dim_) {
        throw std::invalid_argument("record " + std::to_string(r.row_index) + " has " +
                                    std::to_string(r.features.size()) +
                                    " features, expected " + std::to_string(edge_dim_));
      }
      const NodeId src = node_for({r.src_ip, r.src_port});
      const NodeId dst = node_for({r.dst_ip, r.dst_port});
      edges_.push_back({src, dst, r.features, r.label, r.row_index, mask});
    }
  }

  FlowGraph finish() {
    const std::size_t dim = init_.dim ? init_.dim : edge_dim_;
    for (auto& n : nodes_) n.h0.assign(dim, init_.fill());
    return FlowGraph::from_parts(std::move(nodes_), std::move(edges_));
  }

 private:
  NodeId node_for(SocketKey key) {
    auto [it, inserted] = index_.try_emplace(key, static_cast<NodeId>(nodes_.size()));
    if (inserted) nodes_.push_back({std::move(key), it->second, {}});
    return it->second;
  }

  InitRule init_;
  std::unordered_map<SocketKey, NodeId, SocketKeyHash> index_;
  std::vector<SocketNode> nodes_;
  std::vector<FlowEdge> edges_;
  std::size_t edge_dim_ = 0;
  bool edge_dim_set_ = false;
};

void check_disjoint(std::span<const FlowRecord> train, std::span<const FlowRecord> test) {
  std::unordered_set<std::size_t> seen;
  for (const auto& r : train) seen.insert(r.row_index);
  for (const auto& r : test) {
    if (seen.contains(r.row_index)) {
      throw std::invalid_argument("record " + std::to_string(r.row_index) +
                                  " appears in both train and test");
    }
  }
}

}  // namespace

std::string_view to_string(EdgeMask m) noexcept {
  switch (m) {
    case EdgeMask::train: return "train";
    case EdgeMask::test: return "test";
    case EdgeMask::none: break;
  }
  return "none";
}

InitRule InitRule::parse(std::string_view text) {
  InitRule r;
  if (text == "ones") {
    r.kind = Kind::ones;
  } else if (text == "zeros") {
    r.kind = Kind::zeros;
    r.value = 0.0;
  } else if (text.starts_with("constant:")) {
    r.kind = Kind::constant;
    r.value = parse_double(text.substr(9));
  } else {
    throw std::invalid_argument("unknown node init '" + std::string(text) +
                                "' (expected ones, zeros or constant:<c>)");
  }
  return r;
}

std::string InitRule::to_string() const {
  switch (kind) {
    case Kind::ones: return "ones";
    case Kind::zeros: return "zeros";
    case Kind::constant: break;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "constant:%.17g", value);
  return buf;
}

double InitRule::fill() const noexcept {
  switch (kind) {
    case Kind::ones: return 1.0;
    case Kind::zeros: return 0.0;
    case Kind::constant: break;
  }
  return value;
}

FlowGraph::FlowGraph()
    : dst_(std::make_shared<Segments>(Segments::build({}, 0))),
      src_(std::make_shared<Segments>(Segments::build({}, 0))) {}

FlowGraph FlowGraph::from_parts(std::vector<SocketNode> nodes, std::vector<FlowEdge> edges) {
  const std::size_t n = nodes.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (nodes[i].index != i) throw std::invalid_argument("node indices must be dense and ordered");
    if (nodes[i].h0.size() != nodes.front().h0.size()) {
      throw std::invalid_argument("node feature widths differ");
    }
  }
  std::vector<std::uint32_t> dst_ids(edges.size()), src_ids(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].src >= n || edges[e].dst >= n) {
      throw std::invalid_argument("edge " + std::to_string(e) + " references a missing node");
    }
    if (edges[e].features.size() != edges.front().features.size()) {
      throw std::invalid_argument("edge feature widths differ");
    }
    dst_ids[e] = edges[e].dst;
    src_ids[e] = edges[e].src;
  }
  FlowGraph g;
  g.nodes_ = std::move(nodes);
  g.edges_ = std::move(edges);
  g.dst_ = std::make_shared<Segments>(Segments::build(std::move(dst_ids), n));
  g.src_ = std::make_shared<Segments>(Segments::build(std::move(src_ids), n));
  return g;
}

std::size_t FlowGraph::node_feature_dim() const noexcept {
  return nodes_.empty() ? 0 : nodes_.front().h0.size();
}

std::size_t FlowGraph::edge_feature_dim() const noexcept {
  return edges_.empty() ? 0 : edges_.front().features.size();
}

std::span<const std::uint32_t> FlowGraph::in_edges(NodeId node) const {
  if (node >= nodes_.size()) {
    throw std::out_of_range("node " + std::to_string(node) + " out of range (graph has " +
                            std::to_string(nodes_.size()) + " nodes)");
  }
  return dst_->of(node);
}

Tensor FlowGraph::node_features() const {
  const std::size_t d = node_feature_dim();
  Tensor t({nodes_.size(), d});
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    std::copy(nodes_[i].h0.begin(), nodes_[i].h0.end(), t.row(i).begin());
  }
  return t;
}

Tensor FlowGraph::edge_features() const {
  const std::size_t d = edge_feature_dim();
  Tensor t({edges_.size(), d});
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    std::copy(edges_[e].features.begin(), edges_[e].features.end(), t.row(e).begin());
  }
  return t;
}

std::vector<EdgeId> FlowGraph::edges_with_mask(EdgeMask mask) const {
  std::vector<EdgeId> out;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edges_[e].mask == mask) out.push_back(static_cast<EdgeId>(e));
  }
  return out;
}

void FlowGraph::dump(std::ostream& out) const {
  for (const auto& n : nodes_) out << "node " << n.index << ' ' << n.key.ip << ' ' << n.key.port << '\n';
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto& ed = edges_[e];
    out << "edge " << e << ' ' << ed.src << ' ' << ed.dst << ' ' << ed.label << ' '
        << to_string(ed.mask) << '\n';
  }
}

FlowGraph build_graph(std::span<const FlowRecord> records, const InitRule& init, EdgeMask mask) {
  GraphBuilder b(init);
  b.add(records, mask);
  return b.finish();
}

FlowGraph assemble_transductive(std::span<const FlowRecord> train,
                                std::span<const FlowRecord> test, const InitRule& init) {
  check_disjoint(train, test);
  GraphBuilder b(init);
  b.add(train, EdgeMask::train);
  b.add(test, EdgeMask::test);
  return b.finish();
}

std::pair<FlowGraph, FlowGraph> assemble_inductive(std::span<const FlowRecord> train,
                                                   std::span<const FlowRecord> test,
                                                   const InitRule& init) {
  check_disjoint(train, test);
  return {build_graph(train, init, EdgeMask::train), build_graph(test, init, EdgeMask::test)};
}

}  // namespace edgmat
