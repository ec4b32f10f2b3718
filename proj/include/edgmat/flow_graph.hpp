#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "edgmat/flow_ingest.hpp"
#include "edgmat/kernels.hpp"
#include "edgmat/tensor.hpp"

namespace edgmat {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

enum class EdgeMask : std::uint8_t { none, train, test };

std::string_view to_string(EdgeMask m) noexcept;

struct SocketKey {
  std::string ip;
  std::uint16_t port = 0;

  friend auto operator<=>(const SocketKey&, const SocketKey&) = default;
};

struct SocketNode {
  SocketKey key;
  NodeId index = 0;
  std::vector<double> h0;
};

struct FlowEdge {
  NodeId src = 0;
  NodeId dst = 0;
  std::vector<double> features;
  ClassId label = 0;
  std::size_t record_index = 0;
  EdgeMask mask = EdgeMask::none;
};

/// Initial node features. `dim == 0` means "same as the edge feature width".
struct InitRule {
  enum class Kind { ones, zeros, constant };
  Kind kind = Kind::ones;
  double value = 1.0;
  std::size_t dim = 0;

  static InitRule parse(std::string_view text);  // "ones", "zeros", "constant:<c>"
  std::string to_string() const;
  double fill() const noexcept;
};

/// Directed socket multigraph with CSR in-adjacency. Immutable once built.
class FlowGraph {
 public:
  FlowGraph();

  /// Validates endpoints and builds the adjacency. Node indices must be dense
  /// and equal to their position.
  static FlowGraph from_parts(std::vector<SocketNode> nodes, std::vector<FlowEdge> edges);

  std::span<const SocketNode> nodes() const noexcept { return nodes_; }
  std::span<const FlowEdge> edges() const noexcept { return edges_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::size_t node_feature_dim() const noexcept;
  std::size_t edge_feature_dim() const noexcept;

  /// Edge ids arriving at `node`, in insertion order. Throws std::out_of_range.
  std::span<const std::uint32_t> in_edges(NodeId node) const;
  std::span<const std::size_t> in_offsets() const noexcept { return dst_->offsets; }
  std::span<const std::uint32_t> in_edge_ids() const noexcept { return dst_->members; }

  /// Edges grouped by destination (the attention neighbourhood) / by source.
  const std::shared_ptr<const Segments>& by_destination() const noexcept { return dst_; }
  const std::shared_ptr<const Segments>& by_source() const noexcept { return src_; }

  Tensor node_features() const;
  Tensor edge_features() const;
  std::vector<EdgeId> edges_with_mask(EdgeMask mask) const;

  /// "node <index> <ip> <port>" lines then "edge <id> <src> <dst> <label> <mask>" lines.
  void dump(std::ostream& out) const;

 private:
  std::vector<SocketNode> nodes_;
  std::vector<FlowEdge> edges_;
  std::shared_ptr<const Segments> dst_;
  std::shared_ptr<const Segments> src_;
};

FlowGraph build_graph(std::span<const FlowRecord> records, const InitRule& init,
                      EdgeMask mask = EdgeMask::none);

/// One graph over train and test; edges masked by origin.
FlowGraph assemble_transductive(std::span<const FlowRecord> train,
                                std::span<const FlowRecord> test, const InitRule& init);

/// Independent train and test graphs.
std::pair<FlowGraph, FlowGraph> assemble_inductive(std::span<const FlowRecord> train,
                                                   std::span<const FlowRecord> test,
                                                   const InitRule& init);

}  // namespace edgmat
