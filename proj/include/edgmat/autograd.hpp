#pragma once

// Reverse-mode automatic differentiation over a linear tape.
//
// Ops append a node holding the forward value, the input ids and a backward
// closure. Tape::backward walks the nodes in strict reverse order, so the tape
// is a DAG in execution order by construction.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "edgmat/kernels.hpp"
#include "edgmat/optim.hpp"
#include "edgmat/rng.hpp"
#include "edgmat/tensor.hpp"

namespace edgmat {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf bound to a parameter; its gradient is readable after backward().
  Var parameter(const Parameter& p);

  Var push(std::string_view op, std::vector<std::size_t> inputs, Tensor value, Backward backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::string_view op(std::size_t id) const { return nodes_[id].op; }
  std::span<const std::size_t> inputs(std::size_t id) const { return nodes_[id].inputs; }

  /// Gradient buffer of a node, allocated (zeroed) on first access.
  Tensor& grad(std::size_t id);
  /// Null if the node received no gradient.
  const Tensor* grad_if(std::size_t id) const;
  const Tensor* gradient_of(const Parameter& p) const;

  /// Seeds d(loss)/d(loss) = 1 and runs every backward closure in reverse.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Smallest |pre-activation| seen by a piecewise-linear op on this tape.
  double min_kink_distance() const noexcept { return min_kink_; }
  void note_kink_distance(double d) noexcept {
    if (d < min_kink_) min_kink_ = d;
  }

 private:
  struct Node {
    std::string_view op;
    std::vector<std::size_t> inputs;
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    Backward backward;
  };

  std::deque<Node> nodes_;  // deque: values stay addressable while the tape grows
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
  double min_kink_ = std::numeric_limits<double>::infinity();
};

namespace ops {

Var matmul(Var a, Var b);
Var add(Var a, Var b);
/// x[n x m] + b[m] broadcast over rows.
Var add_row_bias(Var x, Var bias);
Var mul(Var a, Var b);
Var sum(Var x);
/// Concatenation of rank-2 tensors along axis 0 (rows) or 1 (columns).
Var concat(std::span<const Var> parts, int axis);
Var leaky_relu(Var x, double slope);
Var relu(Var x);
/// out[i] = x[index[i]]; `index` groups items by source row for the backward.
Var gather_rows(Var x, std::shared_ptr<const Segments> index);
/// out[s] = sum of rows of x whose segment id is s.
Var segment_sum(Var x, std::shared_ptr<const Segments> seg);
/// Softmax within each segment over a vector of per-item scores.
Var segment_softmax(Var scores, std::shared_ptr<const Segments> seg);
/// Row i of x scaled by s[i]; s has one entry per row.
Var scale_rows(Var x, Var s);
/// Inverted dropout; identity when !training or p == 0.
Var dropout(Var x, double p, bool training, CounterRng& rng);
/// Class-weighted mean cross-entropy over the rows of logits.
Var weighted_cross_entropy(Var logits, std::span<const std::uint32_t> labels,
                           std::span<const double> class_weights);

}  // namespace ops
}  // namespace edgmat
