#include "edgmat/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace edgmat {

namespace k = kernels::parallel;

const Tensor& Var::value() const { return tape->value(id); }

Var Tape::constant(Tensor value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(const Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {this, it->second};
  Node n;
  n.op = "parameter";
  n.value = p.value;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

Var Tape::push(std::string_view op, std::vector<std::size_t> inputs, Tensor value,
               Backward backward) {
  Node n;
  n.op = op;
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                [this](std::size_t i) { return nodes_[i].requires_grad; });
  n.inputs = std::move(inputs);
  n.value = std::move(value);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

const Tensor* Tape::grad_if(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.has_grad ? &n.grad : nullptr;
}

const Tensor* Tape::gradient_of(const Parameter& p) const {
  auto it = param_nodes_.find(&p);
  return it == param_nodes_.end() ? nullptr : grad_if(it->second);
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("backward: variable from another tape");
  if (value(loss).numel() != 1) {
    throw ShapeError("backward: loss must be a scalar, got " + shape_string(value(loss).shape()));
  }
  grad(loss.id).fill(1.0);
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.has_grad && n.backward) n.backward(*this, id);
  }
}

namespace ops {

namespace {

Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) {
    throw std::invalid_argument("operands recorded on different tapes");
  }
  return *a.tape;
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
  }
}

void axpy(std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += x[i];
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: inner dimensions differ: " + shape_string(av.shape()) + " * " +
                     shape_string(bv.shape()));
  }
  const std::size_t n = av.rows(), kk = av.cols(), m = bv.cols();
  Tensor out({n, m});
  k::matmul(av.data(), bv.data(), out.data(), n, kk, m);
  return t.push("matmul", {a.id, b.id}, std::move(out),
                [a = a.id, b = b.id, n, kk, m](Tape& tp, std::size_t self) {
                  const Tensor& dc = tp.grad(self);
                  if (tp.requires_grad(a)) {
                    k::matmul_grad_a(dc.data(), tp.value(b).data(), tp.grad(a).data(), n, kk, m);
                  }
                  if (tp.requires_grad(b)) {
                    k::matmul_grad_b(tp.value(a).data(), dc.data(), tp.grad(b).data(), n, kk, m);
                  }
                });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  if (!av.same_shape(bv)) {
    throw ShapeError("add: shapes differ: " + shape_string(av.shape()) + " vs " +
                     shape_string(bv.shape()));
  }
  Tensor out = av;
  axpy(bv.data(), out.data());
  return t.push("add", {a.id, b.id}, std::move(out), [a = a.id, b = b.id](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    if (tp.requires_grad(a)) axpy(g.data(), tp.grad(a).data());
    if (tp.requires_grad(b)) axpy(g.data(), tp.grad(b).data());
  });
}

Var add_row_bias(Var x, Var bias) {
  Tape& t = tape_of(x, bias);
  const Tensor& xv = t.value(x);
  const Tensor& bv = t.value(bias);
  require_rank2(xv, "add_row_bias");
  const std::size_t n = xv.rows(), m = xv.cols();
  if (bv.numel() != m) {
    throw ShapeError("add_row_bias: bias length " + std::to_string(bv.numel()) + " != width " +
                     std::to_string(m));
  }
  Tensor out = xv;
  for (std::size_t i = 0; i < n; ++i) axpy(bv.data(), out.row(i));
  return t.push("add_row_bias", {x.id, bias.id}, std::move(out),
                [x = x.id, b = bias.id, n, m](Tape& tp, std::size_t self) {
                  const Tensor& g = tp.grad(self);
                  if (tp.requires_grad(x)) axpy(g.data(), tp.grad(x).data());
                  if (tp.requires_grad(b)) {
                    auto db = tp.grad(b).data();
                    for (std::size_t i = 0; i < n; ++i) {
                      for (std::size_t j = 0; j < m; ++j) db[j] += g(i, j);
                    }
                  }
                });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  if (!av.same_shape(bv)) throw ShapeError("mul: shapes differ");
  Tensor out = av;
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= bv[i];
  return t.push("mul", {a.id, b.id}, std::move(out), [a = a.id, b = b.id](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    const Tensor& av = tp.value(a);
    const Tensor& bv = tp.value(b);
    if (tp.requires_grad(a)) {
      Tensor& da = tp.grad(a);
      for (std::size_t i = 0; i < g.numel(); ++i) da[i] += g[i] * bv[i];
    }
    if (tp.requires_grad(b)) {
      Tensor& db = tp.grad(b);
      for (std::size_t i = 0; i < g.numel(); ++i) db[i] += g[i] * av[i];
    }
  });
}

Var sum(Var x) {
  Tape& t = *x.tape;
  double s = 0.0;
  for (double v : t.value(x).data()) s += v;
  return t.push("sum", {x.id}, Tensor::scalar(s), [x = x.id](Tape& tp, std::size_t self) {
    const double g = tp.grad(self).item();
    for (double& d : tp.grad(x).data()) d += g;
  });
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  if (axis != 0 && axis != 1) throw std::invalid_argument("concat: axis must be 0 or 1");
  Tape& t = *parts.front().tape;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> extent;  // rows (axis 0) or cols (axis 1) per part
  const Tensor& first = t.value(parts.front());
  const std::size_t fixed = axis == 0 ? first.cols() : first.rows();
  std::size_t total = 0;
  for (Var p : parts) {
    tape_of(parts.front(), p);
    const Tensor& v = t.value(p);
    if (v.rank() > 2) throw ShapeError("concat: rank > 2");
    const std::size_t other = axis == 0 ? v.cols() : v.rows();
    if (other != fixed) {
      throw ShapeError("concat: non-concatenated dimension differs: " + shape_string(v.shape()) +
                       " vs " + shape_string(first.shape()));
    }
    ids.push_back(p.id);
    extent.push_back(axis == 0 ? v.rows() : v.cols());
    total += extent.back();
  }
  if (parts.size() == 1) {
    Tensor out = first;
    return t.push("concat", std::move(ids), std::move(out), [x = parts.front().id](Tape& tp, std::size_t self) {
      axpy(tp.grad(self).data(), tp.grad(x).data());
    });
  }
  const std::size_t rows = axis == 0 ? total : fixed;
  const std::size_t cols = axis == 0 ? fixed : total;
  Tensor out({rows, cols});
  if (axis == 0) {
    std::size_t r0 = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const auto src = t.value(ids[p]).data();
      std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(r0 * cols));
      r0 += extent[p];
    }
  } else {
    std::size_t c0 = 0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      const Tensor& v = t.value(ids[p]);
      const std::size_t w = extent[p];
      for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(v.data().data() + r * w, w, out.data().data() + r * cols + c0);
      }
      c0 += w;
    }
  }
  auto saved_ids = ids;
  return t.push("concat", std::move(ids), std::move(out),
                [ids = std::move(saved_ids), extent, axis, rows, cols](Tape& tp, std::size_t self) {
                  const Tensor& g = tp.grad(self);
                  std::size_t off = 0;
                  for (std::size_t p = 0; p < ids.size(); ++p) {
                    const std::size_t e = extent[p];
                    if (tp.requires_grad(ids[p])) {
                      auto d = tp.grad(ids[p]).data();
                      if (axis == 0) {
                        for (std::size_t i = 0; i < e * cols; ++i) d[i] += g[off * cols + i];
                      } else {
                        for (std::size_t r = 0; r < rows; ++r) {
                          for (std::size_t c = 0; c < e; ++c) d[r * e + c] += g(r, off + c);
                        }
                      }
                    }
                    off += e;
                  }
                });
}

Var leaky_relu(Var x, double slope) {
  if (!(slope >= 0.0)) throw std::invalid_argument("leaky_relu: slope must be >= 0");
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  Tensor out(xv.shape());
  double kink = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xv.numel(); ++i) {
    out[i] = xv[i] > 0.0 ? xv[i] : slope * xv[i];
    kink = std::min(kink, std::abs(xv[i]));
  }
  t.note_kink_distance(kink);
  return t.push(slope == 0.0 ? "relu" : "leaky_relu", {x.id}, std::move(out),
                [x = x.id, slope](Tape& tp, std::size_t self) {
                  const Tensor& g = tp.grad(self);
                  const Tensor& xv = tp.value(x);
                  Tensor& dx = tp.grad(x);
                  for (std::size_t i = 0; i < g.numel(); ++i) {
                    dx[i] += xv[i] > 0.0 ? g[i] : slope * g[i];
                  }
                });
}

Var relu(Var x) { return leaky_relu(x, 0.0); }

Var gather_rows(Var x, std::shared_ptr<const Segments> index) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  if (index->count() != xv.rows()) {
    throw ShapeError("gather_rows: index built for " + std::to_string(index->count()) +
                     " rows, input has " + std::to_string(xv.rows()));
  }
  const std::size_t cols = xv.cols();
  Tensor out({index->items(), cols});
  k::gather_rows(xv.data(), index->ids, out.data(), cols);
  return t.push("gather_rows", {x.id}, std::move(out),
                [x = x.id, index = std::move(index), cols](Tape& tp, std::size_t self) {
                  k::scatter_add_rows(tp.grad(self).data(), *index, tp.grad(x).data(), cols);
                });
}

Var segment_sum(Var x, std::shared_ptr<const Segments> seg) {
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  if (seg->items() != xv.rows()) {
    throw ShapeError("segment_sum: " + std::to_string(seg->items()) + " segment ids for " +
                     std::to_string(xv.rows()) + " rows");
  }
  const std::size_t cols = xv.cols();
  Tensor out({seg->count(), cols});
  k::scatter_add_rows(xv.data(), *seg, out.data(), cols);
  return t.push("segment_sum", {x.id}, std::move(out),
                [x = x.id, seg = std::move(seg), cols](Tape& tp, std::size_t self) {
                  std::vector<double> tmp(seg->items() * cols);
                  k::gather_rows(tp.grad(self).data(), seg->ids, tmp, cols);
                  axpy(tmp, tp.grad(x).data());
                });
}

Var segment_softmax(Var scores, std::shared_ptr<const Segments> seg) {
  Tape& t = *scores.tape;
  const Tensor& sv = t.value(scores);
  if (sv.numel() != seg->items()) {
    throw ShapeError("segment_softmax: " + std::to_string(sv.numel()) + " scores for " +
                     std::to_string(seg->items()) + " segment ids");
  }
  Tensor out(sv.shape());
  k::segment_softmax(sv.data(), *seg, out.data());
  return t.push("segment_softmax", {scores.id}, std::move(out),
                [s = scores.id, seg = std::move(seg)](Tape& tp, std::size_t self) {
                  k::segment_softmax_backward(tp.value(self).data(), tp.grad(self).data(), *seg,
                                              tp.grad(s).data());
                });
}

Var scale_rows(Var x, Var s) {
  Tape& t = tape_of(x, s);
  const Tensor& xv = t.value(x);
  const Tensor& sv = t.value(s);
  if (sv.numel() != xv.rows()) {
    throw ShapeError("scale_rows: " + std::to_string(sv.numel()) + " scales for " +
                     std::to_string(xv.rows()) + " rows");
  }
  const std::size_t cols = xv.cols();
  Tensor out(xv.shape());
  k::scale_rows(xv.data(), sv.data(), out.data(), cols);
  return t.push("scale_rows", {x.id, s.id}, std::move(out),
                [x = x.id, s = s.id, cols](Tape& tp, std::size_t self) {
                  const Tensor& g = tp.grad(self);
                  const Tensor& sv = tp.value(s);
                  const std::size_t n = sv.numel();
                  if (tp.requires_grad(x)) {
                    std::vector<double> tmp(n * cols);
                    k::scale_rows(g.data(), sv.data(), tmp, cols);
                    axpy(tmp, tp.grad(x).data());
                  }
                  if (tp.requires_grad(s)) {
                    const Tensor& xv = tp.value(x);
                    Tensor& ds = tp.grad(s);
                    for (std::size_t i = 0; i < n; ++i) {
                      double acc = 0.0;
                      for (std::size_t j = 0; j < cols; ++j) acc += g[i * cols + j] * xv[i * cols + j];
                      ds[i] += acc;
                    }
                  }
                });
}

Var dropout(Var x, double p, bool training, CounterRng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout: p must lie in [0, 1)");
  if (!training || p == 0.0) return x;
  Tape& t = *x.tape;
  const Tensor& xv = t.value(x);
  Tensor out(xv.shape());
  auto keep = std::make_shared<std::vector<double>>(xv.numel());
  const std::uint64_t base = rng.reserve(xv.numel());
  k::dropout(xv.data(), p, rng.key(), base, out.data(), *keep);
  return t.push("dropout", {x.id}, std::move(out), [x = x.id, keep](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad(self);
    Tensor& dx = tp.grad(x);
    for (std::size_t i = 0; i < g.numel(); ++i) dx[i] += g[i] * (*keep)[i];
  });
}

Var weighted_cross_entropy(Var logits, std::span<const std::uint32_t> labels,
                           std::span<const double> class_weights) {
  Tape& t = *logits.tape;
  const Tensor& z = t.value(logits);
  require_rank2(z, "weighted_cross_entropy");
  const std::size_t n = z.rows(), c = z.cols();
  if (labels.size() != n) {
    throw ShapeError("weighted_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  }
  if (class_weights.size() != c) {
    throw ShapeError("weighted_cross_entropy: " + std::to_string(class_weights.size()) +
                     " class weights for " + std::to_string(c) + " classes");
  }
  for (double w : class_weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("weighted_cross_entropy: negative class weight");
  }
  double weight_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= c) {
      throw std::out_of_range("weighted_cross_entropy: label " + std::to_string(labels[i]) +
                              " at row " + std::to_string(i) + " >= class count " +
                              std::to_string(c));
    }
    weight_total += class_weights[labels[i]];
  }
  if (!(weight_total > 0.0)) {
    throw std::invalid_argument("weighted_cross_entropy: total sample weight is zero");
  }

  auto probs = std::make_shared<Tensor>(z.shape());
  std::vector<double> row_loss(n);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n * c > (1 << 14))
  for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto zi = z.row(i);
    const double mx = *std::max_element(zi.begin(), zi.end());
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(zi[j] - mx);
    const double log_s = std::log(s);
    for (std::size_t j = 0; j < c; ++j) (*probs)(i, j) = std::exp(zi[j] - mx - log_s);
    row_loss[i] = class_weights[labels[i]] * (mx + log_s - zi[labels[i]]);
  }
  double loss = 0.0;
  for (double l : row_loss) loss += l;
  loss /= weight_total;

  std::vector<std::uint32_t> y(labels.begin(), labels.end());
  std::vector<double> w(class_weights.begin(), class_weights.end());
  return t.push("weighted_cross_entropy", {logits.id}, Tensor::scalar(loss),
                [l = logits.id, probs, y = std::move(y), w = std::move(w), weight_total, c](
                    Tape& tp, std::size_t self) {
                  const double g = tp.grad(self).item() / weight_total;
                  Tensor& dz = tp.grad(l);
                  for (std::size_t i = 0; i < y.size(); ++i) {
                    const double wi = w[y[i]] * g;
                    for (std::size_t j = 0; j < c; ++j) {
                      dz(i, j) += wi * ((*probs)(i, j) - (j == y[i] ? 1.0 : 0.0));
                    }
                  }
                });
}

}  // namespace ops
}  // namespace edgmat
