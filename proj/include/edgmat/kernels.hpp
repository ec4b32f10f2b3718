#pragma once

// Numeric kernels behind the autodiff ops.
//
// Every kernel exists twice with identical signatures: `serial::` is the
// straightforward reference loop, `parallel::` is the OpenMP version used by
// the engine. The parallel variants partition work by output element (row,
// segment) and keep each element's reduction order identical to the serial
// loop, so both produce bit-identical results for any thread count. The test
// suite asserts exact equality between the two.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace edgmat {

/// Grouping of items (edges) by segment (node), CSR style.
///
/// `members[offsets[s] .. offsets[s+1])` lists the items of segment s in
/// ascending item order.
struct Segments {
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> members;

  static Segments build(std::vector<std::uint32_t> ids, std::size_t segment_count);

  std::size_t count() const noexcept { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t items() const noexcept { return ids.size(); }
  std::span<const std::uint32_t> of(std::size_t s) const noexcept {
    return {members.data() + offsets[s], offsets[s + 1] - offsets[s]};
  }
};

namespace kernels {

#define EDGMAT_KERNEL_DECLS                                                                  \
  /* C = A(n x k) * B(k x m) */                                                              \
  void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,     \
              std::size_t n, std::size_t k, std::size_t m);                                  \
  /* dA(n x k) += dC(n x m) * B^T */                                                         \
  void matmul_grad_a(std::span<const double> dc, std::span<const double> b,                  \
                     std::span<double> da, std::size_t n, std::size_t k, std::size_t m);     \
  /* dB(k x m) += A^T * dC */                                                                \
  void matmul_grad_b(std::span<const double> a, std::span<const double> dc,                  \
                     std::span<double> db, std::size_t n, std::size_t k, std::size_t m);     \
  /* out[i] = x[idx[i]] */                                                                   \
  void gather_rows(std::span<const double> x, std::span<const std::uint32_t> idx,            \
                   std::span<double> out, std::size_t cols);                                 \
  /* out[s] += sum of x[i] over items i of segment s */                                      \
  void scatter_add_rows(std::span<const double> x, const Segments& seg,                      \
                        std::span<double> out, std::size_t cols);                            \
  /* max-shifted softmax within each segment */                                              \
  void segment_softmax(std::span<const double> scores, const Segments& seg,                  \
                       std::span<double> out);                                               \
  /* dscores += J^T dalpha, per segment */                                                   \
  void segment_softmax_backward(std::span<const double> alpha,                               \
                                std::span<const double> dalpha, const Segments& seg,         \
                                std::span<double> dscores);                                  \
  /* out[i] = s[i] * x[i] */                                                                 \
  void scale_rows(std::span<const double> x, std::span<const double> s,                      \
                  std::span<double> out, std::size_t cols);                                  \
  /* inverted dropout; keep[i] is 1/(1-p) or 0 */                                            \
  void dropout(std::span<const double> x, double p, std::uint64_t key,                       \
               std::uint64_t base_counter, std::span<double> out, std::span<double> keep);

namespace serial {
EDGMAT_KERNEL_DECLS
}  // namespace serial

namespace parallel {
EDGMAT_KERNEL_DECLS
}  // namespace parallel

#undef EDGMAT_KERNEL_DECLS

}  // namespace kernels
}  // namespace edgmat
