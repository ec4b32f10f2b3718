#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "edgmat/tensor.hpp"

namespace edgmat {

/// Learnable tensor with its gradient buffer and Adam moments.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  Tensor adam_m;
  Tensor adam_v;
  std::uint64_t step_count = 0;

  Parameter() = default;
  Parameter(std::string name, Tensor init);

  void zero_grad() noexcept { grad.fill(0.0); }
};

struct AdamOptions {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of every parameter, then zeroes the grads.
void adam_step(std::span<Parameter* const> params, const AdamOptions& opts);

}  // namespace edgmat
