#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "edgmat/tensor.hpp"

namespace edgmat {

class ProjectionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Pca2 {
  std::array<std::vector<double>, 2> components;  // unit loadings, length D
  std::array<double, 2> variances{};              // population variance along each
  Tensor coordinates;                             // N x 2
};

/// Top-2 principal components of the mean-centred rows of `x` by power
/// iteration with deflation. Each component's largest-magnitude loading is
/// made positive.
Pca2 pca2(const Tensor& x, double tolerance = 1e-9, std::size_t max_iterations = 1000);

}  // namespace edgmat
