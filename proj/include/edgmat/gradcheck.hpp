#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "edgmat/autograd.hpp"

namespace edgmat {

struct GradcheckResult {
  struct Group {
    std::string name;
    double max_error = 0.0;
  };
  std::vector<Group> groups;  // one per parameter, in the order given
  double max_error = 0.0;
  /// Smallest distance of any ReLU/LeakyReLU input from its kink at the base point.
  double min_kink_distance = 0.0;
};

/// Builds a scalar loss on a fresh tape from the parameters' current values.
using LossBuilder = std::function<Var(Tape&)>;

/// Compares reverse-mode gradients with central differences of step h.
///
/// Error per element is |g_ad - g_fd| / max(1, |g_ad|, |g_fd|). The builder is
/// called once for the analytic pass and twice per parameter element; it must
/// be deterministic (reseed any dropout stream inside it).
GradcheckResult gradcheck(std::span<Parameter* const> params, const LossBuilder& loss,
                          double h = 1e-6);

}  // namespace edgmat
