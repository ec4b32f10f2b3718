#include "edgmat/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace edgmat {

namespace {

double evaluate(const LossBuilder& loss) {
  Tape tape;
  return tape.value(loss(tape)).item();
}

}  // namespace

GradcheckResult gradcheck(std::span<Parameter* const> params, const LossBuilder& loss, double h) {
  GradcheckResult result;

  std::vector<Tensor> analytic;
  {
    Tape tape;
    Var l = loss(tape);
    tape.backward(l);
    result.min_kink_distance = tape.min_kink_distance();
    for (const Parameter* p : params) {
      const Tensor* g = tape.gradient_of(*p);
      analytic.push_back(g ? *g : Tensor(p->value.shape()));
    }
  }

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    GradcheckResult::Group group{p.name, 0.0};
    for (std::size_t i = 0; i < p.value.numel(); ++i) {
      const double orig = p.value[i];
      p.value[i] = orig + h;
      const double up = evaluate(loss);
      p.value[i] = orig - h;
      const double down = evaluate(loss);
      p.value[i] = orig;
      const double fd = (up - down) / (2.0 * h);
      const double ad = analytic[pi][i];
      const double err = std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
      group.max_error = std::max(group.max_error, err);
    }
    result.max_error = std::max(result.max_error, group.max_error);
    result.groups.push_back(std::move(group));
  }
  return result;
}

}  // namespace edgmat
