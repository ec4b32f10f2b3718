#include "edgmat/optim.hpp"

#include <cmath>

namespace edgmat {

Parameter::Parameter(std::string name_, Tensor init)
    : name(std::move(name_)),
      value(std::move(init)),
      grad(value.shape()),
      adam_m(value.shape()),
      adam_v(value.shape()) {}

void adam_step(std::span<Parameter* const> params, const AdamOptions& opts) {
  for (Parameter* p : params) {
    ++p->step_count;
    const double t = static_cast<double>(p->step_count);
    const double bc1 = 1.0 - std::pow(opts.beta1, t);
    const double bc2 = 1.0 - std::pow(opts.beta2, t);
    auto value = p->value.data();
    auto grad = p->grad.data();
    auto m = p->adam_m.data();
    auto v = p->adam_v.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g;
      v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      value[i] -= opts.lr * m_hat / (std::sqrt(v_hat) + opts.eps);
    }
    p->zero_grad();
  }
}

}  // namespace edgmat
