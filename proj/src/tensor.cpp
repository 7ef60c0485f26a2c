#include "twix/tensor.hpp"

namespace twix {

namespace detail {

bool& exact_reduction_flag() {
  static bool enabled = true;
  return enabled;
}

}  // namespace detail

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), {});
    state.v.assign(params.size(), {});
    for (std::size_t p = 0; p < params.size(); ++p) {
      state.m[p].assign(params[p].size(), 0.0);
      state.v[p].assign(params[p].size(), 0.0);
    }
    state.step = 0;
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& param = params[p];
    if (param.size() != state.m[p].size())
      throw NumericError("adam_step: parameter shape changed between steps");
    const std::vector<double>& g = param.grad();
    std::vector<double>& values = param.values_mut();
    for (std::size_t i = 0; i < values.size(); ++i) {
      state.m[p][i] = beta1 * state.m[p][i] + (1.0 - beta1) * g[i];
      state.v[p][i] = beta2 * state.v[p][i] + (1.0 - beta2) * g[i] * g[i];
      const double mhat = state.m[p][i] / bc1;
      const double vhat = state.v[p][i] / bc2;
      values[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    param.check_finite("adam_step");
  }
}

}  // namespace twix
