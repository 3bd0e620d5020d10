#include "gfn/adam.hpp"

#include <cmath>

#include "gfn/errors.hpp"

namespace gfn {

void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state) {
  if (!(state.hyper.lr > 0.0)) throw ConfigError("Adam learning rate must be positive");
  if (params.size() != grads.size()) throw DimensionError("Adam: parameter and gradient counts differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_shape(*grads[i], params[i]->shape(), "Adam gradient");
    if (!grads[i]->all_finite()) throw DivergenceError("non-finite gradient in parameter tensor " + std::to_string(i));
  }
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  } else {
    if (state.m.size() != params.size()) throw DimensionError("Adam state tracks a different parameter list");
    for (std::size_t i = 0; i < params.size(); ++i) require_shape(state.m[i], params[i]->shape(), "Adam moment");
  }

  const auto& h = state.hyper;
  state.t += 1;
  const double correction1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  const double correction2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i]->data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = h.beta1 * m[k] + (1.0 - h.beta1) * g[k];
      v[k] = h.beta2 * v[k] + (1.0 - h.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p[k] -= h.lr * m_hat / (std::sqrt(v_hat) + h.eps);
    }
  }
}

void adam_step(MLPParams& params, const MLPGradients& grads, AdamState& state) {
  const auto p = params.tensors();
  const auto g = grads.tensors();
  adam_step(std::span<Tensor* const>(p), std::span<const Tensor* const>(g), state);
  params.mark_modified();
}

}  // namespace gfn
