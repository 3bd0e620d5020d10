#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gfn/mlp.hpp"
#include "gfn/tensor.hpp"

namespace gfn {

struct AdamHyperParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment accumulators mirror the parameter list they were first used with.
struct AdamState {
  AdamHyperParams hyper;
  std::uint64_t t = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;

  AdamState() = default;
  explicit AdamState(AdamHyperParams h) : hyper(h) {}
};

/// One bias-corrected Adam update in place. Throws DivergenceError on a
/// non-finite gradient, leaving parameters and state untouched.
void adam_step(std::span<Tensor* const> params, std::span<const Tensor* const> grads, AdamState& state);

void adam_step(MLPParams& params, const MLPGradients& grads, AdamState& state);

}  // namespace gfn
