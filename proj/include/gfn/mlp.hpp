#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gfn/tensor.hpp"

namespace gfn {

inline constexpr std::size_t kHiddenWidth = 256;
inline constexpr double kLeakySlope = 0.01;

struct LayerParams {
  Tensor weight;  // (fan_in x fan_out)
  Tensor bias;    // (fan_out)

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Parameters of a fully connected network with leaky-ReLU between layers
/// and a linear output layer.
///
/// `version()` changes whenever an optimizer writes the parameters, which
/// lets a Tape detect that it was recorded against older values.
class MLPParams {
 public:
  MLPParams() = default;
  explicit MLPParams(std::vector<LayerParams> layers);

  std::vector<LayerParams>& layers() { return layers_; }
  const std::vector<LayerParams>& layers() const { return layers_; }

  std::size_t input_width() const;
  std::size_t output_width() const;
  std::vector<std::size_t> layer_sizes() const;

  std::uint64_t version() const { return version_; }
  void mark_modified() { ++version_; }

  /// Every weight and bias tensor, in layer order (weight before bias).
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;

  /// Parameters only; version is bookkeeping.
  friend bool operator==(const MLPParams& a, const MLPParams& b) { return a.layers_ == b.layers_; }

 private:
  std::vector<LayerParams> layers_;
  std::uint64_t version_ = 0;
};

/// Gradients mirror MLPParams layer by layer.
struct MLPGradients {
  std::vector<LayerParams> layers;

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
};

/// Glorot-uniform weights, zero biases. Identical (seed, dims) give
/// bit-identical parameters.
MLPParams init_params(std::uint64_t seed, const std::vector<std::size_t>& dims);

/// Layer sizes (in, 256, 256, out).
std::vector<std::size_t> standard_layer_sizes(std::size_t in, std::size_t out);

/// Record of one forward pass: the operations in order and the input each
/// one saw. Holds a non-owning reference to the parameters, which must
/// outlive it.
class Tape {
 public:
  enum class Op { Linear, LeakyRelu };

  struct Node {
    Op op;
    std::size_t layer;
    Tensor input;
  };

  const MLPParams& params() const { return *params_; }
  std::uint64_t recorded_version() const { return version_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Shape& output_shape() const { return output_shape_; }

 private:
  friend std::pair<Tensor, Tape> mlp_forward(const MLPParams&, const Tensor&);

  const MLPParams* params_ = nullptr;
  std::uint64_t version_ = 0;
  std::vector<Node> nodes_;
  Shape output_shape_;
};

/// Batched forward pass. `x` is (batch x input_width); output is
/// (batch x output_width).
std::pair<Tensor, Tape> mlp_forward(const MLPParams& params, const Tensor& x);

/// Forward pass without recording, for evaluation.
Tensor mlp_predict(const MLPParams& params, const Tensor& x);

/// Reverse-mode gradients of `sum(seed_grad * outputs)` with respect to
/// every parameter.
MLPGradients backward(const Tape& tape, const Tensor& seed_grad);

}  // namespace gfn
