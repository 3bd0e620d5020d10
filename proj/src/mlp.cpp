#include "gfn/mlp.hpp"

#include <cmath>

#include <Eigen/Core>

#include "gfn/errors.hpp"
#include "gfn/rng.hpp"

namespace gfn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::RowVectorXd>;
using VectorMap = Eigen::Map<Eigen::RowVectorXd>;

MatrixMap as_matrix(Tensor& t) { return MatrixMap(t.data().data(), t.rows(), t.cols()); }
ConstMatrixMap as_matrix(const Tensor& t) { return ConstMatrixMap(t.data().data(), t.rows(), t.cols()); }

Tensor linear(const LayerParams& layer, const Tensor& x) {
  Tensor out({x.rows(), layer.weight.cols()});
  auto y = as_matrix(out);
  y.noalias() = as_matrix(x) * as_matrix(layer.weight);
  y.rowwise() += ConstVectorMap(layer.bias.data().data(), layer.bias.size());
  return out;
}

void leaky_relu_inplace(Tensor& t) {
  for (double& v : t.data()) {
    if (v < 0.0) v *= kLeakySlope;
  }
}

void check_input(const MLPParams& params, const Tensor& x) {
  if (params.layers().empty()) throw ConfigError("MLP has no layers");
  if (x.rank() != 2 || x.cols() != params.input_width()) {
    throw DimensionError("MLP input must be (batch x " + std::to_string(params.input_width()) + "), got " +
                         shape_to_string(x.shape()));
  }
}

}  // namespace

MLPParams::MLPParams(std::vector<LayerParams> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weight.rank() != 2 || l.bias.rank() != 1 || l.bias.size() != l.weight.cols()) {
      throw DimensionError("layer " + std::to_string(i) + " has inconsistent weight/bias shapes");
    }
    if (i > 0 && layers_[i - 1].weight.cols() != l.weight.rows()) {
      throw DimensionError("layer " + std::to_string(i) + " input width does not match previous layer");
    }
  }
}

std::size_t MLPParams::input_width() const { return layers_.empty() ? 0 : layers_.front().weight.rows(); }
std::size_t MLPParams::output_width() const { return layers_.empty() ? 0 : layers_.back().weight.cols(); }

std::vector<std::size_t> MLPParams::layer_sizes() const {
  std::vector<std::size_t> sizes;
  if (layers_.empty()) return sizes;
  sizes.push_back(input_width());
  for (const auto& l : layers_) sizes.push_back(l.weight.cols());
  return sizes;
}

std::vector<Tensor*> MLPParams::tensors() {
  std::vector<Tensor*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> MLPParams::tensors() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<Tensor*> MLPGradients::tensors() {
  std::vector<Tensor*> out;
  for (auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Tensor*> MLPGradients::tensors() const {
  std::vector<const Tensor*> out;
  for (const auto& l : layers) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<std::size_t> standard_layer_sizes(std::size_t in, std::size_t out) {
  return {in, kHiddenWidth, kHiddenWidth, out};
}

MLPParams init_params(std::uint64_t seed, const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) throw ConfigError("an MLP needs at least an input and an output width");
  for (std::size_t d : dims) {
    if (d == 0) throw ConfigError("MLP layer widths must be positive");
  }
  Rng rng(seed);
  std::vector<LayerParams> layers;
  layers.reserve(dims.size() - 1);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const std::size_t fan_in = dims[i];
    const std::size_t fan_out = dims[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    LayerParams layer{Tensor({fan_in, fan_out}), Tensor({fan_out})};
    for (double& w : layer.weight.data()) w = rng.uniform(-limit, limit);
    layers.push_back(std::move(layer));
  }
  return MLPParams(std::move(layers));
}

std::pair<Tensor, Tape> mlp_forward(const MLPParams& params, const Tensor& x) {
  check_input(params, x);
  Tape tape;
  tape.params_ = &params;
  tape.version_ = params.version();

  const auto& layers = params.layers();
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Tensor z = linear(layers[i], h);
    tape.nodes_.push_back({Tape::Op::Linear, i, std::move(h)});
    if (i + 1 < layers.size()) {
      tape.nodes_.push_back({Tape::Op::LeakyRelu, i, z});
      leaky_relu_inplace(z);
    }
    h = std::move(z);
  }
  tape.output_shape_ = h.shape();
  return {std::move(h), std::move(tape)};
}

Tensor mlp_predict(const MLPParams& params, const Tensor& x) {
  check_input(params, x);
  const auto& layers = params.layers();
  Tensor h = linear(layers[0], x);
  for (std::size_t i = 1; i < layers.size(); ++i) {
    leaky_relu_inplace(h);
    h = linear(layers[i], h);
  }
  return h;
}

MLPGradients backward(const Tape& tape, const Tensor& seed_grad) {
  if (tape.nodes().empty()) throw UsageError("backward on an empty tape");
  const MLPParams& params = tape.params();
  if (params.version() != tape.recorded_version()) {
    throw StaleTapeError("parameters were modified after the forward pass was recorded");
  }
  require_shape(seed_grad, tape.output_shape(), "backward seed gradient");

  MLPGradients grads;
  for (const auto& l : params.layers()) {
    grads.layers.push_back({Tensor(l.weight.shape()), Tensor(l.bias.shape())});
  }

  Tensor grad = seed_grad;
  const auto& nodes = tape.nodes();
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    const Tape::Node& node = *it;
    if (node.op == Tape::Op::LeakyRelu) {
      auto g = grad.data();
      auto z = node.input.data();
      for (std::size_t k = 0; k < g.size(); ++k) {
        if (z[k] < 0.0) g[k] *= kLeakySlope;
      }
      continue;
    }
    const LayerParams& layer = params.layers()[node.layer];
    LayerParams& out = grads.layers[node.layer];
    auto g = as_matrix(static_cast<const Tensor&>(grad));
    as_matrix(out.weight).noalias() = as_matrix(node.input).transpose() * g;
    VectorMap(out.bias.data().data(), out.bias.size()) = g.colwise().sum();
    if (node.layer > 0) {
      Tensor next({grad.rows(), layer.weight.rows()});
      as_matrix(next).noalias() = g * as_matrix(layer.weight).transpose();
      grad = std::move(next);
    }
  }
  return grads;
}

}  // namespace gfn
