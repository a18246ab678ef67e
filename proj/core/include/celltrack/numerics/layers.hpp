#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "celltrack/numerics/ops.hpp"
#include "celltrack/numerics/tensor.hpp"

namespace celltrack::numerics {

using Rng = std::mt19937_64;

/// Uniform samples in +-sqrt(6 / (fan_in + fan_out)). For rank-4 kernels
/// fan_in = in * kH * kW and fan_out = out * kH * kW; for rank 2, dims[1] and dims[0].
template <typename T>
std::vector<T> xavier_uniform(const Shape& dims, Rng& rng);

template <typename T>
Tensor<T> xavier_init(const Shape& dims, std::uint64_t seed) {
  Rng rng(seed);
  return Tensor<T>::parameter(dims, xavier_uniform<T>(dims, rng));
}

double xavier_bound(const Shape& dims);

/// Convolution weights for one layer: kernel out x in x k x k, bias out.
template <typename T>
struct LayerParams {
  Tensor<T> kernel;
  Tensor<T> bias;
  std::string role;

  std::size_t out_channels() const { return kernel.dim(0); }
  std::size_t in_channels() const { return kernel.dim(1); }
  std::size_t kernel_size() const { return kernel.dim(2); }

  /// Xavier kernel, zero bias.
  static LayerParams create(std::string role, std::size_t out, std::size_t in, std::size_t k, Rng& rng);

  template <typename U>
  LayerParams<U> cast() const {
    return {numerics::cast<U>(kernel), numerics::cast<U>(bias), role};
  }
};

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const LayerParams<T>& layer, Activation act) {
  return conv2d(input, layer.kernel, layer.bias, act);
}

template <typename T>
struct ConvLSTMState {
  Tensor<T> hidden;
  Tensor<T> cell;

  static ConvLSTMState zeros(std::size_t channels, std::size_t h, std::size_t w) {
    return {Tensor<T>::zeros({channels, h, w}), Tensor<T>::zeros({channels, h, w})};
  }
};

/// Gate convolution over [input; hidden] producing i, f, o, g stacked along
/// channels (4 * hidden outputs). One convolution over the concatenation equals
/// the sum of separate input and hidden convolutions.
template <typename T>
struct ConvLSTMParams {
  LayerParams<T> gates;
  std::size_t hidden_channels = 0;

  std::size_t input_channels() const { return gates.in_channels() - hidden_channels; }

  static ConvLSTMParams create(std::string role, std::size_t input_channels, std::size_t hidden_channels,
                               std::size_t k, Rng& rng);

  template <typename U>
  ConvLSTMParams<U> cast() const {
    return {gates.template cast<U>(), hidden_channels};
  }
};

/// One peephole-free ConvLSTM update:
///   i, f, o = sigmoid(.), g = tanh(.), cell' = f * cell + i * g, hidden' = o * tanh(cell').
template <typename T>
ConvLSTMState<T> convlstm_step(const Tensor<T>& x, const ConvLSTMState<T>& state, const ConvLSTMParams<T>& params);

/// Standard inverted dropout mask: zeros with probability `rate`, survivors 1 / (1 - rate).
template <typename T>
std::vector<T> dropout_mask(std::size_t n, double rate, Rng& rng);

/// Named view used by optimizers and checkpoints.
template <typename T>
using NamedParameters = std::vector<std::pair<std::string, Tensor<T>*>>;

template <typename T>
void append_parameters(NamedParameters<T>& out, LayerParams<T>& layer) {
  out.emplace_back(layer.role + ".kernel", &layer.kernel);
  out.emplace_back(layer.role + ".bias", &layer.bias);
}

}  // namespace celltrack::numerics
