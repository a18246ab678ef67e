#pragma once

#include <string_view>
#include <vector>

#include "celltrack/numerics/tensor.hpp"

namespace celltrack::numerics {

enum class Activation { None, Sigmoid, Tanh, Relu };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation act);

/// Clamp applied to outputs inside binary_cross_entropy.
inline constexpr double kBceEpsilon = 1e-7;

/// Zero-padded stride-1 convolution of a C x H x W input with an O x C x kH x kW
/// kernel (odd extents) plus per-channel bias, followed by `act`. Output is O x H x W.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias,
                 Activation act = Activation::None);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a);
template <typename T>
Tensor<T> tanh(const Tensor<T>& a);
template <typename T>
Tensor<T> relu(const Tensor<T>& a);
template <typename T>
Tensor<T> activate(const Tensor<T>& a, Activation act);

/// Stacks C1 x H x W and C2 x H x W into (C1 + C2) x H x W.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

/// Channels [begin, begin + count) of a C x H x W tensor.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& a, std::size_t begin, std::size_t count);

/// Per-pixel softmax across the n channels of an n x H x W tensor, after which
/// every channel except the per-pixel maximum is zeroed (ties go to the lowest
/// index). The backward pass differentiates the surviving softmax value only;
/// the winner mask is treated as constant.
template <typename T>
Tensor<T> channel_softmax_wta(const Tensor<T>& logits);

/// Elementwise product with a fixed array (dropout masks).
template <typename T>
Tensor<T> mul_constant(const Tensor<T>& a, const std::vector<T>& factors);

/// Elementwise sum with a fixed array (injected noise).
template <typename T>
Tensor<T> add_constant(const Tensor<T>& a, const std::vector<T>& offsets);

/// -sum(t log o + (1 - t) log(1 - o)) with o clamped to [eps, 1 - eps]. Scalar output.
template <typename T>
Tensor<T> binary_cross_entropy(const Tensor<T>& target, const Tensor<T>& output);

/// Sum of single-element tensors.
template <typename T>
Tensor<T> sum_scalars(const std::vector<Tensor<T>>& terms);

/// Sum of all elements, as a single-element tensor.
template <typename T>
Tensor<T> sum(const Tensor<T>& a);

/// Mean of all elements, as a single-element tensor.
template <typename T>
Tensor<T> mean(const Tensor<T>& a);

}  // namespace celltrack::numerics
