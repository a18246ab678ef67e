#pragma once

#include <span>
#include <vector>

#include "celltrack/numerics/tensor.hpp"

namespace celltrack::numerics {

/// RMSProp with the mean-square form
///   acc <- decay * acc + (1 - decay) * g^2,  p <- p - lr * g / sqrt(acc + eps).
template <typename T>
class RMSProp {
 public:
  static constexpr double kEpsilon = 1e-8;

  explicit RMSProp(double learning_rate = 1e-3, double decay = 0.9);

  double learning_rate() const { return learning_rate_; }
  double decay() const { return decay_; }

  /// Applies one update using each parameter's accumulated gradient, then clears
  /// the gradients. Parameters without a gradient are treated as g = 0.
  /// The parameter list must be the same (same order) on every call.
  void step(std::span<Tensor<T>* const> params);

  /// Running mean-square accumulators, one per parameter (empty before the first step).
  const std::vector<std::vector<T>>& accumulators() const { return accumulators_; }

 private:
  double learning_rate_;
  double decay_;
  std::vector<std::vector<T>> accumulators_;
};

extern template class RMSProp<float>;
extern template class RMSProp<double>;

}  // namespace celltrack::numerics
