#include "celltrack/numerics/optimizer.hpp"

#include <cmath>

#include "celltrack/error.hpp"

namespace celltrack::numerics {

template <typename T>
RMSProp<T>::RMSProp(double learning_rate, double decay) : learning_rate_(learning_rate), decay_(decay) {
  if (!(learning_rate > 0.0)) throw ConfigError("RMSProp learning rate must be positive");
  if (decay < 0.0 || decay >= 1.0) throw ConfigError("RMSProp decay must be in [0, 1)");
}

template <typename T>
void RMSProp<T>::step(std::span<Tensor<T>* const> params) {
  if (accumulators_.empty()) {
    accumulators_.reserve(params.size());
    for (auto* p : params) accumulators_.emplace_back(p->size(), T(0));
  }
  if (accumulators_.size() != params.size()) {
    throw ShapeError("RMSProp::step: parameter count changed from " + std::to_string(accumulators_.size()) +
                     " to " + std::to_string(params.size()));
  }
  const T decay = static_cast<T>(decay_);
  const T fresh = static_cast<T>(1.0 - decay_);
  const T lr = static_cast<T>(learning_rate_);
  const T eps = static_cast<T>(kEpsilon);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<T>& p = *params[k];
    auto& acc = accumulators_[k];
    if (acc.size() != p.size()) throw ShapeError("RMSProp::step: parameter " + std::to_string(k) + " changed size");
    auto grad = p.grad();
    auto value = p.mutable_data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const T g = grad.empty() ? T(0) : grad[i];
      acc[i] = decay * acc[i] + fresh * g * g;
      value[i] -= lr * g / std::sqrt(acc[i] + eps);
    }
    p.zero_grad();
  }
}

template class RMSProp<float>;
template class RMSProp<double>;

}  // namespace celltrack::numerics
