#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace celltrack::numerics {

/// Row-major extents, last index fastest.
using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& dims);
std::string shape_string(const Shape& dims);

/// Keeps freed large buffers in the process heap for reuse instead of unmapping
/// them. Idempotent; a no-op outside glibc.
void retain_heap_memory();

/// Disables graph recording on the current thread while alive. Inference paths
/// hold one so no backward closures are retained.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

  static bool enabled();

 private:
  bool previous_;
};

template <typename T>
struct Node {
  Shape dims;
  std::vector<T> value;
  std::vector<T> grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  std::vector<T>& ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad;
  }
};

/// Handle to a dense array that may participate in reverse-mode differentiation.
///
/// Copies share the underlying node. Values produced by operations are never
/// written again; only leaf parameters are mutated, and only by initializers and
/// optimizers between graph evaluations.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  static Tensor constant(Shape dims, std::vector<T> data);
  static Tensor zeros(Shape dims);
  static Tensor full(Shape dims, T value);
  /// Leaf that accumulates gradients.
  static Tensor parameter(Shape dims, std::vector<T> data);

  /// Result of an operation. Records inputs and the backward closure unless
  /// grad recording is disabled or no input requires a gradient.
  static Tensor from_op(Shape dims, std::vector<T> data, std::vector<Tensor> inputs,
                        std::function<void(Node<T>&)> backward_fn);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& dims() const { return node_->dims; }
  std::size_t dim(std::size_t i) const { return node_->dims.at(i); }
  std::size_t rank() const { return node_->dims.size(); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const T> data() const { return node_->value; }
  std::span<T> mutable_data() { return node_->value; }
  /// Empty until a backward pass reaches this tensor.
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() { node_->grad.clear(); }

  T item() const { return node_->value.at(0); }

  Node<T>& node() const { return *node_; }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}
  std::shared_ptr<Node<T>> node_;
};

/// Reverse pass from a single-element tensor; gradients accumulate into every
/// reachable tensor that requires them.
template <typename T>
void backward(const Tensor<T>& loss);

/// Converts the values of a tensor to another scalar type, keeping the
/// parameter/constant role.
template <typename U, typename T>
Tensor<U> cast(const Tensor<T>& t) {
  std::vector<U> out(t.data().begin(), t.data().end());
  return t.requires_grad() && t.node().inputs.empty() ? Tensor<U>::parameter(t.dims(), std::move(out))
                                                      : Tensor<U>::constant(t.dims(), std::move(out));
}

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template void backward<float>(const Tensor<float>&);
extern template void backward<double>(const Tensor<double>&);

}  // namespace celltrack::numerics
