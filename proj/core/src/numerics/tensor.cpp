#include "celltrack/numerics/tensor.hpp"

#include <mutex>
#include <sstream>
#include <unordered_set>
#include <utility>

#if __has_include(<malloc.h>)
#include <malloc.h>
#endif

#include "celltrack/error.hpp"

namespace celltrack::numerics {

namespace {
thread_local bool g_no_grad = false;
}

std::size_t shape_size(const Shape& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::string shape_string(const Shape& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << 'x';
    os << dims[i];
  }
  os << ']';
  return os.str();
}

NoGradGuard::NoGradGuard() : previous_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = previous_; }
bool NoGradGuard::enabled() { return g_no_grad; }

void retain_heap_memory() {
#if defined(M_MMAP_THRESHOLD) && defined(M_TRIM_THRESHOLD)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 512 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 1024 * 1024 * 1024);
  });
#endif
}

template <typename T>
Tensor<T> Tensor<T>::constant(Shape dims, std::vector<T> data) {
  if (shape_size(dims) != data.size()) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) + " does not match dims " +
                     shape_string(dims));
  }
  auto node = std::make_shared<Node<T>>();
  node->dims = std::move(dims);
  node->value = std::move(data);
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape dims) {
  auto n = shape_size(dims);
  return constant(std::move(dims), std::vector<T>(n, T(0)));
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape dims, T value) {
  auto n = shape_size(dims);
  return constant(std::move(dims), std::vector<T>(n, value));
}

template <typename T>
Tensor<T> Tensor<T>::parameter(Shape dims, std::vector<T> data) {
  auto t = constant(std::move(dims), std::move(data));
  t.node_->requires_grad = true;
  return t;
}

template <typename T>
Tensor<T> Tensor<T>::from_op(Shape dims, std::vector<T> data, std::vector<Tensor> inputs,
                             std::function<void(Node<T>&)> backward_fn) {
  auto t = constant(std::move(dims), std::move(data));
  if (g_no_grad) return t;
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (!any) return t;
  auto& node = *t.node_;
  node.requires_grad = true;
  node.inputs.reserve(inputs.size());
  for (auto& in : inputs) node.inputs.push_back(in.node_);
  node.backward_fn = std::move(backward_fn);
  return t;
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss.size() != 1) {
    throw ShapeError("backward needs a single-element loss, got " + shape_string(loss.dims()));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (inputs before users).
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(&loss.node(), 0);
  visited.insert(&loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node().ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
  // Interior gradients are not needed after the pass.
  for (Node<T>* node : order) {
    if (!node->inputs.empty()) node->grad.clear();
  }
}

template class Tensor<float>;
template class Tensor<double>;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace celltrack::numerics
