#include "graphspy/nn/tensor.hpp"

#include <numeric>
#include <unordered_set>

namespace graphspy::nn {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->data.assign(shape_size(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> data, bool requires_grad) {
  if (shape_size(shape) != data.size()) {
    throw ShapeMismatch("tensor data of length " + std::to_string(data.size()) +
                        " does not fill shape " + shape_string(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw ShapeMismatch("item() on tensor of shape " + shape_string(shape()));
  return node_->data[0];
}

template <typename T>
Tape<T>::Tape(const Tensor<T>& root) {
  // Iterative post-order DFS; a node is emitted after all of its inputs.
  std::unordered_set<TensorNode<T>*> seen;
  std::vector<std::pair<TensorNode<T>*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      TensorNode<T>* in = node->inputs[next++].get();
      if (in->requires_grad && seen.insert(in).second) stack.emplace_back(in, 0);
    } else {
      order_.push_back(node);
      stack.pop_back();
    }
  }
}

template <typename T>
void Tape<T>::run_backward() {
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    TensorNode<T>* node = *it;
    if (node->backward_fn && node->grad.size() == node->data.size()) node->backward_fn(*node);
  }
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss.size() != 1) throw NotScalarLoss(shape_string(loss.shape()));
  if (!loss.requires_grad()) return;
  Tape<T> tape(loss);
  loss.node()->ensure_grad();
  loss.node()->grad[0] += T(1);
  tape.run_backward();
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace graphspy::nn
