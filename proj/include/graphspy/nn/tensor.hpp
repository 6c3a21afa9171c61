#pragma once

// Dense row-major tensors with reverse-mode differentiation.
//
// Every operator returns a fresh node that remembers its inputs (when any of
// them requires a gradient) and a rule that pushes the node's gradient back
// into them. `backward(loss)` orders the reachable nodes topologically (the
// Tape) and runs those rules once each, in reverse. Gradients of leaves
// accumulate across calls until zeroed, which is how mini-batches are formed.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "graphspy/error.hpp"

namespace graphspy::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> inputs;
  std::function<void(TensorNode&)> backward_fn;
  const char* op = "leaf";

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
};

template <typename T>
class Tensor {
 public:
  using Node = TensorNode<T>;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> data, bool requires_grad = false);
  static Tensor scalar(T value) { return from({1}, {value}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape[i]; }
  std::size_t size() const { return node_->data.size(); }

  std::span<T> data() { return node_->data; }
  std::span<const T> data() const { return node_->data; }
  std::span<T> grad() { return node_->grad; }
  std::span<const T> grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() == node_->data.size() && !node_->data.empty(); }

  T item() const;
  T& operator[](std::size_t i) { return node_->data[i]; }
  T operator[](std::size_t i) const { return node_->data[i]; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  void zero_grad() { node_->grad.assign(node_->data.size(), T(0)); }

  // Copy of the values with no history.
  Tensor detach() const { return from(shape(), node_->data); }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Topologically ordered record of the operations reachable from a root.
template <typename T>
class Tape {
 public:
  explicit Tape(const Tensor<T>& root);
  std::size_t size() const { return order_.size(); }
  const std::vector<TensorNode<T>*>& order() const { return order_; }
  // Runs each recorded backward rule exactly once, outputs before inputs.
  void run_backward();

 private:
  std::vector<TensorNode<T>*> order_;  // inputs before outputs
};

class NotScalarLoss : public Error {
 public:
  explicit NotScalarLoss(const std::string& shape)
      : Error("NotScalarLoss", "backward() needs a scalar loss, got shape " + shape,
              ErrorCategory::Numeric) {}
};

// Seeds d(loss)/d(loss) = 1 and populates gradients of every input that
// requires one.
template <typename T>
void backward(const Tensor<T>& loss);

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;
extern template void backward<float>(const Tensor<float>&);
extern template void backward<double>(const Tensor<double>&);

}  // namespace graphspy::nn
