#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphspy/nn/tensor.hpp"

namespace graphspy::nn {

template <typename T>
struct NamedParam {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
using ParamList = std::vector<NamedParam<T>>;

enum class OptimizerKind : std::uint8_t { Sgd, Adam };

class MissingGrad : public Error {
 public:
  explicit MissingGrad(const std::string& what)
      : Error("MissingGrad", "parameter has no gradient: " + what, ErrorCategory::Numeric) {}
};

template <typename T>
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr) : kind_(kind), lr_(lr) {}

  // Updates every parameter in place from its gradient, then zeroes the
  // gradients. Adam moments are allocated on the first step.
  void step(ParamList<T>& params);

  OptimizerKind kind() const { return kind_; }
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  std::uint64_t steps() const { return t_; }

  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  // Moment buffers, parallel to the parameter list (empty for SGD or before
  // the first step). Exposed for checkpointing.
  std::vector<std::vector<T>>& first_moments() { return m_; }
  std::vector<std::vector<T>>& second_moments() { return v_; }
  const std::vector<std::vector<T>>& first_moments() const { return m_; }
  const std::vector<std::vector<T>>& second_moments() const { return v_; }
  void set_steps(std::uint64_t t) { t_ = t; }

 private:
  OptimizerKind kind_;
  double lr_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<T>> m_, v_;
};

extern template class Optimizer<float>;
extern template class Optimizer<double>;

}  // namespace graphspy::nn
