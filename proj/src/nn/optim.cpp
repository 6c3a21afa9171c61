#include "graphspy/nn/optim.hpp"

#include <cmath>

namespace graphspy::nn {

template <typename T>
void Optimizer<T>::step(ParamList<T>& params) {
  for (const auto& p : params)
    if (!p.tensor.has_grad()) throw MissingGrad(p.name);
  ++t_;
  if (kind_ == OptimizerKind::Sgd) {
    for (auto& p : params) {
      auto d = p.tensor.data();
      auto g = p.tensor.grad();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= static_cast<T>(lr_) * g[i];
      p.tensor.zero_grad();
    }
    return;
  }
  if (m_.size() != params.size()) {
    m_.assign(params.size(), {});
    v_.assign(params.size(), {});
    for (std::size_t k = 0; k < params.size(); ++k) {
      m_[k].assign(params[k].tensor.size(), T(0));
      v_[k].assign(params[k].tensor.size(), T(0));
    }
  }
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto d = params[k].tensor.data();
    auto g = params[k].tensor.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    if (m.size() != d.size()) throw ShapeMismatch("optimizer state does not match parameter " + params[k].name);
    for (std::size_t i = 0; i < d.size(); ++i) {
      m[i] = static_cast<T>(beta1 * m[i] + (1.0 - beta1) * g[i]);
      v[i] = static_cast<T>(beta2 * v[i] + (1.0 - beta2) * g[i] * g[i]);
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      d[i] = static_cast<T>(d[i] - lr_ * mhat / (std::sqrt(vhat) + eps));
    }
    params[k].tensor.zero_grad();
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace graphspy::nn
