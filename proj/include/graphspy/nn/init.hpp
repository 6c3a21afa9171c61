#pragma once

#include <cmath>
#include <random>

#include "graphspy/nn/tensor.hpp"

namespace graphspy::nn {

// Uniform draw in [0, 1) from the top 53 bits, so results do not depend on
// the standard library's distribution implementations.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Glorot-uniform; values are drawn in double and rounded to T.
template <typename T>
Tensor<T> xavier(Shape shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  auto t = Tensor<T>::zeros(std::move(shape), true);
  for (auto& v : t.data()) v = static_cast<T>((2.0 * uniform01(rng) - 1.0) * a);
  return t;
}

template <typename T>
Tensor<T> zeros_param(Shape shape) {
  return Tensor<T>::zeros(std::move(shape), true);
}

}  // namespace graphspy::nn
