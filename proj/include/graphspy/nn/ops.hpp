#pragma once

// Forward operators. Each records its backward rule when any input requires
// a gradient. Vectors are carried as [1, D] rows so they compose with dense().

#include <cstddef>
#include <utility>
#include <vector>

#include "graphspy/nn/tensor.hpp"

namespace graphspy::nn {

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
// Same shape, or b broadcast over the leading axes of a (b's shape, minus
// leading 1s, is a suffix of a's).
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T s);
template <typename T> Tensor<T> one_minus(const Tensor<T>& a);

template <typename T> Tensor<T> sigmoid(const Tensor<T>& a);
template <typename T> Tensor<T> tanh(const Tensor<T>& a);
template <typename T> Tensor<T> relu(const Tensor<T>& a);

template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);
template <typename T> Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis);

template <typename T> Tensor<T> sum(const Tensor<T>& a);  // -> [1]
template <typename T> Tensor<T> sum(const Tensor<T>& a, std::size_t axis);
template <typename T> Tensor<T> mean(const Tensor<T>& a, std::size_t axis);
// [n, D] -> [1, D]: mean over all rows, or over the listed rows. An empty
// row list yields zeros.
template <typename T> Tensor<T> mean_rows(const Tensor<T>& a);
template <typename T> Tensor<T> mean_rows(const Tensor<T>& a, const std::vector<std::size_t>& rows);

// x [m, k] * W [k, n] + b [n]
template <typename T> Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

// x [C, H, W], w [O, C, K, K], b [O] -> [O, Ho, Wo]
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, std::size_t stride,
                 std::size_t padding);
// x [C, H, W] -> [C, Ho, Wo]; window k, given stride, no padding.
template <typename T> Tensor<T> maxpool2d(const Tensor<T>& x, std::size_t k, std::size_t stride);
// x [C, H, W] -> [1, C]
template <typename T> Tensor<T> global_maxpool(const Tensor<T>& x);

template <typename T> Tensor<T> softmax(const Tensor<T>& a);  // over the last axis

// Numerically stable BCE on a single logit; label in {0, 1}.
template <typename T> Tensor<T> binary_cross_entropy(const Tensor<T>& logit, T label);

// Weighted row gather: out[g] = sum_(i, w) in groups[g] of w * table[i].
// table [V, D] -> [G, D].
using WeightedRows = std::vector<std::pair<std::size_t, double>>;
template <typename T>
Tensor<T> gather_rows(const Tensor<T>& table, const std::vector<WeightedRows>& groups);

// x [n, D] -> [n, D]. Forward: out[dst] += x[src] for each (src, dst);
// reverse: out[src] += x[dst].
template <typename T>
Tensor<T> edge_aggregate(const Tensor<T>& x, const std::vector<std::pair<int, int>>& edges,
                         bool reverse);

}  // namespace graphspy::nn
