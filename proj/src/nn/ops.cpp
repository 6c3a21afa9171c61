#include "graphspy/nn/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>

namespace graphspy::nn {

namespace {

template <typename T>
using RMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<RMat<T>>;
template <typename T>
using CMapM = Eigen::Map<const RMat<T>>;

template <typename T>
Tensor<T> make_result(Shape shape, std::initializer_list<const Tensor<T>*> inputs, const char* op) {
  auto out = Tensor<T>::zeros(std::move(shape));
  auto& node = *out.node();
  node.op = op;
  bool needs = false;
  for (const auto* in : inputs) needs = needs || in->requires_grad();
  if (needs) {
    node.requires_grad = true;
    for (const auto* in : inputs) node.inputs.push_back(in->node());
  }
  return out;
}

template <typename T>
bool wants_grad(const std::shared_ptr<TensorNode<T>>& in) {
  if (!in->requires_grad) return false;
  in->ensure_grad();
  return true;
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeMismatch(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " +
                        shape_string(b.shape()));
  }
}

template <typename T>
void require_rank(const Tensor<T>& a, std::size_t rank, const char* op) {
  if (a.rank() != rank) {
    throw ShapeMismatch(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                        shape_string(a.shape()));
  }
}

template <typename T, typename F, typename G>
Tensor<T> unary(const Tensor<T>& a, const char* name, F f, G dfdy_from) {
  auto out = make_result<T>(a.shape(), {&a}, name);
  auto x = a.data();
  auto y = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  if (out.requires_grad()) {
    out.node()->backward_fn = [dfdy_from](TensorNode<T>& self) {
      auto& in = self.inputs[0];
      if (!wants_grad(in)) return;
      for (std::size_t i = 0; i < self.data.size(); ++i)
        in->grad[i] += self.grad[i] * dfdy_from(in->data[i], self.data[i]);
    };
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw ShapeMismatch("matmul: shapes " + shape_string(a.shape()) + " and " +
                        shape_string(b.shape()));
  }
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto k = static_cast<Eigen::Index>(a.dim(1));
  const auto n = static_cast<Eigen::Index>(b.dim(1));
  auto out = make_result<T>({a.dim(0), b.dim(1)}, {&a, &b}, "matmul");
  MapM<T>(out.data().data(), m, n).noalias() =
      CMapM<T>(a.data().data(), m, k) * CMapM<T>(b.data().data(), k, n);
  if (out.requires_grad()) {
    out.node()->backward_fn = [m, k, n](TensorNode<T>& self) {
      auto& A = self.inputs[0];
      auto& B = self.inputs[1];
      CMapM<T> dC(self.grad.data(), m, n);
      if (wants_grad(A))
        MapM<T>(A->grad.data(), m, k).noalias() += dC * CMapM<T>(B->data.data(), k, n).transpose();
      if (wants_grad(B))
        MapM<T>(B->grad.data(), k, n).noalias() += CMapM<T>(A->data.data(), m, k).transpose() * dC;
    };
  }
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  Shape bs = b.shape();
  while (bs.size() > 1 && bs.front() == 1) bs.erase(bs.begin());
  const Shape& as = a.shape();
  bool suffix = bs.size() <= as.size() && std::equal(bs.rbegin(), bs.rend(), as.rbegin());
  if (!suffix) {
    throw ShapeMismatch("add: shapes " + shape_string(a.shape()) + " and " +
                        shape_string(b.shape()));
  }
  const std::size_t inner = b.size();
  const std::size_t outer = a.size() / inner;
  auto out = make_result<T>(a.shape(), {&a, &b}, "add");
  auto x = a.data();
  auto y = b.data();
  auto z = out.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) z[o * inner + i] = x[o * inner + i] + y[i];
  if (out.requires_grad()) {
    out.node()->backward_fn = [outer, inner](TensorNode<T>& self) {
      auto& A = self.inputs[0];
      auto& B = self.inputs[1];
      if (wants_grad(A))
        for (std::size_t i = 0; i < self.grad.size(); ++i) A->grad[i] += self.grad[i];
      if (wants_grad(B))
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t i = 0; i < inner; ++i) B->grad[i] += self.grad[o * inner + i];
    };
  }
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  auto out = make_result<T>(a.shape(), {&a, &b}, "sub");
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  if (out.requires_grad()) {
    out.node()->backward_fn = [](TensorNode<T>& self) {
      auto& A = self.inputs[0];
      auto& B = self.inputs[1];
      if (wants_grad(A))
        for (std::size_t i = 0; i < self.grad.size(); ++i) A->grad[i] += self.grad[i];
      if (wants_grad(B))
        for (std::size_t i = 0; i < self.grad.size(); ++i) B->grad[i] -= self.grad[i];
    };
  }
  return out;
}

template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "hadamard");
  auto out = make_result<T>(a.shape(), {&a, &b}, "hadamard");
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  if (out.requires_grad()) {
    out.node()->backward_fn = [](TensorNode<T>& self) {
      auto& A = self.inputs[0];
      auto& B = self.inputs[1];
      if (wants_grad(A))
        for (std::size_t i = 0; i < self.grad.size(); ++i) A->grad[i] += self.grad[i] * B->data[i];
      if (wants_grad(B))
        for (std::size_t i = 0; i < self.grad.size(); ++i) B->grad[i] += self.grad[i] * A->data[i];
    };
  }
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  return unary(a, "scale", [s](T x) { return s * x; }, [s](T, T) { return s; });
}

template <typename T>
Tensor<T> one_minus(const Tensor<T>& a) {
  return unary(a, "one_minus", [](T x) { return T(1) - x; }, [](T, T) { return T(-1); });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return unary(
      a, "sigmoid",
      [](T x) {
        if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
        T e = std::exp(x);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  return unary(a, "tanh", [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  return unary(
      a, "relu", [](T x) { return x > T(0) ? x : T(0); },
      [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw ShapeMismatch("reshape: " + shape_string(a.shape()) + " to " + shape_string(shape));
  }
  auto out = make_result<T>(std::move(shape), {&a}, "reshape");
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  if (out.requires_grad()) {
    out.node()->backward_fn = [](TensorNode<T>& self) {
      auto& A = self.inputs[0];
      if (wants_grad(A))
        for (std::size_t i = 0; i < self.grad.size(); ++i) A->grad[i] += self.grad[i];
    };
  }
  return out;
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeMismatch("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw ShapeMismatch("concat: axis out of range for " + shape_string(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    Shape s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d)
      if (d != axis && s[d] != first[d]) ok = false;
    if (!ok) {
      throw ShapeMismatch("concat: shapes " + shape_string(first) + " and " + shape_string(s));
    }
    out_shape[axis] += s[axis];
  }
  std::size_t outer = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  std::vector<std::size_t> inner;
  for (const auto& p : parts) inner.push_back(p.size() / outer);
  const std::size_t total_inner = shape_size(out_shape) / outer;

  auto out = Tensor<T>::zeros(out_shape);
  auto& node = *out.node();
  node.op = "concat";
  bool needs = std::any_of(parts.begin(), parts.end(), [](const auto& p) { return p.requires_grad(); });
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto src = parts[k].data();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(o * inner[k]), inner[k],
                  out.data().begin() + static_cast<std::ptrdiff_t>(o * total_inner + offset));
    offset += inner[k];
    if (needs) node.inputs.push_back(parts[k].node());
  }
  if (needs) {
    node.requires_grad = true;
    node.backward_fn = [outer, inner, total_inner](TensorNode<T>& self) {
      std::size_t off = 0;
      for (std::size_t k = 0; k < self.inputs.size(); ++k) {
        auto& in = self.inputs[k];
        if (wants_grad(in)) {
          for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t i = 0; i < inner[k]; ++i)
              in->grad[o * inner[k] + i] += self.grad[o * total_inner + off + i];
        }
        off += inner[k];
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  auto out = make_result<T>({1}, {&a}, "sum");
  T s = T(0);
  for (T v : a.data()) s += v;
  out[0] = s;
  if (out.requires_grad()) {
    out.node()->backward_fn = [](TensorNode<T>& self) {
      auto& A = self.inputs[0];
      if (wants_grad(A))
        for (auto& g : A->grad) g += self.grad[0];
    };
  }
  return out;
}

namespace {

template <typename T>
Tensor<T> reduce_axis(const Tensor<T>& a, std::size_t axis, bool average, const char* name) {
  if (axis >= a.rank()) throw ShapeMismatch(std::string(name) + ": axis out of range for " + shape_string(a.shape()));
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= a.dim(d);
  for (std::size_t d = axis + 1; d < a.rank(); ++d) inner *= a.dim(d);
  const std::size_t n = a.dim(axis);
  Shape s = a.shape();
  s.erase(s.begin() + static_cast<std::ptrdiff_t>(axis));
  if (s.empty()) s = {1};
  auto out = make_result<T>(s, {&a}, name);
  const T w = average ? (n ? T(1) / static_cast<T>(n) : T(0)) : T(1);
  auto x = a.data();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += w * x[(o * n + j) * inner + i];
  if (out.requires_grad()) {
    out.node()->backward_fn = [outer, inner, n, w](TensorNode<T>& self) {
      auto& A = self.inputs[0];
      if (!wants_grad(A)) return;
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t i = 0; i < inner; ++i)
            A->grad[(o * n + j) * inner + i] += w * self.grad[o * inner + i];
    };
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> sum(const Tensor<T>& a, std::size_t axis) {
  return reduce_axis(a, axis, false, "sum_axis");
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a, std::size_t axis) {
  return reduce_axis(a, axis, true, "mean_axis");
}

template <typename T>
Tensor<T> mean_rows(const Tensor<T>& a) {
  require_rank(a, 2, "mean_rows");
  std::vector<std::size_t> rows(a.dim(0));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return mean_rows(a, rows);
}

template <typename T>
Tensor<T> mean_rows(const Tensor<T>& a, const std::vector<std::size_t>& rows) {
  require_rank(a, 2, "mean_rows");
  const std::size_t d = a.dim(1);
  for (auto r : rows)
    if (r >= a.dim(0)) throw ShapeMismatch("mean_rows: row " + std::to_string(r) + " out of range for " + shape_string(a.shape()));
  auto out = make_result<T>({1, d}, {&a}, "mean_rows");
  if (rows.empty()) return out;
  const T w = T(1) / static_cast<T>(rows.size());
  auto x = a.data();
  for (auto r : rows)
    for (std::size_t j = 0; j < d; ++j) out[j] += w * x[r * d + j];
  if (out.requires_grad()) {
    out.node()->backward_fn = [rows, d, w](TensorNode<T>& self) {
      auto& A = self.inputs[0];
      if (!wants_grad(A)) return;
      for (auto r : rows)
        for (std::size_t j = 0; j < d; ++j) A->grad[r * d + j] += w * self.grad[j];
    };
  }
  return out;
}

template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  require_rank(x, 2, "dense");
  require_rank(w, 2, "dense");
  if (x.dim(1) != w.dim(0) || b.size() != w.dim(1)) {
    throw ShapeMismatch("dense: input " + shape_string(x.shape()) + ", weight " +
                        shape_string(w.shape()) + ", bias " + shape_string(b.shape()));
  }
  const auto m = static_cast<Eigen::Index>(x.dim(0));
  const auto k = static_cast<Eigen::Index>(x.dim(1));
  const auto n = static_cast<Eigen::Index>(w.dim(1));
  auto out = make_result<T>({x.dim(0), w.dim(1)}, {&x, &w, &b}, "dense");
  MapM<T> Y(out.data().data(), m, n);
  Y.noalias() = CMapM<T>(x.data().data(), m, k) * CMapM<T>(w.data().data(), k, n);
  Y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(b.data().data(), n);
  if (out.requires_grad()) {
    out.node()->backward_fn = [m, k, n](TensorNode<T>& self) {
      auto& X = self.inputs[0];
      auto& W = self.inputs[1];
      auto& B = self.inputs[2];
      CMapM<T> dY(self.grad.data(), m, n);
      if (wants_grad(X))
        MapM<T>(X->grad.data(), m, k).noalias() += dY * CMapM<T>(W->data.data(), k, n).transpose();
      if (wants_grad(W))
        MapM<T>(W->grad.data(), k, n).noalias() += CMapM<T>(X->data.data(), m, k).transpose() * dY;
      // Plain loops: Eigen's vectorized reductions sum in an order that
      // depends on buffer alignment, which breaks bitwise reproducibility.
      if (wants_grad(B))
        for (Eigen::Index r = 0; r < m; ++r)
          for (Eigen::Index c = 0; c < n; ++c) B->grad[static_cast<std::size_t>(c)] += dY(r, c);
    };
  }
  return out;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, std::size_t stride,
                 std::size_t padding) {
  require_rank(x, 3, "conv2d");
  require_rank(w, 4, "conv2d");
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t O = w.dim(0), K = w.dim(2);
  if (w.dim(1) != C || w.dim(3) != K || b.size() != O || stride == 0 || H + 2 * padding < K ||
      W + 2 * padding < K) {
    throw ShapeMismatch("conv2d: input " + shape_string(x.shape()) + ", kernel " +
                        shape_string(w.shape()) + ", bias " + shape_string(b.shape()));
  }
  const std::size_t Ho = (H + 2 * padding - K) / stride + 1;
  const std::size_t Wo = (W + 2 * padding - K) / stride + 1;
  const std::size_t P = Ho * Wo, R = C * K * K;

  // im2col: cols[(c, ky, kx), (oy, ox)]
  auto cols = std::make_shared<std::vector<T>>(R * P, T(0));
  auto xs = x.data();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t ky = 0; ky < K; ++ky)
      for (std::size_t kx = 0; kx < K; ++kx) {
        T* row = cols->data() + ((c * K + ky) * K + kx) * P;
        for (std::size_t oy = 0; oy < Ho; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t ox = 0; ox < Wo; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
            row[oy * Wo + ox] = xs[(c * H + static_cast<std::size_t>(iy)) * W + static_cast<std::size_t>(ix)];
          }
        }
      }

  auto out = make_result<T>({O, Ho, Wo}, {&x, &w, &b}, "conv2d");
  const auto eO = static_cast<Eigen::Index>(O), eR = static_cast<Eigen::Index>(R),
             eP = static_cast<Eigen::Index>(P);
  MapM<T> Y(out.data().data(), eO, eP);
  Y.noalias() = CMapM<T>(w.data().data(), eO, eR) * CMapM<T>(cols->data(), eR, eP);
  Y.colwise() += Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(b.data().data(), eO);

  if (out.requires_grad()) {
    out.node()->backward_fn = [cols, C, H, W, K, Ho, Wo, stride, padding, eO, eR, eP](TensorNode<T>& self) {
      auto& X = self.inputs[0];
      auto& Wt = self.inputs[1];
      auto& B = self.inputs[2];
      CMapM<T> dY(self.grad.data(), eO, eP);
      if (wants_grad(Wt))
        MapM<T>(Wt->grad.data(), eO, eR).noalias() += dY * CMapM<T>(cols->data(), eR, eP).transpose();
      if (wants_grad(B))
        for (Eigen::Index o = 0; o < eO; ++o)
          for (Eigen::Index q = 0; q < eP; ++q) B->grad[static_cast<std::size_t>(o)] += dY(o, q);
      if (wants_grad(X)) {
        RMat<T> dcols = CMapM<T>(Wt->data.data(), eO, eR).transpose() * dY;
        const std::size_t P = Ho * Wo;
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t ky = 0; ky < K; ++ky)
            for (std::size_t kx = 0; kx < K; ++kx) {
              const T* row = dcols.data() + ((c * K + ky) * K + kx) * P;
              for (std::size_t oy = 0; oy < Ho; ++oy) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(padding);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                for (std::size_t ox = 0; ox < Wo; ++ox) {
                  const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(padding);
                  if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
                  X->grad[(c * H + static_cast<std::size_t>(iy)) * W + static_cast<std::size_t>(ix)] += row[oy * Wo + ox];
                }
              }
            }
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& x, std::size_t k, std::size_t stride) {
  require_rank(x, 3, "maxpool2d");
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  if (k == 0 || stride == 0 || H < k || W < k) {
    throw ShapeMismatch("maxpool2d: window " + std::to_string(k) + " on " + shape_string(x.shape()));
  }
  const std::size_t Ho = (H - k) / stride + 1, Wo = (W - k) / stride + 1;
  auto out = make_result<T>({C, Ho, Wo}, {&x}, "maxpool2d");
  std::vector<std::size_t> argmax(C * Ho * Wo);
  auto xs = x.data();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t oy = 0; oy < Ho; ++oy)
      for (std::size_t ox = 0; ox < Wo; ++ox) {
        std::size_t best = (c * H + oy * stride) * W + ox * stride;
        for (std::size_t dy = 0; dy < k; ++dy)
          for (std::size_t dx = 0; dx < k; ++dx) {
            std::size_t idx = (c * H + oy * stride + dy) * W + ox * stride + dx;
            if (xs[idx] > xs[best]) best = idx;
          }
        const std::size_t o = (c * Ho + oy) * Wo + ox;
        argmax[o] = best;
        out[o] = xs[best];
      }
  if (out.requires_grad()) {
    out.node()->backward_fn = [argmax = std::move(argmax)](TensorNode<T>& self) {
      auto& X = self.inputs[0];
      if (!wants_grad(X)) return;
      for (std::size_t o = 0; o < argmax.size(); ++o) X->grad[argmax[o]] += self.grad[o];
    };
  }
  return out;
}

template <typename T>
Tensor<T> global_maxpool(const Tensor<T>& x) {
  require_rank(x, 3, "global_maxpool");
  const std::size_t C = x.dim(0), HW = x.dim(1) * x.dim(2);
  if (HW == 0) throw ShapeMismatch("global_maxpool: empty spatial extent");
  auto out = make_result<T>({1, C}, {&x}, "global_maxpool");
  std::vector<std::size_t> argmax(C);
  auto xs = x.data();
  for (std::size_t c = 0; c < C; ++c) {
    std::size_t best = c * HW;
    for (std::size_t i = 1; i < HW; ++i)
      if (xs[c * HW + i] > xs[best]) best = c * HW + i;
    argmax[c] = best;
    out[c] = xs[best];
  }
  if (out.requires_grad()) {
    out.node()->backward_fn = [argmax = std::move(argmax)](TensorNode<T>& self) {
      auto& X = self.inputs[0];
      if (!wants_grad(X)) return;
      for (std::size_t c = 0; c < argmax.size(); ++c) X->grad[argmax[c]] += self.grad[c];
    };
  }
  return out;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& a) {
  if (a.rank() == 0 || a.size() == 0) throw ShapeMismatch("softmax: empty input");
  const std::size_t n = a.shape().back();
  const std::size_t rows = a.size() / n;
  auto out = make_result<T>(a.shape(), {&a}, "softmax");
  auto x = a.data();
  for (std::size_t r = 0; r < rows; ++r) {
    T mx = *std::max_element(x.begin() + static_cast<std::ptrdiff_t>(r * n),
                             x.begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
    T z = T(0);
    for (std::size_t i = 0; i < n; ++i) z += (out[r * n + i] = std::exp(x[r * n + i] - mx));
    for (std::size_t i = 0; i < n; ++i) out[r * n + i] /= z;
  }
  if (out.requires_grad()) {
    out.node()->backward_fn = [rows, n](TensorNode<T>& self) {
      auto& A = self.inputs[0];
      if (!wants_grad(A)) return;
      for (std::size_t r = 0; r < rows; ++r) {
        T dot = T(0);
        for (std::size_t i = 0; i < n; ++i) dot += self.grad[r * n + i] * self.data[r * n + i];
        for (std::size_t i = 0; i < n; ++i)
          A->grad[r * n + i] += self.data[r * n + i] * (self.grad[r * n + i] - dot);
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> binary_cross_entropy(const Tensor<T>& logit, T label) {
  if (logit.size() != 1) throw ShapeMismatch("binary_cross_entropy: logit of shape " + shape_string(logit.shape()));
  const T z = logit[0];
  auto out = make_result<T>({1}, {&logit}, "bce");
  out[0] = std::max(z, T(0)) - z * label + std::log1p(std::exp(-std::abs(z)));
  if (out.requires_grad()) {
    out.node()->backward_fn = [label](TensorNode<T>& self) {
      auto& L = self.inputs[0];
      if (!wants_grad(L)) return;
      const T zz = L->data[0];
      const T p = zz >= T(0) ? T(1) / (T(1) + std::exp(-zz)) : std::exp(zz) / (T(1) + std::exp(zz));
      L->grad[0] += self.grad[0] * (p - label);
    };
  }
  return out;
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& table, const std::vector<WeightedRows>& groups) {
  require_rank(table, 2, "gather_rows");
  const std::size_t V = table.dim(0), D = table.dim(1);
  for (const auto& g : groups)
    for (const auto& [i, w] : g)
      if (i >= V) throw ShapeMismatch("gather_rows: row " + std::to_string(i) + " out of range for " + shape_string(table.shape()));
  auto out = make_result<T>({groups.size(), D}, {&table}, "gather_rows");
  auto t = table.data();
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (const auto& [i, w] : groups[g])
      for (std::size_t j = 0; j < D; ++j) out[g * D + j] += static_cast<T>(w) * t[i * D + j];
  if (out.requires_grad()) {
    out.node()->backward_fn = [groups, D](TensorNode<T>& self) {
      auto& Tb = self.inputs[0];
      if (!wants_grad(Tb)) return;
      for (std::size_t g = 0; g < groups.size(); ++g)
        for (const auto& [i, w] : groups[g])
          for (std::size_t j = 0; j < D; ++j) Tb->grad[i * D + j] += static_cast<T>(w) * self.grad[g * D + j];
    };
  }
  return out;
}

template <typename T>
Tensor<T> edge_aggregate(const Tensor<T>& x, const std::vector<std::pair<int, int>>& edges,
                         bool reverse) {
  require_rank(x, 2, "edge_aggregate");
  const std::size_t n = x.dim(0), D = x.dim(1);
  for (auto [s, d] : edges)
    if (s < 0 || d < 0 || static_cast<std::size_t>(s) >= n || static_cast<std::size_t>(d) >= n)
      throw ShapeMismatch("edge_aggregate: edge (" + std::to_string(s) + "," + std::to_string(d) + ") out of range for " + std::to_string(n) + " nodes");
  auto out = make_result<T>(x.shape(), {&x}, "edge_aggregate");
  auto xs = x.data();
  for (auto [s, d] : edges) {
    const std::size_t from = static_cast<std::size_t>(reverse ? d : s);
    const std::size_t to = static_cast<std::size_t>(reverse ? s : d);
    for (std::size_t j = 0; j < D; ++j) out[to * D + j] += xs[from * D + j];
  }
  if (out.requires_grad()) {
    out.node()->backward_fn = [edges, reverse, D](TensorNode<T>& self) {
      auto& X = self.inputs[0];
      if (!wants_grad(X)) return;
      for (auto [s, d] : edges) {
        const std::size_t from = static_cast<std::size_t>(reverse ? d : s);
        const std::size_t to = static_cast<std::size_t>(reverse ? s : d);
        for (std::size_t j = 0; j < D; ++j) X->grad[from * D + j] += self.grad[to * D + j];
      }
    };
  }
  return out;
}

#define GRAPHSPY_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                    \
  template Tensor<T> hadamard(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> scale(const Tensor<T>&, T);                                                 \
  template Tensor<T> one_minus(const Tensor<T>&);                                                \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                  \
  template Tensor<T> tanh(const Tensor<T>&);                                                     \
  template Tensor<T> relu(const Tensor<T>&);                                                     \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                           \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, std::size_t);                         \
  template Tensor<T> sum(const Tensor<T>&);                                                      \
  template Tensor<T> sum(const Tensor<T>&, std::size_t);                                         \
  template Tensor<T> mean(const Tensor<T>&, std::size_t);                                        \
  template Tensor<T> mean_rows(const Tensor<T>&);                                                \
  template Tensor<T> mean_rows(const Tensor<T>&, const std::vector<std::size_t>&);               \
  template Tensor<T> dense(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, std::size_t,   \
                            std::size_t);                                                        \
  template Tensor<T> maxpool2d(const Tensor<T>&, std::size_t, std::size_t);                      \
  template Tensor<T> global_maxpool(const Tensor<T>&);                                           \
  template Tensor<T> softmax(const Tensor<T>&);                                                  \
  template Tensor<T> binary_cross_entropy(const Tensor<T>&, T);                                  \
  template Tensor<T> gather_rows(const Tensor<T>&, const std::vector<WeightedRows>&);            \
  template Tensor<T> edge_aggregate(const Tensor<T>&, const std::vector<std::pair<int, int>>&,   \
                                    bool);

GRAPHSPY_INSTANTIATE_OPS(float)
GRAPHSPY_INSTANTIATE_OPS(double)

}  // namespace graphspy::nn
