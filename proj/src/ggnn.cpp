#include "graphspy/ggnn.hpp"

#include "graphspy/nn/init.hpp"

namespace graphspy {

using nn::Tensor;

GgnnConfig cfg_ggnn_config() { return {"ggnn_cfg", 60, 70, 10, 1, false}; }
GgnnConfig cct_ggnn_config() { return {"ggnn_cct", 30, 50, 5, 1, false}; }

template <typename T>
nn::ParamList<T> GgnnParams<T>::list(const GgnnConfig& c) const {
  const std::string p = c.prefix + ".";
  nn::ParamList<T> out{{p + "P", P}};
  for (std::size_t k = 0; k < W_fwd.size(); ++k) {
    const std::string s = W_fwd.size() > 1 ? "." + std::to_string(k) : "";
    out.push_back({p + "W_fwd" + s, W_fwd[k]});
    out.push_back({p + "b_fwd" + s, b_fwd[k]});
    out.push_back({p + "W_bwd" + s, W_bwd[k]});
    out.push_back({p + "b_bwd" + s, b_bwd[k]});
  }
  for (auto& [n, t] : std::initializer_list<std::pair<const char*, const Tensor<T>*>>{
           {"W_z", &W_z}, {"U_z", &U_z}, {"b_z", &b_z}, {"W_r", &W_r}, {"U_r", &U_r},
           {"b_r", &b_r}, {"W_h", &W_h}, {"U_h", &U_h}, {"b_h", &b_h}})
    out.push_back({p + n, *t});
  if (c.gated_readout) {
    out.push_back({p + "W_gate", W_gate});
    out.push_back({p + "b_gate", b_gate});
  }
  return out;
}

template <typename T>
GgnnParams<T> init_ggnn(const GgnnConfig& c, std::mt19937_64& rng) {
  const std::size_t D = c.state_dim;
  GgnnParams<T> p;
  p.P = nn::xavier<T>({c.input_dim, D}, c.input_dim, D, rng);
  for (std::size_t k = 0; k < std::max<std::size_t>(1, c.edge_types); ++k) {
    p.W_fwd.push_back(nn::xavier<T>({D, D}, D, D, rng));
    p.b_fwd.push_back(nn::zeros_param<T>({D}));
    p.W_bwd.push_back(nn::xavier<T>({D, D}, D, D, rng));
    p.b_bwd.push_back(nn::zeros_param<T>({D}));
  }
  for (auto* w : {&p.W_z, &p.U_z, &p.W_r, &p.U_r, &p.W_h, &p.U_h}) *w = nn::xavier<T>({D, D}, D, D, rng);
  for (auto* b : {&p.b_z, &p.b_r, &p.b_h}) *b = nn::zeros_param<T>({D});
  if (c.gated_readout) {
    p.W_gate = nn::xavier<T>({D, D}, D, D, rng);
    p.b_gate = nn::zeros_param<T>({D});
  }
  return p;
}

std::vector<TypedEdge> cfg_edges(const Cfg& cfg, const GgnnConfig& config) {
  std::vector<TypedEdge> out;
  for (const auto& e : cfg.edges)
    out.push_back({e.src, e.dst, config.edge_types > 1 ? static_cast<int>(e.kind) : 0});
  return out;
}

std::vector<TypedEdge> cct_edges(const Cct& cct) {
  std::vector<TypedEdge> out;
  for (auto [p, c] : cct.edges()) out.push_back({p, c, 0});
  return out;
}

template <typename T>
Tensor<T> gru_cell(const Tensor<T>& m, const Tensor<T>& h, const GgnnParams<T>& p) {
  using namespace nn;
  auto z = sigmoid(add(dense(m, p.W_z, p.b_z), matmul(h, p.U_z)));
  auto r = sigmoid(add(dense(m, p.W_r, p.b_r), matmul(h, p.U_r)));
  auto h_tilde = nn::tanh(add(dense(m, p.W_h, p.b_h), matmul(hadamard(r, h), p.U_h)));
  return add(hadamard(one_minus(z), h), hadamard(z, h_tilde));
}

template <typename T>
Tensor<T> propagate(const Tensor<T>& x, const std::vector<TypedEdge>& edges, const GgnnConfig& c,
                    const GgnnParams<T>& p) {
  using namespace nn;
  if (x.rank() != 2 || x.dim(1) != c.input_dim)
    throw ShapeMismatch("ggnn input " + shape_string(x.shape()) + ", expected [n," +
                        std::to_string(c.input_dim) + "]");
  const std::size_t n = x.dim(0);
  const std::size_t types = p.W_fwd.size();
  std::vector<std::vector<std::pair<int, int>>> by_type(types);
  std::vector<Tensor<T>> in_deg, out_deg;
  for (const auto& e : edges) {
    if (e.src < 0 || e.dst < 0 || static_cast<std::size_t>(e.src) >= n ||
        static_cast<std::size_t>(e.dst) >= n)
      throw EdgeOutOfRange(e.src, e.dst, n);
    if (e.type < 0 || static_cast<std::size_t>(e.type) >= types)
      throw ShapeMismatch("edge type " + std::to_string(e.type) + " has no transform");
    by_type[static_cast<std::size_t>(e.type)].emplace_back(e.src, e.dst);
  }
  // Each incoming (outgoing) edge contributes one copy of the forward
  // (backward) bias, so the bias enters scaled by the degree.
  for (std::size_t k = 0; k < types; ++k) {
    auto din = Tensor<T>::zeros({n, 1});
    auto dout = Tensor<T>::zeros({n, 1});
    for (auto [s, d] : by_type[k]) {
      din[static_cast<std::size_t>(d)] += T(1);
      dout[static_cast<std::size_t>(s)] += T(1);
    }
    in_deg.push_back(din);
    out_deg.push_back(dout);
  }

  auto h = matmul(x, p.P);
  for (std::size_t t = 0; t < c.steps; ++t) {
    Tensor<T> m = Tensor<T>::zeros({n, c.state_dim});
    for (std::size_t k = 0; k < types; ++k) {
      if (by_type[k].empty()) continue;
      auto fwd = add(matmul(edge_aggregate(h, by_type[k], false), p.W_fwd[k]),
                     matmul(in_deg[k], reshape(p.b_fwd[k], {1, c.state_dim})));
      auto bwd = add(matmul(edge_aggregate(h, by_type[k], true), p.W_bwd[k]),
                     matmul(out_deg[k], reshape(p.b_bwd[k], {1, c.state_dim})));
      m = add(m, add(fwd, bwd));
    }
    h = gru_cell(m, h, p);
  }
  return h;
}

template <typename T>
Tensor<T> readout(const Tensor<T>& states, const GgnnConfig& c, const GgnnParams<T>& p) {
  if (states.rank() != 2 || states.dim(0) == 0) throw EmptyGraph();
  if (!c.gated_readout) return nn::mean_rows(states);
  auto gate = nn::sigmoid(nn::dense(states, p.W_gate, p.b_gate));
  return nn::mean_rows(nn::hadamard(gate, states));
}

template <typename T>
Tensor<T> embed_cct_for_procedure(const Cct& cct, const std::string& proc, const Tensor<T>& states) {
  std::vector<std::size_t> rows;
  for (const auto& node : cct.nodes)
    if (node.proc == proc) rows.push_back(static_cast<std::size_t>(node.id));
  return nn::mean_rows(states, rows);
}

#define GRAPHSPY_INSTANTIATE_GGNN(T)                                                               \
  template struct GgnnParams<T>;                                                                   \
  template GgnnParams<T> init_ggnn<T>(const GgnnConfig&, std::mt19937_64&);                        \
  template Tensor<T> gru_cell(const Tensor<T>&, const Tensor<T>&, const GgnnParams<T>&);           \
  template Tensor<T> propagate(const Tensor<T>&, const std::vector<TypedEdge>&, const GgnnConfig&, \
                               const GgnnParams<T>&);                                              \
  template Tensor<T> readout(const Tensor<T>&, const GgnnConfig&, const GgnnParams<T>&);           \
  template Tensor<T> embed_cct_for_procedure(const Cct&, const std::string&, const Tensor<T>&);

GRAPHSPY_INSTANTIATE_GGNN(float)
GRAPHSPY_INSTANTIATE_GGNN(double)

}  // namespace graphspy
