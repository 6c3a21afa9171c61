#pragma once

// Gated graph neural network: input projection, T rounds of bidirectional
// message passing with a GRU update, then a permutation-invariant readout.

#include <random>
#include <string>
#include <vector>

#include "graphspy/graph.hpp"
#include "graphspy/nn/ops.hpp"
#include "graphspy/nn/optim.hpp"

namespace graphspy {

struct GgnnConfig {
  std::string prefix;  // parameter name prefix
  std::size_t input_dim = 60;
  std::size_t state_dim = 70;
  std::size_t steps = 10;
  std::size_t edge_types = 1;  // > 1 gives each edge kind its own transforms
  bool gated_readout = false;
};

GgnnConfig cfg_ggnn_config();  // 60 -> 70, T = 10
GgnnConfig cct_ggnn_config();  // 30 -> 50, T = 5

struct TypedEdge {
  int src = 0;
  int dst = 0;
  int type = 0;
};

class EdgeOutOfRange : public Error {
 public:
  EdgeOutOfRange(int src, int dst, std::size_t n)
      : Error("EdgeOutOfRange", "edge (" + std::to_string(src) + "," + std::to_string(dst) +
                                    ") outside a graph of " + std::to_string(n) + " nodes",
              ErrorCategory::Numeric) {}
};

class EmptyGraph : public Error {
 public:
  EmptyGraph() : Error("EmptyGraph", "readout of a graph with no nodes", ErrorCategory::Numeric) {}
};

template <typename T>
struct GgnnParams {
  nn::Tensor<T> P;  // input_dim x D
  std::vector<nn::Tensor<T>> W_fwd, b_fwd, W_bwd, b_bwd;  // one per edge type
  nn::Tensor<T> W_z, U_z, b_z, W_r, U_r, b_r, W_h, U_h, b_h;
  nn::Tensor<T> W_gate, b_gate;  // gated readout only

  nn::ParamList<T> list(const GgnnConfig& config) const;
};

template <typename T>
GgnnParams<T> init_ggnn(const GgnnConfig& config, std::mt19937_64& rng);

// CFG edges; typed when config.edge_types == kEdgeKindCount.
std::vector<TypedEdge> cfg_edges(const Cfg& cfg, const GgnnConfig& config);
std::vector<TypedEdge> cct_edges(const Cct& cct);

// One GRU update. m and h are [n, D].
template <typename T>
nn::Tensor<T> gru_cell(const nn::Tensor<T>& m, const nn::Tensor<T>& h, const GgnnParams<T>& p);

// node_inputs [n, input_dim] -> final states [n, D].
template <typename T>
nn::Tensor<T> propagate(const nn::Tensor<T>& node_inputs, const std::vector<TypedEdge>& edges,
                        const GgnnConfig& config, const GgnnParams<T>& params);

// [n, D] -> [1, D]; mean over nodes (or gated mean when configured).
template <typename T>
nn::Tensor<T> readout(const nn::Tensor<T>& states, const GgnnConfig& config,
                      const GgnnParams<T>& params);

// Mean of the final states of the CCT nodes running `proc`; zeros if none.
template <typename T>
nn::Tensor<T> embed_cct_for_procedure(const Cct& cct, const std::string& proc,
                                      const nn::Tensor<T>& states);

}  // namespace graphspy
