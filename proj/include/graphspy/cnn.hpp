#pragma once

// Adjacency matrices as one-channel images: 3x3 stride-1 pad-1 convolutions,
// global spatial max, dense head to 40.
//
// Resnet11: stem 1->16; residual blocks 16->16, 16->32, 32->64 (two convs
// each, 1x1 projection on the skip when channels change); head conv 64->64;
// dense 64->40. Eight 3x3 convs + two projections + dense = 11 layers.
// Resnet7:  stem 1->16; blocks 16->16, 16->64 (projection); dense 64->40.
// CNN3:     plain convs 1->16->32->64; dense 64->40.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "graphspy/graph.hpp"
#include "graphspy/nn/ops.hpp"
#include "graphspy/nn/optim.hpp"

namespace graphspy {

enum class CnnKind : std::uint8_t { Cnn3, Resnet7, Resnet11 };
std::string_view cnn_kind_name(CnnKind kind);
std::optional<CnnKind> parse_cnn_kind(std::string_view text);

inline constexpr std::size_t kCnnOutDim = 40;
inline constexpr std::size_t kCnnChannels = 64;
inline constexpr int kMinImageSide = 8;

template <typename T>
struct Conv {
  nn::Tensor<T> w;  // [O, C, K, K]
  nn::Tensor<T> b;  // [O]
};

template <typename T>
struct ResidualBlock {
  Conv<T> conv1, conv2;
  std::optional<Conv<T>> proj;  // 1x1, present when channels change
};

template <typename T>
struct CnnParams {
  CnnKind kind = CnnKind::Resnet11;
  Conv<T> stem;                          // first conv (CNN3: layer 1)
  std::vector<Conv<T>> plain;            // CNN3 layers 2..3
  std::vector<ResidualBlock<T>> blocks;  // Resnet variants
  std::optional<Conv<T>> head_conv;      // Resnet11
  nn::Tensor<T> head_w, head_b;          // dense 64 -> 40

  nn::ParamList<T> list() const;  // names "cnn.*"
  std::size_t weighted_layers() const;
  int receptive_radius() const;  // 3x3 convs on the longest path
};

template <typename T>
CnnParams<T> init_cnn(CnnKind kind, std::mt19937_64& rng);

// [1, N, N] with N = max(n, 8); the original matrix sits top-left.
template <typename T>
nn::Tensor<T> adjacency_image(const AdjMatrix& a);

template <typename T>
nn::Tensor<T> residual_block(const nn::Tensor<T>& x, const ResidualBlock<T>& block);

// Globally max-pooled channels before the head: [1, 64].
template <typename T>
nn::Tensor<T> cnn_features(const nn::Tensor<T>& image, const CnnParams<T>& params);

// [1, 40]
template <typename T>
nn::Tensor<T> embed_adjacency(const AdjMatrix& a, const CnnParams<T>& params);

// Binary motif placed into otherwise-empty matrices.
struct Motif {
  std::string name;
  int rows = 0, cols = 0;
  std::vector<std::uint8_t> cells;  // row-major
};

AdjMatrix place_motif(const Motif& motif, int n, int row, int col);
// Inserts an edgeless node at `index`, shifting later rows and columns.
AdjMatrix insert_node(const AdjMatrix& a, int index);

struct ProbeEntry {
  std::string motif;
  int size = 0;
  std::vector<double> channels;  // pooled activations, 64
  std::vector<double> output;    // embedding, 40
};

// Evaluates each motif centred in matrices of each size.
std::vector<ProbeEntry> pattern_sensitivity_probe(const CnnParams<float>& params,
                                                  const std::vector<Motif>& motifs,
                                                  const std::vector<int>& sizes);

}  // namespace graphspy
