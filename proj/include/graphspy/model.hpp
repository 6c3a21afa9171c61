#pragma once

// Per-procedure classifier: positional (CNN over the adjacency matrix),
// intra-procedural (GGNN over the CFG of embedded blocks) and
// inter-procedural (GGNN over the CCT of embedded snapshots) views, fused by
// one dense layer and scored by an MLP.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "graphspy/cnn.hpp"
#include "graphspy/embedding.hpp"
#include "graphspy/ggnn.hpp"
#include "json.hpp"

namespace graphspy {

enum class Variant : std::uint8_t { W2v, Cnn, W2vGgnn, W2vGgnnCnn, Full };
std::string_view variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view text);

struct ModelConfig {
  Variant variant = Variant::Full;
  CnnKind cnn_kind = CnnKind::Resnet11;
  GgnnConfig cfg_ggnn = cfg_ggnn_config();
  GgnnConfig cct_ggnn = cct_ggnn_config();
  std::size_t fusion_dim = 64;
  std::size_t mlp_hidden = 32;
  bool freeze_embeddings = false;

  bool uses_cfg_ggnn() const;
  bool uses_cnn() const;
  bool uses_cct() const;
  std::size_t fusion_input_dim() const;

  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::ordered_json& j);
};

// One labeled procedure with everything the model reads.
struct CctNodeRecord {
  std::string proc;
  int parent = -1;
  std::vector<std::string> tokens;  // value tokens of all snapshots, in order
};

struct SampleRecord {
  std::string program_id;
  std::string proc;
  std::string tag;
  DialectKind dialect = DialectKind::A;
  std::vector<std::vector<std::vector<std::string>>> blocks;  // block -> instruction -> tokens
  Cfg cfg;
  std::vector<CctNodeRecord> cct;  // whole-program CCT, index == node id
  int label = 0;
  std::uint64_t cost = 0;  // executed instructions, the oracle's work on this procedure
  std::string motif;       // generator intent such as "a+"; informational, never a feature

  nlohmann::ordered_json to_json() const;
  static SampleRecord from_json(const nlohmann::ordered_json& j);
};

// Sentences for the two word2vec tables; CCT sentences once per program.
Corpus sample_instruction_corpus(const std::vector<SampleRecord>& samples);
Corpus sample_value_corpus(const std::vector<SampleRecord>& samples);

// Vocabulary-resolved form of a sample, computed once per model.
struct PreparedSample {
  std::vector<nn::WeightedRows> block_rows;
  std::vector<TypedEdge> cfg_edges;
  AdjMatrix adj;
  std::vector<nn::WeightedRows> cct_rows;
  std::vector<TypedEdge> cct_edges;
  std::vector<std::size_t> proc_nodes;  // CCT nodes running the procedure
  int label = 0;
  std::uint64_t cost = 0;
};

PreparedSample prepare_sample(const SampleRecord& s, const Vocab& instr, const Vocab& value,
                              const ModelConfig& config);

template <typename T>
struct Model {
  ModelConfig config;
  nn::Tensor<T> emb_instr;  // [V_instr, 60]
  nn::Tensor<T> emb_value;  // [V_value, 30]
  GgnnParams<T> cfg_ggnn;
  GgnnParams<T> cct_ggnn;
  CnnParams<T> cnn;
  nn::Tensor<T> fuse_w, fuse_b;
  nn::Tensor<T> mlp_w1, mlp_b1, mlp_w2, mlp_b2;

  // Every parameter in checkpoint order, including unused branches and
  // frozen tables.
  nn::ParamList<T> all_params() const;
  // Parameters the variant actually trains.
  nn::ParamList<T> trainable() const;
};

template <typename T>
Model<T> init_model(const ModelConfig& config, const EmbeddingTable& instr,
                    const EmbeddingTable& value, std::uint64_t seed);

// relu(dense(g_A || g_intra || g_inter)); parts must fill W's rows exactly.
template <typename T>
nn::Tensor<T> fuse(const std::vector<nn::Tensor<T>>& parts, const nn::Tensor<T>& w,
                   const nn::Tensor<T>& b);
// MLP 64 -> 32 -> 1, returns the logit.
template <typename T>
nn::Tensor<T> classify_logit(const nn::Tensor<T>& g_prog, const Model<T>& m);

template <typename T>
struct Views {
  nn::Tensor<T> g_w2v, g_a, g_intra, g_inter;  // defined when the variant uses them
};

template <typename T>
Views<T> compute_views(const Model<T>& m, const PreparedSample& s);

template <typename T>
nn::Tensor<T> forward_logit(const Model<T>& m, const PreparedSample& s);

double predict_probability(const Model<float>& m, const PreparedSample& s);

// Float <-> double copies for gradient checking the real model.
Model<double> to_double(const Model<float>& m);

}  // namespace graphspy
