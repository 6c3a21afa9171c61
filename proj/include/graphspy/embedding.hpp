#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "graphspy/graph.hpp"
#include "graphspy/isa.hpp"
#include "graphspy/nn/ops.hpp"

namespace graphspy {

using Corpus = std::vector<std::vector<std::string>>;

inline constexpr int kUnk = 0;
inline constexpr std::string_view kUnkToken = "<unk>";

// Id 0 is UNK; kept tokens follow by descending count, ties broken by first
// appearance in the corpus.
struct Vocab {
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> counts;  // counts[0] aggregates dropped tokens
  std::unordered_map<std::string, int> index;
  std::size_t min_count = 1;

  int id(std::string_view token) const;
  std::size_t size() const { return tokens.size(); }
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("EmptyCorpus", "token corpus is empty") {}
};

Vocab build_vocab(const Corpus& corpus, std::size_t min_count);

struct EmbeddingTable {
  Vocab vocab;
  std::size_t dim = 0;
  std::vector<float> vectors;  // vocab.size() x dim, row-major

  std::span<const float> row(int id) const {
    return {vectors.data() + static_cast<std::size_t>(id) * dim, dim};
  }
  std::span<const float> vector(std::string_view token) const { return row(vocab.id(token)); }
};

struct Word2VecOptions {
  std::size_t dim = 60;
  std::size_t window = 2;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double lr = 0.025;  // decays linearly towards zero over training
  std::size_t min_count = 2;
  std::uint64_t seed = 1;
};

// Skip-gram with negative sampling; negatives are drawn from unigram^0.75.
EmbeddingTable train_word2vec(const Corpus& corpus, const Word2VecOptions& options);

double cosine(std::span<const float> a, std::span<const float> b);

// Instruction-token corpus: one sentence per basic block.
Corpus instruction_corpus(const Program& program);
void append_instruction_corpus(const Program& program, Corpus& out);
// Value-token corpus: one sentence per snapshot.
void append_value_corpus(const Cct& cct, Corpus& out);

// Token weights realizing the two-level average: a token of instruction j in
// a block of m instructions weighs 1 / (m * |tokens_j|). Repeated ids merge.
nn::WeightedRows block_weights(const BasicBlock& block, const Vocab& vocab, DialectKind dialect);
// Flat mean over every value token of every snapshot; empty if none.
nn::WeightedRows snapshot_weights(const CctNode& node, const Vocab& vocab);

std::vector<double> embed_weighted(const nn::WeightedRows& weights, const EmbeddingTable& table);
std::vector<double> embed_block(const BasicBlock& block, const EmbeddingTable& table,
                                DialectKind dialect);
std::vector<double> embed_snapshots(const CctNode& node, const EmbeddingTable& table);

// GSEMB: magic, u32 version, u32 vocab_size, u32 dim, length-prefixed tokens,
// then little-endian float32 rows.
std::string encode_embedding(const EmbeddingTable& table);
EmbeddingTable decode_embedding(std::string_view bytes);
void save_embedding(const std::filesystem::path& path, const EmbeddingTable& table);
EmbeddingTable load_embedding(const std::filesystem::path& path);

}  // namespace graphspy
