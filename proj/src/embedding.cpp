#include "graphspy/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "graphspy/io.hpp"

namespace graphspy {

int Vocab::id(std::string_view token) const {
  auto it = index.find(std::string(token));
  return it == index.end() ? kUnk : it->second;
}

Vocab build_vocab(const Corpus& corpus, std::size_t min_count) {
  std::unordered_map<std::string, std::pair<std::uint64_t, std::size_t>> seen;  // count, first
  std::size_t order = 0;
  for (const auto& sentence : corpus)
    for (const auto& tok : sentence) {
      auto [it, fresh] = seen.try_emplace(tok, 0, order);
      if (fresh) ++order;
      ++it->second.first;
    }
  if (seen.empty()) throw EmptyCorpus();

  std::vector<std::pair<std::string, std::pair<std::uint64_t, std::size_t>>> entries(seen.begin(),
                                                                                     seen.end());
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second.first != b.second.first) return a.second.first > b.second.first;
    return a.second.second < b.second.second;
  });
  Vocab v;
  v.min_count = min_count;
  v.tokens.emplace_back(kUnkToken);
  v.counts.push_back(0);
  for (const auto& [tok, stats] : entries) {
    if (stats.first < min_count || tok == kUnkToken) {
      v.counts[0] += stats.first;
      continue;
    }
    v.index.emplace(tok, static_cast<int>(v.tokens.size()));
    v.tokens.push_back(tok);
    v.counts.push_back(stats.first);
  }
  v.index.emplace(std::string(kUnkToken), kUnk);
  return v;
}

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

float sigmoidf(float x) {
  if (x > 30.f) return 1.f;
  if (x < -30.f) return 0.f;
  return 1.f / (1.f + std::exp(-x));
}

}  // namespace

EmbeddingTable train_word2vec(const Corpus& corpus, const Word2VecOptions& o) {
  if (o.dim == 0 || o.window == 0 || o.negatives == 0)
    throw Error("InvalidArgument", "word2vec needs dim, window and negatives >= 1", ErrorCategory::Usage);
  EmbeddingTable table;
  table.vocab = build_vocab(corpus, o.min_count);
  table.dim = o.dim;
  const std::size_t V = table.vocab.size(), D = o.dim;

  std::mt19937_64 rng(o.seed);
  table.vectors.resize(V * D);
  for (auto& x : table.vectors) x = static_cast<float>((uniform01(rng) - 0.5) / static_cast<double>(D));
  std::vector<float> context(V * D, 0.f);

  // Cumulative unigram^0.75 distribution for negative draws.
  std::vector<double> cdf(V);
  double acc = 0;
  for (std::size_t i = 0; i < V; ++i) {
    acc += std::pow(static_cast<double>(table.vocab.counts[i]), 0.75);
    cdf[i] = acc;
  }
  auto draw = [&] {
    const double u = uniform01(rng) * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(V) - 1));
  };

  std::vector<std::vector<int>> ids;
  std::uint64_t total = 0;
  for (const auto& s : corpus) {
    ids.emplace_back();
    for (const auto& t : s) ids.back().push_back(table.vocab.id(t));
    total += s.size();
  }
  const double budget = static_cast<double>(total) * static_cast<double>(o.epochs);
  std::uint64_t processed = 0;
  std::vector<float> grad(D);

  for (std::size_t epoch = 0; epoch < o.epochs; ++epoch) {
    for (const auto& sent : ids) {
      for (std::size_t pos = 0; pos < sent.size(); ++pos, ++processed) {
        const float lr = static_cast<float>(o.lr * std::max(1e-4, 1.0 - static_cast<double>(processed) / budget));
        const std::size_t shrink = static_cast<std::size_t>(rng() % o.window);
        const std::size_t win = o.window - shrink;
        const std::size_t lo = pos >= win ? pos - win : 0;
        const std::size_t hi = std::min(sent.size() - 1, pos + win);
        const std::size_t center = static_cast<std::size_t>(sent[pos]);
        for (std::size_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          // The context word's input vector predicts the centre word.
          float* in = &table.vectors[static_cast<std::size_t>(sent[c]) * D];
          std::fill(grad.begin(), grad.end(), 0.f);
          for (std::size_t k = 0; k <= o.negatives; ++k) {
            std::size_t target = center;
            float label = 1.f;
            if (k > 0) {
              target = draw();
              if (target == center) continue;
              label = 0.f;
            }
            float* out = &context[target * D];
            float dot = 0.f;
            for (std::size_t d = 0; d < D; ++d) dot += in[d] * out[d];
            const float g = (label - sigmoidf(dot)) * lr;
            for (std::size_t d = 0; d < D; ++d) {
              grad[d] += g * out[d];
              out[d] += g * in[d];
            }
          }
          for (std::size_t d = 0; d < D; ++d) in[d] += grad[d];
        }
      }
    }
  }
  return table;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<double>(a[i]) * b[i];
    aa += static_cast<double>(a[i]) * a[i];
    bb += static_cast<double>(b[i]) * b[i];
  }
  if (aa == 0 || bb == 0) return 0;
  return ab / std::sqrt(aa * bb);
}

void append_instruction_corpus(const Program& program, Corpus& out) {
  for (const auto& proc : program.procedures)
    for (const auto& block : proc.blocks) {
      std::vector<std::string> sentence;
      for (const auto& ins : block.instructions)
        for (auto& t : token_texts(ins, program.dialect)) sentence.push_back(std::move(t));
      out.push_back(std::move(sentence));
    }
}

Corpus instruction_corpus(const Program& program) {
  Corpus c;
  append_instruction_corpus(program, c);
  return c;
}

void append_value_corpus(const Cct& cct, Corpus& out) {
  for (const auto& node : cct.nodes)
    for (const auto& s : node.snapshots) out.push_back(value_tokens(s));
}

namespace {

nn::WeightedRows collapse(const std::map<int, double>& w) {
  nn::WeightedRows rows;
  for (auto [id, weight] : w) rows.emplace_back(static_cast<std::size_t>(id), weight);
  return rows;
}

}  // namespace

nn::WeightedRows block_weights(const BasicBlock& block, const Vocab& vocab, DialectKind dialect) {
  std::map<int, double> w;
  const double m = static_cast<double>(block.instructions.size());
  for (const auto& ins : block.instructions) {
    auto toks = token_texts(ins, dialect);
    for (const auto& t : toks) w[vocab.id(t)] += 1.0 / (m * static_cast<double>(toks.size()));
  }
  return collapse(w);
}

nn::WeightedRows snapshot_weights(const CctNode& node, const Vocab& vocab) {
  std::vector<int> ids;
  for (const auto& s : node.snapshots)
    for (const auto& t : value_tokens(s)) ids.push_back(vocab.id(t));
  std::map<int, double> w;
  for (int id : ids) w[id] += 1.0 / static_cast<double>(ids.size());
  return collapse(w);
}

std::vector<double> embed_weighted(const nn::WeightedRows& weights, const EmbeddingTable& table) {
  std::vector<double> out(table.dim, 0.0);
  for (auto [id, w] : weights) {
    auto r = table.row(static_cast<int>(id));
    for (std::size_t d = 0; d < table.dim; ++d) out[d] += w * r[d];
  }
  return out;
}

std::vector<double> embed_block(const BasicBlock& block, const EmbeddingTable& table,
                                DialectKind dialect) {
  return embed_weighted(block_weights(block, table.vocab, dialect), table);
}

std::vector<double> embed_snapshots(const CctNode& node, const EmbeddingTable& table) {
  return embed_weighted(snapshot_weights(node, table.vocab), table);
}

namespace {
constexpr std::string_view kEmbMagic = "GSEMB";
constexpr std::uint32_t kEmbVersion = 1;
}  // namespace

std::string encode_embedding(const EmbeddingTable& t) {
  ByteWriter w;
  w.bytes(kEmbMagic);
  w.u32(kEmbVersion);
  w.u32(static_cast<std::uint32_t>(t.vocab.size()));
  w.u32(static_cast<std::uint32_t>(t.dim));
  for (const auto& tok : t.vocab.tokens) w.str(tok);
  for (float v : t.vectors) w.f32(v);
  return w.data();
}

EmbeddingTable decode_embedding(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.bytes(kEmbMagic.size()) != kEmbMagic) throw Error("FormatError", "not a GSEMB embedding file");
  if (auto v = r.u32(); v != kEmbVersion)
    throw Error("FormatError", "unsupported embedding version " + std::to_string(v));
  EmbeddingTable t;
  const auto n = r.u32();
  t.dim = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    t.vocab.tokens.push_back(r.str());
    t.vocab.index.emplace(t.vocab.tokens.back(), static_cast<int>(i));
  }
  t.vocab.counts.assign(n, 0);
  t.vectors.resize(static_cast<std::size_t>(n) * t.dim);
  for (auto& x : t.vectors) x = r.f32();
  if (!r.done()) throw Error("FormatError", "trailing bytes after embedding table");
  return t;
}

void save_embedding(const std::filesystem::path& path, const EmbeddingTable& table) {
  write_file_atomic(path, encode_embedding(table));
}

EmbeddingTable load_embedding(const std::filesystem::path& path) {
  return decode_embedding(read_file(path));
}

}  // namespace graphspy
