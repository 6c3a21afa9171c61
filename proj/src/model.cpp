#include "graphspy/model.hpp"

#include <set>

#include "graphspy/nn/init.hpp"

namespace graphspy {

using nn::Tensor;
using json = nlohmann::ordered_json;

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::W2v: return "w2v";
    case Variant::Cnn: return "cnn";
    case Variant::W2vGgnn: return "w2v+ggnn";
    case Variant::W2vGgnnCnn: return "w2v+ggnn+resnet";
    case Variant::Full: return "full";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view text) {
  for (auto v : {Variant::W2v, Variant::Cnn, Variant::W2vGgnn, Variant::W2vGgnnCnn, Variant::Full})
    if (variant_name(v) == text) return v;
  return std::nullopt;
}

bool ModelConfig::uses_cfg_ggnn() const {
  return variant == Variant::W2vGgnn || variant == Variant::W2vGgnnCnn || variant == Variant::Full;
}
bool ModelConfig::uses_cnn() const {
  return variant == Variant::Cnn || variant == Variant::W2vGgnnCnn || variant == Variant::Full;
}
bool ModelConfig::uses_cct() const { return variant == Variant::Full; }

std::size_t ModelConfig::fusion_input_dim() const {
  if (variant == Variant::W2v) return cfg_ggnn.input_dim;
  std::size_t d = 0;
  if (uses_cnn()) d += kCnnOutDim;
  if (uses_cfg_ggnn()) d += cfg_ggnn.state_dim;
  if (uses_cct()) d += cct_ggnn.state_dim;
  return d;
}

namespace {

json ggnn_json(const GgnnConfig& c) {
  return {{"input_dim", c.input_dim}, {"state_dim", c.state_dim}, {"steps", c.steps},
          {"edge_types", c.edge_types}, {"gated_readout", c.gated_readout}};
}

GgnnConfig ggnn_from(const json& j, GgnnConfig base) {
  base.input_dim = j.at("input_dim").get<std::size_t>();
  base.state_dim = j.at("state_dim").get<std::size_t>();
  base.steps = j.at("steps").get<std::size_t>();
  base.edge_types = j.at("edge_types").get<std::size_t>();
  base.gated_readout = j.at("gated_readout").get<bool>();
  return base;
}

}  // namespace

json ModelConfig::to_json() const {
  return {{"variant", variant_name(variant)},
          {"cnn", cnn_kind_name(cnn_kind)},
          {"ggnn_cfg", ggnn_json(cfg_ggnn)},
          {"ggnn_cct", ggnn_json(cct_ggnn)},
          {"fusion_dim", fusion_dim},
          {"mlp_hidden", mlp_hidden},
          {"freeze_embeddings", freeze_embeddings}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  auto v = parse_variant(j.at("variant").get<std::string>());
  auto k = parse_cnn_kind(j.at("cnn").get<std::string>());
  if (!v || !k) throw Error("FormatError", "unknown model variant or cnn kind in manifest");
  c.variant = *v;
  c.cnn_kind = *k;
  c.cfg_ggnn = ggnn_from(j.at("ggnn_cfg"), c.cfg_ggnn);
  c.cct_ggnn = ggnn_from(j.at("ggnn_cct"), c.cct_ggnn);
  c.fusion_dim = j.at("fusion_dim").get<std::size_t>();
  c.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
  c.freeze_embeddings = j.at("freeze_embeddings").get<bool>();
  return c;
}

json SampleRecord::to_json() const {
  json j;
  j["program"] = program_id;
  j["proc"] = proc;
  j["tag"] = tag;
  j["dialect"] = dialect_name(dialect);
  j["label"] = label;
  j["cost"] = cost;
  if (!motif.empty()) j["motif"] = motif;
  j["blocks"] = blocks;
  j["cfg"] = cfg_to_json(cfg);
  auto nodes = json::array();
  for (const auto& n : cct) nodes.push_back({{"proc", n.proc}, {"parent", n.parent}, {"tokens", n.tokens}});
  j["cct"] = std::move(nodes);
  return j;
}

SampleRecord SampleRecord::from_json(const json& j) {
  SampleRecord s;
  s.program_id = j.at("program").get<std::string>();
  s.proc = j.at("proc").get<std::string>();
  s.tag = j.at("tag").get<std::string>();
  auto d = parse_dialect_name(j.at("dialect").get<std::string>());
  if (!d) throw Error("FormatError", "unknown dialect in sample record");
  s.dialect = *d;
  s.label = j.at("label").get<int>();
  s.cost = j.at("cost").get<std::uint64_t>();
  s.motif = j.value("motif", std::string());
  s.blocks = j.at("blocks").get<std::vector<std::vector<std::vector<std::string>>>>();
  s.cfg = cfg_from_json(j.at("cfg"));
  for (const auto& n : j.at("cct"))
    s.cct.push_back({n.at("proc").get<std::string>(), n.at("parent").get<int>(),
                     n.at("tokens").get<std::vector<std::string>>()});
  if (s.blocks.empty() || static_cast<int>(s.blocks.size()) != s.cfg.node_count)
    throw Error("FormatError", "sample " + s.program_id + "/" + s.proc + " has an inconsistent CFG");
  return s;
}

Corpus sample_instruction_corpus(const std::vector<SampleRecord>& samples) {
  Corpus c;
  for (const auto& s : samples)
    for (const auto& block : s.blocks) {
      std::vector<std::string> sentence;
      for (const auto& ins : block) sentence.insert(sentence.end(), ins.begin(), ins.end());
      c.push_back(std::move(sentence));
    }
  return c;
}

Corpus sample_value_corpus(const std::vector<SampleRecord>& samples) {
  Corpus c;
  std::set<std::string> seen;
  for (const auto& s : samples) {
    if (!seen.insert(s.program_id).second) continue;
    for (const auto& n : s.cct)
      if (!n.tokens.empty()) c.push_back(n.tokens);
  }
  return c;
}

PreparedSample prepare_sample(const SampleRecord& s, const Vocab& instr, const Vocab& value,
                              const ModelConfig& config) {
  PreparedSample p;
  for (const auto& block : s.blocks) {
    std::map<int, double> w;
    const double m = static_cast<double>(block.size());
    for (const auto& ins : block)
      for (const auto& t : ins) w[instr.id(t)] += 1.0 / (m * static_cast<double>(ins.size()));
    nn::WeightedRows rows;
    for (auto [id, weight] : w) rows.emplace_back(static_cast<std::size_t>(id), weight);
    p.block_rows.push_back(std::move(rows));
  }
  p.cfg_edges = cfg_edges(s.cfg, config.cfg_ggnn);
  p.adj = adjacency(s.cfg);
  for (std::size_t i = 0; i < s.cct.size(); ++i) {
    const auto& n = s.cct[i];
    std::map<int, double> w;
    for (const auto& t : n.tokens) w[value.id(t)] += 1.0 / static_cast<double>(n.tokens.size());
    nn::WeightedRows rows;
    for (auto [id, weight] : w) rows.emplace_back(static_cast<std::size_t>(id), weight);
    p.cct_rows.push_back(std::move(rows));
    if (n.parent >= 0) p.cct_edges.push_back({n.parent, static_cast<int>(i), 0});
    if (n.proc == s.proc) p.proc_nodes.push_back(i);
  }
  p.label = s.label;
  p.cost = s.cost;
  return p;
}

template <typename T>
nn::ParamList<T> Model<T>::all_params() const {
  nn::ParamList<T> out{{"emb.instr", emb_instr}, {"emb.value", emb_value}};
  for (auto& p : cfg_ggnn.list(config.cfg_ggnn)) out.push_back(p);
  for (auto& p : cct_ggnn.list(config.cct_ggnn)) out.push_back(p);
  for (auto& p : cnn.list()) out.push_back(p);
  out.push_back({"fusion.w", fuse_w});
  out.push_back({"fusion.b", fuse_b});
  out.push_back({"mlp.w1", mlp_w1});
  out.push_back({"mlp.b1", mlp_b1});
  out.push_back({"mlp.w2", mlp_w2});
  out.push_back({"mlp.b2", mlp_b2});
  return out;
}

template <typename T>
nn::ParamList<T> Model<T>::trainable() const {
  nn::ParamList<T> out;
  if (!config.freeze_embeddings && config.variant != Variant::Cnn) out.push_back({"emb.instr", emb_instr});
  if (!config.freeze_embeddings && config.uses_cct()) out.push_back({"emb.value", emb_value});
  if (config.uses_cfg_ggnn())
    for (auto& p : cfg_ggnn.list(config.cfg_ggnn)) out.push_back(p);
  if (config.uses_cct())
    for (auto& p : cct_ggnn.list(config.cct_ggnn)) out.push_back(p);
  if (config.uses_cnn())
    for (auto& p : cnn.list()) out.push_back(p);
  out.push_back({"fusion.w", fuse_w});
  out.push_back({"fusion.b", fuse_b});
  out.push_back({"mlp.w1", mlp_w1});
  out.push_back({"mlp.b1", mlp_b1});
  out.push_back({"mlp.w2", mlp_w2});
  out.push_back({"mlp.b2", mlp_b2});
  return out;
}

namespace {

template <typename T>
Model<T> init_shapes(const ModelConfig& c, std::size_t v_instr, std::size_t v_value, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Model<T> m;
  m.config = c;
  m.emb_instr = Tensor<T>::zeros({v_instr, c.cfg_ggnn.input_dim});
  m.emb_value = Tensor<T>::zeros({v_value, c.cct_ggnn.input_dim});
  m.cfg_ggnn = init_ggnn<T>(c.cfg_ggnn, rng);
  m.cct_ggnn = init_ggnn<T>(c.cct_ggnn, rng);
  m.cnn = init_cnn<T>(c.cnn_kind, rng);
  const std::size_t in = c.fusion_input_dim();
  m.fuse_w = nn::xavier<T>({in, c.fusion_dim}, in, c.fusion_dim, rng);
  m.fuse_b = nn::zeros_param<T>({c.fusion_dim});
  m.mlp_w1 = nn::xavier<T>({c.fusion_dim, c.mlp_hidden}, c.fusion_dim, c.mlp_hidden, rng);
  m.mlp_b1 = nn::zeros_param<T>({c.mlp_hidden});
  m.mlp_w2 = nn::xavier<T>({c.mlp_hidden, 1}, c.mlp_hidden, 1, rng);
  m.mlp_b2 = nn::zeros_param<T>({1});
  const bool tune = !c.freeze_embeddings;
  m.emb_instr.set_requires_grad(tune && c.variant != Variant::Cnn);
  m.emb_value.set_requires_grad(tune && c.uses_cct());
  return m;
}

}  // namespace

template <typename T>
Model<T> init_model(const ModelConfig& c, const EmbeddingTable& instr, const EmbeddingTable& value,
                    std::uint64_t seed) {
  if (instr.dim != c.cfg_ggnn.input_dim || value.dim != c.cct_ggnn.input_dim)
    throw ShapeMismatch("embedding dims " + std::to_string(instr.dim) + "/" + std::to_string(value.dim) +
                        " do not match GGNN input dims");
  auto m = init_shapes<T>(c, instr.vocab.size(), value.vocab.size(), seed);
  std::copy(instr.vectors.begin(), instr.vectors.end(), m.emb_instr.data().begin());
  std::copy(value.vectors.begin(), value.vectors.end(), m.emb_value.data().begin());
  return m;
}

template <typename T>
Tensor<T> fuse(const std::vector<Tensor<T>>& parts, const Tensor<T>& w, const Tensor<T>& b) {
  return nn::relu(nn::dense(nn::concat(parts, 1), w, b));
}

template <typename T>
Tensor<T> classify_logit(const Tensor<T>& g, const Model<T>& m) {
  return nn::dense(nn::relu(nn::dense(g, m.mlp_w1, m.mlp_b1)), m.mlp_w2, m.mlp_b2);
}

template <typename T>
Views<T> compute_views(const Model<T>& m, const PreparedSample& s) {
  Views<T> v;
  const auto& c = m.config;
  if (c.variant == Variant::W2v) {
    v.g_w2v = nn::mean_rows(nn::gather_rows(m.emb_instr, s.block_rows));
  }
  if (c.uses_cfg_ggnn()) {
    auto x = nn::gather_rows(m.emb_instr, s.block_rows);
    v.g_intra = readout(propagate(x, s.cfg_edges, c.cfg_ggnn, m.cfg_ggnn), c.cfg_ggnn, m.cfg_ggnn);
  }
  if (c.uses_cnn()) v.g_a = embed_adjacency(s.adj, m.cnn);
  if (c.uses_cct()) {
    auto x = nn::gather_rows(m.emb_value, s.cct_rows);
    auto h = propagate(x, s.cct_edges, c.cct_ggnn, m.cct_ggnn);
    v.g_inter = nn::mean_rows(h, s.proc_nodes);
  }
  return v;
}

template <typename T>
Tensor<T> forward_logit(const Model<T>& m, const PreparedSample& s) {
  auto v = compute_views(m, s);
  std::vector<Tensor<T>> parts;
  for (const auto* t : {&v.g_w2v, &v.g_a, &v.g_intra, &v.g_inter})
    if (t->defined()) parts.push_back(*t);
  return classify_logit(fuse(parts, m.fuse_w, m.fuse_b), m);
}

double predict_probability(const Model<float>& m, const PreparedSample& s) {
  const double z = forward_logit(m, s).item();
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

Model<double> to_double(const Model<float>& m) {
  auto d = init_shapes<double>(m.config, m.emb_instr.dim(0), m.emb_value.dim(0), 0);
  auto src = m.all_params();
  auto dst = d.all_params();
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto from = src[i].tensor.data();
    auto to = dst[i].tensor.data();
    for (std::size_t k = 0; k < from.size(); ++k) to[k] = from[k];
  }
  return d;
}

#define GRAPHSPY_INSTANTIATE_MODEL(T)                                                               \
  template struct Model<T>;                                                                         \
  template Model<T> init_model<T>(const ModelConfig&, const EmbeddingTable&, const EmbeddingTable&, \
                                  std::uint64_t);                                                   \
  template Tensor<T> fuse(const std::vector<Tensor<T>>&, const Tensor<T>&, const Tensor<T>&);       \
  template Tensor<T> classify_logit(const Tensor<T>&, const Model<T>&);                             \
  template Views<T> compute_views(const Model<T>&, const PreparedSample&);                          \
  template Tensor<T> forward_logit(const Model<T>&, const PreparedSample&);

GRAPHSPY_INSTANTIATE_MODEL(float)
GRAPHSPY_INSTANTIATE_MODEL(double)

}  // namespace graphspy
