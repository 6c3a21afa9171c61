#include "graphspy/nn/checkpoint.hpp"

#include "graphspy/io.hpp"

namespace graphspy::nn {

namespace {
constexpr std::string_view kMagic = "GSCKPT";
}

const CheckpointParam* Checkpoint::find(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

Checkpoint make_checkpoint(const ParamList<float>& params, const Optimizer<float>* opt) {
  Checkpoint c;
  for (const auto& p : params)
    c.params.push_back({p.name, p.tensor.shape(), {p.tensor.data().begin(), p.tensor.data().end()}});
  if (opt) {
    OptimizerState s;
    s.kind = opt->kind();
    s.lr = opt->lr();
    s.beta1 = opt->beta1;
    s.beta2 = opt->beta2;
    s.eps = opt->eps;
    s.steps = opt->steps();
    s.m = opt->first_moments();
    s.v = opt->second_moments();
    c.optimizer = std::move(s);
    c.step = opt->steps();
  }
  return c;
}

void load_params(const Checkpoint& ckpt, ParamList<float>& params) {
  for (auto& p : params) {
    const auto* stored = ckpt.find(p.name);
    if (!stored) throw Error("FormatError", "checkpoint lacks parameter " + p.name);
    if (stored->shape != p.tensor.shape()) {
      throw ShapeMismatch("checkpoint parameter " + p.name + " has shape " +
                          shape_string(stored->shape) + ", model expects " +
                          shape_string(p.tensor.shape()));
    }
    std::copy(stored->data.begin(), stored->data.end(), p.tensor.data().begin());
  }
}

void load_optimizer(const Checkpoint& ckpt, Optimizer<float>& opt) {
  if (!ckpt.optimizer) return;
  const auto& s = *ckpt.optimizer;
  opt.set_lr(s.lr);
  opt.beta1 = s.beta1;
  opt.beta2 = s.beta2;
  opt.eps = s.eps;
  opt.set_steps(s.steps);
  opt.first_moments() = s.m;
  opt.second_moments() = s.v;
}

std::string encode_checkpoint(const Checkpoint& c) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  w.u64(c.seed);
  w.u64(c.step);
  w.str(c.manifest.dump());
  w.u32(static_cast<std::uint32_t>(c.params.size()));
  for (const auto& p : c.params) {
    w.str(p.name);
    w.u32(static_cast<std::uint32_t>(p.shape.size()));
    for (auto d : p.shape) w.u64(d);
    for (float v : p.data) w.f32(v);
  }
  w.u8(c.optimizer ? 1 : 0);
  if (c.optimizer) {
    const auto& s = *c.optimizer;
    w.u8(static_cast<std::uint8_t>(s.kind));
    w.f64(s.lr);
    w.f64(s.beta1);
    w.f64(s.beta2);
    w.f64(s.eps);
    w.u64(s.steps);
    w.u32(static_cast<std::uint32_t>(s.m.size()));
    for (std::size_t k = 0; k < s.m.size(); ++k) {
      w.u64(s.m[k].size());
      for (float v : s.m[k]) w.f32(v);
      for (float v : s.v[k]) w.f32(v);
    }
  }
  return w.data();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.bytes(kMagic.size()) != kMagic) throw Error("FormatError", "not a GSCKPT checkpoint");
  if (auto v = r.u32(); v != kCheckpointVersion)
    throw Error("FormatError", "unsupported checkpoint version " + std::to_string(v));
  Checkpoint c;
  c.seed = r.u64();
  c.step = r.u64();
  c.manifest = nlohmann::ordered_json::parse(r.str());
  const auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    CheckpointParam p;
    p.name = r.str();
    const auto rank = r.u32();
    for (std::uint32_t d = 0; d < rank; ++d) p.shape.push_back(r.u64());
    p.data.resize(shape_size(p.shape));
    for (auto& v : p.data) v = r.f32();
    c.params.push_back(std::move(p));
  }
  if (r.u8()) {
    OptimizerState s;
    s.kind = static_cast<OptimizerKind>(r.u8());
    s.lr = r.f64();
    s.beta1 = r.f64();
    s.beta2 = r.f64();
    s.eps = r.f64();
    s.steps = r.u64();
    const auto k = r.u32();
    s.m.resize(k);
    s.v.resize(k);
    for (std::uint32_t i = 0; i < k; ++i) {
      const auto len = r.u64();
      s.m[i].resize(len);
      s.v[i].resize(len);
      for (auto& v : s.m[i]) v = r.f32();
      for (auto& v : s.v[i]) v = r.f32();
    }
    c.optimizer = std::move(s);
  }
  if (!r.done()) throw Error("FormatError", "trailing bytes after checkpoint");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace graphspy::nn
