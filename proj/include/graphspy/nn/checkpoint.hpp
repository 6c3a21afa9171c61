#pragma once

// GSCKPT container: magic, version, seed, step, JSON manifest, named float32
// parameters, optional optimizer state. All integers little-endian.

#include <filesystem>
#include <optional>
#include <string>

#include "graphspy/nn/optim.hpp"
#include "json.hpp"

namespace graphspy::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointParam {
  std::string name;
  Shape shape;
  std::vector<float> data;
};

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 0, beta1 = 0, beta2 = 0, eps = 0;
  std::uint64_t steps = 0;
  std::vector<std::vector<float>> m, v;
};

struct Checkpoint {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  nlohmann::ordered_json manifest = nlohmann::ordered_json::object();
  std::vector<CheckpointParam> params;
  std::optional<OptimizerState> optimizer;

  const CheckpointParam* find(const std::string& name) const;
};

Checkpoint make_checkpoint(const ParamList<float>& params, const Optimizer<float>* opt);
// Copies stored values into `params` by name; shapes must agree.
void load_params(const Checkpoint& ckpt, ParamList<float>& params);
void load_optimizer(const Checkpoint& ckpt, Optimizer<float>& opt);

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace graphspy::nn
