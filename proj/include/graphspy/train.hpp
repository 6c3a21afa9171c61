#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "graphspy/model.hpp"
#include "graphspy/nn/checkpoint.hpp"

namespace graphspy {

struct Metrics {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  // nullopt when the denominator is zero
  std::optional<double> precision, recall, accuracy;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  nlohmann::ordered_json to_json() const;
};

Metrics compute_metrics(const std::vector<int>& predicted, const std::vector<int>& labels);
Metrics metrics_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn);

struct FilterReport {
  double skipped_fraction = 0;
  double simulated_speedup = 1;  // total cost / cost of predicted-positive procedures
  std::uint64_t missed_dead_stores = 0;
  std::uint64_t positives = 0;
  nlohmann::ordered_json to_json() const;
};

// Costs are the oracle's per-procedure work (executed instructions). When no
// procedure is predicted positive the oracle does no work and the speedup is
// reported as infinite.
FilterReport filter_report(const std::vector<int>& predicted, const std::vector<int>& labels,
                           const std::vector<std::uint64_t>& costs);

class DegenerateDataset : public Error {
 public:
  explicit DegenerateDataset(const std::string& why) : Error("DegenerateDataset", why) {}
};

class NonFinite : public Error {
 public:
  explicit NonFinite(const std::string& where)
      : Error("NonFinite", "non-finite value in " + where, ErrorCategory::Numeric) {}
};

struct TrainOptions {
  double lr = 1e-4;
  std::size_t batch = 64;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  nn::OptimizerKind optimizer = nn::OptimizerKind::Adam;
  bool shuffle_labels = false;  // no-signal control
  Word2VecOptions instr_w2v{60, 2, 5, 5, 0.025, 2, 1};
  Word2VecOptions value_w2v{30, 2, 5, 5, 0.025, 2, 2};
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0;
  double train_accuracy = 0;
  double val_accuracy = 0;
  double seconds = 0;
};

struct TrainedModel {
  Model<float> model;
  Vocab instr_vocab, value_vocab;
  nn::Checkpoint checkpoint;  // best epoch, with optimizer state
  std::vector<EpochLog> history;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

TrainedModel train(const std::vector<SampleRecord>& train_set, const std::vector<SampleRecord>& val_set,
                   const ModelConfig& config, const TrainOptions& options,
                   const EpochCallback& on_epoch = {});

// Rebuilds a model (with vocabularies) from a checkpoint.
struct LoadedModel {
  Model<float> model;
  Vocab instr_vocab, value_vocab;
};
LoadedModel model_from_checkpoint(const nn::Checkpoint& ckpt);

struct Prediction {
  std::string program_id, proc, tag;
  double probability = 0;
  int predicted = 0;
  int label = 0;
  std::uint64_t cost = 0;
};

std::vector<Prediction> predict(const LoadedModel& m, const std::vector<SampleRecord>& samples,
                                double threshold = 0.5);

struct Evaluation {
  Metrics overall;
  std::map<std::string, Metrics> per_tag;
  FilterReport filter;
  nlohmann::ordered_json to_json() const;
};

Evaluation evaluate(const std::vector<Prediction>& predictions);
Evaluation evaluate(const LoadedModel& m, const std::vector<SampleRecord>& samples);

}  // namespace graphspy
