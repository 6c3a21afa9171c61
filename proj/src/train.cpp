#include "graphspy/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "graphspy/nn/init.hpp"

namespace graphspy {

using json = nlohmann::ordered_json;

namespace {

json ratio(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json Metrics::to_json() const {
  return {{"tp", tp}, {"fp", fp}, {"fn", fn}, {"tn", tn},
          {"precision", ratio(precision)}, {"recall", ratio(recall)}, {"accuracy", ratio(accuracy)}};
}

Metrics metrics_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn) {
  Metrics m{tp, fp, fn, tn, {}, {}, {}};
  auto div = [](std::uint64_t a, std::uint64_t b) -> std::optional<double> {
    if (b == 0) return std::nullopt;
    return static_cast<double>(a) / static_cast<double>(b);
  };
  m.precision = div(tp, tp + fp);
  m.recall = div(tp, tp + fn);
  m.accuracy = div(tp + tn, tp + fp + fn + tn);
  return m;
}

Metrics compute_metrics(const std::vector<int>& predicted, const std::vector<int>& labels) {
  if (predicted.size() != labels.size()) throw Error("InvalidArgument", "prediction/label count mismatch", ErrorCategory::Usage);
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predicted[i] && labels[i]) ++tp;
    else if (predicted[i]) ++fp;
    else if (labels[i]) ++fn;
    else ++tn;
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

json FilterReport::to_json() const {
  json j{{"skipped_fraction", skipped_fraction}};
  if (std::isinf(simulated_speedup)) j["simulated_speedup"] = "inf";
  else j["simulated_speedup"] = simulated_speedup;
  j["missed_dead_stores"] = missed_dead_stores;
  j["positives"] = positives;
  return j;
}

FilterReport filter_report(const std::vector<int>& predicted, const std::vector<int>& labels,
                           const std::vector<std::uint64_t>& costs) {
  if (predicted.size() != labels.size() || costs.size() != labels.size())
    throw Error("InvalidArgument", "predictions, labels and costs must cover the same procedures",
                ErrorCategory::Usage);
  FilterReport r;
  std::uint64_t total = 0, kept = 0, negatives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    total += costs[i];
    if (predicted[i]) kept += costs[i];
    else ++negatives;
    if (labels[i]) {
      ++r.positives;
      if (!predicted[i]) ++r.missed_dead_stores;
    }
  }
  r.skipped_fraction = labels.empty() ? 0.0 : static_cast<double>(negatives) / static_cast<double>(labels.size());
  if (kept == 0) r.simulated_speedup = total == 0 ? 1.0 : std::numeric_limits<double>::infinity();
  else r.simulated_speedup = static_cast<double>(total) / static_cast<double>(kept);
  return r;
}

namespace {

void check_finite(const nn::ParamList<float>& params, const char* where) {
  for (const auto& p : params) {
    for (float v : p.tensor.data())
      if (!std::isfinite(v)) throw NonFinite(std::string(where) + " " + p.name);
  }
}

nn::Checkpoint snapshot(const Model<float>& m, const nn::Optimizer<float>* opt, const Vocab& vi,
                        const Vocab& vv, const TrainOptions& o) {
  auto all = m.all_params();
  auto c = nn::make_checkpoint(all, nullptr);
  if (opt) {
    // Optimizer moments follow the trainable list, which the manifest names.
    auto state = nn::make_checkpoint(m.trainable(), opt);
    c.optimizer = state.optimizer;
    c.step = state.step;
  }
  c.seed = o.seed;
  json trainable = json::array();
  for (const auto& p : m.trainable()) trainable.push_back(p.name);
  c.manifest["model"] = m.config.to_json();
  c.manifest["trainable"] = std::move(trainable);
  c.manifest["instr_vocab"] = vi.tokens;
  c.manifest["value_vocab"] = vv.tokens;
  c.manifest["hyper"] = {{"lr", o.lr}, {"batch", o.batch}, {"max_epochs", o.max_epochs},
                         {"patience", o.patience}, {"optimizer", o.optimizer == nn::OptimizerKind::Adam ? "adam" : "sgd"},
                         {"shuffle_labels", o.shuffle_labels}};
  return c;
}

Vocab vocab_from_tokens(const std::vector<std::string>& tokens) {
  Vocab v;
  v.tokens = tokens;
  v.counts.assign(tokens.size(), 0);
  for (std::size_t i = 0; i < tokens.size(); ++i) v.index.emplace(tokens[i], static_cast<int>(i));
  return v;
}

}  // namespace

TrainedModel train(const std::vector<SampleRecord>& train_set, const std::vector<SampleRecord>& val_set,
                   const ModelConfig& config, const TrainOptions& o, const EpochCallback& on_epoch) {
  std::vector<int> labels;
  for (const auto& s : train_set) labels.push_back(s.label);
  if (o.shuffle_labels) {
    std::mt19937_64 rng(o.seed ^ 0x5eedu);
    for (std::size_t i = labels.size(); i > 1; --i)
      std::swap(labels[i - 1], labels[static_cast<std::size_t>(rng() % i)]);
  }
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size()))
    throw DegenerateDataset("training split contains a single class");
  if (o.batch == 0 || o.max_epochs == 0) throw Error("InvalidArgument", "batch and epochs must be positive", ErrorCategory::Usage);

  auto instr = train_word2vec(sample_instruction_corpus(train_set), o.instr_w2v);
  auto value_corpus = sample_value_corpus(train_set);
  if (value_corpus.empty()) value_corpus.push_back({std::string(kUnkToken)});
  auto value = train_word2vec(value_corpus, o.value_w2v);

  TrainedModel out{init_model<float>(config, instr, value, o.seed), instr.vocab, value.vocab, {}, {}, 0, 0.0};
  auto& model = out.model;

  std::vector<PreparedSample> tr, va;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    tr.push_back(prepare_sample(train_set[i], instr.vocab, value.vocab, config));
    tr.back().label = labels[i];
  }
  for (const auto& s : val_set) va.push_back(prepare_sample(s, instr.vocab, value.vocab, config));

  auto params = model.trainable();
  nn::Optimizer<float> opt(o.optimizer, o.lr);
  std::mt19937_64 order_rng(o.seed);
  std::vector<std::size_t> order(tr.size());
  std::iota(order.begin(), order.end(), 0);

  double best = -1.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= o.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(order_rng() % i)]);
    for (auto& p : params) p.tensor.zero_grad();

    double loss_sum = 0;
    std::size_t correct = 0, in_batch = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& s = tr[order[k]];
      auto logit = forward_logit(model, s);
      auto loss = nn::binary_cross_entropy(logit, static_cast<float>(s.label));
      const float l = loss.item();
      if (!std::isfinite(l)) throw NonFinite("training loss");
      loss_sum += l;
      correct += static_cast<std::size_t>((logit.item() >= 0.f) == (s.label == 1));
      // Per-sample backward; gradients of the batch accumulate as a sum and
      // are averaged before the update.
      nn::backward(loss);
      if (++in_batch == o.batch || k + 1 == order.size()) {
        const float inv = 1.f / static_cast<float>(in_batch);
        for (auto& p : params)
          for (auto& g : p.tensor.grad()) g *= inv;
        opt.step(params);
        in_batch = 0;
      }
    }
    check_finite(params, "parameter");

    std::size_t val_correct = 0;
    for (const auto& s : va) val_correct += static_cast<std::size_t>((forward_logit(model, s).item() >= 0.f) == (s.label == 1));
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(tr.size());
    log.train_accuracy = static_cast<double>(correct) / static_cast<double>(tr.size());
    log.val_accuracy = va.empty() ? 0.0 : static_cast<double>(val_correct) / static_cast<double>(va.size());
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.history.push_back(log);
    if (on_epoch) on_epoch(log);

    if (log.val_accuracy > best) {
      best = log.val_accuracy;
      since_best = 0;
      out.best_epoch = epoch;
      out.best_val_accuracy = best;
      out.checkpoint = snapshot(model, &opt, instr.vocab, value.vocab, o);
      out.checkpoint.manifest["best_epoch"] = epoch;
    } else if (++since_best >= o.patience) {
      break;
    }
  }
  auto all = model.all_params();
  nn::load_params(out.checkpoint, all);
  return out;
}

LoadedModel model_from_checkpoint(const nn::Checkpoint& ckpt) {
  if (!ckpt.manifest.contains("model")) throw Error("FormatError", "checkpoint manifest has no model section");
  auto config = ModelConfig::from_json(ckpt.manifest.at("model"));
  LoadedModel lm;
  lm.instr_vocab = vocab_from_tokens(ckpt.manifest.at("instr_vocab").get<std::vector<std::string>>());
  lm.value_vocab = vocab_from_tokens(ckpt.manifest.at("value_vocab").get<std::vector<std::string>>());
  EmbeddingTable ti{lm.instr_vocab, config.cfg_ggnn.input_dim,
                    std::vector<float>(lm.instr_vocab.size() * config.cfg_ggnn.input_dim)};
  EmbeddingTable tv{lm.value_vocab, config.cct_ggnn.input_dim,
                    std::vector<float>(lm.value_vocab.size() * config.cct_ggnn.input_dim)};
  lm.model = init_model<float>(config, ti, tv, ckpt.seed);
  auto all = lm.model.all_params();
  nn::load_params(ckpt, all);
  return lm;
}

std::vector<Prediction> predict(const LoadedModel& m, const std::vector<SampleRecord>& samples, double threshold) {
  std::vector<Prediction> out;
  for (const auto& s : samples) {
    auto p = prepare_sample(s, m.instr_vocab, m.value_vocab, m.model.config);
    const double prob = predict_probability(m.model, p);
    out.push_back({s.program_id, s.proc, s.tag, prob, prob >= threshold ? 1 : 0, s.label, s.cost});
  }
  return out;
}

json Evaluation::to_json() const {
  json j;
  j["overall"] = overall.to_json();
  json tags = json::object();
  for (const auto& [tag, m] : per_tag) tags[tag] = m.to_json();
  j["per_tag"] = std::move(tags);
  j["filter"] = filter.to_json();
  return j;
}

Evaluation evaluate(const std::vector<Prediction>& preds) {
  Evaluation e;
  std::vector<int> p, l;
  std::vector<std::uint64_t> c;
  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> by_tag;
  for (const auto& x : preds) {
    p.push_back(x.predicted);
    l.push_back(x.label);
    c.push_back(x.cost);
    by_tag[x.tag].first.push_back(x.predicted);
    by_tag[x.tag].second.push_back(x.label);
  }
  e.overall = compute_metrics(p, l);
  for (const auto& [tag, v] : by_tag) e.per_tag[tag] = compute_metrics(v.first, v.second);
  e.filter = filter_report(p, l, c);
  return e;
}

Evaluation evaluate(const LoadedModel& m, const std::vector<SampleRecord>& samples) {
  return evaluate(predict(m, samples));
}

}  // namespace graphspy
