// End-to-end acceptance run: one PASS/FAIL line per criterion.
//
// Datasets are generated once and cached under GRAPHSPY_CACHE; models are
// always retrained. Results land in <cache>/results.json.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <random>
#include <string>

#include "graphspy/cnn.hpp"
#include "graphspy/corpus.hpp"
#include "graphspy/dataset_io.hpp"
#include "graphspy/ggnn.hpp"
#include "graphspy/io.hpp"
#include "graphspy/nn/init.hpp"
#include "graphspy/selfcheck.hpp"
#include "graphspy/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace graphspy;

namespace {

constexpr std::size_t kSamples = 3000;
constexpr std::uint64_t kSeed = 1;
constexpr double kMaxTrainSeconds = 30 * 60;
const std::vector<std::string> kTags{"A-Opt0", "A-Opt1", "B-Opt0", "B-Opt1"};

int failures = 0;
json results = json::object();

void verdict(int n, const std::string& name, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  std::printf("%s criterion %d %s: %s\n", ok ? "PASS" : "FAIL", n, name.c_str(), detail.c_str());
  std::fflush(stdout);
  results[std::to_string(n)] = {{"name", name}, {"pass", ok}, {"detail", detail}};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Shadow detector vs. quadratic scan on random traces and corpus traces.
void oracle() {
  auto r = oracle_equivalence(1000, 200, 8, kSeed);
  std::size_t corpus_traces = 0, corpus_mismatches = 0;
  for (std::uint64_t s = 1; s <= 100; ++s) {
    GenConfig g;
    g.seed = s;
    g.opt = s % 2 ? OptLevel::Opt0 : OptLevel::Opt1;
    g.dialect = s % 3 ? DialectKind::A : DialectKind::B;
    ExecOptions eo;
    eo.max_steps = kGenMaxSteps;
    auto run = execute(generate_program(g).program, {}, eo);
    ++corpus_traces;
    corpus_mismatches += !same_reports(detect_dead_stores(run.trace), brute_force_dead_stores(run.trace));
  }
  verdict(1, "oracle equivalence", r.mismatches == 0 && corpus_mismatches == 0,
          std::to_string(r.traces) + " random traces (" + std::to_string(r.reports) + " reports), " +
              std::to_string(r.mismatches) + " mismatches; " + std::to_string(corpus_traces) + " corpus traces, " +
              std::to_string(corpus_mismatches) + " mismatches");
}

// 2. Held-in-register vs. read-back fixture pair.
void fixtures() {
  bool ok = true;
  std::string detail;
  for (const auto& f : motivating_fixtures()) {
    ok = ok && f.expected == f.reported;
    detail += f.name + " " + std::to_string(f.reported) + "/" + std::to_string(f.expected) + " ";
  }
  verdict(2, "motivating fixtures", ok, detail);
}

// 3. Finite-difference gradient checks in double.
void gradients() {
  bool ok = true;
  std::string detail;
  for (const auto& g : gradient_suite(kSeed)) {
    ok = ok && g.result.pass && g.result.worst_rel_error <= 1e-3;
    detail += g.name + "=" + fmt("%.1e", g.result.worst_rel_error) + " ";
  }
  verdict(3, "gradient checks", ok, detail);
}

// 4. GGNN readout is invariant to node relabeling; T = 0 is a projection.
void ggnn_invariance() {
  std::mt19937_64 rng(kSeed);
  auto c = cfg_ggnn_config();
  auto p = init_ggnn<float>(c, rng);
  double worst = 0;
  for (int g = 0; g < 100; ++g) {
    const std::size_t n = 1 + rng() % 30;
    auto x = nn::Tensor<float>::zeros({n, c.input_dim});
    for (auto& v : x.data()) v = static_cast<float>(2.0 * nn::uniform01(rng) - 1.0);
    std::vector<TypedEdge> edges;
    for (std::size_t k = 0, m = rng() % (2 * n + 1); k < m; ++k)
      edges.push_back({static_cast<int>(rng() % n), static_cast<int>(rng() % n), 0});
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto px = nn::Tensor<float>::zeros({n, c.input_dim});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < c.input_dim; ++k) px[perm[i] * c.input_dim + k] = x[i * c.input_dim + k];
    std::vector<TypedEdge> pe;
    for (auto e : edges)
      pe.push_back({static_cast<int>(perm[static_cast<std::size_t>(e.src)]),
                    static_cast<int>(perm[static_cast<std::size_t>(e.dst)]), 0});
    auto r = readout(propagate(x, edges, c, p), c, p);
    auto pr = readout(propagate(px, pe, c, p), c, p);
    for (std::size_t k = 0; k < r.size(); ++k) worst = std::max(worst, std::abs(static_cast<double>(r[k]) - pr[k]));
  }
  auto c0 = c;
  c0.steps = 0;
  auto x = nn::Tensor<float>::zeros({4, c.input_dim});
  for (auto& v : x.data()) v = static_cast<float>(nn::uniform01(rng));
  auto h = propagate(x, {{0, 1, 0}, {2, 3, 0}}, c0, p);
  auto ref = nn::matmul(x, p.P);
  bool exact = h.shape() == ref.shape();
  for (std::size_t i = 0; exact && i < h.size(); ++i) exact = h[i] == ref[i];
  verdict(4, "ggnn permutation invariance", worst <= 1e-6 && exact,
          "max readout diff " + fmt("%.2e", worst) + " over 100 graphs; T=0 projection " + (exact ? "exact" : "differs"));
}

// 5. CNN output length, translation invariance, rectangle under node insertion.
void cnn_properties() {
  std::mt19937_64 rng(kSeed);
  auto p = init_cnn<float>(CnnKind::Resnet11, rng);
  for (auto& np : p.list())
    if (np.tensor.rank() == 1)
      for (auto& v : np.tensor.data()) v = static_cast<float>(0.1 * (2.0 * nn::uniform01(rng) - 1.0));
  bool lengths = true;
  for (int n : {1, 5, 8, 30, 100}) {
    AdjMatrix a;
    a.n = n;
    a.cells.resize(static_cast<std::size_t>(n * n));
    for (auto& cell : a.cells) cell = rng() % 5 == 0;
    lengths = lengths && embed_adjacency(a, p).size() == kCnnOutDim;
  }
  auto diff = [](const nn::Tensor<float>& a, const nn::Tensor<float>& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(static_cast<double>(a[i]) - b[i]));
    return d;
  };
  const Motif rect{"rectangle", 2, 3, {1, 1, 1, 0, 1, 1}};
  const int margin = 2 * p.receptive_radius() + 1;
  const int n = 2 * margin + 12;
  auto base = place_motif(rect, n, margin, margin);
  const double shift = std::max(diff(embed_adjacency(base, p), embed_adjacency(place_motif(rect, n, n - margin - 2, margin + 4), p)),
                                diff(embed_adjacency(base, p), embed_adjacency(place_motif(rect, n + 9, margin + 5, margin + 1), p)));
  double insertion = 0;
  bool kept = true;
  for (int index : {1, margin + 4, n - 1}) {
    auto b = insert_node(base, index);
    const int s = index <= margin ? 1 : 0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 3; ++j) kept = kept && b.at(margin + s + i, margin + s + j) == rect.cells[static_cast<std::size_t>(i * 3 + j)];
    insertion = std::max(insertion, diff(embed_adjacency(base, p), embed_adjacency(b, p)));
  }
  verdict(5, "cnn size and translation", lengths && shift <= 1e-5 && kept && insertion <= 1e-5,
          std::string("length 40 for sizes {1,5,8,30,100}: ") + (lengths ? "yes" : "no") + "; shift diff " +
              fmt("%.2e", shift) + "; rectangle " + (kept ? "kept" : "lost") + ", insertion diff " + fmt("%.2e", insertion));
}

// 9. Metric identities on random prediction lists.
void metric_identities() {
  std::mt19937_64 rng(kSeed);
  int bad = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + rng() % 300;
    std::vector<int> p(n), l(n);
    std::vector<std::uint64_t> c(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng() % 2);
      l[i] = static_cast<int>(rng() % 2);
      c[i] = 1 + rng() % 1000;
    }
    auto m = compute_metrics(p, l);
    auto f = filter_report(p, l, c);
    bool ok = m.total() == n && f.positives == m.tp + m.fn && f.missed_dead_stores == m.fn &&
              std::abs(*m.accuracy - static_cast<double>(m.tp + m.tn) / static_cast<double>(n)) < 1e-12 &&
              f.simulated_speedup >= 1.0;
    if (m.tp + m.fp) ok = ok && std::abs(*m.precision - static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp)) < 1e-12;
    if (f.positives)
      ok = ok && std::abs(static_cast<double>(f.missed_dead_stores) / static_cast<double>(f.positives) - (1.0 - *m.recall)) < 1e-12;
    bad += !ok;
  }
  verdict(9, "metric identities", bad == 0, std::to_string(50 - bad) + "/50 lists consistent");
}

DatasetSplit cached_dataset(const fs::path& cache, const std::string& tag) {
  const auto dir = cache / tag;
  try {
    auto d = read_dataset(dir);
    if (d.manifest.value("seed", std::uint64_t{0}) == config_seed(kSeed, tag) &&
        d.train.size() + d.val.size() + d.test.size() == kSamples)
      return d;
  } catch (const Error&) {
  }
  GenConfig g;
  g.dialect = tag[0] == 'A' ? DialectKind::A : DialectKind::B;
  g.opt = tag.substr(2) == "Opt0" ? OptLevel::Opt0 : OptLevel::Opt1;
  auto d = build_dataset(g, kSamples, {}, config_seed(kSeed, tag));
  write_dataset(cache, d);
  return d;
}

struct Outcome {
  Evaluation eval;
  double seconds = 0;
  std::size_t epochs = 0;
  std::string checkpoint;
};

Outcome run(const DatasetSplit& d, Variant v, bool shuffle = false) {
  ModelConfig c;
  c.variant = v;
  TrainOptions o;
  o.seed = kSeed;
  o.shuffle_labels = shuffle;
  const auto t0 = std::chrono::steady_clock::now();
  auto t = train(d.train, d.val, c, o);
  Outcome out;
  out.seconds = seconds_since(t0);
  out.epochs = t.history.size();
  out.checkpoint = nn::encode_checkpoint(t.checkpoint);
  out.eval = evaluate(model_from_checkpoint(nn::decode_checkpoint(out.checkpoint)), d.test);
  std::printf("  trained %s %s%s: accuracy %.4f in %.0fs (%zu epochs)\n", d.tag.c_str(),
              std::string(variant_name(v)).c_str(), shuffle ? " shuffled" : "", *out.eval.overall.accuracy,
              out.seconds, out.epochs);
  std::fflush(stdout);
  json r = out.eval.to_json();
  r["seconds"] = out.seconds;
  r["epochs"] = out.epochs;
  results["runs"][d.tag + "/" + std::string(variant_name(v)) + (shuffle ? "/shuffled" : "")] = r;
  return out;
}

}  // namespace

int main() {
  const fs::path cache = GRAPHSPY_CACHE;
  fs::create_directories(cache);

  oracle();
  fixtures();
  gradients();
  ggnn_invariance();
  cnn_properties();

  std::vector<DatasetSplit> splits;
  for (const auto& tag : kTags) splits.push_back(cached_dataset(cache, tag));
  const auto hybrid = mix_hybrid(splits, kSeed);

  // 6. Per-config and hybrid accuracy, time budget, no-signal control.
  std::vector<Outcome> full;
  for (const auto& s : splits) full.push_back(run(s, Variant::Full));
  full.push_back(run(hybrid, Variant::Full));
  bool ok6 = true;
  std::string detail6;
  for (std::size_t i = 0; i < full.size(); ++i) {
    const double acc = *full[i].eval.overall.accuracy;
    ok6 = ok6 && acc >= 0.80 && full[i].seconds <= kMaxTrainSeconds;
    detail6 += (i < kTags.size() ? kTags[i] : std::string("Hybrid")) + " " + fmt("%.4f", acc) + " (" +
               fmt("%.0f", full[i].seconds) + "s) ";
  }
  const auto shuffled = run(splits[0], Variant::Full, true);
  const double control = *shuffled.eval.overall.accuracy;
  ok6 = ok6 && std::abs(control - 0.5) <= 0.05;
  verdict(6, "end-to-end accuracy", ok6, detail6 + "shuffled control " + fmt("%.4f", control));

  // 7. The full model beats each single-view ablation on A-Opt0.
  const double base = *full[0].eval.overall.accuracy;
  bool ok7 = true;
  std::string detail7 = "full " + fmt("%.4f", base);
  for (auto v : {Variant::W2v, Variant::Cnn, Variant::W2vGgnn}) {
    const double acc = *run(splits[0], v).eval.overall.accuracy;
    ok7 = ok7 && base - acc >= 0.02;
    detail7 += ", " + std::string(variant_name(v)) + " " + fmt("%.4f", acc);
  }
  verdict(7, "ablation ordering", ok7, detail7);

  // 8. Filtering speedup and the missed-positives identity, every full model.
  bool ok8 = true;
  std::string detail8;
  for (std::size_t i = 0; i < full.size(); ++i) {
    const auto& e = full[i].eval;
    const double missed = static_cast<double>(e.filter.missed_dead_stores) / static_cast<double>(e.filter.positives);
    ok8 = ok8 && e.filter.simulated_speedup >= 1.3 && std::abs(missed - (1.0 - *e.overall.recall)) < 1e-12;
    detail8 += (i < kTags.size() ? kTags[i] : std::string("Hybrid")) + " speedup " +
               fmt("%.3f", e.filter.simulated_speedup) + " missed " + fmt("%.4f", missed) + " ";
  }
  verdict(8, "filter speedup", ok8, detail8);

  metric_identities();

  // 10. Retraining reproduces the checkpoint and the metrics byte for byte.
  const auto again = run(splits[0], Variant::Full);
  const bool same_ckpt = again.checkpoint == full[0].checkpoint;
  const bool same_metrics = again.eval.to_json().dump() == full[0].eval.to_json().dump();
  verdict(10, "determinism", same_ckpt && same_metrics,
          std::string("checkpoint ") + (same_ckpt ? "identical" : "differs") + " (" +
              std::to_string(again.checkpoint.size()) + " bytes), metrics " + (same_metrics ? "identical" : "differ"));

  write_file_atomic(cache / "results.json", results.dump(2) + "\n");
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
