#include "graphspy/selfcheck.hpp"

#include <algorithm>
#include <chrono>
#include <tuple>

#include "graphspy/cnn.hpp"
#include "graphspy/corpus.hpp"
#include "graphspy/ggnn.hpp"
#include "graphspy/model.hpp"
#include "graphspy/nn/init.hpp"

namespace graphspy {

using nn::Tensor;

Trace random_trace(std::mt19937_64& rng, std::size_t max_len, std::size_t addresses) {
  const std::size_t len = 1 + rng() % max_len;
  Trace t;
  for (std::size_t i = 0; i < len; ++i) {
    TraceEvent e;
    e.seq = i;
    e.kind = rng() % 2 ? EventKind::Store : EventKind::Load;
    e.address = rng() % addresses;
    e.value = static_cast<std::int64_t>(rng() % 100);
    e.site = {static_cast<int>(rng() % 3), static_cast<int>(rng() % 4), static_cast<int>(rng() % 6)};
    t.push_back(e);
  }
  return t;
}

bool same_reports(std::vector<DeadStoreReport> a, std::vector<DeadStoreReport> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

EquivalenceResult oracle_equivalence(std::size_t traces, std::size_t max_len, std::size_t addresses,
                                     std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(seed);
  EquivalenceResult r;
  for (std::size_t i = 0; i < traces; ++i) {
    const auto t = random_trace(rng, max_len, addresses);
    auto fast = detect_dead_stores(t);
    r.reports += fast.size();
    if (!same_reports(std::move(fast), brute_force_dead_stores(t))) ++r.mismatches;
    ++r.traces;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

const char* const kHeldInRegisterFixture = R"(proc main:
  mov r6, 4096
  mov r1, 7
  st [r6+4], r1     ; dead: overwritten below, never read
  cmp gt, r1, 3     ; compares the register copy
  jf done
  add r1, r1, 1
done:
  st [r6+4], r1
  halt
)";

const char* const kReadBackFixture = R"(proc main:
  mov r6, 4096
  mov r1, 7
  st [r6+4], r1
  ld r2, [r6+4]
  cmp gt, r2, 3
  jf done
  add r2, r2, 1
done:
  st [r6+4], r2
  halt
)";

std::vector<FixtureCheck> motivating_fixtures() {
  std::vector<FixtureCheck> out;
  for (auto [name, text, expected] : {std::tuple{"held_in_register", kHeldInRegisterFixture, 1},
                                      std::tuple{"read_back", kReadBackFixture, 0}}) {
    const auto program = parse_program(text, DialectKind::A);
    const auto run = execute(program, {});
    out.push_back({name, static_cast<std::size_t>(expected), detect_dead_stores(run.trace).size()});
  }
  return out;
}

namespace {

Tensor<double> random_tensor(nn::Shape shape, std::mt19937_64& rng, bool grad = false) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> v(n);
  for (auto& x : v) x = 2 * nn::uniform01(rng) - 1;
  return Tensor<double>::from(std::move(shape), std::move(v), grad);
}

// Moves parameters off exact zeros so no relu sits on its kink.
void jitter(nn::ParamList<double>& params, std::mt19937_64& rng) {
  for (auto& p : params)
    for (auto& x : p.tensor.data()) x += 0.05 * (2 * nn::uniform01(rng) - 1);
}

// Weighted sum, so a symmetric output cannot hide a wrong gradient.
Tensor<double> probe_loss(const Tensor<double>& out, const Tensor<double>& w) {
  return nn::sum(nn::hadamard(out, w));
}

}  // namespace

std::vector<NamedGradCheck> gradient_suite(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<NamedGradCheck> out;

  {
    auto x = random_tensor({3, 5}, rng);
    auto w = random_tensor({5, 4}, rng, true);
    auto b = random_tensor({4}, rng, true);
    auto r = random_tensor({3, 4}, rng);
    nn::ParamList<double> ps{{"x", x}, {"w", w}, {"b", b}};
    x.set_requires_grad(true);
    out.push_back({"dense", nn::grad_check([&] { return probe_loss(nn::tanh(nn::dense(x, w, b)), r); }, ps)});
  }
  {
    GgnnConfig c{"gru", 4, 6, 1};
    auto p = init_ggnn<double>(c, rng);
    auto ps = p.list(c);
    jitter(ps, rng);
    auto m = random_tensor({4, 6}, rng, true);
    auto h = random_tensor({4, 6}, rng, true);
    auto r = random_tensor({4, 6}, rng);
    ps.push_back({"m", m});
    ps.push_back({"h", h});
    out.push_back({"gru_cell", nn::grad_check([&] { return probe_loss(gru_cell(m, h, p), r); }, ps)});
  }
  {
    auto x = random_tensor({2, 6, 6}, rng, true);
    auto w = random_tensor({3, 2, 3, 3}, rng, true);
    auto b = random_tensor({3}, rng, true);
    auto r = random_tensor({3, 3, 3}, rng);
    nn::ParamList<double> ps{{"x", x}, {"w", w}, {"b", b}};
    out.push_back({"conv2d+maxpool",
                   nn::grad_check([&] { return probe_loss(nn::maxpool2d(nn::conv2d(x, w, b, 1, 1), 2, 2), r); },
                                  ps)});
  }
  {
    auto cnn = init_cnn<double>(CnnKind::Resnet7, rng);
    auto& block = cnn.blocks.back();  // 16 -> 64 with a projection
    nn::ParamList<double> ps{{"conv1.w", block.conv1.w}, {"conv1.b", block.conv1.b},
                             {"conv2.w", block.conv2.w}, {"conv2.b", block.conv2.b},
                             {"proj.w", block.proj->w},  {"proj.b", block.proj->b}};
    jitter(ps, rng);
    auto x = random_tensor({16, 4, 4}, rng, true);
    auto r = random_tensor({64, 4, 4}, rng);
    ps.push_back({"x", x});
    out.push_back({"residual_block", nn::grad_check([&] { return probe_loss(residual_block(x, block), r); }, ps)});
  }
  {
    GgnnConfig c{"ggnn", 4, 5, 3};
    auto p = init_ggnn<double>(c, rng);
    auto ps = p.list(c);
    jitter(ps, rng);
    auto x = random_tensor({5, 4}, rng, true);
    auto r = random_tensor({1, 5}, rng);
    std::vector<TypedEdge> edges{{0, 1, 0}, {1, 2, 0}, {2, 0, 0}, {2, 3, 0}, {3, 4, 0}, {1, 4, 0}};
    ps.push_back({"x", x});
    out.push_back({"ggnn_3_steps",
                   nn::grad_check([&] { return probe_loss(readout(propagate(x, edges, c, p), c, p), r); }, ps)});
  }
  {
    GenConfig g;
    g.seed = seed;
    g.min_procs = g.max_procs = 3;
    auto gen = generate_program(g);
    auto samples = program_samples(gen.program, "selfcheck/0", "A-Opt0");
    Word2VecOptions wi{8, 2, 2, 1, 0.025, 1, 1}, wv{6, 2, 2, 1, 0.025, 1, 2};
    auto ti = train_word2vec(sample_instruction_corpus(samples), wi);
    auto tv = train_word2vec(sample_value_corpus(samples), wv);
    ModelConfig mc;
    mc.variant = Variant::Full;
    mc.cfg_ggnn.input_dim = 8;
    mc.cfg_ggnn.state_dim = 6;
    mc.cfg_ggnn.steps = 2;
    mc.cct_ggnn.input_dim = 6;
    mc.cct_ggnn.state_dim = 5;
    mc.cct_ggnn.steps = 2;
    mc.cnn_kind = CnnKind::Cnn3;
    mc.fusion_dim = 8;
    mc.mlp_hidden = 4;
    auto m = init_model<double>(mc, ti, tv, seed);
    auto ps = m.trainable();
    jitter(ps, rng);
    const auto prepared = prepare_sample(samples.front(), ti.vocab, tv.vocab, mc);
    const double label = samples.front().label;
    out.push_back({"fused_model", nn::grad_check([&] {
                     return nn::binary_cross_entropy(forward_logit(m, prepared), label);
                   }, ps)});
  }
  return out;
}

}  // namespace graphspy
