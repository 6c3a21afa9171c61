#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "graphspy/ggnn.hpp"
#include "graphspy/nn/gradcheck.hpp"
#include "graphspy/nn/init.hpp"

using namespace graphspy;
using nn::Tensor;

namespace {

GgnnConfig small(std::size_t in, std::size_t d, std::size_t t) {
  GgnnConfig c;
  c.prefix = "g";
  c.input_dim = in;
  c.state_dim = d;
  c.steps = t;
  return c;
}

template <typename T>
Tensor<T> random_inputs(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  auto x = Tensor<T>::zeros({n, dim});
  for (auto& v : x.data()) v = static_cast<T>(2.0 * nn::uniform01(rng) - 1.0);
  return x;
}

std::vector<TypedEdge> random_edges(std::size_t n, std::mt19937_64& rng) {
  std::vector<TypedEdge> e;
  const std::size_t m = rng() % (2 * n + 1);
  for (std::size_t k = 0; k < m; ++k) e.push_back({static_cast<int>(rng() % n), static_cast<int>(rng() % n), 0});
  return e;
}

void set(Tensor<double>& t, std::vector<double> v) { std::copy(v.begin(), v.end(), t.data().begin()); }

using Vec = std::array<double, 2>;
using Mat = std::array<std::array<double, 2>, 2>;

Vec vm(const Vec& a, const Mat& w) { return {a[0] * w[0][0] + a[1] * w[1][0], a[0] * w[0][1] + a[1] * w[1][1]}; }
double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST(Propagate, ZeroStepsIsProjection) {
  std::mt19937_64 rng(1);
  auto c = small(6, 4, 0);
  auto p = init_ggnn<float>(c, rng);
  auto x = random_inputs<float>(5, 6, rng);
  auto h = propagate(x, {{0, 1, 0}, {1, 2, 0}}, c, p);
  auto ref = nn::matmul(x, p.P);
  ASSERT_EQ(h.shape(), (nn::Shape{5, 4}));
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_EQ(h[i], ref[i]);
}

TEST(Propagate, IsolatedNodeSeesZeroMessage) {
  std::mt19937_64 rng(2);
  auto c = small(3, 3, 4);
  auto p = init_ggnn<double>(c, rng);
  for (auto& v : p.b_fwd[0].data()) v = 0.7;  // biases follow edges, so none reach node 2
  auto x = random_inputs<double>(3, 3, rng);
  auto h = propagate(x, {{0, 1, 0}}, c, p);
  auto alone = nn::matmul(x, p.P);
  auto state = Tensor<double>::from({1, 3}, {alone[6], alone[7], alone[8]});
  for (std::size_t t = 0; t < 4; ++t) state = gru_cell(Tensor<double>::zeros({1, 3}), state, p);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(h[6 + k], state[k], 1e-12);
}

TEST(Propagate, HandComputedChain) {
  // u -> v, D = 2, T = 1, P = I.
  auto c = small(2, 2, 1);
  std::mt19937_64 rng(3);
  auto p = init_ggnn<double>(c, rng);
  const Mat Wf{{{0.5, -0.2}, {0.1, 0.3}}}, Wb{{{-0.3, 0.2}, {0.4, 0.1}}};
  const Mat Wz{{{0.2, 0.1}, {-0.1, 0.3}}}, Uz{{{0.1, 0.0}, {0.0, 0.1}}};
  const Mat Wr{{{0.3, -0.2}, {0.2, 0.1}}}, Ur{{{-0.1, 0.2}, {0.1, 0.0}}};
  const Mat Wh{{{0.4, 0.1}, {-0.3, 0.2}}}, Uh{{{0.2, -0.1}, {0.1, 0.3}}};
  const Vec bf{0.1, -0.1}, bb{0.05, 0.0}, bz{0.0, 0.1}, br{0.1, 0.0}, bh{0.0, -0.05};
  auto flat = [](const Mat& m) { return std::vector<double>{m[0][0], m[0][1], m[1][0], m[1][1]}; };
  set(p.P, {1, 0, 0, 1});
  set(p.W_fwd[0], flat(Wf));
  set(p.W_bwd[0], flat(Wb));
  set(p.b_fwd[0], {bf[0], bf[1]});
  set(p.b_bwd[0], {bb[0], bb[1]});
  set(p.W_z, flat(Wz));
  set(p.U_z, flat(Uz));
  set(p.b_z, {bz[0], bz[1]});
  set(p.W_r, flat(Wr));
  set(p.U_r, flat(Ur));
  set(p.b_r, {br[0], br[1]});
  set(p.W_h, flat(Wh));
  set(p.U_h, flat(Uh));
  set(p.b_h, {bh[0], bh[1]});
  const Vec hu{1.0, -0.5}, hv{0.25, 0.75};
  auto x = Tensor<double>::from({2, 2}, {hu[0], hu[1], hv[0], hv[1]});
  auto h = propagate(x, {{0, 1, 0}}, c, p);

  auto gru = [&](const Vec& m, const Vec& prev) {
    Vec out{};
    auto zm = vm(m, Wz), zh = vm(prev, Uz), rm = vm(m, Wr), rh = vm(prev, Ur), hm = vm(m, Wh);
    Vec r{sig(rm[0] + rh[0] + br[0]), sig(rm[1] + rh[1] + br[1])};
    auto rhh = vm(Vec{r[0] * prev[0], r[1] * prev[1]}, Uh);
    for (int k = 0; k < 2; ++k) {
      const double z = sig(zm[k] + zh[k] + bz[k]);
      const double cand = std::tanh(hm[k] + rhh[k] + bh[k]);
      out[k] = (1 - z) * prev[k] + z * cand;
    }
    return out;
  };
  auto from_v = vm(hv, Wb);
  auto from_u = vm(hu, Wf);
  const Vec mu{from_v[0] + bb[0], from_v[1] + bb[1]};
  const Vec mv{from_u[0] + bf[0], from_u[1] + bf[1]};
  auto u1 = gru(mu, hu), v1 = gru(mv, hv);
  EXPECT_NEAR(h[0], u1[0], 1e-6);
  EXPECT_NEAR(h[1], u1[1], 1e-6);
  EXPECT_NEAR(h[2], v1[0], 1e-6);
  EXPECT_NEAR(h[3], v1[1], 1e-6);
}

TEST(Propagate, EdgeErrors) {
  std::mt19937_64 rng(4);
  auto c = small(2, 2, 1);
  auto p = init_ggnn<float>(c, rng);
  auto x = random_inputs<float>(2, 2, rng);
  EXPECT_THROW(propagate(x, {{0, 2, 0}}, c, p), EdgeOutOfRange);
  EXPECT_THROW(propagate(x, {{-1, 0, 0}}, c, p), EdgeOutOfRange);
  EXPECT_THROW(propagate(random_inputs<float>(2, 3, rng), {}, c, p), ShapeMismatch);
  EXPECT_THROW(readout(Tensor<float>::zeros({0, 2}), c, p), EmptyGraph);
}

TEST(Readout, MeanExamples) {
  std::mt19937_64 rng(5);
  auto c = small(2, 2, 0);
  auto p = init_ggnn<double>(c, rng);
  auto one = Tensor<double>::from({1, 2}, {0.3, -0.4});
  auto r1 = readout(one, c, p);
  EXPECT_EQ(r1[0], 0.3);
  EXPECT_EQ(r1[1], -0.4);
  auto two = Tensor<double>::from({2, 2}, {1, 2, 3, -6});
  auto r2 = readout(two, c, p);
  EXPECT_EQ(r2[0], 2.0);
  EXPECT_EQ(r2[1], -2.0);
}

TEST(Propagate, PermutationEquivarianceAndReadoutInvariance) {
  std::mt19937_64 rng(6);
  for (bool gated : {false, true}) {
    auto c = small(5, 6, 3);
    c.gated_readout = gated;
    auto p = init_ggnn<double>(c, rng);
    for (int g = 0; g < 30; ++g) {
      const std::size_t n = 1 + rng() % 9;
      auto x = random_inputs<double>(n, 5, rng);
      auto edges = random_edges(n, rng);
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      auto px = Tensor<double>::zeros({n, 5});
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < 5; ++k) px[perm[i] * 5 + k] = x[i * 5 + k];
      std::vector<TypedEdge> pe;
      for (auto e : edges) pe.push_back({static_cast<int>(perm[static_cast<std::size_t>(e.src)]),
                                         static_cast<int>(perm[static_cast<std::size_t>(e.dst)]), 0});
      auto h = propagate(x, edges, c, p);
      auto ph = propagate(px, pe, c, p);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(ph[perm[i] * 6 + k], h[i * 6 + k], 1e-12);
      auto r = readout(h, c, p), pr = readout(ph, c, p);
      for (std::size_t k = 0; k < 6; ++k) EXPECT_NEAR(r[k], pr[k], 1e-12);
    }
  }
}

TEST(Gru, InterpolationBound) {
  std::mt19937_64 rng(7);
  auto c = small(4, 5, 1);
  auto p = init_ggnn<double>(c, rng);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = random_inputs<double>(3, 5, rng);
    auto h = random_inputs<double>(3, 5, rng);
    auto out = gru_cell(m, h, p);
    auto r = nn::sigmoid(nn::add(nn::dense(m, p.W_r, p.b_r), nn::matmul(h, p.U_r)));
    auto cand = nn::tanh(nn::add(nn::dense(m, p.W_h, p.b_h), nn::matmul(nn::hadamard(r, h), p.U_h)));
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_GE(out[i], std::min(h[i], cand[i]) - 1e-12);
      EXPECT_LE(out[i], std::max(h[i], cand[i]) + 1e-12);
    }
  }
}

TEST(CctEmbedding, PerProcedureMean) {
  Cct cct;
  for (auto [id, proc, parent] : std::vector<std::tuple<int, std::string, int>>{
           {0, "main", -1}, {1, "sub", 0}, {2, "cmp", 1}, {3, "cmp", 0}}) {
    CctNode n;
    n.id = id;
    n.proc = proc;
    n.parent = parent;
    cct.nodes.push_back(n);
  }
  auto states = Tensor<double>::from({4, 2}, {1, 1, 2, 4, 3, 5, 7, -1});
  auto cmp = embed_cct_for_procedure(cct, "cmp", states);
  EXPECT_EQ(cmp[0], 5.0);
  EXPECT_EQ(cmp[1], 2.0);
  auto sub = embed_cct_for_procedure(cct, "sub", states);
  EXPECT_EQ(sub[0], 2.0);
  EXPECT_EQ(sub[1], 4.0);
  auto none = embed_cct_for_procedure(cct, "ghost", states);
  EXPECT_EQ(none.shape(), (nn::Shape{1, 2}));
  EXPECT_EQ(none[0], 0.0);
  EXPECT_EQ(none[1], 0.0);
}

TEST(Ggnn, TypedEdgesAndDefaults) {
  auto cfg = cfg_ggnn_config();
  EXPECT_EQ(cfg.input_dim, 60u);
  EXPECT_EQ(cfg.state_dim, 70u);
  EXPECT_EQ(cfg.steps, 10u);
  auto cct = cct_ggnn_config();
  EXPECT_EQ(cct.input_dim, 30u);
  EXPECT_EQ(cct.state_dim, 50u);
  EXPECT_EQ(cct.steps, 5u);

  Cfg g;
  g.node_count = 3;
  g.edges = {{0, 1, EdgeKind::BranchFalse}, {0, 2, EdgeKind::BranchTrue}, {1, 2, EdgeKind::Jump}};
  for (const auto& e : cfg_edges(g, cfg)) EXPECT_EQ(e.type, 0);
  auto typed = cfg;
  typed.edge_types = kEdgeKindCount;
  auto te = cfg_edges(g, typed);
  EXPECT_EQ(te[0].type, static_cast<int>(EdgeKind::BranchFalse));
  EXPECT_EQ(te[2].type, static_cast<int>(EdgeKind::Jump));
  std::mt19937_64 rng(8);
  auto p = init_ggnn<float>(typed, rng);
  EXPECT_EQ(p.W_fwd.size(), kEdgeKindCount);
  for (const auto& np : p.list(typed)) EXPECT_EQ(np.name.rfind(typed.prefix, 0), 0u) << np.name;
}

TEST(Ggnn, GradCheckThreeSteps) {
  std::mt19937_64 rng(9);
  auto c = small(4, 3, 3);
  auto p = init_ggnn<double>(c, rng);
  for (auto* b : {&p.b_z, &p.b_r, &p.b_h, &p.b_fwd[0], &p.b_bwd[0]})
    for (auto& v : b->data()) v = 0.2 * (2.0 * nn::uniform01(rng) - 1.0);
  auto x = random_inputs<double>(5, 4, rng);
  std::vector<TypedEdge> edges{{0, 1, 0}, {1, 2, 0}, {2, 0, 0}, {3, 4, 0}, {1, 3, 0}, {4, 4, 0}};
  auto probe = random_inputs<double>(1, 3, rng);
  auto params = p.list(c);
  auto loss = [&] { return nn::sum(nn::hadamard(readout(propagate(x, edges, c, p), c, p), probe)); };
  auto r = nn::grad_check(loss, params);
  EXPECT_TRUE(r.pass) << r.worst_param << " " << r.worst_rel_error;
  EXPECT_LE(r.worst_rel_error, 1e-3);
}
