#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "graphspy/cnn.hpp"
#include "graphspy/nn/gradcheck.hpp"
#include "graphspy/nn/init.hpp"

using namespace graphspy;
using nn::Tensor;

namespace {

const Motif kRectangle{"rectangle", 2, 3, {1, 1, 1, 0, 1, 1}};

AdjMatrix random_adjacency(int n, std::mt19937_64& rng) {
  AdjMatrix a;
  a.n = n;
  a.cells.resize(static_cast<std::size_t>(n * n));
  for (auto& c : a.cells) c = rng() % 5 == 0;
  return a;
}

// Nonzero biases make the background active, which is the harder case for
// translation invariance.
template <typename T>
CnnParams<T> jittered(CnnKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto p = init_cnn<T>(kind, rng);
  for (auto& np : p.list())
    if (np.tensor.rank() == 1)
      for (auto& v : np.tensor.data()) v = static_cast<T>(0.1 * (2.0 * nn::uniform01(rng) - 1.0));
  return p;
}

double max_abs_diff(std::span<const float> a, std::span<const float> b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(static_cast<double>(a[i]) - b[i]));
  return d;
}

}  // namespace

TEST(Cnn, LayerCounts) {
  std::mt19937_64 rng(1);
  auto r11 = init_cnn<float>(CnnKind::Resnet11, rng);
  EXPECT_EQ(r11.weighted_layers(), 11u);
  EXPECT_EQ(r11.blocks.size(), 3u);
  EXPECT_FALSE(r11.blocks[0].proj);
  EXPECT_TRUE(r11.blocks[1].proj);
  EXPECT_EQ(init_cnn<float>(CnnKind::Resnet7, rng).weighted_layers(), 7u);
  EXPECT_EQ(init_cnn<float>(CnnKind::Cnn3, rng).weighted_layers(), 4u);  // three convs plus the head
  for (const auto& np : r11.list()) EXPECT_EQ(np.name.rfind("cnn.", 0), 0u) << np.name;
  EXPECT_EQ(parse_cnn_kind("Resnet7"), CnnKind::Resnet7);
  EXPECT_FALSE(parse_cnn_kind("Resnet9"));
}

TEST(Cnn, OutputLengthIsFixed) {
  std::mt19937_64 rng(2);
  for (auto kind : {CnnKind::Cnn3, CnnKind::Resnet7, CnnKind::Resnet11}) {
    auto p = init_cnn<float>(kind, rng);
    for (int n : {1, 5, 8, 30, 100}) {
      auto out = embed_adjacency(random_adjacency(n, rng), p);
      EXPECT_EQ(out.shape(), (nn::Shape{1, kCnnOutDim})) << n;
      for (float v : out.data()) EXPECT_TRUE(std::isfinite(v));
    }
  }
}

TEST(Cnn, SmallMatricesArePaddedTopLeft) {
  std::mt19937_64 rng(3);
  auto a = random_adjacency(5, rng);
  auto img = adjacency_image<float>(a);
  ASSERT_EQ(img.shape(), (nn::Shape{1, 8, 8}));
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      EXPECT_EQ(img[static_cast<std::size_t>(i * 8 + j)], i < 5 && j < 5 ? a.at(i, j) : 0);
  EXPECT_EQ(adjacency_image<float>(random_adjacency(12, rng)).shape(), (nn::Shape{1, 12, 12}));
}

TEST(Cnn, ZeroParamsGiveZero) {
  std::mt19937_64 rng(4);
  auto p = init_cnn<float>(CnnKind::Resnet11, rng);
  for (auto& np : p.list())
    for (auto& v : np.tensor.data()) v = 0.f;
  AdjMatrix zero{9, std::vector<std::uint8_t>(81, 0)};
  auto out = embed_adjacency(zero, p);
  for (float v : out.data()) EXPECT_EQ(v, 0.f);
}

TEST(Cnn, ResidualIdentityWhenBranchIsZero) {
  std::mt19937_64 rng(5);
  auto p = init_cnn<double>(CnnKind::Resnet11, rng);
  auto block = p.blocks[0];
  for (auto* t : {&block.conv2.w, &block.conv2.b})
    for (auto& v : t->data()) v = 0.0;
  auto x = Tensor<double>::zeros({16, 6, 6});
  for (auto& v : x.data()) v = nn::uniform01(rng);  // non-negative, so the final relu is the identity
  auto y = residual_block(x, block);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Cnn, TranslationInvariance) {
  auto p = jittered<float>(CnnKind::Resnet11, 6);
  // Border and motif influence must not overlap: both reach r cells.
  const int r = 2 * p.receptive_radius() + 1;
  Motif diamond{"diamond", 4, 4, {0, 1, 1, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0}};
  for (const auto& m : {kRectangle, diamond}) {
    const int n = 2 * r + 3 * m.rows + 6;
    auto base = embed_adjacency(place_motif(m, n, r + 1, r + 1), p);
    auto moved = embed_adjacency(place_motif(m, n, n - r - 1 - m.rows, r + 3), p);
    EXPECT_LE(max_abs_diff(base.data(), moved.data()), 1e-5) << m.name;
    auto bigger = embed_adjacency(place_motif(m, n + 17, r + 9, r + 2), p);
    EXPECT_LE(max_abs_diff(base.data(), bigger.data()), 1e-5) << m.name;
  }
}

TEST(Cnn, RectangleSurvivesNodeInsertion) {
  auto p = jittered<float>(CnnKind::Resnet11, 7);
  const int r = 2 * p.receptive_radius() + 1;
  const int n = 2 * r + 10, at = r + 3;
  auto a = place_motif(kRectangle, n, at, at);
  for (int index : {1, at + 3, n - 1}) {  // before, after, and past the motif
    auto b = insert_node(a, index);
    const int shift = index <= at ? 1 : 0;
    std::vector<int> read;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 3; ++j) read.push_back(b.at(at + shift + i, at + shift + j));
    EXPECT_EQ(read, (std::vector<int>{1, 1, 1, 0, 1, 1}));
    EXPECT_EQ(b.ones(), a.ones());
    EXPECT_LE(max_abs_diff(embed_adjacency(a, p).data(), embed_adjacency(b, p).data()), 1e-5) << index;
  }
}

TEST(Cnn, ProbeSizesAgree) {
  // Zero biases keep the background silent, so even size 16 has no border response.
  std::mt19937_64 rng(8);
  auto p = init_cnn<float>(CnnKind::Resnet11, rng);
  Motif empty{"empty", 2, 2, {0, 0, 0, 0}};
  auto report = pattern_sensitivity_probe(p, {kRectangle, empty}, {16, 64});
  ASSERT_EQ(report.size(), 4u);
  for (std::size_t k = 0; k < 4; k += 2) {
    ASSERT_EQ(report[k].channels.size(), kCnnChannels);
    ASSERT_EQ(report[k].output.size(), kCnnOutDim);
    for (std::size_t i = 0; i < kCnnChannels; ++i)
      EXPECT_NEAR(report[k].channels[i], report[k + 1].channels[i], 1e-5);
  }
  // The empty motif is the background response; the rectangle lifts some channel above it.
  double lift = 0;
  for (std::size_t i = 0; i < kCnnChannels; ++i)
    lift = std::max(lift, report[0].channels[i] - report[2].channels[i]);
  EXPECT_GT(lift, 0.0);
  AdjMatrix zero{16, std::vector<std::uint8_t>(256, 0)};
  auto base = cnn_features(adjacency_image<float>(zero), p);
  for (std::size_t i = 0; i < kCnnChannels; ++i) EXPECT_NEAR(report[2].channels[i], base[i], 1e-6);
}

TEST(Cnn, GradCheckResidualBlock) {
  std::mt19937_64 rng(9);
  auto p = jittered<double>(CnnKind::Resnet11, 9);
  auto block = p.blocks[1];  // 16 -> 32 with projection
  auto x = Tensor<double>::zeros({16, 4, 4});
  for (auto& v : x.data()) v = 2.0 * nn::uniform01(rng) - 1.0;
  auto probe = Tensor<double>::zeros({32, 4, 4});
  for (auto& v : probe.data()) v = 2.0 * nn::uniform01(rng) - 1.0;
  nn::ParamList<double> params{{"c1.w", block.conv1.w}, {"c1.b", block.conv1.b}, {"c2.w", block.conv2.w},
                               {"c2.b", block.conv2.b}, {"p.w", block.proj->w}, {"p.b", block.proj->b}};
  auto r = nn::grad_check([&] { return nn::sum(nn::hadamard(residual_block(x, block), probe)); }, params);
  EXPECT_TRUE(r.pass) << r.worst_param << " " << r.worst_rel_error;
}
