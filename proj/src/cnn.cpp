#include "graphspy/cnn.hpp"

#include "graphspy/nn/init.hpp"

namespace graphspy {

using nn::Tensor;

std::string_view cnn_kind_name(CnnKind kind) {
  switch (kind) {
    case CnnKind::Cnn3: return "CNN3";
    case CnnKind::Resnet7: return "Resnet7";
    case CnnKind::Resnet11: return "Resnet11";
  }
  return "?";
}

std::optional<CnnKind> parse_cnn_kind(std::string_view text) {
  for (auto k : {CnnKind::Cnn3, CnnKind::Resnet7, CnnKind::Resnet11})
    if (cnn_kind_name(k) == text) return k;
  return std::nullopt;
}

namespace {

template <typename T>
Conv<T> make_conv(std::size_t in, std::size_t out, std::size_t k, std::mt19937_64& rng) {
  return {nn::xavier<T>({out, in, k, k}, in * k * k, out * k * k, rng), nn::zeros_param<T>({out})};
}

template <typename T>
ResidualBlock<T> make_block(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  ResidualBlock<T> b{make_conv<T>(in, out, 3, rng), make_conv<T>(out, out, 3, rng), std::nullopt};
  if (in != out) b.proj = make_conv<T>(in, out, 1, rng);
  return b;
}

template <typename T>
Tensor<T> conv(const Tensor<T>& x, const Conv<T>& c) {
  const std::size_t k = c.w.dim(2);
  return nn::conv2d(x, c.w, c.b, 1, k / 2);
}

}  // namespace

template <typename T>
nn::ParamList<T> CnnParams<T>::list() const {
  nn::ParamList<T> out;
  auto push = [&](const std::string& name, const Conv<T>& c) {
    out.push_back({"cnn." + name + ".w", c.w});
    out.push_back({"cnn." + name + ".b", c.b});
  };
  push("stem", stem);
  for (std::size_t i = 0; i < plain.size(); ++i) push("conv" + std::to_string(i + 2), plain[i]);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string p = "block" + std::to_string(i + 1);
    push(p + ".conv1", blocks[i].conv1);
    push(p + ".conv2", blocks[i].conv2);
    if (blocks[i].proj) push(p + ".proj", *blocks[i].proj);
  }
  if (head_conv) push("head_conv", *head_conv);
  out.push_back({"cnn.head.w", head_w});
  out.push_back({"cnn.head.b", head_b});
  return out;
}

template <typename T>
std::size_t CnnParams<T>::weighted_layers() const {
  std::size_t n = 1 + plain.size() + (head_conv ? 1 : 0) + 1;
  for (const auto& b : blocks) n += 2 + (b.proj ? 1 : 0);
  return n;
}

template <typename T>
int CnnParams<T>::receptive_radius() const {
  return static_cast<int>(1 + plain.size() + 2 * blocks.size() + (head_conv ? 1 : 0));
}

template <typename T>
CnnParams<T> init_cnn(CnnKind kind, std::mt19937_64& rng) {
  CnnParams<T> p;
  p.kind = kind;
  p.stem = make_conv<T>(1, 16, 3, rng);
  switch (kind) {
    case CnnKind::Cnn3:
      p.plain.push_back(make_conv<T>(16, 32, 3, rng));
      p.plain.push_back(make_conv<T>(32, 64, 3, rng));
      break;
    case CnnKind::Resnet7:
      p.blocks.push_back(make_block<T>(16, 16, rng));
      p.blocks.push_back(make_block<T>(16, 64, rng));
      break;
    case CnnKind::Resnet11:
      p.blocks.push_back(make_block<T>(16, 16, rng));
      p.blocks.push_back(make_block<T>(16, 32, rng));
      p.blocks.push_back(make_block<T>(32, 64, rng));
      p.head_conv = make_conv<T>(64, 64, 3, rng);
      break;
  }
  p.head_w = nn::xavier<T>({kCnnChannels, kCnnOutDim}, kCnnChannels, kCnnOutDim, rng);
  p.head_b = nn::zeros_param<T>({kCnnOutDim});
  return p;
}

template <typename T>
Tensor<T> adjacency_image(const AdjMatrix& a) {
  const int n = std::max(a.n, kMinImageSide);
  auto img = Tensor<T>::zeros({1, static_cast<std::size_t>(n), static_cast<std::size_t>(n)});
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j)
      img[static_cast<std::size_t>(i * n + j)] = static_cast<T>(a.at(i, j));
  return img;
}

template <typename T>
Tensor<T> residual_block(const Tensor<T>& x, const ResidualBlock<T>& b) {
  auto y = conv(nn::relu(conv(x, b.conv1)), b.conv2);
  auto skip = b.proj ? conv(x, *b.proj) : x;
  return nn::relu(nn::add(y, skip));
}

template <typename T>
Tensor<T> cnn_features(const Tensor<T>& image, const CnnParams<T>& p) {
  auto h = nn::relu(conv(image, p.stem));
  for (const auto& c : p.plain) h = nn::relu(conv(h, c));
  for (const auto& b : p.blocks) h = residual_block(h, b);
  if (p.head_conv) h = nn::relu(conv(h, *p.head_conv));
  return nn::global_maxpool(h);
}

template <typename T>
Tensor<T> embed_adjacency(const AdjMatrix& a, const CnnParams<T>& p) {
  return nn::dense(cnn_features(adjacency_image<T>(a), p), p.head_w, p.head_b);
}

AdjMatrix place_motif(const Motif& m, int n, int row, int col) {
  AdjMatrix a;
  a.n = n;
  a.cells.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) {
      const int r = row + i, c = col + j;
      if (r < 0 || c < 0 || r >= n || c >= n) throw ShapeMismatch("motif does not fit the matrix");
      a.cells[static_cast<std::size_t>(r * n + c)] = m.cells[static_cast<std::size_t>(i * m.cols + j)];
    }
  return a;
}

AdjMatrix insert_node(const AdjMatrix& a, int index) {
  AdjMatrix out;
  out.n = a.n + 1;
  out.cells.assign(static_cast<std::size_t>(out.n) * static_cast<std::size_t>(out.n), 0);
  auto map = [&](int i) { return i < index ? i : i + 1; };
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j)
      out.cells[static_cast<std::size_t>(map(i) * out.n + map(j))] = a.at(i, j);
  return out;
}

std::vector<ProbeEntry> pattern_sensitivity_probe(const CnnParams<float>& params,
                                                  const std::vector<Motif>& motifs,
                                                  const std::vector<int>& sizes) {
  std::vector<ProbeEntry> out;
  for (const auto& m : motifs)
    for (int n : sizes) {
      auto a = place_motif(m, n, (n - m.rows) / 2, (n - m.cols) / 2);
      auto feats = cnn_features(adjacency_image<float>(a), params);
      auto emb = nn::dense(feats, params.head_w, params.head_b);
      out.push_back({m.name, n, {feats.data().begin(), feats.data().end()},
                     {emb.data().begin(), emb.data().end()}});
    }
  return out;
}

#define GRAPHSPY_INSTANTIATE_CNN(T)                                                 \
  template struct CnnParams<T>;                                                     \
  template CnnParams<T> init_cnn<T>(CnnKind, std::mt19937_64&);                     \
  template Tensor<T> adjacency_image<T>(const AdjMatrix&);                          \
  template Tensor<T> residual_block(const Tensor<T>&, const ResidualBlock<T>&);     \
  template Tensor<T> cnn_features(const Tensor<T>&, const CnnParams<T>&);           \
  template Tensor<T> embed_adjacency(const AdjMatrix&, const CnnParams<T>&);

GRAPHSPY_INSTANTIATE_CNN(float)
GRAPHSPY_INSTANTIATE_CNN(double)

}  // namespace graphspy
