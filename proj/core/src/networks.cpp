#include "adgan/networks.hpp"

#include <cmath>

#include "adgan/error.hpp"

namespace adgan {

ArchConfig ArchConfig::make(int image_size, int latent_dim, int filter_scale) {
  if (image_size < 8 || (image_size & (image_size - 1)) != 0)
    throw ConfigError("arch: image_size must be a power of two >= 8");
  if (latent_dim <= 0) throw ConfigError("arch: latent_dim must be positive");
  if (filter_scale <= 0) throw ConfigError("arch: filter_scale must be positive");

  ArchConfig a;
  a.image_size = image_size;
  a.latent_dim = latent_dim;
  int stages = 0;
  for (int s = image_size; s > 4; s /= 2) ++stages;

  const auto scaled = [&](int v) { return std::max(1, v / filter_scale); };
  for (int i = 0; i < stages; ++i) a.dv_filters.push_back(scaled(64 << i));
  a.gl_filters = a.dv_filters;
  a.dl_widths = {scaled(256), scaled(128), scaled(64)};
  return a;
}

// ---------------------------------------------------------------------------
// ParameterSet
// ---------------------------------------------------------------------------

template <typename T>
int ParameterSetT<T>::add(std::string name, std::vector<int> shape) {
  if (index_of(name) >= 0) throw ConfigError("duplicate parameter name: " + name);
  entries_.emplace_back(std::move(name), TensorT<T>(std::move(shape)));
  return static_cast<int>(entries_.size()) - 1;
}

template <typename T>
int ParameterSetT<T>::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].first == name) return static_cast<int>(i);
  return -1;
}

template <typename T>
std::int64_t ParameterSetT<T>::total_count() const {
  std::int64_t n = 0;
  for (const auto& e : entries_) n += e.second.numel();
  return n;
}

template <typename T>
bool ParameterSetT<T>::finite() const {
  for (const auto& e : entries_)
    if (!all_finite(e.second)) return false;
  return true;
}

template <typename T>
std::uint64_t ParameterSetT<T>::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const unsigned char* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& e : entries_) {
    mix(reinterpret_cast<const unsigned char*>(e.first.data()), e.first.size());
    mix(reinterpret_cast<const unsigned char*>(e.second.data.data()),
        e.second.data.size() * sizeof(T));
  }
  return h;
}

// ---------------------------------------------------------------------------
// Shared layer helpers
// ---------------------------------------------------------------------------

namespace {

// Zero-mean init scaled by fan-in (He); biases zero.
template <typename T>
void he_init(ParameterSetT<T>& ps, Rng& rng) {
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto& t = ps.tensor(static_cast<int>(i));
    const bool is_bias = ps.name(static_cast<int>(i)).ends_with(".b");
    if (is_bias) {
      std::fill(t.data.begin(), t.data.end(), T(0));
      continue;
    }
    std::int64_t fan_in;
    if (t.rank() == 4) {
      fan_in = static_cast<std::int64_t>(t.dim(1)) * t.dim(2) * t.dim(3);
    } else {
      fan_in = t.dim(0);  // (in, out) linear layout
    }
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : t.data) v = static_cast<T>(rng.normal(0.0, stddev));
  }
}

template <typename T>
void add_conv(ParameterSetT<T>& ps, const std::string& prefix, int cout, int cin, int k) {
  ps.add(prefix + ".w", {cout, cin, k, k});
  ps.add(prefix + ".b", {cout});
}

template <typename T>
void add_linear(ParameterSetT<T>& ps, const std::string& prefix, int in, int out) {
  ps.add(prefix + ".w", {in, out});
  ps.add(prefix + ".b", {out});
}

// Parameter lookup against a binding built in registration order.
template <typename T>
struct Bound {
  const ParameterSetT<T>* ps;
  const Binding* b;
  int operator()(const std::string& name) const {
    const int i = ps->index_of(name);
    if (i < 0) throw ConfigError("unbound parameter: " + name);
    return b->ids[static_cast<std::size_t>(i)];
  }
};

template <typename T>
Binding bind_all(const ParameterSetT<T>& ps, GraphT<T>& g) {
  Binding b;
  b.ids.reserve(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) b.ids.push_back(g.leaf(ps.tensor(static_cast<int>(i))));
  return b;
}

template <typename T>
int conv_layer(GraphT<T>& g, const Bound<T>& p, const std::string& prefix, int x, int stride,
               int pad) {
  return g.add_bias(g.conv2d(x, p(prefix + ".w"), {stride, pad}), p(prefix + ".b"));
}

template <typename T>
int linear_layer(GraphT<T>& g, const Bound<T>& p, const std::string& prefix, int x) {
  return g.add_bias(g.matmul(x, p(prefix + ".w")), p(prefix + ".b"));
}

}  // namespace

// ---------------------------------------------------------------------------
// VisualGenerator: dense stem at 4x4, residual nearest-neighbour-upsample
// blocks, tanh output.
// ---------------------------------------------------------------------------

template <typename T>
VisualGeneratorT<T>::VisualGeneratorT(const ArchConfig& arch, Rng& rng) : arch_(arch) {
  std::vector<int> ladder(arch.dv_filters.rbegin(), arch.dv_filters.rend());
  add_linear(params_, "gv.fc", arch.latent_dim, ladder[0] * 4 * 4);
  for (int i = 0; i < arch.stages(); ++i) {
    const int cin = ladder[static_cast<std::size_t>(i)];
    const int cout = ladder[static_cast<std::size_t>(std::min(i + 1, arch.stages() - 1))];
    const std::string blk = "gv.up" + std::to_string(i);
    add_conv(params_, blk + ".conv1", cout, cin, 3);
    add_conv(params_, blk + ".conv2", cout, cout, 3);
    add_conv(params_, blk + ".skip", cout, cin, 1);
  }
  add_conv(params_, "gv.out", 3, ladder.back(), 3);
  he_init(params_, rng);
}

template <typename T>
Binding VisualGeneratorT<T>::bind(GraphT<T>& g) const {
  return bind_all(params_, g);
}

template <typename T>
int VisualGeneratorT<T>::forward(GraphT<T>& g, const Binding& b, int z) const {
  const auto& vz = g.value(z);
  if (vz.rank() != 2 || vz.dim(1) != arch_.latent_dim)
    throw ShapeError("visual generator expects (N," + std::to_string(arch_.latent_dim) +
                     ") latents, got " + shape_str(vz.shape));
  const int n = vz.dim(0);
  Bound<T> p{&params_, &b};
  const T slope = static_cast<T>(arch_.lrelu_slope);

  std::vector<int> ladder(arch_.dv_filters.rbegin(), arch_.dv_filters.rend());
  int h = linear_layer(g, p, "gv.fc", z);
  h = g.reshape(h, {n, ladder[0], 4, 4});

  for (int i = 0; i < arch_.stages(); ++i) {
    const std::string blk = "gv.up" + std::to_string(i);
    int a = g.lrelu(h, slope);
    int main = conv_layer(g, p, blk + ".conv1", g.upsample_nn2(a), 1, 1);
    main = conv_layer(g, p, blk + ".conv2", g.lrelu(main, slope), 1, 1);
    int skip = conv_layer(g, p, blk + ".skip", g.upsample_nn2(h), 1, 0);
    h = g.add(main, skip);
  }
  return g.tanh_(conv_layer(g, p, "gv.out", g.lrelu(h, slope), 1, 1));
}

// ---------------------------------------------------------------------------
// VisualDiscriminator: residual strided-conv blocks, mean-pooled linear head,
// unbounded output. No batch-coupled layers, which keeps per-example
// gradients independent for the penalty.
// ---------------------------------------------------------------------------

template <typename T>
VisualDiscriminatorT<T>::VisualDiscriminatorT(const ArchConfig& arch, Rng& rng) : arch_(arch) {
  for (int i = 0; i < arch.stages(); ++i) {
    const int cin = i == 0 ? 3 : arch.dv_filters[static_cast<std::size_t>(i - 1)];
    const int cout = arch.dv_filters[static_cast<std::size_t>(i)];
    const std::string blk = "dv.down" + std::to_string(i);
    add_conv(params_, blk + ".conv1", cout, cin, 3);
    add_conv(params_, blk + ".conv2", cout, cout, 3);
    add_conv(params_, blk + ".skip", cout, cin, 1);
  }
  add_linear(params_, "dv.head", arch.dv_filters.back(), 1);
  he_init(params_, rng);
}

template <typename T>
Binding VisualDiscriminatorT<T>::bind(GraphT<T>& g) const {
  return bind_all(params_, g);
}

template <typename T>
std::pair<int, int> VisualDiscriminatorT<T>::forward_with_features(GraphT<T>& g, const Binding& b,
                                                                   int x) const {
  const auto& vx = g.value(x);
  if (vx.rank() != 4 || vx.dim(1) != 3 || vx.dim(2) != arch_.image_size ||
      vx.dim(3) != arch_.image_size)
    throw ShapeError("visual critic expects (N,3," + std::to_string(arch_.image_size) + "," +
                     std::to_string(arch_.image_size) + "), got " + shape_str(vx.shape));
  const int n = vx.dim(0);
  Bound<T> p{&params_, &b};
  const T slope = static_cast<T>(arch_.lrelu_slope);

  int h = x;
  for (int i = 0; i < arch_.stages(); ++i) {
    const std::string blk = "dv.down" + std::to_string(i);
    int a = i == 0 ? h : g.lrelu(h, slope);
    int main = conv_layer(g, p, blk + ".conv1", a, 1, 1);
    main = conv_layer(g, p, blk + ".conv2", g.lrelu(main, slope), 2, 1);
    int skip = conv_layer(g, p, blk + ".skip", a, 2, 0);
    h = g.add(main, skip);
  }
  // Global mean pool at the 4x4 core.
  int feats = g.scale(g.sum_spatial(g.lrelu(h, slope)), T(1) / T(16));
  int score = linear_layer(g, p, "dv.head", feats);
  return {g.reshape(score, {n}), feats};
}

template <typename T>
int VisualDiscriminatorT<T>::forward(GraphT<T>& g, const Binding& b, int x) const {
  return forward_with_features(g, b, x).first;
}

// ---------------------------------------------------------------------------
// LatentGenerator: plain strided conv ladder, mean pool, linear map to Z.
// ---------------------------------------------------------------------------

template <typename T>
LatentGeneratorT<T>::LatentGeneratorT(const ArchConfig& arch, Rng& rng) : arch_(arch) {
  for (int i = 0; i < arch.stages(); ++i) {
    const int cin = i == 0 ? 3 : arch.gl_filters[static_cast<std::size_t>(i - 1)];
    const int cout = arch.gl_filters[static_cast<std::size_t>(i)];
    add_conv(params_, "gl.conv" + std::to_string(i), cout, cin, 3);
  }
  add_linear(params_, "gl.head", arch.gl_filters.back(), arch.latent_dim);
  he_init(params_, rng);
}

template <typename T>
Binding LatentGeneratorT<T>::bind(GraphT<T>& g) const {
  return bind_all(params_, g);
}

template <typename T>
int LatentGeneratorT<T>::forward(GraphT<T>& g, const Binding& b, int x) const {
  const auto& vx = g.value(x);
  if (vx.rank() != 4 || vx.dim(1) != 3 || vx.dim(2) != arch_.image_size ||
      vx.dim(3) != arch_.image_size)
    throw ShapeError("latent generator expects (N,3,S,S), got " + shape_str(vx.shape));
  Bound<T> p{&params_, &b};
  const T slope = static_cast<T>(arch_.lrelu_slope);

  int h = x;
  for (int i = 0; i < arch_.stages(); ++i)
    h = g.lrelu(conv_layer(g, p, "gl.conv" + std::to_string(i), h, 2, 1), slope);
  int feats = g.scale(g.sum_spatial(h), T(1) / T(16));
  return linear_layer(g, p, "gl.head", feats);
}

// ---------------------------------------------------------------------------
// LatentDiscriminator: MLP over latent vectors, sigmoid probability head.
// ---------------------------------------------------------------------------

template <typename T>
LatentDiscriminatorT<T>::LatentDiscriminatorT(const ArchConfig& arch, Rng& rng) : arch_(arch) {
  int in = arch.latent_dim;
  for (std::size_t i = 0; i < arch.dl_widths.size(); ++i) {
    add_linear(params_, "dl.fc" + std::to_string(i), in, arch.dl_widths[i]);
    in = arch.dl_widths[i];
  }
  add_linear(params_, "dl.out", in, 1);
  he_init(params_, rng);
}

template <typename T>
Binding LatentDiscriminatorT<T>::bind(GraphT<T>& g) const {
  return bind_all(params_, g);
}

template <typename T>
int LatentDiscriminatorT<T>::forward_logit(GraphT<T>& g, const Binding& b, int z) const {
  const auto& vz = g.value(z);
  if (vz.rank() != 2 || vz.dim(1) != arch_.latent_dim)
    throw ShapeError("latent discriminator expects (N,Z), got " + shape_str(vz.shape));
  const int n = vz.dim(0);
  Bound<T> p{&params_, &b};
  const T slope = static_cast<T>(arch_.lrelu_slope);

  int h = z;
  for (std::size_t i = 0; i < arch_.dl_widths.size(); ++i)
    h = g.lrelu(linear_layer(g, p, "dl.fc" + std::to_string(i), h), slope);
  return g.reshape(linear_layer(g, p, "dl.out", h), {n});
}

template <typename T>
int LatentDiscriminatorT<T>::forward(GraphT<T>& g, const Binding& b, int z) const {
  return g.sigmoid(forward_logit(g, b, z));
}

// ---------------------------------------------------------------------------

template <typename T>
AdganNetsT<T> AdganNetsT<T>::init(const ArchConfig& arch, std::uint64_t seed) {
  AdganNetsT<T> nets;
  Rng rgv(derive_seed(seed, "init.gv"));
  Rng rdv(derive_seed(seed, "init.dv"));
  Rng rgl(derive_seed(seed, "init.gl"));
  Rng rdl(derive_seed(seed, "init.dl"));
  nets.gv = VisualGeneratorT<T>(arch, rgv);
  nets.dv = VisualDiscriminatorT<T>(arch, rdv);
  nets.gl = LatentGeneratorT<T>(arch, rgl);
  nets.dl = LatentDiscriminatorT<T>(arch, rdl);
  return nets;
}

template class ParameterSetT<float>;
template class ParameterSetT<double>;
template class VisualGeneratorT<float>;
template class VisualGeneratorT<double>;
template class VisualDiscriminatorT<float>;
template class VisualDiscriminatorT<double>;
template class LatentGeneratorT<float>;
template class LatentGeneratorT<double>;
template class LatentDiscriminatorT<float>;
template class LatentDiscriminatorT<double>;
template struct AdganNetsT<float>;
template struct AdganNetsT<double>;

}  // namespace adgan
