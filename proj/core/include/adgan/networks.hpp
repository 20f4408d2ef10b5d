#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adgan/graph.hpp"
#include "adgan/rng.hpp"
#include "adgan/tensor.hpp"

namespace adgan {

// Filter ladders for a given image size: one resolution-halving stage per
// factor of two between image_size and the 4x4 core, doubling filters from
// `base`. At 64x64 with scale 1 this is the published (64,128,256,512) /
// reversed for the visual generator; filter_scale divides every width for
// reduced configurations.
struct ArchConfig {
  int image_size = 64;
  int latent_dim = 128;
  std::vector<int> dv_filters;  // visual critic, ascending
  std::vector<int> gl_filters;  // latent generator, ascending
  std::vector<int> dl_widths;   // latent discriminator MLP
  float lrelu_slope = 0.2f;

  int stages() const { return static_cast<int>(dv_filters.size()); }
  static ArchConfig make(int image_size, int latent_dim, int filter_scale = 1);
};

// Named, shape-tagged trainable arrays for one network. Registration order is
// fixed, which pins the checkpoint layout.
template <typename T>
class ParameterSetT {
 public:
  int add(std::string name, std::vector<int> shape);
  int index_of(const std::string& name) const;  // -1 when absent

  std::size_t size() const { return entries_.size(); }
  const std::string& name(int i) const { return entries_[static_cast<std::size_t>(i)].first; }
  TensorT<T>& tensor(int i) { return entries_[static_cast<std::size_t>(i)].second; }
  const TensorT<T>& tensor(int i) const { return entries_[static_cast<std::size_t>(i)].second; }

  std::int64_t total_count() const;
  bool finite() const;
  // FNV-1a over raw bytes; used by freeze tests.
  std::uint64_t content_hash() const;

 private:
  std::vector<std::pair<std::string, TensorT<T>>> entries_;
};

// One graph leaf per parameter, shared across every forward in that graph so
// gradients accumulate per parameter.
struct Binding {
  std::vector<int> ids;
};

template <typename T>
class VisualGeneratorT {
 public:
  VisualGeneratorT() = default;
  VisualGeneratorT(const ArchConfig& arch, Rng& rng);

  Binding bind(GraphT<T>& g) const;
  // (N,Z) latents -> (N,3,S,S) images in [-1,1].
  int forward(GraphT<T>& g, const Binding& b, int z) const;

  ParameterSetT<T>& params() { return params_; }
  const ParameterSetT<T>& params() const { return params_; }
  const ArchConfig& arch() const { return arch_; }

 private:
  ArchConfig arch_;
  ParameterSetT<T> params_;
};

template <typename T>
class VisualDiscriminatorT {
 public:
  VisualDiscriminatorT() = default;
  VisualDiscriminatorT(const ArchConfig& arch, Rng& rng);

  Binding bind(GraphT<T>& g) const;
  // (N,3,S,S) -> (N) unbounded critic scores.
  int forward(GraphT<T>& g, const Binding& b, int x) const;
  // Also exposes the pooled penultimate features (N,C_top).
  std::pair<int, int> forward_with_features(GraphT<T>& g, const Binding& b, int x) const;

  ParameterSetT<T>& params() { return params_; }
  const ParameterSetT<T>& params() const { return params_; }
  const ArchConfig& arch() const { return arch_; }

 private:
  ArchConfig arch_;
  ParameterSetT<T> params_;
};

template <typename T>
class LatentGeneratorT {
 public:
  LatentGeneratorT() = default;
  LatentGeneratorT(const ArchConfig& arch, Rng& rng);

  Binding bind(GraphT<T>& g) const;
  // (N,3,S,S) -> (N,Z).
  int forward(GraphT<T>& g, const Binding& b, int x) const;

  ParameterSetT<T>& params() { return params_; }
  const ParameterSetT<T>& params() const { return params_; }
  const ArchConfig& arch() const { return arch_; }

 private:
  ArchConfig arch_;
  ParameterSetT<T> params_;
};

template <typename T>
class LatentDiscriminatorT {
 public:
  LatentDiscriminatorT() = default;
  LatentDiscriminatorT(const ArchConfig& arch, Rng& rng);

  Binding bind(GraphT<T>& g) const;
  // (N,Z) -> (N) logits; probability = sigmoid(logit).
  int forward_logit(GraphT<T>& g, const Binding& b, int z) const;
  int forward(GraphT<T>& g, const Binding& b, int z) const;

  ParameterSetT<T>& params() { return params_; }
  const ParameterSetT<T>& params() const { return params_; }
  const ArchConfig& arch() const { return arch_; }

 private:
  ArchConfig arch_;
  ParameterSetT<T> params_;
};

// The four networks, deterministically initialized from one seed via
// independent named streams.
template <typename T>
struct AdganNetsT {
  VisualGeneratorT<T> gv;
  VisualDiscriminatorT<T> dv;
  LatentGeneratorT<T> gl;
  LatentDiscriminatorT<T> dl;

  static AdganNetsT init(const ArchConfig& arch, std::uint64_t seed);
};

using VisualGenerator = VisualGeneratorT<float>;
using VisualDiscriminator = VisualDiscriminatorT<float>;
using LatentGenerator = LatentGeneratorT<float>;
using LatentDiscriminator = LatentDiscriminatorT<float>;
using ParameterSet = ParameterSetT<float>;
using AdganNets = AdganNetsT<float>;

extern template class ParameterSetT<float>;
extern template class ParameterSetT<double>;
extern template class VisualGeneratorT<float>;
extern template class VisualGeneratorT<double>;
extern template class VisualDiscriminatorT<float>;
extern template class VisualDiscriminatorT<double>;
extern template class LatentGeneratorT<float>;
extern template class LatentGeneratorT<double>;
extern template class LatentDiscriminatorT<float>;
extern template class LatentDiscriminatorT<double>;
extern template struct AdganNetsT<float>;
extern template struct AdganNetsT<double>;

}  // namespace adgan
