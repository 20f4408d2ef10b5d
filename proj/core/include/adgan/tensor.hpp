#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace adgan {

// Dense row-major n-d array. Images use (N, C, H, W), vector batches (N, F),
// per-example scalars (N), reduced scalars (1).
template <typename T>
struct TensorT {
  std::vector<int> shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(std::vector<int> s) : shape(std::move(s)), data(count(shape)) {}
  TensorT(std::vector<int> s, T fill) : shape(std::move(s)), data(count(shape), fill) {}
  TensorT(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {}

  static std::int64_t count(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) n *= d;
    return n;
  }

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  T& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

  bool same_shape(const TensorT& o) const { return shape == o.shape; }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <typename T>
bool all_finite(const TensorT<T>& t);

// Thread-local recycling pool for large tensor buffers. Graph nodes allocate
// and release the same sizes every training iteration; reusing the storage
// avoids repeated mmap/zero-fill churn on multi-megabyte activations.
namespace pool {
template <typename T>
std::vector<T> take(std::int64_t n);
template <typename T>
void give(std::vector<T>&& buf);

extern template std::vector<float> take<float>(std::int64_t);
extern template std::vector<double> take<double>(std::int64_t);
extern template void give<float>(std::vector<float>&&);
extern template void give<double>(std::vector<double>&&);
}  // namespace pool

// Pool-backed construction for graph-internal values.
template <typename T>
TensorT<T> pooled_tensor(std::vector<int> shape) {
  TensorT<T> t;
  t.data = pool::take<T>(TensorT<T>::count(shape));
  t.shape = std::move(shape);
  return t;
}

template <typename T>
TensorT<T> pooled_tensor(std::vector<int> shape, T fill) {
  TensorT<T> t = pooled_tensor<T>(std::move(shape));
  std::fill(t.data.begin(), t.data.end(), fill);
  return t;
}

template <typename T>
void recycle(TensorT<T>&& t) {
  pool::give<T>(std::move(t.data));
}

std::string shape_str(const std::vector<int>& shape);

extern template struct TensorT<float>;
extern template struct TensorT<double>;
extern template bool all_finite(const TensorT<float>&);
extern template bool all_finite(const TensorT<double>&);

}  // namespace adgan
