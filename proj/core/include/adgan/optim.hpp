#pragma once

#include <cstdint>
#include <vector>

#include "adgan/networks.hpp"
#include "adgan/tensor.hpp"

namespace adgan {

// Adam with bias correction. Moments are lazily sized to the parameter set on
// the first step and are part of the checkpointed training state.
template <typename T>
class AdamT {
 public:
  AdamT() = default;
  AdamT(double lr, double beta1, double beta2, double epsilon = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

  void step(ParameterSetT<T>& params, const std::vector<const TensorT<T>*>& grads);

  std::int64_t t() const { return t_; }
  std::size_t moment_count() const { return m_.size(); }
  TensorT<T>& m(int i) { return m_[static_cast<std::size_t>(i)]; }
  TensorT<T>& v(int i) { return v_[static_cast<std::size_t>(i)]; }
  const TensorT<T>& m(int i) const { return m_[static_cast<std::size_t>(i)]; }
  const TensorT<T>& v(int i) const { return v_[static_cast<std::size_t>(i)]; }

  // Checkpoint restore: moments first (sized like params), then the counter.
  void restore(std::vector<TensorT<T>> m, std::vector<TensorT<T>> v, std::int64_t t);
  // Exposes how many optimizer updates were applied; tests instrument this.
  std::int64_t update_count() const { return t_; }

  double lr() const { return lr_; }

 private:
  double lr_ = 1e-4;
  double beta1_ = 0.0;
  double beta2_ = 0.9;
  double epsilon_ = 1e-8;
  std::int64_t t_ = 0;
  std::vector<TensorT<T>> m_;
  std::vector<TensorT<T>> v_;
};

using Adam = AdamT<float>;

extern template class AdamT<float>;
extern template class AdamT<double>;

}  // namespace adgan
