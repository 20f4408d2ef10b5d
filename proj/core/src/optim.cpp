#include "adgan/optim.hpp"

#include <cmath>

#include "adgan/error.hpp"

namespace adgan {

template <typename T>
void AdamT<T>::step(ParameterSetT<T>& params, const std::vector<const TensorT<T>*>& grads) {
  if (grads.size() != params.size())
    throw ShapeError("adam: gradient count does not match parameter count");
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_.emplace_back(params.tensor(static_cast<int>(i)).shape, T(0));
      v_.emplace_back(params.tensor(static_cast<int>(i)).shape, T(0));
    }
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params.tensor(static_cast<int>(i));
    const auto& g = *grads[i];
    if (!g.same_shape(p)) throw ShapeError("adam: gradient shape mismatch at " +
                                           params.name(static_cast<int>(i)));
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::int64_t k = 0; k < p.numel(); ++k) {
      const double gk = static_cast<double>(g[k]);
      const double mk = beta1_ * static_cast<double>(m[k]) + (1.0 - beta1_) * gk;
      const double vk = beta2_ * static_cast<double>(v[k]) + (1.0 - beta2_) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double mhat = static_cast<double>(m[k]) / bc1;
      const double vhat = static_cast<double>(v[k]) / bc2;
      p[k] = static_cast<T>(static_cast<double>(p[k]) - lr_ * mhat / (std::sqrt(vhat) + epsilon_));
    }
  }
}

template <typename T>
void AdamT<T>::restore(std::vector<TensorT<T>> m, std::vector<TensorT<T>> v, std::int64_t t) {
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

template class AdamT<float>;
template class AdamT<double>;

}  // namespace adgan
