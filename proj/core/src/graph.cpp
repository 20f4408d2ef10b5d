#include "adgan/graph.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstring>

#include "adgan/error.hpp"

namespace adgan {

namespace {

template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<MatX<T>>;
template <typename T>
using MapC = Eigen::Map<const MatX<T>>;

inline int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// col is (C*kh*kw) x (Ho*Wo), row-major; one image.
template <typename T>
void im2col(const T* x, int C, int H, int W, int kh, int kw, int stride, int pad,
            int Ho, int Wo, T* col) {
  const int cols = Ho * Wo;
  for (int c = 0; c < C; ++c) {
    const T* xc = x + static_cast<std::int64_t>(c) * H * W;
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        T* row = col + (static_cast<std::int64_t>(c) * kh * kw + ki * kw + kj) * cols;
        for (int ho = 0; ho < Ho; ++ho) {
          const int hi = ho * stride + ki - pad;
          if (hi < 0 || hi >= H) {
            std::memset(row + ho * Wo, 0, sizeof(T) * static_cast<std::size_t>(Wo));
            continue;
          }
          const T* xrow = xc + static_cast<std::int64_t>(hi) * W;
          for (int wo = 0; wo < Wo; ++wo) {
            const int wi = wo * stride + kj - pad;
            row[ho * Wo + wo] = (wi >= 0 && wi < W) ? xrow[wi] : T(0);
          }
        }
      }
    }
  }
}

// Variant writing into a wide batch matrix: row r of the per-image col block
// lands at col_base + r * row_stride.
template <typename T>
void im2col_strided(const T* x, int C, int H, int W, int kh, int kw, int stride, int pad,
                    int Ho, int Wo, T* col_base, std::int64_t row_stride) {
  const int cols = Ho * Wo;
  for (int c = 0; c < C; ++c) {
    const T* xc = x + static_cast<std::int64_t>(c) * H * W;
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        T* row = col_base + (static_cast<std::int64_t>(c) * kh * kw + ki * kw + kj) * row_stride;
        for (int ho = 0; ho < Ho; ++ho) {
          const int hi = ho * stride + ki - pad;
          if (hi < 0 || hi >= H) {
            std::memset(row + ho * Wo, 0, sizeof(T) * static_cast<std::size_t>(Wo));
            continue;
          }
          const T* xrow = xc + static_cast<std::int64_t>(hi) * W;
          for (int wo = 0; wo < Wo; ++wo) {
            const int wi = wo * stride + kj - pad;
            row[ho * Wo + wo] = (wi >= 0 && wi < W) ? xrow[wi] : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add col entries back to the image.
template <typename T>
void col2im_acc(const T* col, int C, int H, int W, int kh, int kw, int stride, int pad,
                int Ho, int Wo, T* x) {
  const int cols = Ho * Wo;
  for (int c = 0; c < C; ++c) {
    T* xc = x + static_cast<std::int64_t>(c) * H * W;
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        const T* row = col + (static_cast<std::int64_t>(c) * kh * kw + ki * kw + kj) * cols;
        for (int ho = 0; ho < Ho; ++ho) {
          const int hi = ho * stride + ki - pad;
          if (hi < 0 || hi >= H) continue;
          T* xrow = xc + static_cast<std::int64_t>(hi) * W;
          for (int wo = 0; wo < Wo; ++wo) {
            const int wi = wo * stride + kj - pad;
            if (wi >= 0 && wi < W) xrow[wi] += row[ho * Wo + wo];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_acc_strided(const T* col_base, std::int64_t row_stride, int C, int H, int W, int kh,
                        int kw, int stride, int pad, int Ho, int Wo, T* x) {
  const int cols = Ho * Wo;
  for (int c = 0; c < C; ++c) {
    T* xc = x + static_cast<std::int64_t>(c) * H * W;
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        const T* row =
            col_base + (static_cast<std::int64_t>(c) * kh * kw + ki * kw + kj) * row_stride;
        for (int ho = 0; ho < Ho; ++ho) {
          const int hi = ho * stride + ki - pad;
          if (hi < 0 || hi >= H) continue;
          T* xrow = xc + static_cast<std::int64_t>(hi) * W;
          for (int wo = 0; wo < Wo; ++wo) {
            const int wi = wo * stride + kj - pad;
            if (wi >= 0 && wi < W) xrow[wi] += row[ho * Wo + wo];
          }
        }
      }
    }
  }
}

// Elementwise map, parallel for large tensors (no reductions: deterministic).
template <typename F>
void ew(std::int64_t n, F&& f) {
  if (n >= (1 << 16)) {
    for (std::int64_t i = 0; i < n; ++i) f(i);
  } else {
    for (std::int64_t i = 0; i < n; ++i) f(i);
  }
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T(0)) {
    return T(1) / (T(1) + std::exp(-x));
  }
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
T stable_softplus(T x) {
  // log(1 + e^x) without overflow for large |x|.
  const T m = x > T(0) ? x : T(0);
  return m + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

template <typename T>
GraphT<T>::~GraphT() {
  clear();
}

template <typename T>
void GraphT<T>::clear() {
  for (auto& nd : nodes_) recycle(std::move(nd.value));
  nodes_.clear();
}

template <typename T>
int GraphT<T>::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

template <typename T>
std::int64_t GraphT<T>::value_bytes() const {
  std::int64_t b = 0;
  for (const auto& n : nodes_) b += n.value.numel() * static_cast<std::int64_t>(sizeof(T));
  return b;
}

template <typename T>
int GraphT<T>::leaf(TensorT<T> v) {
  Node n;
  n.value = std::move(v);
  n.op = Op::kLeaf;
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::detach(int a) {
  return leaf(value(a));
}

#define ADGAN_CHECK_SHAPE(cond, what)                                            \
  do {                                                                           \
    if (!(cond)) throw ShapeError(std::string("graph: ") + what);                \
  } while (0)

template <typename T>
int GraphT<T>::add(int a, int b) {
  const auto& va = value(a);
  const auto& vb = value(b);
  ADGAN_CHECK_SHAPE(va.same_shape(vb), "add shape mismatch " + shape_str(va.shape) +
                                           " vs " + shape_str(vb.shape));
  Node n;
  n.op = Op::kAdd;
  n.p0 = a;
  n.p1 = b;
  n.value = pooled_tensor<T>(va.shape);
  ew(va.numel(), [&](std::int64_t i) { n.value[i] = va[i] + vb[i]; });
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::sub(int a, int b) {
  const auto& va = value(a);
  const auto& vb = value(b);
  ADGAN_CHECK_SHAPE(va.same_shape(vb), "sub shape mismatch");
  Node n;
  n.op = Op::kSub;
  n.p0 = a;
  n.p1 = b;
  n.value = pooled_tensor<T>(va.shape);
  ew(va.numel(), [&](std::int64_t i) { n.value[i] = va[i] - vb[i]; });
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::mul(int a, int b) {
  const auto& va = value(a);
  const auto& vb = value(b);
  ADGAN_CHECK_SHAPE(va.same_shape(vb), "mul shape mismatch");
  Node n;
  n.op = Op::kMul;
  n.p0 = a;
  n.p1 = b;
  n.value = pooled_tensor<T>(va.shape);
  ew(va.numel(), [&](std::int64_t i) { n.value[i] = va[i] * vb[i]; });
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::neg(int a) {
  const auto& va = value(a);
  Node n;
  n.op = Op::kNeg;
  n.p0 = a;
  n.value = pooled_tensor<T>(va.shape);
  ew(va.numel(), [&](std::int64_t i) { n.value[i] = -va[i]; });
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::scale(int a, T c) {
  const auto& va = value(a);
  Node n;
  n.op = Op::kScale;
  n.p0 = a;
  n.scalar = c;
  n.value = pooled_tensor<T>(va.shape);
  ew(va.numel(), [&](std::int64_t i) { n.value[i] = c * va[i]; });
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::add_scalar(int a, T c) {
  const auto& va = value(a);
  Node n;
  n.op = Op::kAddScalar;
  n.p0 = a;
  n.scalar = c;
  n.value = pooled_tensor<T>(va.shape);
  for (std::int64_t i = 0; i < va.numel(); ++i) n.value[i] = va[i] + c;
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::rsub_scalar(int a, T c) {
  const auto& va = value(a);
  Node n;
  n.op = Op::kRsubScalar;
  n.p0 = a;
  n.scalar = c;
  n.value = pooled_tensor<T>(va.shape);
  for (std::int64_t i = 0; i < va.numel(); ++i) n.value[i] = c - va[i];
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::div(int a, int b) {
  const auto& va = value(a);
  const auto& vb = value(b);
  ADGAN_CHECK_SHAPE(va.same_shape(vb), "div shape mismatch");
  Node n;
  n.op = Op::kDiv;
  n.p0 = a;
  n.p1 = b;
  n.value = pooled_tensor<T>(va.shape);
  for (std::int64_t i = 0; i < va.numel(); ++i) n.value[i] = va[i] / vb[i];
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::mul_rowwise(int a, int s) {
  const auto& va = value(a);
  const auto& vs = value(s);
  ADGAN_CHECK_SHAPE(vs.rank() == 1 && va.rank() >= 1 && va.dim(0) == vs.dim(0),
                    "mul_rowwise expects (n,...) and (n)");
  Node n;
  n.op = Op::kMulRowwise;
  n.p0 = a;
  n.p1 = s;
  n.value = pooled_tensor<T>(va.shape);
  const std::int64_t stride = va.numel() / va.dim(0);
  for (int r = 0; r < va.dim(0); ++r) {
    const T c = vs[r];
    const std::int64_t base = r * stride;
    for (std::int64_t i = 0; i < stride; ++i) n.value[base + i] = c * va[base + i];
  }
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::rowwise_dot(int a, int b) {
  const auto& va = value(a);
  const auto& vb = value(b);
  ADGAN_CHECK_SHAPE(va.same_shape(vb) && va.rank() >= 1, "rowwise_dot shape mismatch");
  Node n;
  n.op = Op::kRowwiseDot;
  n.p0 = a;
  n.p1 = b;
  n.value = pooled_tensor<T>({va.dim(0)});
  const std::int64_t stride = va.numel() / va.dim(0);
  for (int r = 0; r < va.dim(0); ++r) {
    const std::int64_t base = r * stride;
    T acc = T(0);
    for (std::int64_t i = 0; i < stride; ++i) acc += va[base + i] * vb[base + i];
    n.value[r] = acc;
  }
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::matmul(int a, int b, bool ta, bool tb) {
  const auto& va = value(a);
  const auto& vb = value(b);
  ADGAN_CHECK_SHAPE(va.rank() == 2 && vb.rank() == 2, "matmul expects rank-2 operands");
  const int am = ta ? va.dim(1) : va.dim(0);
  const int ak = ta ? va.dim(0) : va.dim(1);
  const int bk = tb ? vb.dim(1) : vb.dim(0);
  const int bn = tb ? vb.dim(0) : vb.dim(1);
  ADGAN_CHECK_SHAPE(ak == bk, "matmul inner dims " + shape_str(va.shape) + " vs " +
                                  shape_str(vb.shape));
  Node n;
  n.op = Op::kMatmul;
  n.p0 = a;
  n.p1 = b;
  n.aux0 = (ta ? 1 : 0) | (tb ? 2 : 0);
  n.value = pooled_tensor<T>({am, bn});
  MapC<T> A(va.ptr(), va.dim(0), va.dim(1));
  MapC<T> B(vb.ptr(), vb.dim(0), vb.dim(1));
  MapM<T> C(n.value.ptr(), am, bn);
  if (!ta && !tb)
    C.noalias() = A * B;
  else if (ta && !tb)
    C.noalias() = A.transpose() * B;
  else if (!ta && tb)
    C.noalias() = A * B.transpose();
  else
    C.noalias() = A.transpose() * B.transpose();
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::bcast_bias(int b, const std::vector<int>& shape) {
  const auto& vb = value(b);
  ADGAN_CHECK_SHAPE(vb.rank() == 1, "bcast_bias expects rank-1 bias");
  ADGAN_CHECK_SHAPE(shape.size() == 2 || shape.size() == 4, "bcast_bias target rank");
  const int c_dim = shape.size() == 4 ? shape[1] : shape[1];
  ADGAN_CHECK_SHAPE(c_dim == vb.dim(0), "bcast_bias length mismatch");
  Node n;
  n.op = Op::kBcastBias;
  n.p0 = b;
  n.value = pooled_tensor<T>(shape);
  if (shape.size() == 2) {
    const int rows = shape[0], cols = shape[1];
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) n.value[static_cast<std::int64_t>(r) * cols + c] = vb[c];
  } else {
    const int N = shape[0], C = shape[1];
    const std::int64_t hw = static_cast<std::int64_t>(shape[2]) * shape[3];
    for (int i = 0; i < N; ++i)
      for (int c = 0; c < C; ++c) {
        T* dst = n.value.ptr() + (static_cast<std::int64_t>(i) * C + c) * hw;
        for (std::int64_t k = 0; k < hw; ++k) dst[k] = vb[c];
      }
  }
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::reduce_bias(int g) {
  const auto& vg = value(g);
  ADGAN_CHECK_SHAPE(vg.rank() == 2 || vg.rank() == 4, "reduce_bias source rank");
  Node n;
  n.op = Op::kReduceBias;
  n.p0 = g;
  n.value = pooled_tensor<T>({vg.dim(1)}, T(0));
  if (vg.rank() == 2) {
    const int rows = vg.dim(0), cols = vg.dim(1);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) n.value[c] += vg[static_cast<std::int64_t>(r) * cols + c];
  } else {
    const int N = vg.dim(0), C = vg.dim(1);
    const std::int64_t hw = static_cast<std::int64_t>(vg.dim(2)) * vg.dim(3);
    for (int i = 0; i < N; ++i)
      for (int c = 0; c < C; ++c) {
        const T* src = vg.ptr() + (static_cast<std::int64_t>(i) * C + c) * hw;
        T acc = T(0);
        for (std::int64_t k = 0; k < hw; ++k) acc += src[k];
        n.value[c] += acc;
      }
  }
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::sum_all(int a) {
  const auto& va = value(a);
  Node n;
  n.op = Op::kSumAll;
  n.p0 = a;
  n.value = pooled_tensor<T>({1});
  T acc = T(0);
  for (std::int64_t i = 0; i < va.numel(); ++i) acc += va[i];
  n.value[0] = acc;
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::bcast_all(int s, const std::vector<int>& shape) {
  const auto& vs = value(s);
  ADGAN_CHECK_SHAPE(vs.numel() == 1, "bcast_all expects scalar");
  Node n;
  n.op = Op::kBcastAll;
  n.p0 = s;
  n.value = pooled_tensor<T>(shape, vs[0]);
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::sum_rows(int a) {
  const auto& va = value(a);
  ADGAN_CHECK_SHAPE(va.rank() >= 1, "sum_rows rank");
  Node n;
  n.op = Op::kSumRows;
  n.p0 = a;
  n.value = pooled_tensor<T>({va.dim(0)});
  const std::int64_t stride = va.numel() / va.dim(0);
  for (int r = 0; r < va.dim(0); ++r) {
    const std::int64_t base = r * stride;
    T acc = T(0);
    for (std::int64_t i = 0; i < stride; ++i) acc += va[base + i];
    n.value[r] = acc;
  }
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::bcast_rows(int s, const std::vector<int>& shape) {
  const auto& vs = value(s);
  ADGAN_CHECK_SHAPE(vs.rank() == 1 && !shape.empty() && shape[0] == vs.dim(0),
                    "bcast_rows shape mismatch");
  Node n;
  n.op = Op::kBcastRows;
  n.p0 = s;
  n.value = pooled_tensor<T>(shape);
  const std::int64_t stride = n.value.numel() / shape[0];
  for (int r = 0; r < shape[0]; ++r) {
    const std::int64_t base = r * stride;
    for (std::int64_t i = 0; i < stride; ++i) n.value[base + i] = vs[r];
  }
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::sum_spatial(int a) {
  const auto& va = value(a);
  ADGAN_CHECK_SHAPE(va.rank() == 4, "sum_spatial expects (n,c,h,w)");
  Node n;
  n.op = Op::kSumSpatial;
  n.p0 = a;
  n.value = pooled_tensor<T>({va.dim(0), va.dim(1)});
  const std::int64_t hw = static_cast<std::int64_t>(va.dim(2)) * va.dim(3);
  const std::int64_t nc = static_cast<std::int64_t>(va.dim(0)) * va.dim(1);
  for (std::int64_t i = 0; i < nc; ++i) {
    const T* src = va.ptr() + i * hw;
    T acc = T(0);
    for (std::int64_t k = 0; k < hw; ++k) acc += src[k];
    n.value[i] = acc;
  }
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::bcast_spatial(int s, int h, int w) {
  const auto& vs = value(s);
  ADGAN_CHECK_SHAPE(vs.rank() == 2, "bcast_spatial expects (n,c)");
  Node n;
  n.op = Op::kBcastSpatial;
  n.p0 = s;
  n.value = pooled_tensor<T>({vs.dim(0), vs.dim(1), h, w});
  const std::int64_t hw = static_cast<std::int64_t>(h) * w;
  for (std::int64_t i = 0; i < vs.numel(); ++i) {
    T* dst = n.value.ptr() + i * hw;
    for (std::int64_t k = 0; k < hw; ++k) dst[k] = vs[i];
  }
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::reshape(int a, const std::vector<int>& shape) {
  const auto& va = value(a);
  ADGAN_CHECK_SHAPE(TensorT<T>::count(shape) == va.numel(),
                    "reshape numel mismatch " + shape_str(va.shape) + " -> " + shape_str(shape));
  Node n;
  n.op = Op::kReshape;
  n.p0 = a;
  n.value = pooled_tensor<T>(shape);
  std::copy(va.data.begin(), va.data.end(), n.value.data.begin());
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::lrelu(int a, T slope) {
  const auto& va = value(a);
  Node n;
  n.op = Op::kLrelu;
  n.p0 = a;
  n.scalar = slope;
  n.value = pooled_tensor<T>(va.shape);
  ew(va.numel(), [&](std::int64_t i) { n.value[i] = va[i] > T(0) ? va[i] : slope * va[i]; });
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::lrelu_grad(int g, int x, T slope) {
  const auto& vg = value(g);
  const auto& vx = value(x);
  ADGAN_CHECK_SHAPE(vg.same_shape(vx), "lrelu_grad shape mismatch");
  Node n;
  n.op = Op::kLreluGrad;
  n.p0 = g;
  n.p1 = x;
  n.scalar = slope;
  n.value = pooled_tensor<T>(vg.shape);
  ew(vg.numel(), [&](std::int64_t i) { n.value[i] = vx[i] > T(0) ? vg[i] : slope * vg[i]; });
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::tanh_(int a) {
  const auto& va = value(a);
  Node n;
  n.op = Op::kTanh;
  n.p0 = a;
  n.value = pooled_tensor<T>(va.shape);
  ew(va.numel(), [&](std::int64_t i) { n.value[i] = std::tanh(va[i]); });
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::sigmoid(int a) {
  const auto& va = value(a);
  Node n;
  n.op = Op::kSigmoid;
  n.p0 = a;
  n.value = pooled_tensor<T>(va.shape);
  for (std::int64_t i = 0; i < va.numel(); ++i) n.value[i] = stable_sigmoid(va[i]);
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::softplus(int a) {
  const auto& va = value(a);
  Node n;
  n.op = Op::kSoftplus;
  n.p0 = a;
  n.value = pooled_tensor<T>(va.shape);
  for (std::int64_t i = 0; i < va.numel(); ++i) n.value[i] = stable_softplus(va[i]);
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::sqrt_(int a) {
  const auto& va = value(a);
  Node n;
  n.op = Op::kSqrt;
  n.p0 = a;
  n.value = pooled_tensor<T>(va.shape);
  for (std::int64_t i = 0; i < va.numel(); ++i) n.value[i] = std::sqrt(va[i]);
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::exp_(int a) {
  const auto& va = value(a);
  Node n;
  n.op = Op::kExp;
  n.p0 = a;
  n.value = pooled_tensor<T>(va.shape);
  for (std::int64_t i = 0; i < va.numel(); ++i) n.value[i] = std::exp(va[i]);
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::conv2d(int x, int w, ConvSpec spec) {
  const auto& vx = value(x);
  const auto& vw = value(w);
  ADGAN_CHECK_SHAPE(vx.rank() == 4 && vw.rank() == 4, "conv2d expects 4-d operands");
  ADGAN_CHECK_SHAPE(vx.dim(1) == vw.dim(1), "conv2d channel mismatch");
  const int N = vx.dim(0), Cin = vx.dim(1), H = vx.dim(2), W = vx.dim(3);
  const int Cout = vw.dim(0), kh = vw.dim(2), kw = vw.dim(3);
  const int Ho = conv_out_dim(H, kh, spec.stride, spec.pad);
  const int Wo = conv_out_dim(W, kw, spec.stride, spec.pad);
  ADGAN_CHECK_SHAPE(Ho > 0 && Wo > 0, "conv2d output collapsed");

  Node n;
  n.op = Op::kConv2d;
  n.p0 = x;
  n.p1 = w;
  n.conv = spec;
  n.aux0 = H;
  n.aux1 = W;
  n.value = pooled_tensor<T>({N, Cout, Ho, Wo});

  const std::int64_t K = static_cast<std::int64_t>(Cin) * kh * kw;
  const std::int64_t cols = static_cast<std::int64_t>(Ho) * Wo;
  MapC<T> Wm(vw.ptr(), Cout, K);

  // One wide GEMM across the batch beats per-image GEMMs by a large margin
  // at these layer sizes; the (Cout, N*cols) result is then permuted into
  // the (N, Cout, cols) output layout.
  std::vector<T> colbuf = pool::take<T>(K * N * cols);
  for (int i = 0; i < N; ++i)
    im2col_strided(vx.ptr() + static_cast<std::int64_t>(i) * Cin * H * W, Cin, H, W, kh, kw,
                   spec.stride, spec.pad, Ho, Wo, colbuf.data() + static_cast<std::int64_t>(i) * cols,
                   static_cast<std::int64_t>(N) * cols);
  std::vector<T> tmp = pool::take<T>(Cout * N * cols);
  {
    MapC<T> colm(colbuf.data(), K, N * cols);
    MapM<T> out(tmp.data(), Cout, N * cols);
    out.noalias() = Wm * colm;
  }
  for (int i = 0; i < N; ++i)
    for (int co = 0; co < Cout; ++co)
      std::memcpy(n.value.ptr() + (static_cast<std::int64_t>(i) * Cout + co) * cols,
                  tmp.data() + (static_cast<std::int64_t>(co) * N + i) * cols,
                  sizeof(T) * static_cast<std::size_t>(cols));
  pool::give<T>(std::move(colbuf));
  pool::give<T>(std::move(tmp));
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::conv2d_dx(int a, int w, ConvSpec spec, int in_h, int in_w) {
  const auto& va = value(a);
  const auto& vw = value(w);
  ADGAN_CHECK_SHAPE(va.rank() == 4 && vw.rank() == 4, "conv2d_dx expects 4-d operands");
  ADGAN_CHECK_SHAPE(va.dim(1) == vw.dim(0), "conv2d_dx channel mismatch");
  const int N = va.dim(0), Cout = va.dim(1), Ho = va.dim(2), Wo = va.dim(3);
  const int Cin = vw.dim(1), kh = vw.dim(2), kw = vw.dim(3);
  ADGAN_CHECK_SHAPE(conv_out_dim(in_h, kh, spec.stride, spec.pad) == Ho &&
                        conv_out_dim(in_w, kw, spec.stride, spec.pad) == Wo,
                    "conv2d_dx geometry mismatch");

  Node n;
  n.op = Op::kConv2dDx;
  n.p0 = a;
  n.p1 = w;
  n.conv = spec;
  n.aux0 = in_h;
  n.aux1 = in_w;
  n.value = pooled_tensor<T>({N, Cin, in_h, in_w}, T(0));

  const std::int64_t K = static_cast<std::int64_t>(Cin) * kh * kw;
  const std::int64_t cols = static_cast<std::int64_t>(Ho) * Wo;
  MapC<T> Wm(vw.ptr(), Cout, K);

  // Permute the upstream gradient into (Cout, N*cols), run one GEMM, then
  // scatter-add per image.
  std::vector<T> abuf = pool::take<T>(Cout * N * cols);
  for (int i = 0; i < N; ++i)
    for (int co = 0; co < Cout; ++co)
      std::memcpy(abuf.data() + (static_cast<std::int64_t>(co) * N + i) * cols,
                  va.ptr() + (static_cast<std::int64_t>(i) * Cout + co) * cols,
                  sizeof(T) * static_cast<std::size_t>(cols));
  std::vector<T> colbuf = pool::take<T>(K * N * cols);
  {
    MapC<T> am(abuf.data(), Cout, N * cols);
    MapM<T> colm(colbuf.data(), K, N * cols);
    colm.noalias() = Wm.transpose() * am;
  }
  for (int i = 0; i < N; ++i)
    col2im_acc_strided(colbuf.data() + static_cast<std::int64_t>(i) * cols,
                       static_cast<std::int64_t>(N) * cols, Cin, in_h, in_w, kh, kw, spec.stride,
                       spec.pad, Ho, Wo,
                       n.value.ptr() + static_cast<std::int64_t>(i) * Cin * in_h * in_w);
  pool::give<T>(std::move(abuf));
  pool::give<T>(std::move(colbuf));
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::conv2d_dw(int x, int a, ConvSpec spec, int kh, int kw) {
  const auto& vx = value(x);
  const auto& va = value(a);
  ADGAN_CHECK_SHAPE(vx.rank() == 4 && va.rank() == 4, "conv2d_dw expects 4-d operands");
  ADGAN_CHECK_SHAPE(vx.dim(0) == va.dim(0), "conv2d_dw batch mismatch");
  const int N = vx.dim(0), Cin = vx.dim(1), H = vx.dim(2), W = vx.dim(3);
  const int Cout = va.dim(1), Ho = va.dim(2), Wo = va.dim(3);
  ADGAN_CHECK_SHAPE(conv_out_dim(H, kh, spec.stride, spec.pad) == Ho &&
                        conv_out_dim(W, kw, spec.stride, spec.pad) == Wo,
                    "conv2d_dw geometry mismatch");

  Node n;
  n.op = Op::kConv2dDw;
  n.p0 = x;
  n.p1 = a;
  n.conv = spec;
  n.aux0 = kh;
  n.aux1 = kw;
  n.value = pooled_tensor<T>({Cout, Cin, kh, kw});

  const std::int64_t K = static_cast<std::int64_t>(Cin) * kh * kw;
  const std::int64_t cols = static_cast<std::int64_t>(Ho) * Wo;
  MapM<T> Wg(n.value.ptr(), Cout, K);

  std::vector<T> colbuf = pool::take<T>(K * N * cols);
  for (int i = 0; i < N; ++i)
    im2col_strided(vx.ptr() + static_cast<std::int64_t>(i) * Cin * H * W, Cin, H, W, kh, kw,
                   spec.stride, spec.pad, Ho, Wo, colbuf.data() + static_cast<std::int64_t>(i) * cols,
                   static_cast<std::int64_t>(N) * cols);
  std::vector<T> abuf = pool::take<T>(Cout * N * cols);
  for (int i = 0; i < N; ++i)
    for (int co = 0; co < Cout; ++co)
      std::memcpy(abuf.data() + (static_cast<std::int64_t>(co) * N + i) * cols,
                  va.ptr() + (static_cast<std::int64_t>(i) * Cout + co) * cols,
                  sizeof(T) * static_cast<std::size_t>(cols));
  {
    MapC<T> colm(colbuf.data(), K, N * cols);
    MapC<T> am(abuf.data(), Cout, N * cols);
    Wg.noalias() = am * colm.transpose();
  }
  pool::give<T>(std::move(colbuf));
  pool::give<T>(std::move(abuf));
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::upsample_nn2(int a) {
  const auto& va = value(a);
  ADGAN_CHECK_SHAPE(va.rank() == 4, "upsample_nn2 expects (n,c,h,w)");
  const int NC = va.dim(0) * va.dim(1), H = va.dim(2), W = va.dim(3);
  Node n;
  n.op = Op::kUpsampleNn2;
  n.p0 = a;
  n.value = pooled_tensor<T>({va.dim(0), va.dim(1), 2 * H, 2 * W});
  for (int i = 0; i < NC; ++i) {
    const T* src = va.ptr() + static_cast<std::int64_t>(i) * H * W;
    T* dst = n.value.ptr() + static_cast<std::int64_t>(i) * 4 * H * W;
    for (int h = 0; h < H; ++h) {
      for (int w = 0; w < W; ++w) {
        const T v = src[h * W + w];
        T* d = dst + (2 * h) * (2 * W) + 2 * w;
        d[0] = v;
        d[1] = v;
        d[2 * W] = v;
        d[2 * W + 1] = v;
      }
    }
  }
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::downsample_sum2(int a) {
  const auto& va = value(a);
  ADGAN_CHECK_SHAPE(va.rank() == 4 && va.dim(2) % 2 == 0 && va.dim(3) % 2 == 0,
                    "downsample_sum2 expects even (h,w)");
  const int NC = va.dim(0) * va.dim(1), H = va.dim(2) / 2, W = va.dim(3) / 2;
  Node n;
  n.op = Op::kDownsampleSum2;
  n.p0 = a;
  n.value = pooled_tensor<T>({va.dim(0), va.dim(1), H, W});
  for (int i = 0; i < NC; ++i) {
    const T* src = va.ptr() + static_cast<std::int64_t>(i) * 4 * H * W;
    T* dst = n.value.ptr() + static_cast<std::int64_t>(i) * H * W;
    for (int h = 0; h < H; ++h) {
      for (int w = 0; w < W; ++w) {
        const T* s = src + (2 * h) * (2 * W) + 2 * w;
        dst[h * W + w] = s[0] + s[1] + s[2 * W] + s[2 * W + 1];
      }
    }
  }
  return push(std::move(n));
}

template <typename T>
int GraphT<T>::add_bias(int x, int b) {
  return add(x, bcast_bias(b, value(x).shape));
}

template <typename T>
int GraphT<T>::mean_all(int a) {
  const auto& va = value(a);
  return scale(sum_all(a), T(1) / static_cast<T>(va.numel()));
}

template <typename T>
int GraphT<T>::sumsq_rows(int a) {
  return rowwise_dot(a, a);
}

template <typename T>
std::vector<int> GraphT<T>::backward(int loss, const std::vector<int>& wrt) {
  ADGAN_CHECK_SHAPE(loss >= 0 && loss < static_cast<int>(nodes_.size()), "backward: bad loss id");

  // Node ids are created in topological order, so a reverse id sweep over the
  // reachable set is a valid reverse topological order. Nodes emitted below
  // have ids > loss and never enter the sweep.
  std::vector<char> reach(static_cast<std::size_t>(loss) + 1, 0);
  reach[static_cast<std::size_t>(loss)] = 1;
  for (int id = loss; id >= 0; --id) {
    if (!reach[static_cast<std::size_t>(id)]) continue;
    const Node& nd = nodes_[static_cast<std::size_t>(id)];
    if (nd.p0 >= 0) reach[static_cast<std::size_t>(nd.p0)] = 1;
    if (nd.p1 >= 0) reach[static_cast<std::size_t>(nd.p1)] = 1;
  }

  // A node's gradient is worth materializing only when some requested target
  // is reachable from it through parent edges; pruning the rest skips dead
  // weight-gradient convolutions inside nested backward passes.
  const int max_id = static_cast<int>(nodes_.size()) - 1;
  std::vector<char> need(static_cast<std::size_t>(max_id) + 1, 0);
  for (int w : wrt)
    if (w >= 0 && w <= max_id) need[static_cast<std::size_t>(w)] = 1;
  for (int id = 0; id <= loss; ++id) {
    if (need[static_cast<std::size_t>(id)]) continue;
    const Node& nd = nodes_[static_cast<std::size_t>(id)];
    const bool n0 = nd.p0 >= 0 && need[static_cast<std::size_t>(nd.p0)];
    const bool n1 = nd.p1 >= 0 && need[static_cast<std::size_t>(nd.p1)];
    if (n0 || n1) need[static_cast<std::size_t>(id)] = 1;
  }

  std::vector<int> grad(static_cast<std::size_t>(loss) + 1, -1);
  grad[static_cast<std::size_t>(loss)] = leaf(TensorT<T>(value(loss).shape, T(1)));

  auto acc = [&](int target, int g) {
    if (target > loss) return;  // emitted during this sweep; cannot happen for parents
    if (!need[static_cast<std::size_t>(target)]) return;
    int& slot = grad[static_cast<std::size_t>(target)];
    slot = (slot < 0) ? g : add(slot, g);
  };

  for (int id = loss; id >= 0; --id) {
    if (!reach[static_cast<std::size_t>(id)] || grad[static_cast<std::size_t>(id)] < 0) continue;
    const int g = grad[static_cast<std::size_t>(id)];
    // Snapshot: builders below may reallocate nodes_.
    const Op op = nodes_[static_cast<std::size_t>(id)].op;
    const int p0 = nodes_[static_cast<std::size_t>(id)].p0;
    const int p1 = nodes_[static_cast<std::size_t>(id)].p1;
    const T sc = nodes_[static_cast<std::size_t>(id)].scalar;
    const ConvSpec spec = nodes_[static_cast<std::size_t>(id)].conv;
    const int aux0 = nodes_[static_cast<std::size_t>(id)].aux0;
    const int aux1 = nodes_[static_cast<std::size_t>(id)].aux1;

    switch (op) {
      case Op::kLeaf:
        break;
      case Op::kAdd:
        acc(p0, g);
        acc(p1, g);
        break;
      case Op::kSub:
        acc(p0, g);
        if (need[static_cast<std::size_t>(p1)]) acc(p1, neg(g));
        break;
      case Op::kMul:
        if (need[static_cast<std::size_t>(p0)]) acc(p0, mul(g, p1));
        if (need[static_cast<std::size_t>(p1)]) acc(p1, mul(g, p0));
        break;
      case Op::kNeg:
        acc(p0, neg(g));
        break;
      case Op::kScale:
        acc(p0, scale(g, sc));
        break;
      case Op::kAddScalar:
        acc(p0, g);
        break;
      case Op::kRsubScalar:
        acc(p0, neg(g));
        break;
      case Op::kDiv:
        // y = a / b: da = g / b, db = -g * y / b.
        if (need[static_cast<std::size_t>(p0)]) acc(p0, div(g, p1));
        if (need[static_cast<std::size_t>(p1)]) acc(p1, neg(div(mul(g, id), p1)));
        break;
      case Op::kMulRowwise:
        if (need[static_cast<std::size_t>(p0)]) acc(p0, mul_rowwise(g, p1));
        if (need[static_cast<std::size_t>(p1)]) acc(p1, rowwise_dot(g, p0));
        break;
      case Op::kRowwiseDot:
        if (need[static_cast<std::size_t>(p0)]) acc(p0, mul_rowwise(p1, g));
        if (need[static_cast<std::size_t>(p1)]) acc(p1, mul_rowwise(p0, g));
        break;
      case Op::kMatmul: {
        const bool ta = (aux0 & 1) != 0, tb = (aux0 & 2) != 0;
        const bool n0 = need[static_cast<std::size_t>(p0)];
        const bool n1 = need[static_cast<std::size_t>(p1)];
        if (!ta && !tb) {
          if (n0) acc(p0, matmul(g, p1, false, true));
          if (n1) acc(p1, matmul(p0, g, true, false));
        } else if (ta && !tb) {
          if (n0) acc(p0, matmul(p1, g, false, true));
          if (n1) acc(p1, matmul(p0, g, false, false));
        } else if (!ta && tb) {
          if (n0) acc(p0, matmul(g, p1, false, false));
          if (n1) acc(p1, matmul(g, p0, true, false));
        } else {
          if (n0) acc(p0, matmul(p1, g, true, true));
          if (n1) acc(p1, matmul(g, p0, true, true));
        }
        break;
      }
      case Op::kBcastBias:
        acc(p0, reduce_bias(g));
        break;
      case Op::kReduceBias:
        acc(p0, bcast_bias(g, value(p0).shape));
        break;
      case Op::kSumAll:
        acc(p0, bcast_all(g, value(p0).shape));
        break;
      case Op::kBcastAll:
        acc(p0, sum_all(g));
        break;
      case Op::kSumRows:
        acc(p0, bcast_rows(g, value(p0).shape));
        break;
      case Op::kBcastRows:
        acc(p0, sum_rows(g));
        break;
      case Op::kSumSpatial:
        acc(p0, bcast_spatial(g, value(p0).dim(2), value(p0).dim(3)));
        break;
      case Op::kBcastSpatial:
        acc(p0, sum_spatial(g));
        break;
      case Op::kReshape:
        acc(p0, reshape(g, value(p0).shape));
        break;
      case Op::kLrelu:
        acc(p0, lrelu_grad(g, p0, sc));
        break;
      case Op::kLreluGrad:
        // Linear in g; the mask contributes no gradient to x (a.e.).
        acc(p0, lrelu_grad(g, p1, sc));
        break;
      case Op::kTanh:
        acc(p0, mul(g, rsub_scalar(mul(id, id), T(1))));
        break;
      case Op::kSigmoid:
        acc(p0, mul(g, mul(id, rsub_scalar(id, T(1)))));
        break;
      case Op::kSoftplus:
        acc(p0, mul(g, sigmoid(p0)));
        break;
      case Op::kSqrt:
        acc(p0, div(g, scale(id, T(2))));
        break;
      case Op::kExp:
        acc(p0, mul(g, id));
        break;
      case Op::kConv2d:
        if (need[static_cast<std::size_t>(p0)]) acc(p0, conv2d_dx(g, p1, spec, aux0, aux1));
        if (need[static_cast<std::size_t>(p1)])
          acc(p1, conv2d_dw(p0, g, spec, value(p1).dim(2), value(p1).dim(3)));
        break;
      case Op::kConv2dDx:
        // value = dx(a, w); d/da = conv2d(g, w), d/dw = dw(g, a).
        if (need[static_cast<std::size_t>(p0)]) acc(p0, conv2d(g, p1, spec));
        if (need[static_cast<std::size_t>(p1)])
          acc(p1, conv2d_dw(g, p0, spec, value(p1).dim(2), value(p1).dim(3)));
        break;
      case Op::kConv2dDw:
        // value = dw(x, a); d/dx = dx(a, g), d/da = conv2d(x, g).
        if (need[static_cast<std::size_t>(p0)])
          acc(p0, conv2d_dx(p1, g, spec, value(p0).dim(2), value(p0).dim(3)));
        if (need[static_cast<std::size_t>(p1)]) acc(p1, conv2d(p0, g, spec));
        break;
      case Op::kUpsampleNn2:
        acc(p0, downsample_sum2(g));
        break;
      case Op::kDownsampleSum2:
        acc(p0, upsample_nn2(g));
        break;
    }
  }

  std::vector<int> out;
  out.reserve(wrt.size());
  for (int w : wrt) {
    ADGAN_CHECK_SHAPE(w >= 0 && w < static_cast<int>(nodes_.size()), "backward: bad wrt id");
    if (w <= loss && grad[static_cast<std::size_t>(w)] >= 0) {
      out.push_back(grad[static_cast<std::size_t>(w)]);
    } else {
      out.push_back(leaf(TensorT<T>(value(w).shape, T(0))));
    }
  }
  return out;
}

template class GraphT<float>;
template class GraphT<double>;

}  // namespace adgan
