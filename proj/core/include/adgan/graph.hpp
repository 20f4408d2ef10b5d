#pragma once

#include <cstdint>
#include <vector>

#include "adgan/tensor.hpp"

namespace adgan {

// Reverse-mode autodiff tape with eager evaluation. backward() emits its
// vector-Jacobian products as ordinary graph nodes, so gradients are
// themselves differentiable; the critic's gradient penalty backpropagates
// through a backward pass and needs exactly that.
//
// Every op's VJP is expressed in terms of ops from this same set, which
// keeps the set closed under differentiation:
//   conv2d / conv2d_dx / conv2d_dw form a closed triple,
//   upsample_nn2 / downsample_sum2 and the reduce / broadcast ops form
//   closed pairs, and pointwise nonlinearities reference their own
//   forward outputs.
enum class Op : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kNeg,
  kScale,         // c * a
  kAddScalar,     // a + c
  kRsubScalar,    // c - a
  kDiv,
  kMulRowwise,    // a[n,...] * s[n]
  kRowwiseDot,    // sum_rest(a * b) -> (N)
  kMatmul,        // 2-d, transpose flags in attrs
  kBcastBias,     // b[c] -> (n,c,h,w)  or  b[f] -> (n,f)
  kReduceBias,    // adjoint of kBcastBias
  kSumAll,        // -> (1)
  kBcastAll,      // (1) -> shape
  kSumRows,       // (n,...) -> (n)
  kBcastRows,     // (n) -> (n,...)
  kSumSpatial,    // (n,c,h,w) -> (n,c)
  kBcastSpatial,  // (n,c) -> (n,c,h,w)
  kReshape,
  kLrelu,         // slope in scalar attr; slope 0 is relu
  kLreluGrad,     // g * (x > 0 ? 1 : slope); x carries no gradient
  kTanh,
  kSigmoid,
  kSoftplus,
  kSqrt,
  kExp,
  kConv2d,
  kConv2dDx,
  kConv2dDw,
  kUpsampleNn2,
  kDownsampleSum2,
};

struct ConvSpec {
  int stride = 1;
  int pad = 0;
};

template <typename T>
class GraphT {
 public:
  GraphT() = default;
  ~GraphT();
  GraphT(const GraphT&) = delete;
  GraphT& operator=(const GraphT&) = delete;

  // --- node builders (values are computed eagerly) ---
  int leaf(TensorT<T> v);
  // Copy of another node's value with the graph edge severed.
  int detach(int a);

  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int neg(int a);
  int scale(int a, T c);
  int add_scalar(int a, T c);
  int rsub_scalar(int a, T c);  // c - a
  int div(int a, int b);
  int mul_rowwise(int a, int s);
  int rowwise_dot(int a, int b);
  int matmul(int a, int b, bool ta = false, bool tb = false);
  int bcast_bias(int b, const std::vector<int>& shape);
  int reduce_bias(int g);
  int sum_all(int a);
  int bcast_all(int s, const std::vector<int>& shape);
  int sum_rows(int a);
  int bcast_rows(int s, const std::vector<int>& shape);
  int sum_spatial(int a);
  int bcast_spatial(int s, int h, int w);
  int reshape(int a, const std::vector<int>& shape);
  int lrelu(int a, T slope);
  int lrelu_grad(int g, int x, T slope);
  int tanh_(int a);
  int sigmoid(int a);
  int softplus(int a);
  int sqrt_(int a);
  int exp_(int a);
  int conv2d(int x, int w, ConvSpec spec);
  // dx of conv2d: a = upstream grad (N,Co,Ho,Wo), w = weights; in_h/in_w give
  // the input spatial size to recover.
  int conv2d_dx(int a, int w, ConvSpec spec, int in_h, int in_w);
  // dw of conv2d: x = input, a = upstream grad; kh/kw give the kernel size.
  int conv2d_dw(int x, int a, ConvSpec spec, int kh, int kw);
  int upsample_nn2(int a);
  int downsample_sum2(int a);

  // --- composites ---
  int add_bias(int x, int b);  // add(x, bcast_bias(b, shape(x)))
  int mean_all(int a);
  // Per-example squared L2 norm: (N, ...) -> (N).
  int sumsq_rows(int a);

  // --- backward ---
  // Gradients w.r.t. the given nodes, seeded with ones on `loss` (i.e.
  // gradients of sum(loss)); returned as node ids, zero-filled when a target
  // is unreachable. Emitted nodes are differentiable in turn.
  std::vector<int> backward(int loss, const std::vector<int>& wrt);

  const TensorT<T>& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  // Scalar convenience for (1)-shaped nodes.
  T scalar_value(int id) const { return nodes_[static_cast<std::size_t>(id)].value.data[0]; }

  std::size_t size() const { return nodes_.size(); }
  // Returns node storage to the shared buffer pool.
  void clear();
  std::int64_t value_bytes() const;

 private:
  struct Node {
    TensorT<T> value;
    Op op = Op::kLeaf;
    int p0 = -1;
    int p1 = -1;
    T scalar = T(0);   // scale factor / lrelu slope / scalar constant
    ConvSpec conv{};
    int aux0 = 0;      // matmul flags, conv in_h/kh
    int aux1 = 0;      // conv in_w/kw
  };

  int push(Node n);
  std::vector<Node> nodes_;
};

using Graph = GraphT<float>;
using GraphD = GraphT<double>;

extern template class GraphT<float>;
extern template class GraphT<double>;

}  // namespace adgan
