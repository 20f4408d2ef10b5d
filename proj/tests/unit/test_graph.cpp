#include "doctest.h"

#include <cmath>
#include <vector>

#include "adgan/error.hpp"
#include "adgan/graph.hpp"
#include "testutil.hpp"

using adgan::ConvSpec;
using adgan::GraphD;
using adgan::Rng;
using adgan::TensorD;
using testutil::grad_check;
using testutil::random_tensor;

namespace {
constexpr double kTol = 1e-7;
}

TEST_CASE("elementwise and scalar ops match finite differences") {
  Rng rng(101);
  std::vector<TensorD> in = {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng, 0.5, 2.0)};
  auto build = [](GraphD& g, const std::vector<int>& ids) {
    int a = ids[0], b = ids[1];
    int x = g.add(g.mul(a, b), g.sub(a, g.neg(b)));
    x = g.scale(x, 0.7);
    x = g.add_scalar(x, 0.3);
    x = g.rsub_scalar(x, 1.5);
    x = g.div(x, b);
    return g.mean_all(g.mul(x, x));
  };
  auto res = grad_check(in, build, rng, 12);
  CHECK(res.max_rel_err < kTol);
}

TEST_CASE("nonlinearities match finite differences") {
  Rng rng(102);
  std::vector<TensorD> in = {random_tensor({2, 6}, rng, -2.0, 2.0)};
  auto build = [](GraphD& g, const std::vector<int>& ids) {
    int a = ids[0];
    int t = g.tanh_(a);
    int s = g.sigmoid(a);
    int p = g.softplus(a);
    int l = g.lrelu(a, 0.2);
    int q = g.sqrt_(g.add_scalar(g.mul(a, a), 1.0));
    int e = g.exp_(g.scale(a, 0.5));
    return g.mean_all(g.add(g.add(t, s), g.add(p, g.add(l, g.add(q, e)))));
  };
  auto res = grad_check(in, build, rng, 12, 1e-6);
  CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("matmul all transpose flags match finite differences") {
  Rng rng(103);
  for (int flags = 0; flags < 4; ++flags) {
    const bool ta = flags & 1, tb = flags & 2;
    std::vector<TensorD> in = {random_tensor(ta ? std::vector<int>{4, 3} : std::vector<int>{3, 4}, rng),
                               random_tensor(tb ? std::vector<int>{5, 4} : std::vector<int>{4, 5}, rng)};
    auto build = [ta, tb](GraphD& g, const std::vector<int>& ids) {
      return g.mean_all(g.mul(g.matmul(ids[0], ids[1], ta, tb), g.matmul(ids[0], ids[1], ta, tb)));
    };
    auto res = grad_check(in, build, rng, 10);
    CHECK(res.max_rel_err < kTol);
  }
}

TEST_CASE("reductions and broadcasts match finite differences") {
  Rng rng(104);
  std::vector<TensorD> in = {random_tensor({3, 2, 4, 4}, rng), random_tensor({2}, rng),
                             random_tensor({3}, rng)};
  auto build = [](GraphD& g, const std::vector<int>& ids) {
    int x = g.add_bias(ids[0], ids[1]);
    x = g.mul_rowwise(x, ids[2]);
    int pooled = g.sum_spatial(x);                       // (3,2)
    int back = g.bcast_spatial(pooled, 4, 4);            // (3,2,4,4)
    int rows = g.sum_rows(g.mul(x, back));               // (3)
    int rd = g.rowwise_dot(x, back);                     // (3)
    int s = g.sum_all(g.add(rows, rd));
    int spread = g.bcast_all(s, {3, 2});
    int rb = g.bcast_rows(ids[2], {3, 5});
    return g.add(g.mean_all(spread), g.mean_all(g.mul(rb, rb)));
  };
  auto res = grad_check(in, build, rng, 14);
  CHECK(res.max_rel_err < kTol);
}

TEST_CASE("reshape and sumsq_rows match finite differences") {
  Rng rng(105);
  std::vector<TensorD> in = {random_tensor({2, 3, 2, 2}, rng)};
  auto build = [](GraphD& g, const std::vector<int>& ids) {
    int flat = g.reshape(ids[0], {2, 12});
    return g.mean_all(g.sqrt_(g.add_scalar(g.sumsq_rows(flat), 1e-3)));
  };
  auto res = grad_check(in, build, rng, 16);
  CHECK(res.max_rel_err < kTol);
}

TEST_CASE("conv2d forward matches direct convolution") {
  Rng rng(106);
  // 1x1x3x3 input, 1x1x2x2 kernel, stride 1, no pad: hand-check all positions.
  TensorD x({1, 1, 3, 3}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  TensorD w({1, 1, 2, 2}, std::vector<double>{1, 0, 0, -1});
  GraphD g;
  int y = g.conv2d(g.leaf(x), g.leaf(w), {1, 0});
  const auto& v = g.value(y);
  REQUIRE(v.shape == std::vector<int>{1, 1, 2, 2});
  CHECK(v[0] == doctest::Approx(1 - 5));
  CHECK(v[1] == doctest::Approx(2 - 6));
  CHECK(v[2] == doctest::Approx(4 - 8));
  CHECK(v[3] == doctest::Approx(5 - 9));
}

TEST_CASE("conv2d with stride and pad matches finite differences") {
  Rng rng(107);
  for (ConvSpec spec : {ConvSpec{1, 1}, ConvSpec{2, 1}, ConvSpec{1, 0}, ConvSpec{2, 0}}) {
    std::vector<TensorD> in = {random_tensor({2, 3, 6, 6}, rng),
                               random_tensor({4, 3, 3, 3}, rng, -0.5, 0.5)};
    auto build = [spec](GraphD& g, const std::vector<int>& ids) {
      int y = g.conv2d(ids[0], ids[1], spec);
      return g.mean_all(g.mul(y, y));
    };
    auto res = grad_check(in, build, rng, 12);
    CHECK(res.max_rel_err < kTol);
  }
}

TEST_CASE("conv2d 1x1 kernel matches finite differences") {
  Rng rng(108);
  std::vector<TensorD> in = {random_tensor({2, 3, 4, 4}, rng), random_tensor({5, 3, 1, 1}, rng)};
  auto build = [](GraphD& g, const std::vector<int>& ids) {
    int y = g.conv2d(ids[0], ids[1], {2, 0});
    return g.mean_all(g.mul(y, y));
  };
  auto res = grad_check(in, build, rng, 12);
  CHECK(res.max_rel_err < kTol);
}

TEST_CASE("upsample/downsample match finite differences and adjointness") {
  Rng rng(109);
  std::vector<TensorD> in = {random_tensor({2, 2, 3, 3}, rng)};
  auto build = [](GraphD& g, const std::vector<int>& ids) {
    int up = g.upsample_nn2(ids[0]);
    int down = g.downsample_sum2(g.mul(up, up));
    return g.mean_all(down);
  };
  auto res = grad_check(in, build, rng, 12);
  CHECK(res.max_rel_err < kTol);

  // upsample then sum-downsample multiplies by 4.
  GraphD g;
  int a = g.leaf(random_tensor({1, 1, 2, 2}, rng));
  int rt = g.downsample_sum2(g.upsample_nn2(a));
  for (int i = 0; i < 4; ++i) CHECK(g.value(rt)[i] == doctest::Approx(4.0 * g.value(a)[i]));
}

TEST_CASE("second-order: backward of a backward matches finite differences") {
  // phi(x, w) = || d/dx [ sum(tanh(conv(x, w))) ] ||^2 differentiated w.r.t. w.
  Rng rng(110);
  std::vector<TensorD> in = {random_tensor({1, 2, 4, 4}, rng), random_tensor({2, 2, 3, 3}, rng, -0.5, 0.5)};
  auto build = [](GraphD& g, const std::vector<int>& ids) {
    int y = g.sum_all(g.tanh_(g.conv2d(ids[0], ids[1], {1, 1})));
    auto grads = g.backward(y, {ids[0]});
    int gx = grads[0];
    int flat = g.reshape(gx, {1, 32});
    return g.mean_all(g.sumsq_rows(flat));
  };
  auto res = grad_check(in, build, rng, 16);
  CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("gradient penalty closed form on a linear critic") {
  // D(x) = <w, x>: the input gradient is w for every example, so
  // mean((||w|| - 1)^2) is exact and double backprop through the penalty
  // must match finite differences w.r.t. w.
  Rng rng(111);
  const int n = 3, d = 8;
  std::vector<TensorD> in = {random_tensor({n, d}, rng), random_tensor({d, 1}, rng)};

  auto penalty = [](GraphD& g, const std::vector<int>& ids) {
    int score = g.matmul(ids[0], ids[1]);  // (n,1)
    int ssum = g.sum_all(score);
    int gx = g.backward(ssum, {ids[0]})[0];           // (n,d), each row = w
    int norms = g.sqrt_(g.sumsq_rows(gx));            // (n)
    int dev = g.add_scalar(norms, -1.0);
    return g.mean_all(g.mul(dev, dev));
  };

  GraphD g;
  std::vector<int> ids = {g.leaf(in[0]), g.leaf(in[1])};
  const int p = penalty(g, ids);
  double wnorm = 0.0;
  for (int i = 0; i < d; ++i) wnorm += in[1][i] * in[1][i];
  wnorm = std::sqrt(wnorm);
  CHECK(g.scalar_value(p) == doctest::Approx((wnorm - 1.0) * (wnorm - 1.0)).epsilon(1e-9));

  auto res = grad_check(in, penalty, rng, 12);
  CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("backward through unreachable target yields zeros") {
  GraphD g;
  int a = g.leaf(TensorD({2, 2}, 1.0));
  int b = g.leaf(TensorD({2, 2}, 2.0));
  int loss = g.mean_all(g.mul(a, a));
  auto grads = g.backward(loss, {b});
  for (const auto& v : g.value(grads[0]).data) CHECK(v == 0.0);
}

TEST_CASE("shape errors are reported") {
  GraphD g;
  int a = g.leaf(TensorD({2, 2}, 1.0));
  int b = g.leaf(TensorD({2, 3}, 1.0));
  CHECK_THROWS_AS(g.add(a, b), adgan::ShapeError);
  CHECK_THROWS_AS(g.matmul(b, b, false, false), adgan::ShapeError);
  CHECK_THROWS_AS(g.conv2d(a, b, {1, 0}), adgan::ShapeError);
}

TEST_CASE("detach blocks gradient flow") {
  GraphD g;
  int a = g.leaf(TensorD({2}, 3.0));
  int d = g.detach(a);
  int loss = g.mean_all(g.mul(d, d));
  auto grads = g.backward(loss, {a});
  for (const auto& v : g.value(grads[0]).data) CHECK(v == 0.0);
}
