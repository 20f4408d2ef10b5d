#include <benchmark/benchmark.h>

#include "adgan/data.hpp"
#include "adgan/eval.hpp"
#include "adgan/graph.hpp"
#include "adgan/image_ops.hpp"
#include "adgan/losses.hpp"
#include "adgan/networks.hpp"
#include "adgan/rng.hpp"
#include "adgan/scoring.hpp"
#include "adgan/trainer.hpp"

using namespace adgan;

namespace {

Tensor random_batch(int n, int c, int s, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t({n, c, s, s});
  for (auto& v : t.data) v = rng.uniform_f(-1.0f, 1.0f);
  return t;
}

void BM_Conv2dForward(benchmark::State& state) {
  const int channels = static_cast<int>(state.range(0));
  Graph g;
  Rng rng(1);
  Tensor w({channels, channels, 3, 3});
  for (auto& v : w.data) v = rng.uniform_f(-0.1f, 0.1f);
  const Tensor x = random_batch(64, channels, 32, 2);
  for (auto _ : state) {
    g.clear();
    int y = g.conv2d(g.leaf(x), g.leaf(w), {1, 1});
    benchmark::DoNotOptimize(g.value(y).ptr());
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_Conv2dForward)->Arg(8)->Arg(16)->Arg(32);

void BM_CriticForward(benchmark::State& state) {
  auto arch = ArchConfig::make(32, 64, 8);
  auto nets = AdganNets::init(arch, 3);
  const Tensor x = random_batch(64, 3, 32, 4);
  Graph g;
  for (auto _ : state) {
    g.clear();
    auto b = nets.dv.bind(g);
    int y = nets.dv.forward(g, b, g.leaf(x));
    benchmark::DoNotOptimize(g.value(y).ptr());
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_CriticForward);

void BM_GeneratorForward(benchmark::State& state) {
  auto arch = ArchConfig::make(32, 64, 8);
  auto nets = AdganNets::init(arch, 5);
  Rng rng(6);
  Tensor z({64, 64});
  for (auto& v : z.data) v = rng.uniform_f(-1.0f, 1.0f);
  Graph g;
  for (auto _ : state) {
    g.clear();
    auto b = nets.gv.bind(g);
    int y = nets.gv.forward(g, b, g.leaf(z));
    benchmark::DoNotOptimize(g.value(y).ptr());
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_GeneratorForward);

void BM_CriticUpdateWithPenalty(benchmark::State& state) {
  auto arch = ArchConfig::make(32, 64, 8);
  auto nets = AdganNets::init(arch, 7);
  const Tensor xr = random_batch(64, 3, 32, 8);
  const Tensor xf = random_batch(64, 3, 32, 9);
  std::vector<float> eps(64, 0.4f);
  Graph g;
  for (auto _ : state) {
    g.clear();
    auto b = nets.dv.bind(g);
    NetFn<float> critic = [&](Graph& gg, int x) { return nets.dv.forward(gg, b, x); };
    int loss = visual_critic_loss_node(g, critic, g.leaf(xr), g.leaf(xf), 10.0f, eps);
    auto grads = g.backward(loss, b.ids);
    benchmark::DoNotOptimize(grads.data());
  }
}
BENCHMARK(BM_CriticUpdateWithPenalty);

void BM_VarianceOfLaplacian(benchmark::State& state) {
  Rng rng(10);
  ImageTensor img;
  img.pixels = Tensor({3, 64, 64});
  for (auto& v : img.pixels.data) v = rng.uniform_f(-1.0f, 1.0f);
  for (auto _ : state) benchmark::DoNotOptimize(variance_of_laplacian(img));
}
BENCHMARK(BM_VarianceOfLaplacian);

void BM_Auc(benchmark::State& state) {
  Rng rng(11);
  std::vector<ScoredExample> scored;
  for (int i = 0; i < 1000; ++i) {
    ScoredExample se;
    se.source_id = "x";
    se.label = rng.below(10) < 3 ? Label::kAbnormal : Label::kNormal;
    se.score = rng.uniform(0.0, 1.0);
    scored.push_back(se);
  }
  for (auto _ : state) benchmark::DoNotOptimize(auc(scored));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_Auc);

void BM_SynthGenerate(benchmark::State& state) {
  SynthConfig cfg;
  cfg.n_normal = 64;
  cfg.n_abnormal = 8;
  cfg.n_validation = 8;
  cfg.n_test_normal = 8;
  cfg.image_size = 32;
  cfg.lesion_radius_min = 3;
  cfg.lesion_radius_max = 6;
  for (auto _ : state) {
    cfg.seed += 1;
    benchmark::DoNotOptimize(synth_generate(cfg).train.size());
  }
  state.SetItemsProcessed(state.iterations() * 72);
}
BENCHMARK(BM_SynthGenerate);

}  // namespace

BENCHMARK_MAIN();
