// Acceptance suite. Each criterion prints exactly one PASS/FAIL line; the
// process exits nonzero if any executed criterion fails.
//
//   adgan_acceptance                 runs everything
//   adgan_acceptance 1 2 3 4         runs a subset
//
// The pipeline criterion drives the CLI binary; its path comes from the
// ADGAN_CLI environment variable (set by ctest) or --cli.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "adgan/baselines.hpp"
#include "adgan/data.hpp"
#include "adgan/error.hpp"
#include "adgan/eval.hpp"
#include "adgan/graph.hpp"
#include "adgan/losses.hpp"
#include "adgan/networks.hpp"
#include "adgan/scoring.hpp"
#include "adgan/store.hpp"
#include "adgan/trainer.hpp"

namespace fs = std::filesystem;
using namespace adgan;
using Clock = std::chrono::steady_clock;

namespace {

double minutes_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count() / 60.0;
}

std::string cli_path;

fs::path work_dir() {
  auto p = fs::temp_directory_path() / "adgan_acceptance";
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------
// Criterion 1: gradient fidelity of the five losses on the reduced config
// ---------------------------------------------------------------------------

struct FdProbe {
  double max_rel_err = 0.0;
  int checked = 0;
};

// Central differences against the analytic gradient over random parameter
// coordinates. The relative error is floored at 0.1% of the overall gradient
// scale so exactly-cancelling coordinates do not compare roundoff to nothing.
FdProbe fd_probe(std::vector<TensorD>& inputs,
                 const std::function<int(GraphD&, const std::vector<int>&)>& build, Rng& rng,
                 int total_probes) {
  FdProbe res;
  GraphD g;
  std::vector<int> ids;
  for (auto& t : inputs) ids.push_back(g.leaf(t));
  const int loss = build(g, ids);
  const auto grads = g.backward(loss, ids);

  double gscale = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    for (double v : g.value(grads[i]).data) gscale = std::max(gscale, std::abs(v));
  const double floor = 1e-3 * gscale + 1e-10;

  std::int64_t total_coords = 0;
  for (const auto& t : inputs) total_coords += t.numel();

  const double h = 1e-5;
  for (int probe = 0; probe < total_probes; ++probe) {
    std::int64_t flat =
        static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(total_coords)));
    std::size_t pi = 0;
    while (flat >= inputs[pi].numel()) flat -= inputs[pi++].numel();
    auto& t = inputs[pi];

    const double orig = t[flat];
    auto eval = [&](double v) {
      t[flat] = v;
      GraphD gg;
      std::vector<int> lids;
      for (auto& tt : inputs) lids.push_back(gg.leaf(tt));
      const double out = gg.scalar_value(build(gg, lids));
      t[flat] = orig;
      return out;
    };
    const double fd = (eval(orig + h) - eval(orig - h)) / (2.0 * h);
    const double a = g.value(grads[pi])[flat];
    const double denom = std::max({std::abs(a), std::abs(fd), floor});
    res.max_rel_err = std::max(res.max_rel_err, std::abs(a - fd) / denom);
    ++res.checked;
  }
  return res;
}

bool criterion1(std::string& detail) {
  const auto t0 = Clock::now();
  auto arch = ArchConfig::make(8, 8, 8);
  auto nets = AdganNetsT<double>::init(arch, 404);
  Rng rng(405);
  const int n = 3;

  auto pack = [&](auto& net, std::vector<TensorD>& inputs) {
    for (std::size_t i = 0; i < net.params().size(); ++i)
      inputs.push_back(net.params().tensor(static_cast<int>(i)));
  };
  auto bind_range = [](const std::vector<int>& ids, std::size_t from, std::size_t count) {
    Binding b;
    for (std::size_t i = 0; i < count; ++i) b.ids.push_back(ids[from + i]);
    return b;
  };

  double worst = 0.0;
  int total_checked = 0;
  const int probes = 50;

  {  // l_Dv (through the gradient penalty)
    std::vector<TensorD> in;
    Rng gen(406);
    TensorD xr({n, 3, 8, 8}), xf({n, 3, 8, 8});
    for (auto& v : xr.data) v = gen.uniform(-1.0, 1.0);
    for (auto& v : xf.data) v = gen.uniform(-1.0, 1.0);
    in.push_back(xr);
    in.push_back(xf);
    pack(nets.dv, in);
    std::vector<double> eps = {0.2, 0.5, 0.8};
    auto build = [&](GraphD& g, const std::vector<int>& ids) {
      Binding b = bind_range(ids, 2, nets.dv.params().size());
      NetFn<double> critic = [&](GraphT<double>& gg, int x) { return nets.dv.forward(gg, b, x); };
      return visual_critic_loss_node(g, critic, ids[0], ids[1], 10.0, eps);
    };
    auto r = fd_probe(in, build, rng, probes);
    worst = std::max(worst, r.max_rel_err);
    total_checked += r.checked;
  }
  {  // l_Gv
    std::vector<TensorD> in;
    Rng gen(407);
    TensorD z({n, 8});
    for (auto& v : z.data) v = gen.uniform(-1.0, 1.0);
    in.push_back(z);
    pack(nets.gv, in);
    pack(nets.dv, in);
    auto build = [&](GraphD& g, const std::vector<int>& ids) {
      Binding bg = bind_range(ids, 1, nets.gv.params().size());
      Binding bd = bind_range(ids, 1 + nets.gv.params().size(), nets.dv.params().size());
      NetFn<double> gen_fn = [&](GraphT<double>& gg, int zz) {
        return nets.gv.forward(gg, bg, zz);
      };
      NetFn<double> critic = [&](GraphT<double>& gg, int x) { return nets.dv.forward(gg, bd, x); };
      return visual_generator_loss_node(g, critic, gen_fn, ids[0]);
    };
    auto r = fd_probe(in, build, rng, probes);
    worst = std::max(worst, r.max_rel_err);
    total_checked += r.checked;
  }
  {  // l_Dl
    std::vector<TensorD> in;
    Rng gen(408);
    TensorD zr({n, 8}), zf({n, 8});
    for (auto& v : zr.data) v = gen.uniform(-1.0, 1.0);
    for (auto& v : zf.data) v = gen.uniform(-1.0, 1.0);
    in.push_back(zr);
    in.push_back(zf);
    pack(nets.dl, in);
    auto build = [&](GraphD& g, const std::vector<int>& ids) {
      Binding b = bind_range(ids, 2, nets.dl.params().size());
      NetFn<double> logit = [&](GraphT<double>& gg, int z) {
        return nets.dl.forward_logit(gg, b, z);
      };
      return latent_discriminator_loss_node(g, logit, ids[0], ids[1]);
    };
    auto r = fd_probe(in, build, rng, probes);
    worst = std::max(worst, r.max_rel_err);
    total_checked += r.checked;
  }
  {  // l_Gl
    std::vector<TensorD> in;
    Rng gen(409);
    TensorD xh({n, 3, 8, 8});
    for (auto& v : xh.data) v = gen.uniform(-1.0, 1.0);
    in.push_back(xh);
    pack(nets.gl, in);
    pack(nets.dl, in);
    auto build = [&](GraphD& g, const std::vector<int>& ids) {
      Binding bg = bind_range(ids, 1, nets.gl.params().size());
      Binding bd = bind_range(ids, 1 + nets.gl.params().size(), nets.dl.params().size());
      NetFn<double> enc = [&](GraphT<double>& gg, int x) { return nets.gl.forward(gg, bg, x); };
      NetFn<double> logit = [&](GraphT<double>& gg, int z) {
        return nets.dl.forward_logit(gg, bd, z);
      };
      return latent_generator_loss_node(g, logit, enc, ids[0], 1.7);
    };
    auto r = fd_probe(in, build, rng, probes);
    worst = std::max(worst, r.max_rel_err);
    total_checked += r.checked;
  }
  {  // l_MSE
    std::vector<TensorD> in;
    Rng gen(410);
    TensorD z({n, 8});
    for (auto& v : z.data) v = gen.uniform(-1.0, 1.0);
    in.push_back(z);
    pack(nets.gv, in);
    pack(nets.gl, in);
    auto build = [&](GraphD& g, const std::vector<int>& ids) {
      Binding bv = bind_range(ids, 1, nets.gv.params().size());
      Binding bl = bind_range(ids, 1 + nets.gv.params().size(), nets.gl.params().size());
      NetFn<double> gen_fn = [&](GraphT<double>& gg, int zz) {
        return nets.gv.forward(gg, bv, zz);
      };
      NetFn<double> enc = [&](GraphT<double>& gg, int x) { return nets.gl.forward(gg, bl, x); };
      return latent_cycle_mse_node(g, enc, gen_fn, ids[0], 0.8);
    };
    auto r = fd_probe(in, build, rng, probes);
    worst = std::max(worst, r.max_rel_err);
    total_checked += r.checked;
  }

  const double mins = minutes_since(t0);
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "five losses, %d coordinates, max rel err %.2e (tol 1e-4), %.2f min (limit 2)",
                total_checked, worst, mins);
  detail = buf;
  return worst < 1e-4 && mins < 2.0 && total_checked >= 250;
}

// ---------------------------------------------------------------------------
// Criterion 2: gradient-penalty closed forms
// ---------------------------------------------------------------------------

bool criterion2(std::string& detail) {
  const int n = 5, c = 3, s = 4, d = c * s * s;
  Rng rng(411);
  GraphD g;
  TensorD xr({n, c, s, s}), xf({n, c, s, s});
  for (auto& v : xr.data) v = rng.uniform(-1.0, 1.0);
  for (auto& v : xf.data) v = rng.uniform(-1.0, 1.0);
  const int xr_id = g.leaf(xr), xf_id = g.leaf(xf);
  std::vector<double> eps;
  for (int i = 0; i < n; ++i) eps.push_back(rng.uniform01());

  TensorD w({d, 1});
  double norm = 0.0;
  for (int i = 0; i < d; ++i) {
    w[i] = 0.5 + 0.1 * i;
    norm += w[i] * w[i];
  }
  norm = std::sqrt(norm);
  for (int i = 0; i < d; ++i) w[i] /= norm;

  auto linear_critic = [](const TensorD& weights) {
    return NetFn<double>([weights](GraphT<double>& gg, int x) {
      const int nb = gg.value(x).dim(0);
      const int dd = static_cast<int>(gg.value(x).numel() / nb);
      int wl = gg.leaf(weights);
      return gg.reshape(gg.matmul(gg.reshape(x, {nb, dd}), wl), {nb});
    });
  };
  NetFn<double> constant_critic = [](GraphT<double>& gg, int x) {
    return gg.add_scalar(gg.scale(gg.sum_rows(x), 0.0), 2.5);
  };

  const double p_unit = gradient_penalty(g, linear_critic(w), xr_id, xf_id, eps);
  const double p_const = gradient_penalty(g, constant_critic, xr_id, xf_id, eps);
  TensorD w2 = w;
  for (auto& v : w2.data) v *= 2.0;
  const double p_scale2 = gradient_penalty(g, linear_critic(w2), xr_id, xf_id, eps);

  char buf[180];
  std::snprintf(buf, sizeof(buf),
                "unit-norm critic %.2e (want 0), constant %.10f, doubled %.10f (want 1 +/- 1e-6)",
                p_unit, p_const, p_scale2);
  detail = buf;
  return std::abs(p_unit) < 1e-6 && std::abs(p_const - 1.0) < 1e-6 &&
         std::abs(p_scale2 - 1.0) < 1e-6;
}

// ---------------------------------------------------------------------------
// Criterion 3: AUC oracle equivalence and monotone invariance
// ---------------------------------------------------------------------------

bool criterion3(std::string& detail) {
  Rng rng(412);
  double worst_pair = 0.0, worst_mono = 0.0;
  int sets = 0;
  while (sets < 1000) {
    const int n = 2 + static_cast<int>(rng.below(11));
    std::vector<ScoredExample> scored;
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      ScoredExample se;
      se.source_id = "x";
      se.label = rng.below(2) ? Label::kAbnormal : Label::kNormal;
      // quantized scores force tie handling
      se.score = static_cast<double>(rng.below(6)) / 5.0;
      pos += se.label == Label::kAbnormal;
      scored.push_back(se);
    }
    if (pos == 0 || pos == n) continue;
    ++sets;

    double wins = 0.0;
    std::int64_t pairs = 0;
    for (const auto& a : scored) {
      if (a.label != Label::kAbnormal) continue;
      for (const auto& m : scored) {
        if (m.label != Label::kNormal) continue;
        ++pairs;
        if (a.score > m.score)
          wins += 1.0;
        else if (a.score == m.score)
          wins += 0.5;
      }
    }
    const double trap = auc(scored);
    worst_pair = std::max(worst_pair, std::abs(trap - wins / static_cast<double>(pairs)));

    auto mono = scored;
    for (auto& se : mono) se.score = std::exp(se.score);
    worst_mono = std::max(worst_mono, std::abs(auc(mono) - trap));
    for (auto& se : mono) se.score = 7.0 * se.score + 3.0;
    worst_mono = std::max(worst_mono, std::abs(auc(mono) - trap));
  }
  char buf[180];
  std::snprintf(buf, sizeof(buf),
                "1000 sets: |trapezoid - pairwise| max %.2e, monotone-transform drift %.2e "
                "(tol 1e-12)",
                worst_pair, worst_mono);
  detail = buf;
  return worst_pair < 1e-12 && worst_mono < 1e-12;
}

// ---------------------------------------------------------------------------
// Criterion 4: phase-1 freeze and split-resume equivalence on a
// 200-iteration desk run with T=100
// ---------------------------------------------------------------------------

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

bool criterion4(std::string& detail) {
  const auto t0 = Clock::now();
  const auto root = work_dir() / "criterion4";
  fs::remove_all(root);

  SynthConfig sc;
  sc.n_normal = 200;
  sc.n_abnormal = 0;
  sc.n_validation = 0;
  sc.n_test_normal = 0;
  sc.image_size = 32;
  sc.lesion_radius_min = 3;
  sc.lesion_radius_max = 6;
  sc.seed = 41;
  const auto corpus = synth_generate(sc);

  TrainConfig cfg = desk_config();
  cfg.total_iters = 200;
  cfg.phase1_iters = 100;
  cfg.checkpoint_interval = 100;
  cfg.seed = 42;

  const auto init_state = init_train_state(cfg);
  const auto gl0 = init_state.nets.gl.params().content_hash();
  const auto dl0 = init_state.nets.dl.params().content_hash();

  const auto straight = train(cfg, corpus.train, (root / "straight").string());
  const auto mid_path = (root / "straight" / "checkpoints" / "ckpt_00000100.adgan").string();
  const auto mid = load_train_checkpoint(mid_path);
  const bool frozen = mid.nets.gl.params().content_hash() == gl0 &&
                      mid.nets.dl.params().content_hash() == dl0;

  const auto resumed = train(cfg, corpus.train, (root / "resumed").string(), mid_path);
  const bool bit_equal =
      read_bytes(straight.final_checkpoint) == read_bytes(resumed.final_checkpoint);

  char buf[220];
  std::snprintf(buf, sizeof(buf),
                "latent pair frozen through iter 100: %s; split-resume final checkpoint "
                "bit-equal: %s (%.1f min)",
                frozen ? "yes" : "NO", bit_equal ? "yes" : "NO", minutes_since(t0));
  detail = buf;
  return frozen && bit_equal;
}

// ---------------------------------------------------------------------------
// Criteria 5-7: desk-scale synthetic benchmark
// ---------------------------------------------------------------------------

// Corpus knobs frozen after calibrating the DAE oracle into the 0.6-0.8 AUC
// band (the criterion-5 line reports the DAE median alongside).
SynthConfig benchmark_corpus_config() {
  SynthConfig sc;
  sc.n_normal = 2300;
  sc.n_abnormal = 86;
  sc.n_validation = 100;
  sc.n_test_normal = 200;
  sc.image_size = 32;
  sc.texture_scale = 0.6;
  sc.lesion_radius_min = 3.0;
  sc.lesion_radius_max = 6.0;
  sc.lesion_contrast = 0.30;
  sc.seed = 2024;
  return sc;
}

struct BenchmarkOutcome {
  bool ran = false;
  std::vector<double> adgan_aucs;
  std::vector<double> dae_aucs;
  double adgan_median = 0.0;
  double dae_median = 0.0;
  double paired_fraction = 0.0;  // criterion 7, median-seed model
  double total_minutes = 0.0;
};

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

BenchmarkOutcome& benchmark() {
  static BenchmarkOutcome out;
  if (out.ran) return out;
  out.ran = true;
  const auto t0 = Clock::now();

  const auto root = work_dir() / "benchmark";
  fs::remove_all(root);
  const auto corpus = synth_generate(benchmark_corpus_config());

  const std::vector<std::int64_t> seeds = {1, 2, 3};
  std::vector<TrainState> states;
  for (std::int64_t seed : seeds) {
    TrainConfig cfg = desk_config();
    cfg.seed = seed;
    const auto run =
        train(cfg, corpus.train, (root / ("adgan_s" + std::to_string(seed))).string());
    TrainState state = load_train_checkpoint(run.final_checkpoint);
    const auto scored = score_dataset(corpus.test, state.nets.gl, state.nets.gv);
    out.adgan_aucs.push_back(auc(scored));
    states.push_back(std::move(state));
    std::fprintf(stderr, "  [benchmark] adgan seed %lld AUC %.4f (%.1f min elapsed)\n",
                 static_cast<long long>(seed), out.adgan_aucs.back(), minutes_since(t0));
  }
  out.adgan_median = median3(out.adgan_aucs);

  for (std::int64_t seed : seeds) {
    TrainConfig cfg = desk_config();
    cfg.seed = seed;
    const auto model =
        train_dae(cfg, corpus.train, (root / ("dae_s" + std::to_string(seed))).string());
    const auto scored =
        score_split(corpus.test, [&](const ImageTensor& x) { return score_dae(x, model); });
    out.dae_aucs.push_back(auc(scored));
    std::fprintf(stderr, "  [benchmark] dae   seed %lld AUC %.4f (%.1f min elapsed)\n",
                 static_cast<long long>(seed), out.dae_aucs.back(), minutes_since(t0));
  }
  out.dae_median = median3(out.dae_aucs);

  // criterion 7 on the median-AUC seed's model
  std::size_t med_idx = 0;
  {
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < out.adgan_aucs.size(); ++i)
      ranked.emplace_back(out.adgan_aucs[i], i);
    std::sort(ranked.begin(), ranked.end());
    med_idx = ranked[ranked.size() / 2].second;
  }
  const TrainState& med = states[med_idx];
  const auto scored = score_dataset(corpus.test, med.nets.gl, med.nets.gv);
  int pairs = 0, wins = 0;
  for (const auto& se : scored) {
    if (se.label != Label::kAbnormal) continue;
    // test_abnormal_i shares its texture stream with test_normal_i
    const std::string idx = se.source_id.substr(se.source_id.rfind('_') + 1);
    const std::string partner = "test_normal_" + idx;
    for (const auto& other : scored) {
      if (other.source_id != partner) continue;
      ++pairs;
      wins += se.score > other.score;
      break;
    }
  }
  out.paired_fraction = pairs > 0 ? static_cast<double>(wins) / pairs : 0.0;
  out.total_minutes = minutes_since(t0);
  return out;
}

bool criterion5(std::string& detail) {
  auto& b = benchmark();
  char buf[260];
  std::snprintf(buf, sizeof(buf),
                "ADGAN AUC per seed {%.4f, %.4f, %.4f}, median %.4f (need >= 0.85); DAE oracle "
                "median %.4f in (0.6, 0.8); %.1f min total",
                b.adgan_aucs[0], b.adgan_aucs[1], b.adgan_aucs[2], b.adgan_median, b.dae_median,
                b.total_minutes);
  detail = buf;
  return b.adgan_median >= 0.85;
}

bool criterion6(std::string& detail) {
  auto& b = benchmark();
  char buf[160];
  std::snprintf(buf, sizeof(buf), "median AUC ordering: ADGAN %.4f >= DAE %.4f: %s",
                b.adgan_median, b.dae_median, b.adgan_median >= b.dae_median ? "yes" : "NO");
  detail = buf;
  return b.adgan_median >= b.dae_median;
}

bool criterion7(std::string& detail) {
  auto& b = benchmark();
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "lesioned image outscores its texture-paired normal in %.1f%% of pairs "
                "(need >= 80%%)",
                100.0 * b.paired_fraction);
  detail = buf;
  return b.paired_fraction >= 0.80;
}

// ---------------------------------------------------------------------------
// Criterion 8: CLI pipeline end-to-end
// ---------------------------------------------------------------------------

int run_cmd(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

bool criterion8(std::string& detail) {
  if (cli_path.empty()) {
    detail = "CLI path not provided (set ADGAN_CLI or pass --cli)";
    return false;
  }
  const auto root = work_dir() / "pipeline";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string r = root.string();

  std::ofstream cfg(root / "config.json");
  cfg << R"({"total_iters": 40, "phase1_iters": 25, "batch_size": 16, "critic_steps": 1,
            "latent_dim": 16, "image_size": 16, "filter_scale": 8,
            "checkpoint_interval": 20, "seed": 77})";
  cfg.close();

  struct Step {
    const char* name;
    std::string cmd;
  };
  const std::vector<Step> steps = {
      {"synth", cli_path + " synth --out " + r + "/corpus --n-normal 80 --n-abnormal 12" +
                    " --image-size 16 --lesion-radius-min 3 --lesion-radius-max 5" +
                    " --n-validation 8 --n-test-normal 12 --seed 5"},
      {"train", cli_path + " train --config " + r + "/config.json --data " + r + "/corpus" +
                    " --out " + r + "/run"},
      {"score", cli_path + " score --checkpoint " + r + "/run/checkpoints/ckpt_00000040.adgan" +
                    " --data " + r + "/corpus --split test --out " + r + "/scores/adgan.tsv" +
                    " --dump-reconstructions"},
      {"eval", cli_path + " eval --scores " + r + "/scores/adgan.tsv --out " + r +
                   "/report.tsv --roc-dump"},
  };
  for (const auto& step : steps) {
    const int rc = run_cmd(step.cmd + " >> " + r + "/pipeline.log 2>&1");
    if (rc != 0) {
      detail = std::string(step.name) + " exited with code " + std::to_string(rc);
      return false;
    }
  }

  // recompute the AUC offline from the emitted scores file
  const auto scored = read_scores(r + "/scores/adgan.tsv");
  const double offline = auc(scored);

  double reported = -1.0;
  std::ifstream report(root / "report.tsv");
  std::string line;
  while (std::getline(report, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("method\t", 0) == 0) continue;
    std::istringstream ls(line);
    std::string method, auc_text;
    std::getline(ls, method, '\t');
    std::getline(ls, auc_text, '\t');
    reported = std::stod(auc_text);
  }
  const double drift = std::abs(reported - offline);

  char buf[220];
  std::snprintf(buf, sizeof(buf),
                "synth/train/score/eval all exited 0; report AUC %.6f vs offline %.6f "
                "(drift %.1e, tol 1e-12)",
                reported, offline, drift);
  detail = buf;
  return reported >= 0.0 && drift < 1e-12;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* env = std::getenv("ADGAN_CLI")) cli_path = env;

  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) {
      cli_path = argv[++i];
    } else {
      wanted.insert(std::atoi(arg.c_str()));
    }
  }

  struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient fidelity", criterion1},
      {2, "gradient-penalty closed forms", criterion2},
      {3, "AUC oracle equivalence", criterion3},
      {4, "phase-1 freeze and resume equivalence", criterion4},
      {5, "desk-scale synthetic benchmark", criterion5},
      {6, "ranking trend ADGAN >= DAE", criterion6},
      {7, "reconstruction photoshopping property", criterion7},
      {8, "CLI pipeline end-to-end", criterion8},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("CRITERION %d [%s] %s: %s\n", c.id, ok ? "PASS" : "FAIL", c.name,
                detail.c_str());
    std::fflush(stdout);
    failures += !ok;
  }
  return failures == 0 ? 0 : 1;
}
