#include "adgan/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "adgan/checkpoint.hpp"
#include "adgan/error.hpp"
#include "adgan/graph.hpp"
#include "adgan/scoring.hpp"

namespace fs = std::filesystem;

namespace adgan {

const char* phase_name(TrainPhase p) {
  return p == TrainPhase::kVisualOnly ? "visual_only" : "joint";
}

namespace {

std::uint64_t step_stream(const TrainConfig& cfg, std::int64_t iteration, const char* role) {
  return derive_seed(static_cast<std::uint64_t>(cfg.seed),
                     "train.iter" + std::to_string(iteration) + "." + role);
}

Tensor draw_latents(int n, int z, std::uint64_t stream) {
  Rng rng(stream);
  Tensor t({n, z});
  for (auto& v : t.data) v = rng.uniform_f(-1.0f, 1.0f);
  return t;
}

std::vector<float> draw_mix(int n, std::uint64_t stream) {
  Rng rng(stream);
  std::vector<float> eps(static_cast<std::size_t>(n));
  for (auto& v : eps) v = rng.uniform_f(0.0f, 1.0f);
  return eps;
}

std::vector<const Tensor*> grad_ptrs(const Graph& g, const std::vector<int>& ids) {
  std::vector<const Tensor*> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(&g.value(id));
  return out;
}

// Forward-only generator sample; the result enters update graphs as a leaf.
Tensor make_fakes(const TrainState& state, const Tensor& z) {
  Graph g;
  const auto b = state.nets.gv.bind(g);
  return g.value(state.nets.gv.forward(g, b, g.leaf(z)));
}

void check_batch(const TrainState& state, const Tensor& batch) {
  if (batch.rank() != 4 || batch.dim(1) != 3 || batch.dim(2) != state.arch.image_size ||
      batch.dim(3) != state.arch.image_size)
    throw ShapeError("train step: bad batch shape " + shape_str(batch.shape));
}

// critic_steps critic updates followed by one visual-generator update; the
// shared front half of both phases.
void visual_pair_update(TrainState& state, const Tensor& real_batch, LossReport& rep) {
  const auto& cfg = state.config;
  const int b = real_batch.dim(0);
  const int z_dim = cfg.latent_dim;

  for (int s = 0; s < cfg.critic_steps; ++s) {
    const std::string tag = "critic" + std::to_string(s);
    const Tensor z =
        draw_latents(b, z_dim, step_stream(cfg, state.iteration, (tag + ".z").c_str()));
    const Tensor fakes = make_fakes(state, z);

    Graph g;
    const auto bdv = state.nets.dv.bind(g);
    NetFn<float> critic = [&](Graph& gg, int x) { return state.nets.dv.forward(gg, bdv, x); };
    const int xr = g.leaf(real_batch);
    const int xf = g.leaf(fakes);
    const auto eps = draw_mix(b, step_stream(cfg, state.iteration, (tag + ".eps").c_str()));
    const int loss =
        visual_critic_loss_node(g, critic, xr, xf, static_cast<float>(cfg.loss.lambda_gp), eps,
                                cfg.gp_at == GpAt::kFakes);
    const auto grads = g.backward(loss, bdv.ids);
    state.opt_dv.step(state.nets.dv.params(), grad_ptrs(g, grads));
    rep.l_dv = static_cast<double>(g.scalar_value(loss));
  }

  const Tensor z = draw_latents(b, z_dim, step_stream(cfg, state.iteration, "gen.z"));
  Graph g;
  const auto bgv = state.nets.gv.bind(g);
  const auto bdv = state.nets.dv.bind(g);
  NetFn<float> critic = [&](Graph& gg, int x) { return state.nets.dv.forward(gg, bdv, x); };
  NetFn<float> gen = [&](Graph& gg, int zz) { return state.nets.gv.forward(gg, bgv, zz); };
  const int loss = visual_generator_loss_node(g, critic, gen, g.leaf(z));
  const auto grads = g.backward(loss, bgv.ids);
  state.opt_gv.step(state.nets.gv.params(), grad_ptrs(g, grads));
  rep.l_gv = static_cast<double>(g.scalar_value(loss));
}

void check_state_finite(const TrainState& state) {
  if (!state.nets.gv.params().finite() || !state.nets.dv.params().finite() ||
      !state.nets.gl.params().finite() || !state.nets.dl.params().finite())
    throw TrainAbort("non-finite network parameter after iteration " +
                     std::to_string(state.iteration));
}

}  // namespace

TrainState init_train_state(const TrainConfig& cfg_in) {
  const TrainConfig cfg = validate_config(cfg_in);
  TrainState state;
  state.config = cfg;
  state.arch = ArchConfig::make(cfg.image_size, cfg.latent_dim, cfg.filter_scale);
  state.nets = AdganNets::init(state.arch, static_cast<std::uint64_t>(cfg.seed));
  state.opt_gv = Adam(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2);
  state.opt_dv = Adam(cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2);
  state.opt_gl = Adam(cfg.learning_rate, cfg.adam_beta1_latent, cfg.adam_beta2_latent);
  state.opt_dl = Adam(cfg.learning_rate, cfg.adam_beta1_latent, cfg.adam_beta2_latent);
  state.iteration = 0;
  return state;
}

LossReport train_step_phase1(TrainState& state, const Tensor& real_batch) {
  if (state.phase() != TrainPhase::kVisualOnly)
    throw ConfigError("train_step_phase1 called at iteration " +
                      std::to_string(state.iteration) + " (already joint)");
  check_batch(state, real_batch);

  LossReport rep;
  visual_pair_update(state, real_batch, rep);
  state.iteration += 1;
  if (!rep.finite()) throw TrainAbort("non-finite loss in phase-1 step");
  check_state_finite(state);
  return rep;
}

LossReport train_step_phase2(TrainState& state, const Tensor& real_batch) {
  if (state.phase() != TrainPhase::kJoint)
    throw ConfigError("train_step_phase2 called at iteration " +
                      std::to_string(state.iteration) + " (still visual-only)");
  check_batch(state, real_batch);

  const auto& cfg = state.config;
  const int b = real_batch.dim(0);
  const int z_dim = cfg.latent_dim;

  LossReport rep;
  visual_pair_update(state, real_batch, rep);

  // Latent discriminator: real latents from the prior against re-encoded
  // generated images; both generators fixed.
  {
    const Tensor z_prior =
        draw_latents(b, z_dim, step_stream(cfg, state.iteration, "dl.zreal"));
    const Tensor z_gen = draw_latents(b, z_dim, step_stream(cfg, state.iteration, "dl.z"));
    const Tensor fakes = make_fakes(state, z_gen);
    Tensor z_fake;
    {
      Graph gf;
      const auto bgl = state.nets.gl.bind(gf);
      z_fake = gf.value(state.nets.gl.forward(gf, bgl, gf.leaf(fakes)));
    }

    Graph g;
    const auto bdl = state.nets.dl.bind(g);
    NetFn<float> logit = [&](Graph& gg, int zz) {
      return state.nets.dl.forward_logit(gg, bdl, zz);
    };
    const int loss = latent_discriminator_loss_node(g, logit, g.leaf(z_prior), g.leaf(z_fake));
    const auto grads = g.backward(loss, bdl.ids);
    state.opt_dl.step(state.nets.dl.params(), grad_ptrs(g, grads));
    rep.l_dl = static_cast<double>(g.scalar_value(loss));
  }

  // Latent generator: adversarial term plus the latent-cycle MSE, both on one
  // generated batch; visual generator and latent discriminator fixed.
  {
    const Tensor z = draw_latents(b, z_dim, step_stream(cfg, state.iteration, "gl.z"));
    const Tensor x_hat = make_fakes(state, z);

    Graph g;
    const auto bgl = state.nets.gl.bind(g);
    const auto bdl = state.nets.dl.bind(g);
    const int xh = g.leaf(x_hat);
    NetFn<float> enc = [&](Graph& gg, int x) { return state.nets.gl.forward(gg, bgl, x); };
    NetFn<float> logit = [&](Graph& gg, int zz) {
      return state.nets.dl.forward_logit(gg, bdl, zz);
    };
    // The cycle term sees the same generated batch (x_hat = G_v(z)).
    NetFn<float> gen_fixed = [&](Graph&, int) { return xh; };

    const int l_gl =
        latent_generator_loss_node(g, logit, enc, xh, static_cast<float>(cfg.loss.alpha));
    const int l_mse = latent_cycle_mse_node(g, enc, gen_fixed, g.leaf(z),
                                            static_cast<float>(cfg.loss.beta));
    const int loss = g.add(l_gl, l_mse);
    const auto grads = g.backward(loss, bgl.ids);
    state.opt_gl.step(state.nets.gl.params(), grad_ptrs(g, grads));
    rep.l_gl = static_cast<double>(g.scalar_value(l_gl));
    rep.l_mse = static_cast<double>(g.scalar_value(l_mse));
  }

  state.iteration += 1;
  if (!rep.finite()) throw TrainAbort("non-finite loss in phase-2 step");
  check_state_finite(state);
  return rep;
}

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

namespace {

void pack_params(const ParameterSet& ps, std::vector<std::pair<std::string, Tensor>>& arrays) {
  for (std::size_t i = 0; i < ps.size(); ++i)
    arrays.emplace_back(ps.name(static_cast<int>(i)), ps.tensor(static_cast<int>(i)));
}

void pack_moments(const Adam& opt, const ParameterSet& ps,
                  std::vector<std::pair<std::string, Tensor>>& arrays) {
  if (opt.moment_count() == 0) return;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    arrays.emplace_back("m1." + ps.name(static_cast<int>(i)), opt.m(static_cast<int>(i)));
    arrays.emplace_back("m2." + ps.name(static_cast<int>(i)), opt.v(static_cast<int>(i)));
  }
}

void unpack_params(const CheckpointData& data, ParameterSet& ps) {
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const std::string& name = ps.name(static_cast<int>(i));
    const Tensor* t = data.find(name);
    if (!t) throw IoError("checkpoint is missing array '" + name + "'");
    if (t->shape != ps.tensor(static_cast<int>(i)).shape)
      throw IoError("checkpoint array '" + name + "' has shape " + shape_str(t->shape) +
                    ", expected " + shape_str(ps.tensor(static_cast<int>(i)).shape));
    ps.tensor(static_cast<int>(i)) = *t;
  }
}

void unpack_moments(const CheckpointData& data, const ParameterSet& ps, Adam& opt,
                    const std::string& t_key) {
  auto it = data.extra.find(t_key);
  const std::int64_t t = it == data.extra.end() ? 0 : std::stoll(it->second);
  if (t == 0) return;
  std::vector<Tensor> m, v;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Tensor* tm = data.find("m1." + ps.name(static_cast<int>(i)));
    const Tensor* tv = data.find("m2." + ps.name(static_cast<int>(i)));
    if (!tm || !tv)
      throw IoError("checkpoint is missing optimizer moments for " +
                    ps.name(static_cast<int>(i)));
    m.push_back(*tm);
    v.push_back(*tv);
  }
  opt.restore(std::move(m), std::move(v), t);
}

}  // namespace

void save_train_checkpoint(const TrainState& state, const std::string& path) {
  CheckpointData data;
  data.method = "adgan";
  data.iteration = state.iteration;
  data.seed = state.config.seed;
  data.config_json = train_config_json(state.config);
  data.extra["adam_t.gv"] = std::to_string(state.opt_gv.t());
  data.extra["adam_t.dv"] = std::to_string(state.opt_dv.t());
  data.extra["adam_t.gl"] = std::to_string(state.opt_gl.t());
  data.extra["adam_t.dl"] = std::to_string(state.opt_dl.t());
  pack_params(state.nets.gv.params(), data.arrays);
  pack_params(state.nets.dv.params(), data.arrays);
  pack_params(state.nets.gl.params(), data.arrays);
  pack_params(state.nets.dl.params(), data.arrays);
  pack_moments(state.opt_gv, state.nets.gv.params(), data.arrays);
  pack_moments(state.opt_dv, state.nets.dv.params(), data.arrays);
  pack_moments(state.opt_gl, state.nets.gl.params(), data.arrays);
  pack_moments(state.opt_dl, state.nets.dl.params(), data.arrays);
  save_checkpoint_file(path, data);
}

TrainState load_train_checkpoint(const std::string& path) {
  const CheckpointData data = load_checkpoint_file(path);
  if (data.method != "adgan")
    throw IoError("checkpoint method '" + data.method + "' is not an adgan checkpoint");
  TrainState state = init_train_state(parse_train_config(data.config_json));
  state.iteration = data.iteration;
  unpack_params(data, state.nets.gv.params());
  unpack_params(data, state.nets.dv.params());
  unpack_params(data, state.nets.gl.params());
  unpack_params(data, state.nets.dl.params());
  unpack_moments(data, state.nets.gv.params(), state.opt_gv, "adam_t.gv");
  unpack_moments(data, state.nets.dv.params(), state.opt_dv, "adam_t.dv");
  unpack_moments(data, state.nets.gl.params(), state.opt_gl, "adam_t.gl");
  unpack_moments(data, state.nets.dl.params(), state.opt_dl, "adam_t.dl");
  return state;
}

// ---------------------------------------------------------------------------
// Full schedule
// ---------------------------------------------------------------------------

namespace {

std::string checkpoint_name(std::int64_t iteration) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ckpt_%08lld.adgan", static_cast<long long>(iteration));
  return buf;
}

void append_metrics_row(std::ofstream& out, std::int64_t iteration, TrainPhase phase,
                        const LossReport& rep, std::int64_t wall_ms) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%lld",
                static_cast<long long>(iteration), phase_name(phase), rep.l_dv, rep.l_gv,
                rep.l_dl, rep.l_gl, rep.l_mse, static_cast<long long>(wall_ms));
  out << buf << '\n';
  out.flush();
}

}  // namespace

TrainOutcome train(const TrainConfig& cfg_in, const DatasetSplit& train_split,
                   const std::string& out_dir, const std::string& resume_checkpoint) {
  const TrainConfig cfg = validate_config(cfg_in);
  if (train_split.empty()) throw ConfigError("train: empty training split");

  fs::create_directories(fs::path(out_dir) / "checkpoints");
  const std::string metrics_path = (fs::path(out_dir) / "metrics.csv").string();

  TrainState state;
  bool fresh = resume_checkpoint.empty();
  if (fresh) {
    state = init_train_state(cfg);
  } else {
    state = load_train_checkpoint(resume_checkpoint);
    if (train_config_json(state.config) != train_config_json(cfg))
      throw ConfigError("resume checkpoint was trained with a different config");
  }

  std::ofstream metrics(metrics_path, fresh ? std::ios::trunc : std::ios::app);
  if (!metrics) throw IoError("cannot open metrics log: " + metrics_path);
  if (fresh) metrics << "iteration,phase,l_dv,l_gv,l_dl,l_gl,l_mse,wall_ms\n";

  BatchIterator batches(train_split, cfg.batch_size,
                        derive_seed(static_cast<std::uint64_t>(cfg.seed), "data"),
                        /*shuffle=*/true, /*drop_last=*/true);
  const int bpe = batches.batches_per_epoch();
  batches.seek(state.iteration / bpe,
               (state.iteration % bpe) * static_cast<std::int64_t>(cfg.batch_size));

  TrainOutcome outcome;
  outcome.metrics_path = metrics_path;

  while (state.iteration < cfg.total_iters) {
    const Tensor batch = batches.next();
    const auto t0 = std::chrono::steady_clock::now();
    const TrainPhase phase = state.phase();
    LossReport rep;
    try {
      rep = phase == TrainPhase::kVisualOnly ? train_step_phase1(state, batch)
                                             : train_step_phase2(state, batch);
    } catch (const TrainAbort&) {
      const std::string diag =
          (fs::path(out_dir) / "checkpoints" / ("diag_" + checkpoint_name(state.iteration)))
              .string();
      save_train_checkpoint(state, diag);
      throw;
    }
    const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
    append_metrics_row(metrics, state.iteration, phase, rep, wall_ms);
    outcome.last_losses = rep;

    if (state.iteration % cfg.checkpoint_interval == 0 || state.iteration == cfg.total_iters) {
      const std::string path =
          (fs::path(out_dir) / "checkpoints" / checkpoint_name(state.iteration)).string();
      save_train_checkpoint(state, path);
      outcome.checkpoints.push_back(path);
    }
  }

  const std::string final_path =
      (fs::path(out_dir) / "checkpoints" / checkpoint_name(cfg.total_iters)).string();
  if (outcome.checkpoints.empty() || outcome.checkpoints.back() != final_path) {
    save_train_checkpoint(state, final_path);
    outcome.checkpoints.push_back(final_path);
  }
  outcome.final_checkpoint = final_path;
  return outcome;
}

// ---------------------------------------------------------------------------
// Hyperparameter sweep
// ---------------------------------------------------------------------------

SweepResult select_hyperparams(const TrainConfig& cfg_in, const DatasetSplit& train_split,
                               const DatasetSplit& validation,
                               const std::vector<std::pair<double, double>>& grid,
                               const std::string& out_dir) {
  if (grid.empty()) throw ConfigError("hyperparameter sweep: empty grid");
  if (validation.empty()) throw ConfigError("hyperparameter sweep: empty validation split");
  for (const auto& ex : validation.examples)
    if (ex.label != Label::kNormal)
      throw ConfigError("hyperparameter sweep: validation split must be all-normal");

  auto sorted = grid;
  std::sort(sorted.begin(), sorted.end());

  SweepResult result;
  double best = 0.0;
  bool have_best = false;

  for (const auto& [alpha, beta] : sorted) {
    TrainConfig cfg = cfg_in;
    cfg.loss.alpha = alpha;
    cfg.loss.beta = beta;
    validate_config(cfg);

    char tag[64];
    std::snprintf(tag, sizeof(tag), "sweep_a%g_b%g", alpha, beta);
    const std::string run_dir = (fs::path(out_dir) / tag).string();
    const TrainOutcome run = train(cfg, train_split, run_dir);

    const TrainState state = load_train_checkpoint(run.final_checkpoint);
    const auto scored = score_dataset(validation, state.nets.gl, state.nets.gv);
    double mean = 0.0;
    for (const auto& se : scored) mean += se.score;
    mean /= static_cast<double>(scored.size());

    result.rows.push_back({alpha, beta, mean, run.final_checkpoint});
    if (!have_best || mean < best - 1e-12) {
      best = mean;
      result.alpha = alpha;
      result.beta = beta;
      have_best = true;
    }
  }

  const std::string report = (fs::path(out_dir) / "sweep_report.tsv").string();
  std::ofstream out(report, std::ios::trunc);
  if (!out) throw IoError("cannot write sweep report: " + report);
  out << "alpha\tbeta\tmean_validation_score\tcheckpoint\n";
  char buf[512];
  for (const auto& row : result.rows) {
    std::snprintf(buf, sizeof(buf), "%g\t%g\t%.17g\t%s", row.alpha, row.beta,
                  row.mean_validation_score, row.checkpoint_path.c_str());
    out << buf << '\n';
  }
  result.report_path = report;
  return result;
}

}  // namespace adgan
