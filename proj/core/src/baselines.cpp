#include "adgan/baselines.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "adgan/checkpoint.hpp"
#include "adgan/data.hpp"
#include "adgan/error.hpp"
#include "adgan/trainer.hpp"

namespace fs = std::filesystem;

namespace adgan {

const char* baseline_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::kDae: return "dae";
    case BaselineKind::kVae: return "vae";
    case BaselineKind::kFanoganIzi: return "fanogan-izi";
    case BaselineKind::kFanoganZiz: return "fanogan-ziz";
    case BaselineKind::kFanoganIzif: return "fanogan-izif";
  }
  return "?";
}

BaselineKind parse_baseline(const std::string& s) {
  if (s == "dae") return BaselineKind::kDae;
  if (s == "vae") return BaselineKind::kVae;
  if (s == "fanogan-izi" || s == "izi") return BaselineKind::kFanoganIzi;
  if (s == "fanogan-ziz" || s == "ziz") return BaselineKind::kFanoganZiz;
  if (s == "fanogan-izif" || s == "izif" || s == "fanogan") return BaselineKind::kFanoganIzif;
  throw ConfigError("unknown baseline '" + s + "'");
}

namespace {

void require_all_normal(const DatasetSplit& split, const char* what) {
  for (const auto& ex : split.examples)
    if (ex.label != Label::kNormal)
      throw ConfigError(std::string(what) + ": training split must be all-normal, found '" +
                        ex.source_id + "'");
}

std::uint64_t step_stream(const TrainConfig& cfg, const char* method, std::int64_t iteration,
                          const char* role) {
  return derive_seed(static_cast<std::uint64_t>(cfg.seed),
                     std::string(method) + ".iter" + std::to_string(iteration) + "." + role);
}

std::vector<const Tensor*> grad_ptrs(const Graph& g, const std::vector<int>& ids) {
  std::vector<const Tensor*> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(&g.value(id));
  return out;
}

struct MetricsLog {
  std::ofstream out;
  explicit MetricsLog(const std::string& dir, const char* header) {
    fs::create_directories(dir);
    out.open((fs::path(dir) / "metrics.csv").string(), std::ios::trunc);
    if (!out) throw IoError("cannot open baseline metrics log under " + dir);
    out << header << '\n';
  }
  void row(std::int64_t iteration, const char* stage, double loss, std::int64_t wall_ms) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%lld,%s,%.17g,%lld", static_cast<long long>(iteration),
                  stage, loss, static_cast<long long>(wall_ms));
    out << buf << '\n';
  }
};

// Column selectors splitting a (N,2Z) encoder output into mean / log-variance
// halves without a dedicated slice op.
Tensor selector_matrix(int two_z, bool second_half) {
  const int z = two_z / 2;
  Tensor m({two_z, z}, 0.0f);
  for (int i = 0; i < z; ++i) m[(second_half ? z + i : i) * static_cast<std::int64_t>(z) + i] = 1.0f;
  return m;
}

Tensor encode_mean(const ImageTensor& x, const EncoderDecoder& model) {
  Graph g;
  const auto benc = model.encoder.bind(g);
  Tensor batch({1, 3, x.size(), x.size()});
  std::copy(x.pixels.data.begin(), x.pixels.data.end(), batch.data.begin());
  const int out = model.encoder.forward(g, benc, g.leaf(batch));
  if (!model.variational) return g.value(out);
  const int mu = g.matmul(out, g.leaf(selector_matrix(2 * model.arch.latent_dim, false)));
  return g.value(mu);
}

double decode_and_score(const Tensor& z_row, const ImageTensor& x, const VisualGenerator& dec,
                        ScoreReduction reduction) {
  Graph g;
  const auto bdec = dec.bind(g);
  const int xr = dec.forward(g, bdec, g.leaf(z_row));
  const auto& recon = g.value(xr);
  double acc = 0.0;
  for (std::int64_t i = 0; i < recon.numel(); ++i) {
    const double d = static_cast<double>(x.pixels[i]) - static_cast<double>(recon[i]);
    acc += d * d;
  }
  return reduction == ScoreReduction::kMean ? acc / static_cast<double>(recon.numel()) : acc;
}

}  // namespace

// ---------------------------------------------------------------------------
// DAE
// ---------------------------------------------------------------------------

EncoderDecoder train_dae(const TrainConfig& cfg_in, const DatasetSplit& train_split,
                         const std::string& out_dir) {
  const TrainConfig cfg = validate_config(cfg_in);
  require_all_normal(train_split, "dae");

  EncoderDecoder model;
  model.arch = ArchConfig::make(cfg.image_size, cfg.latent_dim, cfg.filter_scale);
  Rng renc(derive_seed(static_cast<std::uint64_t>(cfg.seed), "dae.enc"));
  Rng rdec(derive_seed(static_cast<std::uint64_t>(cfg.seed), "dae.dec"));
  model.encoder = LatentGenerator(model.arch, renc);
  model.decoder = VisualGenerator(model.arch, rdec);

  Adam opt_enc(cfg.learning_rate, cfg.adam_beta1_latent, cfg.adam_beta2_latent);
  Adam opt_dec(cfg.learning_rate, cfg.adam_beta1_latent, cfg.adam_beta2_latent);

  BatchIterator batches(train_split, cfg.batch_size,
                        derive_seed(static_cast<std::uint64_t>(cfg.seed), "data"), true, true);
  MetricsLog log(out_dir, "iteration,stage,loss,wall_ms");

  for (std::int64_t it = 0; it < cfg.total_iters; ++it) {
    const Tensor batch = batches.next();
    const auto t0 = std::chrono::steady_clock::now();

    Graph g;
    const auto benc = model.encoder.bind(g);
    const auto bdec = model.decoder.bind(g);
    const int x = g.leaf(batch);
    const int z = model.encoder.forward(g, benc, x);
    const int xr = model.decoder.forward(g, bdec, z);
    const int loss = g.mean_all(g.mul(g.sub(x, xr), g.sub(x, xr)));

    std::vector<int> wrt = benc.ids;
    wrt.insert(wrt.end(), bdec.ids.begin(), bdec.ids.end());
    const auto grads = g.backward(loss, wrt);
    const std::vector<int> genc(grads.begin(), grads.begin() + static_cast<std::ptrdiff_t>(benc.ids.size()));
    const std::vector<int> gdec(grads.begin() + static_cast<std::ptrdiff_t>(benc.ids.size()), grads.end());
    opt_enc.step(model.encoder.params(), grad_ptrs(g, genc));
    opt_dec.step(model.decoder.params(), grad_ptrs(g, gdec));

    const double lval = static_cast<double>(g.scalar_value(loss));
    if (!std::isfinite(lval) || !model.encoder.params().finite() ||
        !model.decoder.params().finite())
      throw TrainAbort("dae: non-finite loss or parameter at iteration " + std::to_string(it + 1));
    log.row(it + 1, "ae",
            lval,
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0)
                .count());
  }

  save_encoder_decoder(model, "dae", cfg, cfg.total_iters,
                       (fs::path(out_dir) / "checkpoints" / "final.adgan").string());
  return model;
}

double score_dae(const ImageTensor& x, const EncoderDecoder& model, ScoreReduction reduction) {
  return decode_and_score(encode_mean(x, model), x, model.decoder, reduction);
}

ImageTensor reconstruct_autoencoder(const ImageTensor& x, const EncoderDecoder& model) {
  Graph g;
  const auto bdec = model.decoder.bind(g);
  const int xr = model.decoder.forward(g, bdec, g.leaf(encode_mean(x, model)));
  ImageTensor out;
  out.pixels = Tensor({3, x.size(), x.size()});
  const auto& v = g.value(xr);
  std::copy(v.data.begin(), v.data.end(), out.pixels.data.begin());
  return out;
}

ImageTensor reconstruct_fanogan(const ImageTensor& x, const FanoganModel& model) {
  Graph g;
  const auto benc = model.encoder.bind(g);
  const auto bgv = model.gv.bind(g);
  Tensor batch({1, 3, x.size(), x.size()});
  std::copy(x.pixels.data.begin(), x.pixels.data.end(), batch.data.begin());
  const int z = model.encoder.forward(g, benc, g.leaf(batch));
  const int xr = model.gv.forward(g, bgv, z);
  ImageTensor out;
  out.pixels = Tensor({3, x.size(), x.size()});
  const auto& v = g.value(xr);
  std::copy(v.data.begin(), v.data.end(), out.pixels.data.begin());
  return out;
}

// ---------------------------------------------------------------------------
// VAE
// ---------------------------------------------------------------------------

template <typename T>
int vae_kl_node(GraphT<T>& g, int mu, int logvar) {
  const int mu2 = g.mul(mu, mu);
  const int var = g.exp_(logvar);
  const int inner = g.add_scalar(g.sub(g.add(mu2, var), logvar), T(-1));
  return g.scale(g.mean_all(g.sum_rows(inner)), T(0.5));
}

EncoderDecoder train_vae(const TrainConfig& cfg_in, const DatasetSplit& train_split,
                         const std::string& out_dir) {
  const TrainConfig cfg = validate_config(cfg_in);
  require_all_normal(train_split, "vae");

  EncoderDecoder model;
  model.variational = true;
  model.arch = ArchConfig::make(cfg.image_size, cfg.latent_dim, cfg.filter_scale);
  ArchConfig enc_arch = ArchConfig::make(cfg.image_size, 2 * cfg.latent_dim, cfg.filter_scale);
  Rng renc(derive_seed(static_cast<std::uint64_t>(cfg.seed), "vae.enc"));
  Rng rdec(derive_seed(static_cast<std::uint64_t>(cfg.seed), "vae.dec"));
  model.encoder = LatentGenerator(enc_arch, renc);
  model.decoder = VisualGenerator(model.arch, rdec);

  Adam opt_enc(cfg.learning_rate, cfg.adam_beta1_latent, cfg.adam_beta2_latent);
  Adam opt_dec(cfg.learning_rate, cfg.adam_beta1_latent, cfg.adam_beta2_latent);

  BatchIterator batches(train_split, cfg.batch_size,
                        derive_seed(static_cast<std::uint64_t>(cfg.seed), "data"), true, true);
  MetricsLog log(out_dir, "iteration,stage,loss,wall_ms");

  const Tensor p_mu = selector_matrix(2 * cfg.latent_dim, false);
  const Tensor p_lv = selector_matrix(2 * cfg.latent_dim, true);

  for (std::int64_t it = 0; it < cfg.total_iters; ++it) {
    const Tensor batch = batches.next();
    const auto t0 = std::chrono::steady_clock::now();
    const int b = batch.dim(0);

    Tensor noise({b, cfg.latent_dim});
    {
      Rng rng(step_stream(cfg, "vae", it, "noise"));
      for (auto& v : noise.data) v = static_cast<float>(rng.normal());
    }

    Graph g;
    const auto benc = model.encoder.bind(g);
    const auto bdec = model.decoder.bind(g);
    const int x = g.leaf(batch);
    const int enc_out = model.encoder.forward(g, benc, x);  // (N, 2Z)
    const int mu = g.matmul(enc_out, g.leaf(p_mu));
    const int logvar = g.matmul(enc_out, g.leaf(p_lv));
    const int sigma = g.exp_(g.scale(logvar, 0.5f));
    const int z = g.add(mu, g.mul(sigma, g.leaf(noise)));
    const int xr = model.decoder.forward(g, bdec, z);

    const int recon = g.scale(g.mean_all(g.sumsq_rows(g.sub(x, xr))), 0.5f);
    const int kl = vae_kl_node(g, mu, logvar);
    const int loss = g.add(recon, kl);

    std::vector<int> wrt = benc.ids;
    wrt.insert(wrt.end(), bdec.ids.begin(), bdec.ids.end());
    const auto grads = g.backward(loss, wrt);
    const std::vector<int> genc(grads.begin(), grads.begin() + static_cast<std::ptrdiff_t>(benc.ids.size()));
    const std::vector<int> gdec(grads.begin() + static_cast<std::ptrdiff_t>(benc.ids.size()), grads.end());
    opt_enc.step(model.encoder.params(), grad_ptrs(g, genc));
    opt_dec.step(model.decoder.params(), grad_ptrs(g, gdec));

    const double lval = static_cast<double>(g.scalar_value(loss));
    if (!std::isfinite(lval) || !model.encoder.params().finite() ||
        !model.decoder.params().finite())
      throw TrainAbort("vae: non-finite loss or parameter at iteration " + std::to_string(it + 1));
    log.row(it + 1, "elbo",
            lval,
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0)
                .count());
  }

  save_encoder_decoder(model, "vae", cfg, cfg.total_iters,
                       (fs::path(out_dir) / "checkpoints" / "final.adgan").string());
  return model;
}

double score_vae(const ImageTensor& x, const EncoderDecoder& model, ScoreReduction reduction) {
  return decode_and_score(encode_mean(x, model), x, model.decoder, reduction);
}

// ---------------------------------------------------------------------------
// f-AnoGAN
// ---------------------------------------------------------------------------

FanoganModel train_fanogan(const TrainConfig& cfg_in, const DatasetSplit& train_split,
                           const std::string& out_dir) {
  const TrainConfig cfg = validate_config(cfg_in);
  require_all_normal(train_split, "fanogan");

  // Stage 1: the visual pair, bit-for-bit the phase-1 schedule.
  TrainState state = init_train_state(cfg);
  BatchIterator batches(train_split, cfg.batch_size,
                        derive_seed(static_cast<std::uint64_t>(cfg.seed), "data"), true, true);
  MetricsLog log(out_dir, "iteration,stage,loss,wall_ms");

  while (state.iteration < cfg.phase1_iters) {
    const Tensor batch = batches.next();
    const auto t0 = std::chrono::steady_clock::now();
    const LossReport rep = train_step_phase1(state, batch);
    log.row(state.iteration, "wgan",
            rep.l_dv,
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0)
                .count());
  }

  FanoganModel model;
  model.arch = state.arch;
  model.gv = state.nets.gv;
  model.dv = state.nets.dv;
  Rng renc(derive_seed(static_cast<std::uint64_t>(cfg.seed), "fanogan.enc"));
  model.encoder = LatentGenerator(model.arch, renc);

  Adam opt_enc(cfg.learning_rate, cfg.adam_beta1_latent, cfg.adam_beta2_latent);

  // Stage 2: encoder fitted on generated batches; G_v and D_v frozen.
  for (std::int64_t it = cfg.phase1_iters; it < cfg.total_iters; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    Tensor z({cfg.batch_size, cfg.latent_dim});
    {
      Rng rng(step_stream(cfg, "fanogan", it, "z"));
      for (auto& v : z.data) v = rng.uniform_f(-1.0f, 1.0f);
    }
    Tensor x_hat;
    {
      Graph gf;
      const auto bgv = model.gv.bind(gf);
      x_hat = gf.value(model.gv.forward(gf, bgv, gf.leaf(z)));
    }

    Graph g;
    const auto benc = model.encoder.bind(g);
    const auto bgv = model.gv.bind(g);
    const auto bdv = model.dv.bind(g);
    const int xh = g.leaf(x_hat);
    const int e = model.encoder.forward(g, benc, xh);
    const int xrec = model.gv.forward(g, bgv, e);
    const auto [score_h, feat_h] = model.dv.forward_with_features(g, bdv, xh);
    const auto [score_r, feat_r] = model.dv.forward_with_features(g, bdv, xrec);
    (void)score_h;
    (void)score_r;

    const int izi = g.mean_all(g.sumsq_rows(g.sub(xh, xrec)));
    const int feat = g.mean_all(g.sumsq_rows(g.sub(feat_h, feat_r)));
    const int loss = g.add(izi, g.scale(feat, static_cast<float>(model.kappa)));

    const auto grads = g.backward(loss, benc.ids);
    opt_enc.step(model.encoder.params(), grad_ptrs(g, grads));

    const double lval = static_cast<double>(g.scalar_value(loss));
    if (!std::isfinite(lval) || !model.encoder.params().finite())
      throw TrainAbort("fanogan: non-finite loss or parameter at iteration " +
                       std::to_string(it + 1));
    log.row(it + 1, "encoder",
            lval,
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - t0)
                .count());
  }

  save_fanogan(model, cfg, cfg.total_iters,
               (fs::path(out_dir) / "checkpoints" / "final.adgan").string());
  return model;
}

double score_fanogan(const ImageTensor& x, const FanoganModel& model, BaselineKind variant,
                     ScoreReduction reduction) {
  const int s = x.size();
  Graph g;
  const auto benc = model.encoder.bind(g);
  const auto bgv = model.gv.bind(g);
  Tensor batch({1, 3, s, s});
  std::copy(x.pixels.data.begin(), x.pixels.data.end(), batch.data.begin());
  const int xin = g.leaf(batch);
  const int z = model.encoder.forward(g, benc, xin);
  const int xrec = model.gv.forward(g, bgv, z);

  auto sumsq = [&](int a, int b) {
    const auto& va = g.value(a);
    const auto& vb = g.value(b);
    double acc = 0.0;
    for (std::int64_t i = 0; i < va.numel(); ++i) {
      const double d = static_cast<double>(va[i]) - static_cast<double>(vb[i]);
      acc += d * d;
    }
    return reduction == ScoreReduction::kMean ? acc / static_cast<double>(va.numel()) : acc;
  };

  switch (variant) {
    case BaselineKind::kFanoganIzi:
      return sumsq(xin, xrec);
    case BaselineKind::kFanoganZiz: {
      const int z2 = model.encoder.forward(g, benc, xrec);
      return sumsq(z, z2);
    }
    case BaselineKind::kFanoganIzif: {
      const auto bdv = model.dv.bind(g);
      const auto [s1, f1] = model.dv.forward_with_features(g, bdv, xin);
      const auto [s2, f2] = model.dv.forward_with_features(g, bdv, xrec);
      (void)s1;
      (void)s2;
      return sumsq(xin, xrec) + model.kappa * sumsq(f1, f2);
    }
    default:
      throw ConfigError("score_fanogan: variant must be izi, ziz or izif");
  }
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

void pack(const ParameterSet& ps, std::vector<std::pair<std::string, Tensor>>& arrays) {
  for (std::size_t i = 0; i < ps.size(); ++i)
    arrays.emplace_back(ps.name(static_cast<int>(i)), ps.tensor(static_cast<int>(i)));
}

void unpack(const CheckpointData& data, ParameterSet& ps) {
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Tensor* t = data.find(ps.name(static_cast<int>(i)));
    if (!t) throw IoError("checkpoint is missing array '" + ps.name(static_cast<int>(i)) + "'");
    ps.tensor(static_cast<int>(i)) = *t;
  }
}

}  // namespace

void save_encoder_decoder(const EncoderDecoder& model, const std::string& method,
                          const TrainConfig& cfg, std::int64_t iteration,
                          const std::string& path) {
  fs::create_directories(fs::path(path).parent_path());
  CheckpointData data;
  data.method = method;
  data.iteration = iteration;
  data.seed = cfg.seed;
  data.config_json = train_config_json(cfg);
  pack(model.encoder.params(), data.arrays);
  pack(model.decoder.params(), data.arrays);
  save_checkpoint_file(path, data);
}

EncoderDecoder load_encoder_decoder(const std::string& path) {
  const CheckpointData data = load_checkpoint_file(path);
  if (data.method != "dae" && data.method != "vae")
    throw IoError("checkpoint method '" + data.method + "' is not an auto-encoder");
  const TrainConfig cfg = parse_train_config(data.config_json);

  EncoderDecoder model;
  model.variational = data.method == "vae";
  model.arch = ArchConfig::make(cfg.image_size, cfg.latent_dim, cfg.filter_scale);
  const ArchConfig enc_arch = ArchConfig::make(
      cfg.image_size, model.variational ? 2 * cfg.latent_dim : cfg.latent_dim, cfg.filter_scale);
  Rng tmp(0);
  model.encoder = LatentGenerator(enc_arch, tmp);
  model.decoder = VisualGenerator(model.arch, tmp);
  unpack(data, model.encoder.params());
  unpack(data, model.decoder.params());
  return model;
}

void save_fanogan(const FanoganModel& model, const TrainConfig& cfg, std::int64_t iteration,
                  const std::string& path) {
  fs::create_directories(fs::path(path).parent_path());
  CheckpointData data;
  data.method = "fanogan";
  data.iteration = iteration;
  data.seed = cfg.seed;
  data.config_json = train_config_json(cfg);
  data.extra["kappa"] = std::to_string(model.kappa);
  pack(model.gv.params(), data.arrays);
  pack(model.dv.params(), data.arrays);
  pack(model.encoder.params(), data.arrays);
  save_checkpoint_file(path, data);
}

FanoganModel load_fanogan(const std::string& path) {
  const CheckpointData data = load_checkpoint_file(path);
  if (data.method != "fanogan")
    throw IoError("checkpoint method '" + data.method + "' is not fanogan");
  const TrainConfig cfg = parse_train_config(data.config_json);

  FanoganModel model;
  model.arch = ArchConfig::make(cfg.image_size, cfg.latent_dim, cfg.filter_scale);
  Rng tmp(0);
  model.gv = VisualGenerator(model.arch, tmp);
  model.dv = VisualDiscriminator(model.arch, tmp);
  model.encoder = LatentGenerator(model.arch, tmp);
  if (auto it = data.extra.find("kappa"); it != data.extra.end())
    model.kappa = std::stod(it->second);
  unpack(data, model.gv.params());
  unpack(data, model.dv.params());
  unpack(data, model.encoder.params());
  return model;
}

template int vae_kl_node<float>(GraphT<float>&, int, int);
template int vae_kl_node<double>(GraphT<double>&, int, int);

}  // namespace adgan
