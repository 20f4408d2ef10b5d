// adgan: one-class anomaly detection on image corpora.
//
// Subcommands: synth (generate a synthetic corpus), train (fit a model),
// score (anomaly scores for a split), eval (ROC/AUC benchmark report),
// sweep (alpha/beta selection on the validation split).
//
// Exit codes: 0 success, 1 usage/config error, 2 runtime abort (training
// halted on a non-finite value).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adgan/baselines.hpp"
#include "adgan/checkpoint.hpp"
#include "adgan/data.hpp"
#include "adgan/error.hpp"
#include "adgan/eval.hpp"
#include "adgan/scoring.hpp"
#include "adgan/store.hpp"
#include "adgan/trainer.hpp"

namespace fs = std::filesystem;
using namespace adgan;

namespace {

DatasetSplit& pick_split(SplitTriple& triple, const std::string& name) {
  switch (parse_split(name)) {
    case SplitKind::kTrain: return triple.train;
    case SplitKind::kValidation: return triple.validation;
    case SplitKind::kTest: return triple.test;
  }
  throw ConfigError("unknown split: " + name);
}

std::vector<double> parse_grid_axis(const std::string& csv, const char* what) {
  std::vector<double> out;
  std::string token;
  std::istringstream ss(csv);
  while (std::getline(ss, token, ',')) {
    try {
      out.push_back(std::stod(token));
    } catch (const std::exception&) {
      throw ConfigError(std::string("bad ") + what + " value '" + token + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string("empty ") + what + " grid");
  return out;
}

int run_synth(const std::string& out_dir, SynthConfig cfg, bool force) {
  const std::string out = resolve_out_dir(out_dir);
  ensure_fresh_dir(out, force);
  const int rows = synth_write(cfg, out);
  std::printf("wrote %d manifest rows under %s\n", rows, out.c_str());
  return 0;
}

int run_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, const std::string& method, const std::string& resume,
              bool force) {
  const TrainConfig cfg = load_train_config(config_path);
  const std::string out = resolve_out_dir(out_dir);
  prepare_experiment_dir(out, cfg, force || !resume.empty());
  SplitTriple data = ingest_folder(data_dir, cfg.image_size);
  if (data.train.empty()) throw ConfigError("training split is empty in " + data_dir);

  if (method == "adgan") {
    const auto outcome = train(cfg, data.train, out, resume);
    std::printf("final checkpoint: %s\n", outcome.final_checkpoint.c_str());
  } else if (method == "dae") {
    train_dae(cfg, data.train, out);
  } else if (method == "vae") {
    train_vae(cfg, data.train, out);
  } else if (method == "fanogan") {
    train_fanogan(cfg, data.train, out);
  } else {
    throw ConfigError("unknown --method '" + method + "' (adgan|dae|vae|fanogan)");
  }
  return 0;
}

int run_score(const std::string& checkpoint, const std::string& data_dir,
              const std::string& split_name, const std::string& out_file,
              bool dump_reconstructions, const std::string& recon_dir_flag,
              const std::string& reduction_name, const std::string& variant) {
  if (reduction_name != "mean" && reduction_name != "sum")
    throw ConfigError("--score-reduction must be sum or mean");
  const ScoreReduction reduction =
      reduction_name == "mean" ? ScoreReduction::kMean : ScoreReduction::kSum;

  const CheckpointData header = load_checkpoint_file(checkpoint);
  const TrainConfig cfg = parse_train_config(header.config_json);
  SplitTriple data = ingest_folder(data_dir, cfg.image_size);
  const DatasetSplit& split = pick_split(data, split_name);

  std::string method = header.method;
  std::vector<ScoredExample> scored;
  std::vector<ImageTensor> recons;

  if (header.method == "adgan") {
    const TrainState state = load_train_checkpoint(checkpoint);
    scored = score_dataset(split, state.nets.gl, state.nets.gv, dump_reconstructions, reduction);
  } else if (header.method == "dae" || header.method == "vae") {
    const EncoderDecoder model = load_encoder_decoder(checkpoint);
    const bool is_dae = header.method == "dae";
    scored = score_split(split, [&](const ImageTensor& x) {
      return is_dae ? score_dae(x, model, reduction) : score_vae(x, model, reduction);
    });
    if (dump_reconstructions)
      for (const auto& ex : split.examples) recons.push_back(reconstruct_autoencoder(ex.image, model));
  } else if (header.method == "fanogan") {
    const FanoganModel model = load_fanogan(checkpoint);
    const BaselineKind kind = parse_baseline(variant);
    method = baseline_name(kind);
    scored = score_split(
        split, [&](const ImageTensor& x) { return score_fanogan(x, model, kind, reduction); });
    if (dump_reconstructions)
      for (const auto& ex : split.examples) recons.push_back(reconstruct_fanogan(ex.image, model));
  } else {
    throw ConfigError("unsupported checkpoint method: " + header.method);
  }

  if (!fs::path(out_file).parent_path().empty())
    fs::create_directories(fs::path(out_file).parent_path());
  write_scores_with_meta(out_file, scored,
                         {{"method", method},
                          {"config_hash", config_hash(cfg)},
                          {"seed", std::to_string(cfg.seed)},
                          {"reduction", reduction_name}});

  if (dump_reconstructions) {
    const std::string recon_dir =
        recon_dir_flag.empty() ? (fs::path(out_file).parent_path() / "reconstructions").string()
                               : recon_dir_flag;
    fs::create_directories(recon_dir);
    for (std::size_t i = 0; i < split.size(); ++i) {
      const auto& ex = split.examples[i];
      const ImageTensor& recon = header.method == "adgan" ? *scored[i].reconstruction : recons[i];
      const std::string stem = fs::path(ex.source_id).stem().string();
      write_triptych((fs::path(recon_dir) / (stem + "_triptych.png")).string(), ex.image, recon);
    }
  }
  std::printf("scored %zu examples -> %s\n", scored.size(), out_file.c_str());
  return 0;
}

int run_eval(const std::vector<std::string>& score_files, const std::string& report_path,
             bool roc_dump, bool roc_png) {
  std::vector<ReportEntry> entries;
  for (const auto& path : score_files) {
    const auto scored = read_scores(path);
    const auto meta = read_scores_meta(path);
    const std::string method =
        meta.count("method") ? meta.at("method") : fs::path(path).stem().string();
    const std::string hash = meta.count("config_hash") ? meta.at("config_hash") : "-";
    const std::int64_t seed = meta.count("seed") ? std::stoll(meta.at("seed")) : 0;
    entries.push_back(evaluate_scored(scored, method, path, hash, seed));

    if (roc_dump) write_roc_dump(path + ".roc", roc_curve(scored));
    if (roc_png) write_roc_png(path + ".roc.png", roc_curve(scored));
  }
  write_benchmark_report(report_path, entries);
  for (const auto& e : entries) std::printf("%s\tAUC=%.6f\n", e.method.c_str(), e.auc_value);
  std::printf("report: %s\n", report_path.c_str());
  return 0;
}

int run_sweep(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, const std::string& alphas_csv,
              const std::string& betas_csv, bool force) {
  const TrainConfig cfg = load_train_config(config_path);
  const std::string out = resolve_out_dir(out_dir);
  ensure_fresh_dir(out, force);
  SplitTriple data = ingest_folder(data_dir, cfg.image_size);

  const auto alphas = parse_grid_axis(alphas_csv, "alpha");
  const auto betas = parse_grid_axis(betas_csv, "beta");
  std::vector<std::pair<double, double>> grid;
  for (double a : alphas)
    for (double b : betas) grid.emplace_back(a, b);

  const SweepResult res = select_hyperparams(cfg, data.train, data.validation, grid, out);
  std::printf("selected alpha=%g beta=%g (report: %s)\n", res.alpha, res.beta,
              res.report_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adgan: one-class anomaly detection via dual-GAN reconstruction"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus (folder + manifest)");
  std::string synth_out;
  SynthConfig synth_cfg;
  bool synth_force = false;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--n-normal", synth_cfg.n_normal, "total normal images")->required();
  synth->add_option("--n-abnormal", synth_cfg.n_abnormal, "lesioned test images")->required();
  synth->add_option("--image-size", synth_cfg.image_size, "square image size");
  synth->add_option("--texture-scale", synth_cfg.texture_scale, "texture amplitude");
  synth->add_option("--lesion-radius-min", synth_cfg.lesion_radius_min, "min lesion radius px");
  synth->add_option("--lesion-radius-max", synth_cfg.lesion_radius_max, "max lesion radius px");
  synth->add_option("--lesion-contrast", synth_cfg.lesion_contrast, "additive lesion contrast");
  synth->add_option("--n-validation", synth_cfg.n_validation, "validation normals (-1 auto)");
  synth->add_option("--n-test-normal", synth_cfg.n_test_normal, "test normals (-1 auto)");
  synth->add_option("--seed", synth_cfg.seed, "corpus seed");
  synth->add_flag("--force", synth_force, "overwrite non-empty output directory");

  auto* tr = app.add_subcommand("train", "train a model on a manifest corpus");
  std::string tr_config, tr_data, tr_out, tr_method = "adgan", tr_resume;
  bool tr_force = false;
  tr->add_option("--config", tr_config, "JSON training config")->required();
  tr->add_option("--data", tr_data, "corpus directory (contains manifest.tsv)")->required();
  tr->add_option("--out", tr_out, "experiment output directory")->required();
  tr->add_option("--method", tr_method, "adgan|dae|vae|fanogan");
  tr->add_option("--resume", tr_resume, "checkpoint to resume from");
  tr->add_flag("--force", tr_force, "overwrite non-empty output directory");

  auto* sc = app.add_subcommand("score", "anomaly-score a split with a trained checkpoint");
  std::string sc_ckpt, sc_data, sc_split = "test", sc_out, sc_recon_dir, sc_reduction = "sum",
              sc_variant = "izif";
  bool sc_dump = false;
  sc->add_option("--checkpoint", sc_ckpt, "trained checkpoint")->required();
  sc->add_option("--data", sc_data, "corpus directory")->required();
  sc->add_option("--split", sc_split, "train|validation|test");
  sc->add_option("--out", sc_out, "scores file to write")->required();
  sc->add_flag("--dump-reconstructions", sc_dump, "write triptych panels");
  sc->add_option("--reconstructions-dir", sc_recon_dir, "triptych directory");
  sc->add_option("--score-reduction", sc_reduction, "sum|mean");
  sc->add_option("--variant", sc_variant, "fanogan scoring variant: izi|ziz|izif");

  auto* ev = app.add_subcommand("eval", "AUC benchmark report from scores files");
  std::vector<std::string> ev_scores;
  std::string ev_report;
  bool ev_roc_dump = false, ev_roc_png = false;
  ev->add_option("--scores", ev_scores, "scores file(s)")->required()->expected(-1);
  ev->add_option("--out", ev_report, "report path")->required();
  ev->add_flag("--roc-dump", ev_roc_dump, "write <scores>.roc fpr/tpr dumps");
  ev->add_flag("--roc-png", ev_roc_png, "render <scores>.roc.png curves");

  auto* sw = app.add_subcommand("sweep", "alpha/beta grid search on the validation split");
  std::string sw_config, sw_data, sw_out, sw_alphas = "0.1,1,10", sw_betas = "0.1,1,10";
  bool sw_force = false;
  sw->add_option("--config", sw_config, "JSON training config")->required();
  sw->add_option("--data", sw_data, "corpus directory")->required();
  sw->add_option("--out", sw_out, "sweep output directory")->required();
  sw->add_option("--alphas", sw_alphas, "comma-separated alpha grid");
  sw->add_option("--betas", sw_betas, "comma-separated beta grid");
  sw->add_flag("--force", sw_force, "overwrite non-empty output directory");

  try {
    app.parse(argc, argv);
    if (*synth) return run_synth(synth_out, synth_cfg, synth_force);
    if (*tr) return run_train(tr_config, tr_data, tr_out, tr_method, tr_resume, tr_force);
    if (*sc)
      return run_score(sc_ckpt, sc_data, sc_split, sc_out, sc_dump, sc_recon_dir, sc_reduction,
                       sc_variant);
    if (*ev) return run_eval(ev_scores, ev_report, ev_roc_dump, ev_roc_png);
    if (*sw) return run_sweep(sw_config, sw_data, sw_out, sw_alphas, sw_betas, sw_force);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const TrainAbort& e) {
    std::cerr << "training aborted: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
