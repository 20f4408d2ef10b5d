#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adgan/data.hpp"
#include "adgan/datamodel.hpp"
#include "adgan/losses.hpp"
#include "adgan/networks.hpp"
#include "adgan/optim.hpp"

namespace adgan {

// Phase flag follows the schedule: VisualOnly while iteration < T, Joint for
// the remaining N - T iterations.
enum class TrainPhase : std::uint8_t { kVisualOnly, kJoint };
const char* phase_name(TrainPhase p);

// Complete optimization state. All per-step randomness (latent draws, mix
// draws) is derived from (seed, iteration, role), so the state needs no
// mutable RNG and a resumed run replays the straight run bit for bit.
struct TrainState {
  TrainConfig config;
  ArchConfig arch;
  AdganNets nets;
  Adam opt_gv, opt_dv, opt_gl, opt_dl;
  std::int64_t iteration = 0;  // completed iterations in [0, N]

  TrainPhase phase() const {
    return iteration < config.phase1_iters ? TrainPhase::kVisualOnly : TrainPhase::kJoint;
  }
};

TrainState init_train_state(const TrainConfig& cfg);

// One visual-pair iteration: critic_steps critic updates then one generator
// update. The latent networks are untouched.
LossReport train_step_phase1(TrainState& state, const Tensor& real_batch);

// One joint iteration: the phase-1 updates plus a latent-discriminator update
// (real latents vs G_l(G_v(z))) and a latent-generator update driven by the
// adversarial term and the latent-cycle MSE.
LossReport train_step_phase2(TrainState& state, const Tensor& real_batch);

void save_train_checkpoint(const TrainState& state, const std::string& path);
TrainState load_train_checkpoint(const std::string& path);

struct TrainOutcome {
  std::string final_checkpoint;
  std::vector<std::string> checkpoints;
  std::string metrics_path;
  LossReport last_losses;
};

// Full schedule: T phase-1 + (N-T) phase-2 iterations, a metrics row per
// iteration, periodic checkpoints plus the final one. Pass a checkpoint path
// to resume; the log is then appended and rows stay contiguous. A non-finite
// loss or parameter writes a diagnostic checkpoint and throws TrainAbort.
TrainOutcome train(const TrainConfig& cfg, const DatasetSplit& train_split,
                   const std::string& out_dir, const std::string& resume_checkpoint = "");

struct SweepRow {
  double alpha = 0.0;
  double beta = 0.0;
  double mean_validation_score = 0.0;
  std::string checkpoint_path;
};

struct SweepResult {
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<SweepRow> rows;
  std::string report_path;
};

// Trains one desk-scale model per (alpha, beta) grid point and returns the
// pair minimizing the mean anomaly score over the all-Normal validation
// split; ties within 1e-12 resolve to the lexicographically smaller pair.
SweepResult select_hyperparams(const TrainConfig& cfg, const DatasetSplit& train_split,
                               const DatasetSplit& validation,
                               const std::vector<std::pair<double, double>>& grid,
                               const std::string& out_dir);

}  // namespace adgan
