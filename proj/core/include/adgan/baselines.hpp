#pragma once

#include <cstdint>
#include <string>

#include "adgan/datamodel.hpp"
#include "adgan/graph.hpp"
#include "adgan/networks.hpp"
#include "adgan/scoring.hpp"

namespace adgan {

enum class BaselineKind { kDae, kVae, kFanoganIzi, kFanoganZiz, kFanoganIzif };

const char* baseline_name(BaselineKind k);
BaselineKind parse_baseline(const std::string& s);

// Encoder mirrors the latent generator, decoder the visual generator. The
// variational flavour doubles the encoder output into (mean, log-variance)
// heads.
struct EncoderDecoder {
  ArchConfig arch;          // decoder geometry (latent = Z)
  LatentGenerator encoder;  // -> Z, or 2Z when variational
  VisualGenerator decoder;
  bool variational = false;
};

// Plain auto-encoder trained on pixel MSE over the all-normal split.
EncoderDecoder train_dae(const TrainConfig& cfg, const DatasetSplit& train_split,
                         const std::string& out_dir);
double score_dae(const ImageTensor& x, const EncoderDecoder& model,
                 ScoreReduction reduction = ScoreReduction::kSum);

// Variational auto-encoder: unit-variance Gaussian likelihood plus the
// closed-form KL to the standard normal. Scores use the encoder mean, no
// sampling.
EncoderDecoder train_vae(const TrainConfig& cfg, const DatasetSplit& train_split,
                         const std::string& out_dir);
double score_vae(const ImageTensor& x, const EncoderDecoder& model,
                 ScoreReduction reduction = ScoreReduction::kSum);

// Closed-form KL( N(mu, exp(logvar)) || N(0, I) ) summed per example and
// averaged over the batch: 0.5 * sum(mu^2 + exp(lv) - 1 - lv).
template <typename T>
int vae_kl_node(GraphT<T>& g, int mu, int logvar);

// Two-stage method: stage 1 trains the visual pair exactly like the phase-1
// schedule; stage 2 freezes it and fits an encoder on generated images under
// the image + critic-feature reconstruction objective.
struct FanoganModel {
  ArchConfig arch;
  VisualGenerator gv;
  VisualDiscriminator dv;
  LatentGenerator encoder;
  double kappa = 1.0;  // weight of the critic-feature residual (izif)
};

FanoganModel train_fanogan(const TrainConfig& cfg, const DatasetSplit& train_split,
                           const std::string& out_dir);
double score_fanogan(const ImageTensor& x, const FanoganModel& model, BaselineKind variant,
                     ScoreReduction reduction = ScoreReduction::kSum);

// Reconstruction views for triptych dumps.
ImageTensor reconstruct_autoencoder(const ImageTensor& x, const EncoderDecoder& model);
ImageTensor reconstruct_fanogan(const ImageTensor& x, const FanoganModel& model);

// Checkpoint round-trips (same container as the main model, method field set).
void save_encoder_decoder(const EncoderDecoder& model, const std::string& method,
                          const TrainConfig& cfg, std::int64_t iteration,
                          const std::string& path);
EncoderDecoder load_encoder_decoder(const std::string& path);
void save_fanogan(const FanoganModel& model, const TrainConfig& cfg, std::int64_t iteration,
                  const std::string& path);
FanoganModel load_fanogan(const std::string& path);

extern template int vae_kl_node<float>(GraphT<float>&, int, int);
extern template int vae_kl_node<double>(GraphT<double>&, int, int);

}  // namespace adgan
