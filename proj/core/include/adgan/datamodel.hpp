#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adgan/tensor.hpp"

namespace adgan {

// Normalized RGB image, channel-first (3, H, W), values in [-1, 1], H == W.
struct ImageTensor {
  Tensor pixels;  // shape (3, size, size)

  int size() const { return pixels.rank() == 3 ? pixels.dim(1) : 0; }
  bool valid() const;
};

enum class Label : std::uint8_t { kNormal, kAbnormal };

const char* label_name(Label l);
Label parse_label(const std::string& s);  // "normal" | "abnormal"

struct LabeledExample {
  ImageTensor image;
  Label label = Label::kNormal;
  int patient_id = 0;
  std::string source_id;
};

enum class SplitKind : std::uint8_t { kTrain, kValidation, kTest };

const char* split_name(SplitKind s);
SplitKind parse_split(const std::string& s);  // "train" | "validation" | "test"

struct DatasetSplit {
  SplitKind kind = SplitKind::kTrain;
  std::vector<LabeledExample> examples;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
};

// Enforces: train split all-Normal, validation split all-Normal, and
// patient-disjointness between {train, validation} and test.
void check_split_invariants(const DatasetSplit& train, const DatasetSplit& validation,
                            const DatasetSplit& test);

struct LossConfig {
  double alpha = 1.0;      // latent-generator adversarial weight
  double beta = 1.0;       // latent-cycle MSE weight
  double lambda_gp = 10.0; // gradient-penalty weight
};

enum class GpAt : std::uint8_t { kInterpolates, kFakes };

const char* gp_at_name(GpAt g);

struct TrainConfig {
  std::int64_t total_iters = 100000;  // N
  std::int64_t phase1_iters = 80000;  // T, visual pair only
  int batch_size = 64;
  double learning_rate = 0.0001;
  double adam_beta1 = 0.0;            // visual pair
  double adam_beta2 = 0.9;
  double adam_beta1_latent = 0.5;     // latent pair
  double adam_beta2_latent = 0.999;
  int critic_steps = 5;
  int latent_dim = 128;
  std::int64_t seed = 0;
  LossConfig loss;

  // Artifact knobs beyond the core schedule.
  int image_size = 64;
  int filter_scale = 1;               // divides every filter/width ladder
  std::int64_t checkpoint_interval = 500;
  GpAt gp_at = GpAt::kInterpolates;
};

// Throws ConfigError naming the offending field; returns cfg when all
// invariants hold.
TrainConfig validate_config(const TrainConfig& cfg);

// Strict JSON codec: unknown keys are a hard error, absent optional fields
// take defaults, and the result passes validate_config.
TrainConfig parse_train_config(const std::string& json_text);
TrainConfig load_train_config(const std::string& path);
std::string train_config_json(const TrainConfig& cfg);

// FNV-1a over the canonical JSON form; stamped into artifacts so reports can
// be traced to the exact configuration.
std::string config_hash(const TrainConfig& cfg);

// Desk-scale preset used by tests and the synthetic benchmark.
TrainConfig desk_config();

// raw (3,H,W) in [0,255] -> [-1,1] via v/127.5 - 1. Throws ConfigError on
// wrong channel count or out-of-range values.
ImageTensor normalize_image(const TensorT<int>& raw);
// Inverse affine map with round-to-nearest; exact on round-tripped values.
TensorT<std::uint8_t> denormalize_image(const ImageTensor& img);

}  // namespace adgan
