#include "adgan/datamodel.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "adgan/error.hpp"
#include "json.hpp"

namespace adgan {

using nlohmann::json;

bool ImageTensor::valid() const {
  if (pixels.rank() != 3 || pixels.dim(0) != 3) return false;
  if (pixels.dim(1) != pixels.dim(2) || pixels.dim(1) <= 0) return false;
  for (float v : pixels.data) {
    if (!(v >= -1.0f && v <= 1.0f)) return false;
  }
  return true;
}

const char* label_name(Label l) {
  return l == Label::kNormal ? "normal" : "abnormal";
}

Label parse_label(const std::string& s) {
  if (s == "normal") return Label::kNormal;
  if (s == "abnormal") return Label::kAbnormal;
  throw ConfigError("unknown label '" + s + "' (expected normal|abnormal)");
}

const char* split_name(SplitKind s) {
  switch (s) {
    case SplitKind::kTrain: return "train";
    case SplitKind::kValidation: return "validation";
    case SplitKind::kTest: return "test";
  }
  return "?";
}

SplitKind parse_split(const std::string& s) {
  if (s == "train") return SplitKind::kTrain;
  if (s == "validation") return SplitKind::kValidation;
  if (s == "test") return SplitKind::kTest;
  throw ConfigError("unknown split '" + s + "' (expected train|validation|test)");
}

const char* gp_at_name(GpAt g) {
  return g == GpAt::kInterpolates ? "interpolates" : "fakes";
}

void check_split_invariants(const DatasetSplit& train, const DatasetSplit& validation,
                            const DatasetSplit& test) {
  for (const auto& ex : train.examples) {
    if (ex.label != Label::kNormal)
      throw ConfigError("train split contains abnormal example '" + ex.source_id + "'");
  }
  for (const auto& ex : validation.examples) {
    if (ex.label != Label::kNormal)
      throw ConfigError("validation split contains abnormal example '" + ex.source_id + "'");
  }
  std::set<int> fit_patients;
  for (const auto& ex : train.examples) fit_patients.insert(ex.patient_id);
  for (const auto& ex : validation.examples) fit_patients.insert(ex.patient_id);
  for (const auto& ex : test.examples) {
    if (fit_patients.count(ex.patient_id))
      throw ConfigError("patient " + std::to_string(ex.patient_id) +
                        " appears in both test and train/validation splits");
  }
}

namespace {

void require_positive(double v, const char* field) {
  if (!(v > 0.0)) throw ConfigError(std::string("config field '") + field + "' must be > 0");
}

void require_unit_interval(double v, const char* field) {
  if (!(v >= 0.0 && v < 1.0))
    throw ConfigError(std::string("config field '") + field + "' must lie in [0, 1)");
}

bool is_pow2(int v) {
  return v > 0 && (v & (v - 1)) == 0;
}

}  // namespace

TrainConfig validate_config(const TrainConfig& cfg) {
  require_positive(static_cast<double>(cfg.total_iters), "total_iters");
  require_positive(static_cast<double>(cfg.phase1_iters), "phase1_iters");
  if (cfg.phase1_iters >= cfg.total_iters)
    throw ConfigError("config field 'phase1_iters' must be < total_iters (T < N)");
  require_positive(cfg.batch_size, "batch_size");
  require_positive(cfg.learning_rate, "learning_rate");
  require_unit_interval(cfg.adam_beta1, "adam_beta1");
  require_unit_interval(cfg.adam_beta2, "adam_beta2");
  require_unit_interval(cfg.adam_beta1_latent, "adam_beta1_latent");
  require_unit_interval(cfg.adam_beta2_latent, "adam_beta2_latent");
  require_positive(cfg.critic_steps, "critic_steps");
  require_positive(cfg.latent_dim, "latent_dim");
  require_positive(cfg.loss.alpha, "loss.alpha");
  require_positive(cfg.loss.beta, "loss.beta");
  require_positive(cfg.loss.lambda_gp, "loss.lambda_gp");
  if (!is_pow2(cfg.image_size) || cfg.image_size < 8)
    throw ConfigError("config field 'image_size' must be a power of two >= 8");
  require_positive(cfg.filter_scale, "filter_scale");
  require_positive(static_cast<double>(cfg.checkpoint_interval), "checkpoint_interval");
  return cfg;
}

namespace {

// Pulls a field of the expected JSON type, erasing it from the working copy
// so leftovers can be reported as unknown keys.
template <typename T>
void take(json& obj, const char* key, T& out) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
  obj.erase(it);
}

void reject_unknown(const json& obj, const std::string& scope) {
  if (obj.empty()) return;
  std::string keys;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!keys.empty()) keys += ", ";
    keys += it.key();
  }
  throw ConfigError("unknown config key(s) in " + scope + ": " + keys);
}

}  // namespace

TrainConfig parse_train_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");

  TrainConfig cfg;
  take(root, "total_iters", cfg.total_iters);
  take(root, "phase1_iters", cfg.phase1_iters);
  take(root, "batch_size", cfg.batch_size);
  take(root, "learning_rate", cfg.learning_rate);
  take(root, "adam_beta1", cfg.adam_beta1);
  take(root, "adam_beta2", cfg.adam_beta2);
  take(root, "adam_beta1_latent", cfg.adam_beta1_latent);
  take(root, "adam_beta2_latent", cfg.adam_beta2_latent);
  take(root, "critic_steps", cfg.critic_steps);
  take(root, "latent_dim", cfg.latent_dim);
  take(root, "seed", cfg.seed);
  take(root, "image_size", cfg.image_size);
  take(root, "filter_scale", cfg.filter_scale);
  take(root, "checkpoint_interval", cfg.checkpoint_interval);

  std::string gp_at = gp_at_name(cfg.gp_at);
  take(root, "gp_at", gp_at);
  if (gp_at == "interpolates")
    cfg.gp_at = GpAt::kInterpolates;
  else if (gp_at == "fakes")
    cfg.gp_at = GpAt::kFakes;
  else
    throw ConfigError("config field 'gp_at' must be 'interpolates' or 'fakes'");

  if (root.contains("loss")) {
    json loss = root["loss"];
    root.erase("loss");
    if (!loss.is_object()) throw ConfigError("config field 'loss' must be an object");
    take(loss, "alpha", cfg.loss.alpha);
    take(loss, "beta", cfg.loss.beta);
    take(loss, "lambda_gp", cfg.loss.lambda_gp);
    reject_unknown(loss, "'loss'");
  }
  reject_unknown(root, "config root");
  return validate_config(cfg);
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_train_config(buf.str());
}

std::string train_config_json(const TrainConfig& cfg) {
  json root;
  root["total_iters"] = cfg.total_iters;
  root["phase1_iters"] = cfg.phase1_iters;
  root["batch_size"] = cfg.batch_size;
  root["learning_rate"] = cfg.learning_rate;
  root["adam_beta1"] = cfg.adam_beta1;
  root["adam_beta2"] = cfg.adam_beta2;
  root["adam_beta1_latent"] = cfg.adam_beta1_latent;
  root["adam_beta2_latent"] = cfg.adam_beta2_latent;
  root["critic_steps"] = cfg.critic_steps;
  root["latent_dim"] = cfg.latent_dim;
  root["seed"] = cfg.seed;
  root["image_size"] = cfg.image_size;
  root["filter_scale"] = cfg.filter_scale;
  root["checkpoint_interval"] = cfg.checkpoint_interval;
  root["gp_at"] = gp_at_name(cfg.gp_at);
  root["loss"]["alpha"] = cfg.loss.alpha;
  root["loss"]["beta"] = cfg.loss.beta;
  root["loss"]["lambda_gp"] = cfg.loss.lambda_gp;
  return root.dump(2) + "\n";
}

std::string config_hash(const TrainConfig& cfg) {
  const std::string text = train_config_json(cfg);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

TrainConfig desk_config() {
  TrainConfig cfg;
  cfg.total_iters = 3000;
  cfg.phase1_iters = 2000;
  cfg.batch_size = 64;
  cfg.critic_steps = 2;
  cfg.latent_dim = 64;
  cfg.image_size = 32;
  cfg.filter_scale = 8;
  cfg.checkpoint_interval = 500;
  return validate_config(cfg);
}

ImageTensor normalize_image(const TensorT<int>& raw) {
  if (raw.rank() != 3 || raw.dim(0) != 3)
    throw ConfigError("normalize_image expects (3,H,W) input, got " + shape_str(raw.shape));
  ImageTensor img;
  img.pixels = Tensor(raw.shape);
  for (std::int64_t i = 0; i < raw.numel(); ++i) {
    if (raw[i] < 0 || raw[i] > 255)
      throw ConfigError("normalize_image: pixel value " + std::to_string(raw[i]) +
                        " outside [0,255]");
    img.pixels[i] = static_cast<float>(raw[i]) / 127.5f - 1.0f;
  }
  return img;
}

TensorT<std::uint8_t> denormalize_image(const ImageTensor& img) {
  TensorT<std::uint8_t> raw(img.pixels.shape);
  for (std::int64_t i = 0; i < img.pixels.numel(); ++i) {
    const float v = (img.pixels[i] + 1.0f) * 127.5f;
    const float clamped = std::min(255.0f, std::max(0.0f, v));
    raw[i] = static_cast<std::uint8_t>(std::lround(clamped));
  }
  return raw;
}

}  // namespace adgan
