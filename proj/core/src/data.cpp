#include "adgan/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "adgan/error.hpp"
#include "adgan/image_ops.hpp"
#include "adgan/png_io.hpp"

namespace fs = std::filesystem;

namespace adgan {

FrameSequence filter_blurred(const FrameSequence& frames, double threshold) {
  if (!std::isfinite(threshold)) throw ConfigError("blur threshold must be finite");
  FrameSequence out;
  out.fps_stride = frames.fps_stride;
  for (const auto& f : frames.frames) {
    TensorT<int> raw = f.image.cast<int>();
    if (variance_of_laplacian(normalize_image(raw)) >= threshold) out.frames.push_back(f);
  }
  return out;
}

double blur_threshold_percentile(const FrameSequence& frames, double percentile) {
  if (frames.frames.empty()) return 0.0;
  std::vector<double> scores;
  scores.reserve(frames.frames.size());
  for (const auto& f : frames.frames) {
    TensorT<int> raw = f.image.cast<int>();
    scores.push_back(variance_of_laplacian(normalize_image(raw)));
  }
  std::sort(scores.begin(), scores.end());
  const double pos = percentile / 100.0 * static_cast<double>(scores.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, scores.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return scores[lo] * (1.0 - frac) + scores[hi] * frac;
}

FrameSequence subsample_frames(const FrameSequence& frames, int stride) {
  if (stride < 1) throw ConfigError("frame stride must be >= 1");
  FrameSequence out;
  out.fps_stride = frames.fps_stride * stride;
  for (std::size_t i = 0; i < frames.frames.size(); i += static_cast<std::size_t>(stride))
    out.frames.push_back(frames.frames[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    ManifestEntry e;
    std::string pid, label, split;
    if (!std::getline(ls, e.relative_path, '\t') || !std::getline(ls, pid, '\t') ||
        !std::getline(ls, label, '\t') || !std::getline(ls, split)) {
      throw ConfigError("manifest line " + std::to_string(lineno) +
                        ": expected 4 tab-separated fields");
    }
    try {
      e.patient_id = std::stoi(pid);
    } catch (const std::exception&) {
      throw ConfigError("manifest line " + std::to_string(lineno) + ": bad patient id '" + pid +
                        "'");
    }
    e.label = parse_label(label);
    e.split = parse_split(split);
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + path);
  for (const auto& e : entries) {
    out << e.relative_path << '\t' << e.patient_id << '\t' << label_name(e.label) << '\t'
        << split_name(e.split) << '\n';
  }
}

SplitTriple ingest_folder(const std::string& root, int target_size) {
  const fs::path rootp(root);
  const auto entries = read_manifest((rootp / "manifest.tsv").string());

  SplitTriple triple;
  for (const auto& e : entries) {
    const fs::path file = rootp / e.relative_path;
    if (!fs::exists(file))
      throw IoError("manifest references missing file: " + file.string());
    TensorT<std::uint8_t> raw = read_png_rgb(file.string());
    if (raw.dim(1) != raw.dim(2))
      throw ConfigError("non-square image: " + file.string() + " " + shape_str(raw.shape));
    raw = resize_image(raw, target_size);

    LabeledExample ex;
    ex.image = normalize_image(raw.cast<int>());
    ex.label = e.label;
    ex.patient_id = e.patient_id;
    ex.source_id = e.relative_path;
    switch (e.split) {
      case SplitKind::kTrain: triple.train.examples.push_back(std::move(ex)); break;
      case SplitKind::kValidation: triple.validation.examples.push_back(std::move(ex)); break;
      case SplitKind::kTest: triple.test.examples.push_back(std::move(ex)); break;
    }
  }
  check_split_invariants(triple.train, triple.validation, triple.test);
  return triple;
}

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

SynthConfig validate_synth_config(const SynthConfig& cfg) {
  if (cfg.n_normal < 0 || cfg.n_abnormal < 0)
    throw ConfigError("synth: example counts must be nonnegative");
  if (cfg.image_size < 8) throw ConfigError("synth: image_size must be >= 8");
  if (!(cfg.lesion_radius_min <= cfg.lesion_radius_max))
    throw ConfigError("synth: lesion_radius_min must be <= lesion_radius_max");
  if (!(cfg.lesion_radius_max < cfg.image_size / 2.0))
    throw ConfigError("synth: lesion_radius_max must be < image_size/2");
  if (!(cfg.lesion_contrast > 0.0 && cfg.lesion_contrast <= 1.0))
    throw ConfigError("synth: lesion_contrast must lie in (0,1]");
  if (!(cfg.texture_scale > 0.0)) throw ConfigError("synth: texture_scale must be > 0");
  return cfg;
}

namespace {

struct SynthPlan {
  int n_train = 0, n_val = 0, n_test_normal = 0, n_abnormal = 0;
};

SynthPlan plan_splits(const SynthConfig& cfg) {
  SynthPlan p;
  p.n_abnormal = cfg.n_abnormal;
  int n_val = cfg.n_validation >= 0 ? cfg.n_validation : std::min(100, cfg.n_normal / 10);
  int n_test = cfg.n_test_normal >= 0 ? cfg.n_test_normal
                                      : std::min(cfg.n_abnormal * 7 / 3, cfg.n_normal / 4);
  if (n_val + n_test > cfg.n_normal)
    throw ConfigError("synth: n_validation + n_test_normal exceeds n_normal");
  p.n_val = n_val;
  p.n_test_normal = n_test;
  p.n_train = cfg.n_normal - n_val - n_test;
  return p;
}

// Band-limited noise: bilinear interpolation of a coarse Gaussian node grid.
// One value per pixel, roughly unit scale.
std::vector<double> noise_octave(int size, int cells, Rng& rng) {
  const int nodes = cells + 1;
  std::vector<double> grid(static_cast<std::size_t>(nodes) * nodes);
  for (auto& v : grid) v = rng.normal();
  std::vector<double> out(static_cast<std::size_t>(size) * size);
  const double step = static_cast<double>(cells) / size;
  for (int y = 0; y < size; ++y) {
    const double gy = (y + 0.5) * step - 0.5 * step;
    const int y0 = std::clamp(static_cast<int>(std::floor(gy)), 0, cells - 1);
    const double fy = gy - y0;
    for (int x = 0; x < size; ++x) {
      const double gx = (x + 0.5) * step - 0.5 * step;
      const int x0 = std::clamp(static_cast<int>(std::floor(gx)), 0, cells - 1);
      const double fx = gx - x0;
      const double v00 = grid[static_cast<std::size_t>(y0) * nodes + x0];
      const double v01 = grid[static_cast<std::size_t>(y0) * nodes + x0 + 1];
      const double v10 = grid[static_cast<std::size_t>(y0 + 1) * nodes + x0];
      const double v11 = grid[static_cast<std::size_t>(y0 + 1) * nodes + x0 + 1];
      out[static_cast<std::size_t>(y) * size + x] =
          (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
    }
  }
  return out;
}

// Intensity field in [0,1]; the same stream always yields the same texture.
// A single low-frequency octave keeps the texture manifold low-dimensional
// enough for the latent space to cover.
std::vector<double> make_texture(const SynthConfig& cfg, std::uint64_t stream) {
  Rng rng(stream);
  const int s = cfg.image_size;
  const auto coarse = noise_octave(s, std::max(2, s / 8), rng);
  std::vector<double> tex(coarse.size());
  for (std::size_t i = 0; i < tex.size(); ++i)
    tex[i] = std::clamp(0.5 + 0.5 * cfg.texture_scale * coarse[i], 0.02, 0.98);
  return tex;
}

void add_lesion(std::vector<double>& tex, const SynthConfig& cfg, std::uint64_t stream) {
  Rng rng(stream);
  const int s = cfg.image_size;
  const double r = rng.uniform(cfg.lesion_radius_min, cfg.lesion_radius_max);
  const double margin = r + 1.0;
  const double cx = rng.uniform(margin, s - margin);
  const double cy = rng.uniform(margin, s - margin);
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      const double d = std::hypot(y - cy, x - cx);
      if (d >= r) continue;
      // Raised-cosine bump: full contrast at the center, zero at the rim.
      const double t = std::cos(0.5 * M_PI * d / r);
      double& v = tex[static_cast<std::size_t>(y) * s + x];
      v = std::clamp(v + cfg.lesion_contrast * t * t, 0.0, 1.0);
    }
  }
}

TensorT<std::uint8_t> quantize_rgb(const std::vector<double>& tex, int size) {
  TensorT<std::uint8_t> raw({3, size, size});
  const std::int64_t plane = static_cast<std::int64_t>(size) * size;
  for (std::int64_t i = 0; i < plane; ++i) {
    const auto q = static_cast<std::uint8_t>(std::lround(tex[static_cast<std::size_t>(i)] * 255.0));
    raw[i] = q;
    raw[plane + i] = q;
    raw[2 * plane + i] = q;
  }
  return raw;
}

struct SynthItem {
  std::string source_id;
  Label label;
  int patient_id;
  SplitKind split;
  TensorT<std::uint8_t> raw;
};

std::vector<SynthItem> synth_items(const SynthConfig& cfg_in) {
  const SynthConfig cfg = validate_synth_config(cfg_in);
  const SynthPlan plan = plan_splits(cfg);
  const auto root = static_cast<std::uint64_t>(cfg.seed);

  std::vector<SynthItem> items;
  items.reserve(static_cast<std::size_t>(cfg.n_normal + cfg.n_abnormal));

  char buf[64];
  auto emit_normal = [&](SplitKind split, const char* tag, int idx, int patient) {
    std::snprintf(buf, sizeof(buf), "%s_%05d.png", tag, idx);
    SynthItem it;
    it.source_id = buf;
    it.label = Label::kNormal;
    it.patient_id = patient;
    it.split = split;
    it.raw = quantize_rgb(make_texture(cfg, derive_seed(root, it.source_id)), cfg.image_size);
    items.push_back(std::move(it));
  };

  // Patient ids: one synthetic patient per image, numbered per split so the
  // train/validation vs test ranges never overlap.
  int patient = 0;
  for (int i = 0; i < plan.n_train; ++i) emit_normal(SplitKind::kTrain, "train_normal", i, patient++);
  for (int i = 0; i < plan.n_val; ++i)
    emit_normal(SplitKind::kValidation, "validation_normal", i, patient++);

  const int test_patient_base = patient;
  for (int i = 0; i < plan.n_test_normal; ++i)
    emit_normal(SplitKind::kTest, "test_normal", i, test_patient_base + i);

  for (int i = 0; i < plan.n_abnormal; ++i) {
    std::snprintf(buf, sizeof(buf), "test_abnormal_%05d.png", i);
    SynthItem it;
    it.source_id = buf;
    it.label = Label::kAbnormal;
    it.split = SplitKind::kTest;
    // Share the texture stream with test_normal_i when that image exists so
    // (normal, lesioned) pairs differ only inside the lesion disc.
    char texname[64];
    std::snprintf(texname, sizeof(texname), "test_normal_%05d.png", i);
    const bool paired = i < plan.n_test_normal;
    it.patient_id = paired ? test_patient_base + i : test_patient_base + plan.n_test_normal + i;
    auto tex = make_texture(cfg, derive_seed(root, paired ? texname : it.source_id));
    add_lesion(tex, cfg, derive_seed(root, std::string("lesion_") + buf));
    it.raw = quantize_rgb(tex, cfg.image_size);
    items.push_back(std::move(it));
  }
  return items;
}

}  // namespace

SplitTriple synth_generate(const SynthConfig& cfg) {
  SplitTriple triple;
  for (auto& it : synth_items(cfg)) {
    LabeledExample ex;
    ex.image = normalize_image(it.raw.cast<int>());
    ex.label = it.label;
    ex.patient_id = it.patient_id;
    ex.source_id = it.source_id;
    switch (it.split) {
      case SplitKind::kTrain: triple.train.examples.push_back(std::move(ex)); break;
      case SplitKind::kValidation: triple.validation.examples.push_back(std::move(ex)); break;
      case SplitKind::kTest: triple.test.examples.push_back(std::move(ex)); break;
    }
  }
  check_split_invariants(triple.train, triple.validation, triple.test);
  return triple;
}

int synth_write(const SynthConfig& cfg, const std::string& out_dir) {
  const fs::path root(out_dir);
  fs::create_directories(root);
  std::vector<ManifestEntry> manifest;
  for (const auto& it : synth_items(cfg)) {
    write_png_rgb((root / it.source_id).string(), it.raw);
    manifest.push_back({it.source_id, it.patient_id, it.label, it.split});
  }
  write_manifest((root / "manifest.tsv").string(), manifest);
  return static_cast<int>(manifest.size());
}

// ---------------------------------------------------------------------------
// BatchIterator
// ---------------------------------------------------------------------------

BatchIterator::BatchIterator(const DatasetSplit& split, int batch_size, std::uint64_t seed,
                             bool shuffle, bool drop_last)
    : split_(&split), batch_size_(batch_size), seed_(seed), shuffle_(shuffle),
      drop_last_(drop_last) {
  if (batch_size_ <= 0) throw ConfigError("batch_size must be positive");
  if (static_cast<std::size_t>(batch_size_) > split.size())
    throw ConfigError("batch_size " + std::to_string(batch_size_) + " exceeds split size " +
                      std::to_string(split.size()));
  start_epoch(0);
}

int BatchIterator::batches_per_epoch() const {
  const auto n = static_cast<std::int64_t>(split_->size());
  return static_cast<int>(drop_last_ ? n / batch_size_ : (n + batch_size_ - 1) / batch_size_);
}

void BatchIterator::start_epoch(std::int64_t epoch) {
  epoch_ = epoch;
  cursor_ = 0;
  order_.resize(split_->size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
  if (shuffle_) {
    Rng rng(derive_seed(seed_, "epoch_" + std::to_string(epoch)));
    rng.shuffle(order_);
  }
}

void BatchIterator::seek(std::int64_t epoch, std::int64_t cursor) {
  start_epoch(epoch);
  cursor_ = cursor;
}

Tensor BatchIterator::next() {
  const auto n = static_cast<std::int64_t>(split_->size());
  const std::int64_t remaining = n - cursor_;
  if (remaining < batch_size_ && (drop_last_ || remaining == 0)) {
    start_epoch(epoch_ + 1);
  }
  const std::int64_t take = std::min<std::int64_t>(batch_size_, n - cursor_);

  const int s = split_->examples.front().image.size();
  Tensor batch({static_cast<int>(take), 3, s, s});
  const std::int64_t stride = 3LL * s * s;
  for (std::int64_t b = 0; b < take; ++b) {
    const auto& img = split_->examples[static_cast<std::size_t>(order_[static_cast<std::size_t>(cursor_ + b)])].image;
    std::copy(img.pixels.data.begin(), img.pixels.data.end(), batch.data.begin() + b * stride);
  }
  cursor_ += take;
  return batch;
}

}  // namespace adgan
