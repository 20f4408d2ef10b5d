#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adgan/datamodel.hpp"
#include "adgan/rng.hpp"
#include "adgan/tensor.hpp"

namespace adgan {

// ---------------------------------------------------------------------------
// Frame preprocessing
// ---------------------------------------------------------------------------

struct RawFrame {
  TensorT<std::uint8_t> image;  // (3,H,W) in [0,255]
  int source_index = 0;
};

struct FrameSequence {
  std::vector<RawFrame> frames;  // source indices strictly increasing
  int fps_stride = 1;
};

// Keeps frames whose variance_of_laplacian >= threshold; order preserved.
FrameSequence filter_blurred(const FrameSequence& frames, double threshold);

// Percentile of the blur metric over a sequence; the corpus-adaptive default
// threshold is the 10th percentile.
double blur_threshold_percentile(const FrameSequence& frames, double percentile = 10.0);

// Keeps positions 0, stride, 2*stride, ... of the input ordering.
FrameSequence subsample_frames(const FrameSequence& frames, int stride);

// ---------------------------------------------------------------------------
// Manifest-driven folder ingestion
// ---------------------------------------------------------------------------

struct ManifestEntry {
  std::string relative_path;
  int patient_id = 0;
  Label label = Label::kNormal;
  SplitKind split = SplitKind::kTrain;
};

// Tab-separated, one record per line: path, patient_id, label, split.
std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

struct SplitTriple {
  DatasetSplit train{SplitKind::kTrain, {}};
  DatasetSplit validation{SplitKind::kValidation, {}};
  DatasetSplit test{SplitKind::kTest, {}};
};

// Reads root/manifest.tsv, decodes + resizes + normalizes every image, and
// enforces the split invariants (all-normal train/validation sets, patient
// disjointness).
SplitTriple ingest_folder(const std::string& root, int target_size);

// ---------------------------------------------------------------------------
// Synthetic corpus
// ---------------------------------------------------------------------------

// Stand-in for a private endoscopy corpus: normals are smooth band-limited
// textures; abnormals add one soft-edged circular lesion. Test abnormal i
// shares its texture stream with test normal i so scores can be compared
// pairwise.
struct SynthConfig {
  int n_normal = 0;    // normals, divided over train/validation/test
  int n_abnormal = 0;  // test-only lesioned images
  int image_size = 64;
  double texture_scale = 0.6;
  double lesion_radius_min = 4.0;
  double lesion_radius_max = 8.0;
  double lesion_contrast = 0.5;  // additive intensity in (0,1]
  std::int64_t seed = 0;
  // -1 selects defaults: validation = min(100, n_normal/10),
  // test normals = min(n_abnormal*7/3, remaining/4).
  int n_validation = -1;
  int n_test_normal = -1;
};

SynthConfig validate_synth_config(const SynthConfig& cfg);

// In-memory generation; a pure function of cfg (bit-identical across calls).
SplitTriple synth_generate(const SynthConfig& cfg);

// Writes the corpus as PNG files + manifest.tsv so ingest_folder round-trips
// it. Returns the number of manifest rows.
int synth_write(const SynthConfig& cfg, const std::string& out_dir);

// ---------------------------------------------------------------------------
// Batch iteration
// ---------------------------------------------------------------------------

// Single-consumer stream of (B,3,H,W) float batches. Every epoch draws a
// fresh permutation from (seed, epoch) so any position is reconstructible
// for checkpoint resume. With drop_last, partial tail batches are skipped.
class BatchIterator {
 public:
  BatchIterator(const DatasetSplit& split, int batch_size, std::uint64_t seed, bool shuffle,
                bool drop_last = true);

  Tensor next();

  std::int64_t epoch() const { return epoch_; }
  std::int64_t cursor() const { return cursor_; }
  int batches_per_epoch() const;
  // Fast-forward to an absolute (epoch, cursor) position.
  void seek(std::int64_t epoch, std::int64_t cursor);

 private:
  void start_epoch(std::int64_t epoch);

  const DatasetSplit* split_;
  int batch_size_;
  std::uint64_t seed_;
  bool shuffle_;
  bool drop_last_;
  std::int64_t epoch_ = 0;
  std::int64_t cursor_ = 0;  // next example offset within the epoch ordering
  std::vector<int> order_;
};

}  // namespace adgan
