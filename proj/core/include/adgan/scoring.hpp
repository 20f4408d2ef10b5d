#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "adgan/datamodel.hpp"
#include "adgan/networks.hpp"

namespace adgan {

struct ScoredExample {
  std::string source_id;
  Label label = Label::kNormal;
  double score = 0.0;
  std::optional<ImageTensor> reconstruction;
};

enum class ScoreReduction { kSum, kMean };

// G_v(G_l(x)); deterministic, networks read-only.
ImageTensor reconstruct(const ImageTensor& x, const LatentGenerator& gl,
                        const VisualGenerator& gv);

// Squared L2 distance between x and its reconstruction, summed over all
// pixels and channels (kMean divides by the element count; a positive
// rescaling that cannot change AUC at fixed resolution).
double anomaly_score(const ImageTensor& x, const LatentGenerator& gl, const VisualGenerator& gv,
                     ScoreReduction reduction = ScoreReduction::kSum);

// One ScoredExample per input, order preserved; batched internally.
std::vector<ScoredExample> score_dataset(const DatasetSplit& split, const LatentGenerator& gl,
                                         const VisualGenerator& gv,
                                         bool dump_reconstructions = false,
                                         ScoreReduction reduction = ScoreReduction::kSum);

// Shared scoring interface: every method (ADGAN and baselines) reduces to a
// per-example scorer over the same DatasetSplit type, so the eval pipeline
// never special-cases a method.
using ExampleScorer = std::function<double(const ImageTensor&)>;
std::vector<ScoredExample> score_split(const DatasetSplit& split, const ExampleScorer& scorer);

// Scores file: TSV, one row per example: source_id, label, score.
void write_scores(const std::string& path, const std::vector<ScoredExample>& scored);
std::vector<ScoredExample> read_scores(const std::string& path);

// Side-by-side (input | reconstruction | absolute difference) 8-bit panel.
void write_triptych(const std::string& path, const ImageTensor& input,
                    const ImageTensor& reconstruction);

}  // namespace adgan
