#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adgan/scoring.hpp"

namespace adgan {

// Threshold sweep with ties grouped: one threshold per distinct score,
// descending, preceded by a sentinel above the maximum so the curve starts
// at (0,0); it ends at (1,1). Abnormal is the positive class.
struct RocCurve {
  std::vector<double> thresholds;
  std::vector<double> fpr;
  std::vector<double> tpr;
};

RocCurve roc_curve(const std::vector<ScoredExample>& scored);

// Trapezoidal area under roc_curve; identical to the pairwise Mann-Whitney
// statistic P(score_abnormal > score_normal) + 0.5 P(tie) because ties are
// grouped and half-credited.
double auc(const std::vector<ScoredExample>& scored);

struct ReportEntry {
  std::string method;
  double auc_value = 0.0;
  std::string scores_path;
  std::string config_hash;
  std::int64_t seed = 0;
};

// Builds a report row from an already scored split.
ReportEntry evaluate_scored(const std::vector<ScoredExample>& scored, const std::string& method,
                            const std::string& scores_path, const std::string& config_hash,
                            std::int64_t seed);

// Plain-text table, one row per method; abnormal-positive convention stated
// in the header.
void write_benchmark_report(const std::string& path, const std::vector<ReportEntry>& entries);

// "fpr tpr" pairs, one per line, for external plotting.
void write_roc_dump(const std::string& path, const RocCurve& curve);

// Rendered curve on a white canvas with a diagonal reference line.
void write_roc_png(const std::string& path, const RocCurve& curve, int size = 512);

}  // namespace adgan
