#include "adgan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "adgan/error.hpp"
#include "adgan/png_io.hpp"

namespace adgan {

RocCurve roc_curve(const std::vector<ScoredExample>& scored) {
  std::int64_t n_pos = 0, n_neg = 0;
  for (const auto& se : scored) {
    if (!std::isfinite(se.score)) throw ConfigError("roc: non-finite score for " + se.source_id);
    (se.label == Label::kAbnormal ? n_pos : n_neg) += 1;
  }
  if (n_pos == 0 || n_neg == 0)
    throw ConfigError("roc: need at least one normal and one abnormal example, got " +
                      std::to_string(n_neg) + "/" + std::to_string(n_pos));

  std::vector<std::pair<double, Label>> rows;
  rows.reserve(scored.size());
  for (const auto& se : scored) rows.emplace_back(se.score, se.label);
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  RocCurve curve;
  curve.thresholds.push_back(std::numeric_limits<double>::infinity());
  curve.fpr.push_back(0.0);
  curve.tpr.push_back(0.0);

  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < rows.size()) {
    const double score = rows[i].first;
    // group all examples tied at this score under one threshold
    while (i < rows.size() && rows[i].first == score) {
      (rows[i].second == Label::kAbnormal ? tp : fp) += 1;
      ++i;
    }
    curve.thresholds.push_back(score);
    curve.tpr.push_back(static_cast<double>(tp) / static_cast<double>(n_pos));
    curve.fpr.push_back(static_cast<double>(fp) / static_cast<double>(n_neg));
  }
  return curve;
}

double auc(const std::vector<ScoredExample>& scored) {
  const RocCurve curve = roc_curve(scored);
  double area = 0.0;
  for (std::size_t i = 1; i < curve.fpr.size(); ++i)
    area += (curve.fpr[i] - curve.fpr[i - 1]) * (curve.tpr[i] + curve.tpr[i - 1]) * 0.5;
  return area;
}

ReportEntry evaluate_scored(const std::vector<ScoredExample>& scored, const std::string& method,
                            const std::string& scores_path, const std::string& config_hash,
                            std::int64_t seed) {
  ReportEntry entry;
  entry.method = method;
  entry.auc_value = auc(scored);
  entry.scores_path = scores_path;
  entry.config_hash = config_hash;
  entry.seed = seed;
  return entry;
}

void write_benchmark_report(const std::string& path, const std::vector<ReportEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write benchmark report: " + path);
  out << "# benchmark report (positive class: abnormal; higher score => abnormal)\n";
  out << "method\tauc\tscores\tconfig_hash\tseed\n";
  char buf[1024];
  for (const auto& e : entries) {
    std::snprintf(buf, sizeof(buf), "%s\t%.17g\t%s\t%s\t%lld", e.method.c_str(), e.auc_value,
                  e.scores_path.c_str(), e.config_hash.c_str(), static_cast<long long>(e.seed));
    out << buf << '\n';
  }
}

void write_roc_dump(const std::string& path, const RocCurve& curve) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write roc dump: " + path);
  char buf[80];
  for (std::size_t i = 0; i < curve.fpr.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g", curve.fpr[i], curve.tpr[i]);
    out << buf << '\n';
  }
}

void write_roc_png(const std::string& path, const RocCurve& curve, int size) {
  TensorT<std::uint8_t> img({3, size, size}, std::uint8_t{255});
  const std::int64_t plane = static_cast<std::int64_t>(size) * size;

  auto put = [&](int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || x >= size || y < 0 || y >= size) return;
    const std::int64_t i = static_cast<std::int64_t>(size - 1 - y) * size + x;
    img[i] = r;
    img[plane + i] = g;
    img[2 * plane + i] = b;
  };

  // diagonal reference
  for (int i = 0; i < size; ++i) put(i, i, 200, 200, 200);

  auto to_px = [&](double v) {
    return static_cast<int>(std::lround(v * (size - 1)));
  };
  for (std::size_t i = 1; i < curve.fpr.size(); ++i) {
    // dense parameter sweep along the segment
    const int x0 = to_px(curve.fpr[i - 1]), y0 = to_px(curve.tpr[i - 1]);
    const int x1 = to_px(curve.fpr[i]), y1 = to_px(curve.tpr[i]);
    const int steps = std::max({std::abs(x1 - x0), std::abs(y1 - y0), 1});
    for (int s = 0; s <= steps; ++s) {
      const double f = static_cast<double>(s) / steps;
      put(static_cast<int>(std::lround(x0 + f * (x1 - x0))),
          static_cast<int>(std::lround(y0 + f * (y1 - y0))), 178, 34, 34);
    }
  }
  write_png_rgb(path, img);
}

}  // namespace adgan
