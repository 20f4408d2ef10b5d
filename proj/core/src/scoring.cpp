#include "adgan/scoring.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "adgan/error.hpp"
#include "adgan/graph.hpp"
#include "adgan/png_io.hpp"

namespace adgan {

namespace {

// Batched reconstruction pass; returns (B,3,S,S) values.
Tensor reconstruct_batch(const Tensor& batch, const LatentGenerator& gl,
                         const VisualGenerator& gv) {
  Graph g;
  const int x = g.leaf(batch);
  const auto bgl = gl.bind(g);
  const auto bgv = gv.bind(g);
  const int z = gl.forward(g, bgl, x);
  const int recon = gv.forward(g, bgv, z);
  return g.value(recon);
}

double reduce_sq_diff(const float* a, const float* b, std::int64_t n, ScoreReduction reduction) {
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return reduction == ScoreReduction::kMean ? acc / static_cast<double>(n) : acc;
}

}  // namespace

ImageTensor reconstruct(const ImageTensor& x, const LatentGenerator& gl,
                        const VisualGenerator& gv) {
  Tensor batch({1, 3, x.size(), x.size()}, 0.0f);
  std::copy(x.pixels.data.begin(), x.pixels.data.end(), batch.data.begin());
  Tensor out = reconstruct_batch(batch, gl, gv);
  ImageTensor img;
  img.pixels = Tensor({3, x.size(), x.size()});
  std::copy(out.data.begin(), out.data.end(), img.pixels.data.begin());
  return img;
}

double anomaly_score(const ImageTensor& x, const LatentGenerator& gl, const VisualGenerator& gv,
                     ScoreReduction reduction) {
  const ImageTensor recon = reconstruct(x, gl, gv);
  return reduce_sq_diff(x.pixels.ptr(), recon.pixels.ptr(), x.pixels.numel(), reduction);
}

std::vector<ScoredExample> score_dataset(const DatasetSplit& split, const LatentGenerator& gl,
                                         const VisualGenerator& gv, bool dump_reconstructions,
                                         ScoreReduction reduction) {
  std::vector<ScoredExample> out;
  out.reserve(split.size());
  if (split.empty()) return out;

  const int s = split.examples.front().image.size();
  const std::int64_t stride = 3LL * s * s;
  const std::size_t chunk = 64;

  for (std::size_t base = 0; base < split.size(); base += chunk) {
    const std::size_t take = std::min(chunk, split.size() - base);
    Tensor batch({static_cast<int>(take), 3, s, s});
    for (std::size_t i = 0; i < take; ++i) {
      const auto& img = split.examples[base + i].image;
      std::copy(img.pixels.data.begin(), img.pixels.data.end(),
                batch.data.begin() + static_cast<std::int64_t>(i) * stride);
    }
    const Tensor recon = reconstruct_batch(batch, gl, gv);
    for (std::size_t i = 0; i < take; ++i) {
      const auto& ex = split.examples[base + i];
      ScoredExample se;
      se.source_id = ex.source_id;
      se.label = ex.label;
      se.score = reduce_sq_diff(batch.ptr() + static_cast<std::int64_t>(i) * stride,
                                recon.ptr() + static_cast<std::int64_t>(i) * stride, stride,
                                reduction);
      if (dump_reconstructions) {
        ImageTensor r;
        r.pixels = Tensor({3, s, s});
        std::copy(recon.data.begin() + static_cast<std::int64_t>(i) * stride,
                  recon.data.begin() + static_cast<std::int64_t>(i + 1) * stride,
                  r.pixels.data.begin());
        se.reconstruction = std::move(r);
      }
      out.push_back(std::move(se));
    }
  }
  return out;
}

std::vector<ScoredExample> score_split(const DatasetSplit& split, const ExampleScorer& scorer) {
  std::vector<ScoredExample> out;
  out.reserve(split.size());
  for (const auto& ex : split.examples) {
    ScoredExample se;
    se.source_id = ex.source_id;
    se.label = ex.label;
    se.score = scorer(ex.image);
    out.push_back(std::move(se));
  }
  return out;
}

void write_scores(const std::string& path, const std::vector<ScoredExample>& scored) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write scores file: " + path);
  out << "source_id\tlabel\tscore\n";
  char buf[64];
  for (const auto& se : scored) {
    std::snprintf(buf, sizeof(buf), "%.17g", se.score);
    out << se.source_id << '\t' << label_name(se.label) << '\t' << buf << '\n';
  }
}

std::vector<ScoredExample> read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scores file: " + path);
  std::vector<ScoredExample> out;
  std::string line;
  bool first = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (first) {
      first = false;
      if (line.rfind("source_id\t", 0) == 0) continue;  // header
    }
    std::istringstream ls(line);
    std::string id, label, score;
    if (!std::getline(ls, id, '\t') || !std::getline(ls, label, '\t') ||
        !std::getline(ls, score))
      throw ConfigError("scores file line " + std::to_string(lineno) +
                        ": expected 3 tab-separated fields");
    ScoredExample se;
    se.source_id = id;
    se.label = parse_label(label);
    try {
      se.score = std::stod(score);
    } catch (const std::exception&) {
      throw ConfigError("scores file line " + std::to_string(lineno) + ": bad score '" + score +
                        "'");
    }
    out.push_back(std::move(se));
  }
  return out;
}

void write_triptych(const std::string& path, const ImageTensor& input,
                    const ImageTensor& reconstruction) {
  if (input.pixels.shape != reconstruction.pixels.shape)
    throw ShapeError("triptych: input and reconstruction shapes differ");
  const int s = input.size();
  const auto in8 = denormalize_image(input);
  const auto re8 = denormalize_image(reconstruction);

  TensorT<std::uint8_t> panel({3, s, 3 * s});
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        const std::int64_t src = (static_cast<std::int64_t>(c) * s + y) * s + x;
        const std::int64_t row = (static_cast<std::int64_t>(c) * s + y) * (3 * s);
        panel[row + x] = in8[src];
        panel[row + s + x] = re8[src];
        // |input - reconstruction| mapped from [0,2] to [0,255]
        const float d = std::abs(input.pixels[src] - reconstruction.pixels[src]) * 0.5f;
        panel[row + 2 * s + x] = static_cast<std::uint8_t>(std::lround(d * 255.0f));
      }
    }
  }
  write_png_rgb(path, panel);
}

}  // namespace adgan
