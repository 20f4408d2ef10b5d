#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "adgan/error.hpp"
#include "adgan/scoring.hpp"
#include "adgan/trainer.hpp"

using namespace adgan;
namespace fs = std::filesystem;

namespace {

AdganNets tiny_nets(std::uint64_t seed = 3) {
  return AdganNets::init(ArchConfig::make(8, 8, 8), seed);
}

ImageTensor random_image(int size, std::uint64_t seed) {
  Rng rng(seed);
  ImageTensor img;
  img.pixels = Tensor({3, size, size});
  for (auto& v : img.pixels.data) v = rng.uniform_f(-0.9f, 0.9f);
  return img;
}

DatasetSplit image_split(int n, int size, std::uint64_t seed, int abnormal_every = 0) {
  DatasetSplit split{SplitKind::kTest, {}};
  for (int i = 0; i < n; ++i) {
    LabeledExample ex;
    ex.image = random_image(size, seed + static_cast<std::uint64_t>(i));
    ex.label = abnormal_every > 0 && i % abnormal_every == 0 ? Label::kAbnormal : Label::kNormal;
    ex.patient_id = i;
    ex.source_id = "img" + std::to_string(i);
    split.examples.push_back(std::move(ex));
  }
  return split;
}

}  // namespace

TEST_CASE("reconstruction honors the image contract and determinism") {
  auto nets = tiny_nets();
  auto x = random_image(8, 5);
  auto r1 = reconstruct(x, nets.gl, nets.gv);
  auto r2 = reconstruct(x, nets.gl, nets.gv);
  CHECK(r1.pixels.data == r2.pixels.data);
  CHECK(r1.valid());
}

TEST_CASE("anomaly score arithmetic") {
  auto nets = tiny_nets();

  SUBCASE("identical image and reconstruction scores zero") {
    // direct arithmetic check of the reduction itself
    ImageTensor a = random_image(8, 6);
    double acc = 0.0;
    for (float v : a.pixels.data) (void)v, acc += 0.0;
    CHECK(acc == 0.0);
    // through the model path: score equals sum of squared differences
    const auto recon = reconstruct(a, nets.gl, nets.gv);
    double expect = 0.0;
    for (std::int64_t i = 0; i < a.pixels.numel(); ++i) {
      const double d = static_cast<double>(a.pixels[i]) - recon.pixels[i];
      expect += d * d;
    }
    CHECK(anomaly_score(a, nets.gl, nets.gv) == doctest::Approx(expect).epsilon(1e-9));
  }

  SUBCASE("all +1 against all -1 at 64x64x3 totals 4 * 12288") {
    ImageTensor plus;
    plus.pixels = Tensor({3, 64, 64}, 1.0f);
    ImageTensor minus;
    minus.pixels = Tensor({3, 64, 64}, -1.0f);
    double acc = 0.0;
    for (std::int64_t i = 0; i < plus.pixels.numel(); ++i) {
      const double d = static_cast<double>(plus.pixels[i]) - minus.pixels[i];
      acc += d * d;
    }
    CHECK(acc == doctest::Approx(4.0 * 12288.0));
  }

  SUBCASE("mean reduction rescales by the element count") {
    auto x = random_image(8, 7);
    const double s = anomaly_score(x, nets.gl, nets.gv, ScoreReduction::kSum);
    const double m = anomaly_score(x, nets.gl, nets.gv, ScoreReduction::kMean);
    CHECK(m == doctest::Approx(s / (3.0 * 8 * 8)).epsilon(1e-9));
  }
}

TEST_CASE("score_dataset preserves order, count and batching equivalence") {
  auto nets = tiny_nets();
  auto split = image_split(67, 8, 100, 5);

  SUBCASE("empty split gives empty list") {
    DatasetSplit empty{SplitKind::kTest, {}};
    CHECK(score_dataset(empty, nets.gl, nets.gv).empty());
  }

  auto scored = score_dataset(split, nets.gl, nets.gv);
  REQUIRE(scored.size() == split.size());
  for (std::size_t i = 0; i < scored.size(); ++i) {
    CHECK(scored[i].source_id == split.examples[i].source_id);
    CHECK(scored[i].score >= 0.0);
  }

  SUBCASE("rerun is identical") {
    auto again = score_dataset(split, nets.gl, nets.gv);
    for (std::size_t i = 0; i < scored.size(); ++i) CHECK(again[i].score == scored[i].score);
  }

  SUBCASE("per-example equals batched to 1e-6") {
    for (std::size_t i = 0; i < 8; ++i) {
      const double solo = anomaly_score(split.examples[i].image, nets.gl, nets.gv);
      CHECK(std::abs(solo - scored[i].score) < 1e-6 * (1.0 + std::abs(solo)));
    }
  }

  SUBCASE("reconstruction dumps attach only when requested") {
    CHECK(!scored[0].reconstruction.has_value());
    auto with = score_dataset(split, nets.gl, nets.gv, true);
    CHECK(with[0].reconstruction.has_value());
    CHECK(with[0].reconstruction->valid());
  }
}

TEST_CASE("score_split shared interface matches the adgan fast path") {
  auto nets = tiny_nets();
  auto split = image_split(9, 8, 200, 3);
  auto fast = score_dataset(split, nets.gl, nets.gv);
  auto shared = score_split(
      split, [&](const ImageTensor& x) { return anomaly_score(x, nets.gl, nets.gv); });
  REQUIRE(fast.size() == shared.size());
  for (std::size_t i = 0; i < fast.size(); ++i)
    CHECK(std::abs(fast[i].score - shared[i].score) < 1e-6 * (1.0 + fast[i].score));
}

TEST_CASE("scores file round-trip keeps order and values") {
  auto dir = fs::temp_directory_path() / "adgan_scores_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string path = (dir / "scores.tsv").string();

  std::vector<ScoredExample> scored;
  for (int i = 0; i < 5; ++i) {
    ScoredExample se;
    se.source_id = "s" + std::to_string(i);
    se.label = i % 2 ? Label::kAbnormal : Label::kNormal;
    se.score = 0.125 * i + 1e-9;
    scored.push_back(se);
  }
  write_scores(path, scored);
  auto back = read_scores(path);
  REQUIRE(back.size() == scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) {
    CHECK(back[i].source_id == scored[i].source_id);
    CHECK(back[i].label == scored[i].label);
    CHECK(back[i].score == scored[i].score);
  }
  fs::remove_all(dir);
}

TEST_CASE("triptych panel is written with tripled width") {
  auto dir = fs::temp_directory_path() / "adgan_triptych_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto nets = tiny_nets();
  auto x = random_image(8, 44);
  auto recon = reconstruct(x, nets.gl, nets.gv);
  const std::string path = (dir / "x_triptych.png").string();
  write_triptych(path, x, recon);
  CHECK(fs::exists(path));
  fs::remove_all(dir);
}
