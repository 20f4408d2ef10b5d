#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "adgan/error.hpp"
#include "adgan/eval.hpp"
#include "adgan/rng.hpp"

using namespace adgan;

namespace {

std::vector<ScoredExample> make_scored(const std::vector<std::pair<double, Label>>& rows) {
  std::vector<ScoredExample> out;
  int i = 0;
  for (const auto& [score, label] : rows) {
    ScoredExample se;
    se.source_id = "e" + std::to_string(i++);
    se.label = label;
    se.score = score;
    out.push_back(se);
  }
  return out;
}

// Independent oracle: O(n^2) pairwise Mann-Whitney count with half-credit
// ties.
double auc_pairwise(const std::vector<ScoredExample>& scored) {
  double wins = 0.0;
  std::int64_t pairs = 0;
  for (const auto& a : scored) {
    if (a.label != Label::kAbnormal) continue;
    for (const auto& n : scored) {
      if (n.label != Label::kNormal) continue;
      ++pairs;
      if (a.score > n.score)
        wins += 1.0;
      else if (a.score == n.score)
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

constexpr Label A = Label::kAbnormal;
constexpr Label N = Label::kNormal;

}  // namespace

TEST_CASE("roc curve endpoints and separability") {
  SUBCASE("perfect separation passes through (0,1)") {
    auto scored = make_scored({{0.9, A}, {0.8, A}, {0.2, N}, {0.1, N}});
    auto curve = roc_curve(scored);
    bool hits = false;
    for (std::size_t i = 0; i < curve.fpr.size(); ++i)
      hits |= curve.fpr[i] == 0.0 && curve.tpr[i] == 1.0;
    CHECK(hits);
    CHECK(auc(scored) == doctest::Approx(1.0));
    CHECK(curve.fpr.front() == 0.0);
    CHECK(curve.tpr.front() == 0.0);
    CHECK(curve.fpr.back() == 1.0);
    CHECK(curve.tpr.back() == 1.0);
  }

  SUBCASE("all-tied scores give the two-point diagonal") {
    auto scored = make_scored({{0.5, A}, {0.5, N}, {0.5, A}, {0.5, N}});
    auto curve = roc_curve(scored);
    REQUIRE(curve.fpr.size() == 2);
    CHECK(curve.fpr[0] == 0.0);
    CHECK(curve.tpr[0] == 0.0);
    CHECK(curve.fpr[1] == 1.0);
    CHECK(curve.tpr[1] == 1.0);
    CHECK(auc(scored) == doctest::Approx(0.5));
  }

  SUBCASE("hand-enumerated four-example sweep") {
    // scores 0.9(A), 0.8(N), 0.7(A), 0.1(N):
    // thresholds inf,0.9,0.8,0.7,0.1 ->
    // (fpr,tpr) = (0,0), (0,1/2), (1/2,1/2), (1/2,1), (1,1)
    auto scored = make_scored({{0.9, A}, {0.8, N}, {0.7, A}, {0.1, N}});
    auto curve = roc_curve(scored);
    REQUIRE(curve.fpr.size() == 5);
    CHECK(curve.fpr == std::vector<double>{0.0, 0.0, 0.5, 0.5, 1.0});
    CHECK(curve.tpr == std::vector<double>{0.0, 0.5, 0.5, 1.0, 1.0});
    CHECK(auc(scored) == doctest::Approx(0.75));
    CHECK(auc_pairwise(scored) == doctest::Approx(0.75));
  }

  SUBCASE("monotone rates") {
    Rng rng(31);
    std::vector<std::pair<double, Label>> rows;
    for (int i = 0; i < 40; ++i)
      rows.emplace_back(rng.uniform(0.0, 1.0), rng.below(2) ? A : N);
    auto curve = roc_curve(make_scored(rows));
    for (std::size_t i = 1; i < curve.fpr.size(); ++i) {
      CHECK(curve.fpr[i] >= curve.fpr[i - 1]);
      CHECK(curve.tpr[i] >= curve.tpr[i - 1]);
      CHECK(curve.thresholds[i] < curve.thresholds[i - 1]);
    }
  }
}

TEST_CASE("roc rejects single-class input") {
  CHECK_THROWS_AS(roc_curve(make_scored({{1.0, N}, {0.5, N}})), ConfigError);
  CHECK_THROWS_AS(auc(make_scored({{1.0, A}})), ConfigError);
}

TEST_CASE("trapezoid equals brute-force pairwise AUC on random small sets") {
  Rng rng(32);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(11));
    std::vector<std::pair<double, Label>> rows;
    int n_pos = 0;
    for (int i = 0; i < n; ++i) {
      // coarse scores force plenty of ties
      const double score = static_cast<double>(rng.below(5)) / 4.0;
      const Label l = rng.below(2) ? A : N;
      n_pos += l == A;
      rows.emplace_back(score, l);
    }
    if (n_pos == 0 || n_pos == n) continue;
    auto scored = make_scored(rows);
    CHECK(std::abs(auc(scored) - auc_pairwise(scored)) < 1e-12);
  }
}

TEST_CASE("auc is invariant under strictly increasing transforms") {
  Rng rng(33);
  std::vector<std::pair<double, Label>> rows;
  for (int i = 0; i < 30; ++i)
    rows.emplace_back(rng.uniform(0.0, 4.0), i % 3 == 0 ? A : N);
  auto scored = make_scored(rows);
  const double base = auc(scored);

  auto transformed = scored;
  for (auto& se : transformed) se.score = std::exp(se.score);
  CHECK(std::abs(auc(transformed) - base) < 1e-12);

  for (auto& se : transformed) se.score = 3.0 * se.score + 11.0;
  CHECK(std::abs(auc(transformed) - base) < 1e-12);
}

TEST_CASE("auc complement identity for tie-free scores") {
  Rng rng(34);
  std::vector<std::pair<double, Label>> rows;
  for (int i = 0; i < 25; ++i)
    rows.emplace_back(rng.uniform01() + i * 1e-6, i % 2 ? A : N);
  auto scored = make_scored(rows);
  auto negated = scored;
  for (auto& se : negated) se.score = -se.score;
  CHECK(auc(scored) + auc(negated) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("stub models pin the AUC endpoints") {
  // scores equal to the label indicator -> perfect; constant -> chance
  auto perfect = make_scored({{1.0, A}, {0.0, N}, {1.0, A}, {0.0, N}, {0.0, N}});
  CHECK(auc(perfect) == doctest::Approx(1.0));
  auto constant = make_scored({{2.0, A}, {2.0, N}, {2.0, A}, {2.0, N}});
  CHECK(auc(constant) == doctest::Approx(0.5));
}

TEST_CASE("benchmark report and roc artifacts are written") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "adgan_eval_test";
  fs::remove_all(dir);
  fs::create_directories(dir);

  auto scored = make_scored({{0.9, A}, {0.8, N}, {0.7, A}, {0.1, N}});
  auto entry = evaluate_scored(scored, "adgan", "scores.tsv", "deadbeef", 7);
  CHECK(entry.auc_value == doctest::Approx(0.75));

  const std::string report = (dir / "report.tsv").string();
  write_benchmark_report(report, {entry});
  std::ifstream in(report);
  std::string line;
  std::getline(in, line);  // comment
  CHECK(line.rfind("#", 0) == 0);
  std::getline(in, line);
  CHECK(line == "method\tauc\tscores\tconfig_hash\tseed");
  std::getline(in, line);
  CHECK(line.rfind("adgan\t0.75", 0) == 0);

  write_roc_dump((dir / "curve.roc").string(), roc_curve(scored));
  write_roc_png((dir / "curve.png").string(), roc_curve(scored), 64);
  CHECK(fs::exists(dir / "curve.roc"));
  CHECK(fs::exists(dir / "curve.png"));
  fs::remove_all(dir);
}
