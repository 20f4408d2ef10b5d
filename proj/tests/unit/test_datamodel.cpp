#include "doctest.h"

#include <cmath>

#include "adgan/datamodel.hpp"
#include "adgan/error.hpp"

using namespace adgan;

TEST_CASE("normalize_image maps bounds exactly") {
  TensorT<int> zeros({3, 2, 2}, 0);
  auto lo = normalize_image(zeros);
  for (float v : lo.pixels.data) CHECK(v == -1.0f);

  TensorT<int> maxed({3, 2, 2}, 255);
  auto hi = normalize_image(maxed);
  for (float v : hi.pixels.data) CHECK(v == 1.0f);
}

TEST_CASE("normalize_image around the midpoint") {
  // v/127.5 - 1 at 127 and 128.
  TensorT<int> raw({3, 1, 1});
  raw.data = {127, 128, 127};
  auto img = normalize_image(raw);
  CHECK(img.pixels[0] == doctest::Approx(127.0 / 127.5 - 1.0).epsilon(1e-6));
  CHECK(img.pixels[1] == doctest::Approx(128.0 / 127.5 - 1.0).epsilon(1e-6));
  CHECK(img.pixels[0] < 0.0f);
  CHECK(img.pixels[1] > 0.0f);
}

TEST_CASE("normalize_image rejects bad input") {
  CHECK_THROWS_AS(normalize_image(TensorT<int>({1, 2, 2}, 0)), ConfigError);
  TensorT<int> over({3, 1, 1}, 300);
  CHECK_THROWS_AS(normalize_image(over), ConfigError);
  TensorT<int> under({3, 1, 1}, -1);
  CHECK_THROWS_AS(normalize_image(under), ConfigError);
}

TEST_CASE("normalize then denormalize round-trips every byte value") {
  TensorT<int> raw({3, 16, 16});
  for (std::int64_t i = 0; i < raw.numel(); ++i) raw[i] = static_cast<int>(i % 256);
  auto img = normalize_image(raw);
  auto back = denormalize_image(img);
  for (std::int64_t i = 0; i < raw.numel(); ++i) CHECK(static_cast<int>(back[i]) == raw[i]);
}

TEST_CASE("validate_config accepts the full-scale defaults") {
  TrainConfig cfg;
  CHECK(cfg.phase1_iters == 80000);
  CHECK(cfg.total_iters == 100000);
  CHECK_NOTHROW(validate_config(cfg));
}

TEST_CASE("validate_config rejects T >= N") {
  TrainConfig cfg;
  cfg.phase1_iters = cfg.total_iters;
  CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("phase1_iters"), ConfigError);
}

TEST_CASE("validate_config rejects nonpositive hyperparameters") {
  TrainConfig cfg;
  cfg.loss.alpha = 0.0;
  CHECK_THROWS_WITH_AS(validate_config(cfg), doctest::Contains("alpha"), ConfigError);

  TrainConfig cfg2;
  cfg2.latent_dim = 0;
  CHECK_THROWS_WITH_AS(validate_config(cfg2), doctest::Contains("latent_dim"), ConfigError);

  TrainConfig cfg3;
  cfg3.image_size = 48;  // not a power of two
  CHECK_THROWS_WITH_AS(validate_config(cfg3), doctest::Contains("image_size"), ConfigError);
}

TEST_CASE("config json round-trips and fills defaults") {
  const char* text = R"({"total_iters": 100, "phase1_iters": 60, "seed": 7})";
  TrainConfig cfg = parse_train_config(text);
  CHECK(cfg.total_iters == 100);
  CHECK(cfg.phase1_iters == 60);
  CHECK(cfg.seed == 7);
  CHECK(cfg.batch_size == 64);
  CHECK(cfg.learning_rate == doctest::Approx(0.0001));
  CHECK(cfg.loss.lambda_gp == doctest::Approx(10.0));

  TrainConfig again = parse_train_config(train_config_json(cfg));
  CHECK(train_config_json(again) == train_config_json(cfg));
  CHECK(config_hash(again) == config_hash(cfg));
}

TEST_CASE("unknown config keys are hard errors") {
  CHECK_THROWS_WITH_AS(parse_train_config(R"({"total_itres": 10})"),
                       doctest::Contains("total_itres"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_train_config(R"({"loss": {"gamma": 1}})"),
                       doctest::Contains("gamma"), ConfigError);
}

TEST_CASE("config hash is sensitive to field changes") {
  TrainConfig a, b;
  b.seed = 1;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("split invariants catch label and patient violations") {
  auto mk = [](Label l, int patient) {
    LabeledExample ex;
    ex.image.pixels = Tensor({3, 8, 8}, 0.0f);
    ex.label = l;
    ex.patient_id = patient;
    ex.source_id = "x";
    return ex;
  };
  DatasetSplit train{SplitKind::kTrain, {mk(Label::kNormal, 1)}};
  DatasetSplit val{SplitKind::kValidation, {mk(Label::kNormal, 2)}};
  DatasetSplit test{SplitKind::kTest, {mk(Label::kAbnormal, 3)}};
  CHECK_NOTHROW(check_split_invariants(train, val, test));

  DatasetSplit bad_train{SplitKind::kTrain, {mk(Label::kAbnormal, 1)}};
  CHECK_THROWS_AS(check_split_invariants(bad_train, val, test), ConfigError);

  DatasetSplit overlap_test{SplitKind::kTest, {mk(Label::kAbnormal, 1)}};
  CHECK_THROWS_AS(check_split_invariants(train, val, overlap_test), ConfigError);
}

TEST_CASE("desk config is valid and desk-sized") {
  auto cfg = desk_config();
  CHECK(cfg.total_iters == 3000);
  CHECK(cfg.phase1_iters == 2000);
  CHECK(cfg.image_size == 32);
  CHECK_NOTHROW(validate_config(cfg));
}
