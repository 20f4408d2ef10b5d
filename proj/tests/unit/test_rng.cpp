#include "doctest.h"

#include <vector>

#include "adgan/rng.hpp"

using adgan::Rng;

TEST_CASE("rng is reproducible from seed") {
  Rng a(1234), b(1234);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng streams with different seeds differ") {
  Rng a(1), b(2);
  bool differ = false;
  for (int i = 0; i < 16; ++i) differ |= (a.next_u64() != b.next_u64());
  CHECK(differ);
}

TEST_CASE("uniform stays in range") {
  Rng r(7);
  for (int i = 0; i < 10000; ++i) {
    const double v = r.uniform(-1.0, 1.0);
    CHECK(v >= -1.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("below is unbiased over small range") {
  Rng r(11);
  std::vector<int> counts(5, 0);
  const int n = 50000;
  for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(r.below(5))]++;
  for (int c : counts) {
    CHECK(c > n / 5 - 800);
    CHECK(c < n / 5 + 800);
  }
}

TEST_CASE("normal has roughly unit variance") {
  Rng r(13);
  double sum = 0.0, sumsq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("derive_seed separates named streams") {
  const auto s1 = adgan::derive_seed(42, "data");
  const auto s2 = adgan::derive_seed(42, "init");
  const auto s3 = adgan::derive_seed(43, "data");
  CHECK(s1 != s2);
  CHECK(s1 != s3);
  CHECK(s1 == adgan::derive_seed(42, "data"));
}

TEST_CASE("state round-trip resumes the stream") {
  Rng a(99);
  for (int i = 0; i < 17; ++i) a.next_u64();
  const auto st = a.state();
  Rng b;
  b.set_state(st);
  for (int i = 0; i < 50; ++i) CHECK(a.next_u64() == b.next_u64());
}
