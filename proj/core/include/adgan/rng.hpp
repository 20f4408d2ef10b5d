#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace adgan {

// Deterministic, platform-independent PRNG (xoshiro256++). We avoid the
// standard <random> distributions because their output sequences are
// implementation-defined; every draw here is reproducible from the seed
// alone on any platform.
class Rng {
 public:
  Rng() : Rng(0x9e3779b97f4a7c15ull) {}
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 significant bits.
  double uniform01();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  float uniform_f(float lo, float hi);
  // Integer in [0, n), n > 0, via rejection sampling (unbiased).
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller; one spare value is cached.
  double normal();
  double normal(double mean, double stddev);

  // Fisher-Yates using this stream.
  template <typename Container>
  void shuffle(Container& c) {
    if (c.size() < 2) return;
    for (std::size_t i = c.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(below(i + 1));
      std::swap(c[i], c[j]);
    }
  }

  std::array<std::uint64_t, 4> state() const { return state_; }
  void set_state(const std::array<std::uint64_t, 4>& s);

 private:
  std::array<std::uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Hashes (root_seed, name) into an independent stream seed so components
// (data, init, training, ...) can be re-run in isolation.
std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view stream_name);

}  // namespace adgan
