#pragma once

#include <cstdint>
#include <string_view>

namespace crlab {

// Deterministic 64-bit generator (xoshiro256**) with explicit stream
// derivation. Every random draw in a run flows from one root seed; child()
// derives an independent stream from (root seed, tag) so that, for example,
// evaluation rollouts never perturb the training stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01();

  // Uniform on {0, ..., n-1}, unbiased via rejection. n must be >= 1.
  std::uint64_t uniform_below(std::uint64_t n);

  int uniform_int(int lo, int hi);  // inclusive bounds

  // Standard normal via Box-Muller, spare value cached.
  double normal();

  // Independent stream derived from the root seed, not the current state.
  Rng child(std::uint64_t tag) const;

  std::uint64_t root_seed() const { return seed_; }

 private:
  std::uint64_t state_[4];
  std::uint64_t seed_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b);

// FNV-1a over a string, usable for deriving stream tags from names.
constexpr std::uint64_t stream_tag(std::string_view name) {
  std::uint64_t h = 1469598103934665603ull;
  for (char ch : name) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(ch));
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace crlab
