#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace quench {

// Seedable RNG with named derived sub-streams. Every sampler in the project
// takes an explicit stream; there is no global generator. Two streams derived
// with the same (seed, label, index) produce identical sequences, which is
// what makes parallel Monte-Carlo runs reproducible.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key);

  static RngStream root(std::uint64_t seed);

  // Derive an independent sub-stream keyed by (this stream, label, index).
  RngStream derive(std::string_view label, std::uint64_t index = 0) const;

  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double normal();   // standard normal

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// 64-bit FNV-1a, used to key oracle calls off raw coefficient bytes.
std::uint64_t fnv1a(const void* data, std::size_t len,
                    std::uint64_t seed = 0xcbf29ce484222325ull);

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace quench
