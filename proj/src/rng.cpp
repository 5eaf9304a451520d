#include "quench/rng.hpp"

namespace quench {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

RngStream::RngStream(std::uint64_t key) : key_(key) {
  std::uint64_t s = key;
  // Decorrelate nearby keys before seeding the engine.
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  eng_.seed(seq);
}

RngStream RngStream::root(std::uint64_t seed) { return RngStream(seed); }

RngStream RngStream::derive(std::string_view label, std::uint64_t index) const {
  std::uint64_t h = fnv1a(label.data(), label.size(), key_ ^ 0x51ed2701a2b5f3a7ull);
  std::uint64_t s = h ^ (index * 0x9e3779b97f4a7c15ull);
  std::uint64_t k = splitmix64(s);
  return RngStream(k);
}

std::uint64_t RngStream::next_u64() { return eng_(); }

double RngStream::uniform() {
  // 53-bit mantissa draw.
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(eng_); }

}  // namespace quench
