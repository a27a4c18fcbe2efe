#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace gazeaug {

// mt19937_64's output sequence is fixed by the standard, unlike the std
// distributions, so all draws go through uniform01 below.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform index in [0, n).
inline std::size_t uniformIndex(Rng& rng, std::size_t n) {
  auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Order-sensitive stable hash for deriving per-sample streams. Independent of
// platform, thread count and scheduling.
class StreamKey {
 public:
  explicit StreamKey(std::uint64_t seed) : h_(splitmix64(seed)) {}

  StreamKey& add(std::string_view s) {
    for (unsigned char c : s) mix(c);
    mix(0xff);  // terminator keeps ("ab","c") != ("a","bc")
    return *this;
  }

  StreamKey& add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(v >> (8 * i)));
    return *this;
  }

  std::uint64_t value() const { return splitmix64(h_); }
  Rng rng() const { return Rng(value()); }

 private:
  void mix(unsigned char c) {
    h_ ^= c;
    h_ *= 0x100000001b3ULL;
  }

  std::uint64_t h_;
};

}  // namespace gazeaug
