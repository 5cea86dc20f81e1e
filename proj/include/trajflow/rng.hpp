#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace trajflow {

// FNV-1a over arbitrary bytes; also used for artifact digests.
inline uint64_t fnv1a64(const void* bytes, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seeded random stream. All randomness in the project flows from one root
// seed through named streams, so independent modules draw from independent,
// reproducible sequences: derive(root, "expert", episode) never collides
// with derive(root, "flow", step).
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : gen_(splitmix64(seed)) {}

  static RngStream derive(uint64_t root, std::string_view name) {
    return RngStream(splitmix64(root) ^ fnv1a64(name));
  }
  static RngStream derive(uint64_t root, std::string_view name, uint64_t index) {
    std::string tagged(name);
    tagged += ':';
    tagged += std::to_string(index);
    return RngStream(splitmix64(root) ^ fnv1a64(tagged));
  }

  uint64_t next() { return gen_(); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    // A fresh distribution per call keeps the stream stateless between draws.
    return std::normal_distribution<double>(mean, stddev)(gen_);
  }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(gen_);
  }

  std::mt19937_64& engine() noexcept { return gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace trajflow
