#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>

namespace nanosim {

// Seeded random source with independent named substreams. Each consumer
// (channel loss per receiver, each detector, scenario scripting) pulls from
// its own stream, so adding one consumer never perturbs another's draws.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  // Uniform double in [0, 1). The engine output is mapped to a double by
  // hand so draws are bit-identical across standard library implementations.
  double uniform(std::string_view stream) {
    const std::uint64_t x = engine_for(stream)();
    return static_cast<double>(x >> 11) * 0x1.0p-53;
  }

  bool bernoulli(std::string_view stream, double p) { return uniform(stream) < p; }

  std::uint64_t next_u64(std::string_view stream) { return engine_for(stream)(); }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  std::mt19937_64& engine_for(std::string_view stream) {
    auto it = streams_.find(std::string(stream));
    if (it == streams_.end()) {
      it = streams_.emplace(std::string(stream), std::mt19937_64(splitmix64(seed_ ^ fnv1a(stream)))).first;
    }
    return it->second;
  }

  std::uint64_t seed_;
  std::unordered_map<std::string, std::mt19937_64> streams_;
};

}  // namespace nanosim
