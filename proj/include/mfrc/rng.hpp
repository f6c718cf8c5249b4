#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mfrc::rng {

// 64-bit FNV-1a, used to fold purpose tags into seeds.
inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t splitmix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Child seed for a named RNG stream. One master seed drives the whole
/// experiment; every consumer (matrix draws, shuffles, random ICs, ...)
/// gets its own stream so stages can be re-run in isolation.
inline uint64_t derive_seed(uint64_t master, std::string_view tag) {
  return splitmix64(master ^ fnv1a(tag));
}

inline uint64_t derive_seed(uint64_t master, std::string_view tag, uint64_t index) {
  return splitmix64(derive_seed(master, tag) ^ splitmix64(index));
}

/// Deterministic random stream. mt19937_64 has a standardized output
/// sequence and the double mapping below is ours, so streams are
/// reproducible across compilers and platforms (std::uniform_real_distribution
/// is not).
class Engine {
public:
  explicit Engine(uint64_t seed) : gen_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform01() { return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53; }

  /// Uniform on the open interval (a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Uniform integer in [0, n); unbiased via rejection.
  uint64_t uniform_index(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  uint64_t raw() { return gen_(); }

private:
  std::mt19937_64 gen_;
};

}  // namespace mfrc::rng
