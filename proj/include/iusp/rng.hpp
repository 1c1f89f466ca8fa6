#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace iusp {

// Deterministic random stream. std::mt19937_64 is the engine (its output is
// pinned by the standard); the distributions are implemented here because the
// standard library's distribution objects are implementation-defined and
// would break bit-identical reproduction across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive, via rejection-free modulo on a
  // 64-bit draw (bias < 2^-40 for the ranges used here).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(engine_() % span);
  }

  // Standard normal via Box-Muller. Draws two uniforms per call.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // In-place Fisher-Yates. std::shuffle is implementation-defined, this is not.
  template <typename Vec>
  void shuffle(Vec& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j =
          static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// FNV-1a over the id string, mixed with the base seed. Used to derive
// independent per-clip streams so corpus generation can run in any order.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view id) {
  std::uint64_t h = 14695981039346656037ull ^ (base * 0x9e3779b97f4a7c15ull);
  for (const char ch : id) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace iusp
