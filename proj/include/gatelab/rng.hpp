#pragma once

#include <cassert>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <string_view>

namespace gatelab {

// Deterministic pseudo-random stream. Wraps std::mt19937_64 but owns every
// value-to-range mapping, because the std distribution objects are
// implementation-defined and would break bit-exact reproducibility.
class Rng {
 public:
  Rng() : engine_(0) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [lo, hi], inclusive. Rejection sampling.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    assert(lo <= hi);
    const std::uint64_t span =
        static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());  // full 64-bit range
    const std::uint64_t reject_below = (0 - span) % span;        // 2^64 mod span
    std::uint64_t x = engine_();
    while (x < reject_below) x = engine_();
    return lo + static_cast<std::int64_t>(x % span);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Categorical draw over probs[0..n); probs must sum to ~1. Walks the
  // cumulative sum in index order so the draw sequence is reproducible.
  std::size_t categorical(const double* probs, std::size_t n) {
    assert(n > 0);
    const double u = uniform01();
    double cum = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      cum += probs[k];
      if (u < cum) return k;
    }
    return n - 1;
  }

  void save(std::ostream& os) const { os << engine_; }
  void load(std::istream& is) { is >> engine_; }

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

// Stable seed derivation: one master seed fans out into named streams so that
// consumers (sampling, gate leaks, holdout eval, ...) never share state.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a over the tag
  for (unsigned char c : tag) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull + h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;  // splitmix64 finalizer
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace gatelab
