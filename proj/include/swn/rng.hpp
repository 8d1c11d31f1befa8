#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <string_view>

namespace swn::rng {

/// Name of the stream-derivation scheme; recorded in all output metadata so
/// results can be reproduced independently of how trials were scheduled.
inline constexpr const char* scheme = "swn-splitmix64+mt19937_64/v1";

inline std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// (seed, label) -> sub-stream seed. Labels name the role of a stream
/// ("dictionary", "noise", "sweep/n=40/t=3", ...); the same (seed, label)
/// always yields the same sub-seed, regardless of draw order elsewhere.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept {
  // FNV-1a over the label, folded into the seed through splitmix64.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::uint64_t state = seed ^ h;
  std::uint64_t mixed = splitmix64_next(state);
  return splitmix64_next(state) ^ mixed;
}

/// A deterministic random stream. The generator (mt19937_64) and all
/// derived draws are fully specified, so a (seed, label) pair reproduces
/// bit-identically on any platform.
class Stream {
 public:
  Stream(std::uint64_t seed, std::string_view label)
      : gen_(derive_seed(seed, label)) {}

  explicit Stream(std::uint64_t raw_seed) : gen_(raw_seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; never returns 0 (safe for log() and quantile tails).
  double uniform_open01() { return 1.0 - uniform01(); }

  /// Uniform integer in [0, bound), bound >= 1. Rejection sampling, unbiased.
  std::uint64_t uniform_below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % bound;
  }

  /// Standard normal draw via the Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace swn::rng
