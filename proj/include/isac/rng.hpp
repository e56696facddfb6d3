#ifndef ISAC_RNG_HPP
#define ISAC_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>

namespace isac {

/// Deterministic counter-based stream splitter. A master seed plus a stream
/// key (purpose tag, trial index, sub-index) is hashed into an independent
/// generator state, so Monte-Carlo trials can draw channel, noise, and symbol
/// randomness from disjoint streams in any order and still reproduce
/// byte-identical results.
namespace stream {
enum Tag : std::uint64_t {
  kChannel = 0x6368616e6e656cULL,   // "channel"
  kNoise = 0x6e6f697365ULL,         // "noise"
  kSymbol = 0x73796d626f6cULL,      // "symbol"
  kSearch = 0x736561726368ULL,      // "search"
  kGeneric = 0x67656e65726963ULL,   // "generic"
};
}

class SplitRng {
 public:
  SplitRng() : SplitRng(0, stream::kGeneric, 0, 0) {}

  SplitRng(std::uint64_t master, std::uint64_t tag, std::uint64_t trial = 0,
           std::uint64_t index = 0) {
    state_ = mix(mix(mix(mix(0x9e3779b97f4a7c15ULL ^ master, tag), trial), index),
                 0xd1b54a32d192ed03ULL);
    if (state_ == 0) state_ = 0x2545f4914f6cdd1dULL;
    has_cached_gauss_ = false;
    cached_gauss_ = 0.0;
  }

  /// Next raw 64-bit word (splitmix64 sequence).
  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection-free for our purposes: n is tiny compared to 2^64, the
    // modulo bias is below 2^-50.
    return next_u64() % n;
  }

  /// Standard normal via Box-Muller (explicit, so the byte stream does not
  /// depend on the standard library's distribution internals).
  double gauss() {
    if (has_cached_gauss_) {
      has_cached_gauss_ = false;
      return cached_gauss_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_gauss_ = r * std::sin(a);
    has_cached_gauss_ = true;
    return r * std::cos(a);
  }

  /// Circularly-symmetric complex normal with E|z|^2 = var.
  std::complex<double> cgauss(double var = 1.0) {
    const double s = std::sqrt(var * 0.5);
    return {s * gauss(), s * gauss()};
  }

  /// Unit-variance 64-QAM symbol (Gray-mapped square constellation).
  std::complex<double> qam64() {
    const std::uint64_t w = next_u64();
    const int xi = static_cast<int>(w & 7);
    const int yi = static_cast<int>((w >> 3) & 7);
    // levels {-7,-5,-3,-1,1,3,5,7}/sqrt(42) give unit average energy
    const double scale = 0.15430334996209191025567324209767;  // 1/sqrt(42)
    return {(2 * xi - 7) * scale, (2 * yi - 7) * scale};
  }

 private:
  static std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return h;
  }

  std::uint64_t state_;
  double cached_gauss_;
  bool has_cached_gauss_;
};

}  // namespace isac

#endif  // ISAC_RNG_HPP
