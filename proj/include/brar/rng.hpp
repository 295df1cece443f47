#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "brar/errors.hpp"

namespace brar {

// SplitMix64 finalizer, used to derive stream seeds from a master seed.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Philox4x32-10 counter-based generator.  A (key, stream) pair names an
// independent substream; draws are reproducible regardless of what other
// streams were consumed, which keeps multithreaded sampling schedules
// bitwise deterministic.
class PhiloxStream {
public:
  PhiloxStream(uint64_t key, uint64_t stream)
      : key_{static_cast<uint32_t>(key), static_cast<uint32_t>(key >> 32)},
        stream_lo_(static_cast<uint32_t>(stream)),
        stream_hi_(static_cast<uint32_t>(stream >> 32)) {}

  uint64_t next_u64() {
    if (idx_ >= 2) refill();
    return out64_[idx_++];
  }

  // Uniform on [0,1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; caches the paired deviate.
  double next_normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = 1.0 - next_double();  // (0,1]
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  // Marsaglia-Tsang squeeze; requires shape >= 1.
  double next_gamma(double shape) {
    if (!(shape >= 1.0)) throw DomainError("next_gamma: shape must be >= 1");
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = next_normal();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      double v = t * t * t;
      double u = next_double();
      double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double next_beta(double a, double b) {
    double ga = next_gamma(a);
    double gb = next_gamma(b);
    return ga / (ga + gb);
  }

private:
  static void round(std::array<uint32_t, 4>& c, uint32_t k0, uint32_t k1) {
    uint64_t p0 = 0xD2511F53ULL * c[0];
    uint64_t p1 = 0xCD9E8D57ULL * c[2];
    uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
    uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
  }

  void refill() {
    std::array<uint32_t, 4> c = {static_cast<uint32_t>(ctr_), static_cast<uint32_t>(ctr_ >> 32),
                                 stream_lo_, stream_hi_};
    uint32_t k0 = key_[0], k1 = key_[1];
    for (int r = 0; r < 10; ++r) {
      round(c, k0, k1);
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out64_[0] = (static_cast<uint64_t>(c[0]) << 32) | c[1];
    out64_[1] = (static_cast<uint64_t>(c[2]) << 32) | c[3];
    ++ctr_;
    idx_ = 0;
  }

  std::array<uint32_t, 2> key_;
  uint32_t stream_lo_, stream_hi_;
  uint64_t ctr_ = 0;
  std::array<uint64_t, 2> out64_{};
  int idx_ = 2;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace brar
