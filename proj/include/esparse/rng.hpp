#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace esparse {

// Counter-based stream derivation: every consumer hashes (seed, purpose ids)
// through SplitMix64 and runs its own generator. Results are therefore
// independent of thread count and of evaluation order across pieces,
// iterations and repetitions.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t stream_key(uint64_t seed, std::initializer_list<uint64_t> ids) {
  uint64_t h = splitmix64(seed ^ 0x243f6a8885a308d3ull);
  for (uint64_t id : ids) h = splitmix64(h ^ id);
  return h;
}

// xoshiro256** with a fully specified output path; std::normal_distribution is
// avoided so that streams replay byte-identically across standard libraries.
class RngStream {
public:
  explicit RngStream(uint64_t key) {
    uint64_t x = key;
    for (auto& si : s_) si = x = splitmix64(x);
    has_gauss_ = false;
  }

  uint64_t u64() {
    uint64_t result = rotl(s_[1] * 5, 7) * 9;
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in (0,1); never returns an exact endpoint.
  double unif() { return (static_cast<double>(u64() >> 11) + 0.5) * 0x1.0p-53; }

  double unif(double lo, double hi) { return lo + (hi - lo) * unif(); }

  // Integer in [lo, hi] inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(u64() % span);
  }

  double gauss() {
    if (has_gauss_) {
      has_gauss_ = false;
      return cached_;
    }
    double u1 = unif(), u2 = unif();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.28318530717958647692 * u2;
    cached_ = r * std::sin(a);
    has_gauss_ = true;
    return r * std::cos(a);
  }

  // Rademacher +-1.
  double sign() { return (u64() & 1) ? 1.0 : -1.0; }

private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t s_[4];
  double cached_ = 0.0;
  bool has_gauss_ = false;
};

}  // namespace esparse
