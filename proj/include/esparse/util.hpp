#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace esparse {

// Neumaier-compensated accumulator. The sparsifier's potential function and
// the tree-flow repair both sum long, partially cancelling series; plain
// doubles lose the exactness guarantees the tests pin down.
class KahanSum {
public:
  void add(double x) {
    double t = s_ + x;
    if (std::abs(s_) >= std::abs(x))
      c_ += (s_ - t) + x;
    else
      c_ += (x - t) + s_;
    s_ = t;
  }
  double value() const { return s_ + c_; }

private:
  double s_ = 0.0;
  double c_ = 0.0;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  KahanSum s;
  for (size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
  return s.value();
}

inline double norm2(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

inline double norm1(std::span<const double> a) {
  KahanSum s;
  for (double x : a) s.add(std::abs(x));
  return s.value();
}

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// 64-bit FNV-1a; used for input/output digests in run manifests and for
// cache keys on active-edge sets.
inline uint64_t fnv1a(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a(std::span<const int> v, uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a(v.data(), v.size() * sizeof(int), h);
}

}  // namespace esparse
