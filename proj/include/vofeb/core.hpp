#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace vofeb {

// Geometric comparisons inside a unit cell; all cell-local work is scaled to
// side length 1, so this is an absolute tolerance.
inline constexpr double kGeomEps = 1e-12;

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator*(double s, Vec3 a) { return a *= s; }
inline Vec3 operator*(Vec3 a, double s) { return a *= s; }
inline Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }
inline Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(const Vec3& a) {
  double n = norm(a);
  return n > 0.0 ? a / n : Vec3{0.0, 0.0, 0.0};
}

inline Vec3 axis_unit(int a) {
  Vec3 e;
  e[a] = 1.0;
  return e;
}

// Row-major 3x3 matrix; rows kept as vectors so R*v is three dot products.
struct Mat3 {
  Vec3 r0, r1, r2;

  Vec3 operator*(const Vec3& v) const { return {dot(r0, v), dot(r1, v), dot(r2, v)}; }

  Mat3 operator*(const Mat3& m) const {
    Mat3 t = m.transposed();
    return {{dot(r0, t.r0), dot(r0, t.r1), dot(r0, t.r2)},
            {dot(r1, t.r0), dot(r1, t.r1), dot(r1, t.r2)},
            {dot(r2, t.r0), dot(r2, t.r1), dot(r2, t.r2)}};
  }

  Mat3 transposed() const {
    return {{r0.x, r1.x, r2.x}, {r0.y, r1.y, r2.y}, {r0.z, r1.z, r2.z}};
  }

  static Mat3 identity() { return {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}; }
  static Mat3 diag(double a, double b, double c) { return {{a, 0, 0}, {0, b, 0}, {0, 0, c}}; }
};

// Sum of range_sum over [0, n) accumulated through a fixed number of chunks,
// so the value is bit-identical regardless of the worker count.
inline double chunked_sum(long n, int nthreads,
                          const std::function<double(long, long)>& range_sum);

// Chunked parallel loop over [0, n). Chunk boundaries depend only on n and
// nthreads, and workers never share output cells, so results are independent
// of the worker count.
inline void parallel_for(long n, int nthreads, const std::function<void(long, long)>& body) {
  if (n <= 0) return;
  if (nthreads <= 1) {
    body(0, n);
    return;
  }
  long nchunks = std::min<long>(nthreads, n);
  long chunk = (n + nchunks - 1) / nchunks;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(nchunks));
  for (long c = 0; c < nchunks; ++c) {
    long b = c * chunk;
    long e = std::min(n, b + chunk);
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  for (auto& t : pool) t.join();
}

inline double chunked_sum(long n, int nthreads,
                          const std::function<double(long, long)>& range_sum) {
  if (n <= 0) return 0.0;
  const long nchunks = std::min<long>(64, n);
  const long chunk = (n + nchunks - 1) / nchunks;
  std::vector<double> parts(static_cast<size_t>(nchunks), 0.0);
  parallel_for(nchunks, nthreads, [&](long b, long e) {
    for (long ci = b; ci < e; ++ci) {
      long lo = ci * chunk;
      long hi = std::min(n, lo + chunk);
      parts[static_cast<size_t>(ci)] = range_sum(lo, hi);
    }
  });
  double s = 0.0;
  for (double p : parts) s += p;
  return s;
}

// Maximum of range_max over [0, n), chunked like chunked_sum so the value is
// independent of the worker count. range_max is only called on nonempty
// ranges; returns -HUGE_VAL when n <= 0.
inline double chunked_max(long n, int nthreads,
                          const std::function<double(long, long)>& range_max) {
  if (n <= 0) return -HUGE_VAL;
  const long nchunks = std::min<long>(64, n);
  const long chunk = (n + nchunks - 1) / nchunks;
  std::vector<double> parts(static_cast<size_t>(nchunks), -HUGE_VAL);
  parallel_for(nchunks, nthreads, [&](long b, long e) {
    for (long ci = b; ci < e; ++ci) {
      long lo = ci * chunk;
      long hi = std::min(n, lo + chunk);
      if (lo < hi) parts[static_cast<size_t>(ci)] = range_max(lo, hi);
    }
  });
  double m = -HUGE_VAL;
  for (double p : parts) m = std::max(m, p);
  return m;
}

}  // namespace vofeb
