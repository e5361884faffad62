#include "vofeb/cube_plic.hpp"

#include <algorithm>
#include <cmath>

namespace vofeb {

namespace {

// Reduced problem: plane m.x = a over [0,1]^3 with 0 <= m1 <= m2 <= m3,
// m1+m2+m3 = 1, and 0 <= a <= 1/2.
double reduced_volume(double m1, double m2, double m3, double a) {
  if (a <= 0.0) return 0.0;
  double m12 = m1 + m2;
  if (a < m1) {
    return a * a * a / (6.0 * m1 * m2 * m3);
  }
  if (a < m2) {
    return (a * (a - m1) + m1 * m1 / 3.0) / (2.0 * m2 * m3);
  }
  double ac = std::min(m12, m3);
  if (a < ac) {
    double t1 = a - m1, t2 = a - m2;
    return (a * a * a - t1 * t1 * t1 - t2 * t2 * t2) / (6.0 * m1 * m2 * m3);
  }
  if (m12 <= m3) {
    return (2.0 * a - m12) / (2.0 * m3);
  }
  double t1 = a - m1, t2 = a - m2, t3 = a - m3;
  return (a * a * a - t1 * t1 * t1 - t2 * t2 * t2 - t3 * t3 * t3) / (6.0 * m1 * m2 * m3);
}

double reduced_alpha(double m1, double m2, double m3, double v) {
  if (v <= 0.0) return 0.0;
  double m12 = m1 + m2;
  double v1 = m1 > 0.0 ? m1 * m1 / (6.0 * m2 * m3) : 0.0;
  if (v < v1) {
    return std::cbrt(6.0 * m1 * m2 * m3 * v);
  }
  double v2 = m2 > 0.0 ? (m2 * (m2 - m1) + m1 * m1 / 3.0) / (2.0 * m2 * m3) : 0.0;
  if (v < v2) {
    return 0.5 * (m1 + std::sqrt(8.0 * m2 * m3 * v - m1 * m1 / 3.0));
  }
  double ac = std::min(m12, m3);
  double vc = reduced_volume(m1, m2, m3, ac);
  double lo, hi;
  if (v < vc) {
    lo = m2;
    hi = ac;
  } else if (m12 <= m3) {
    return v * m3 + 0.5 * m12;
  } else {
    lo = m3;
    hi = 0.5;
  }
  // Bracketed Newton on the remaining cubic branches.
  double a = 0.5 * (lo + hi);
  for (int it = 0; it < 60; ++it) {
    double f = reduced_volume(m1, m2, m3, a) - v;
    if (f > 0.0) {
      hi = a;
    } else {
      lo = a;
    }
    double t1 = std::max(a - m1, 0.0), t2 = std::max(a - m2, 0.0), t3 = std::max(a - m3, 0.0);
    double fp = (a * a - t1 * t1 - t2 * t2 - t3 * t3) / (2.0 * m1 * m2 * m3);
    double anew = fp > 0.0 ? a - f / fp : 0.5 * (lo + hi);
    if (!(anew > lo && anew < hi)) anew = 0.5 * (lo + hi);
    if (std::abs(anew - a) < 1e-17) {
      a = anew;
      break;
    }
    a = anew;
  }
  return a;
}

struct Reduction {
  double m1, m2, m3;  // sorted ascending, L1-normalized
  double shift;       // gamma -> a = (gamma + shift) / scale
  double scale;
};

Reduction reduce(const Vec3& n) {
  double ax = std::abs(n.x), ay = std::abs(n.y), az = std::abs(n.z);
  double s = ax + ay + az;
  // Map to [0,1]^3 with positive coefficients: a = gamma + sum(|n_i|)/2.
  Reduction r;
  r.scale = s;
  r.shift = 0.5 * s;
  double m[3] = {ax, ay, az};
  std::sort(m, m + 3);
  r.m1 = m[0] / s;
  r.m2 = m[1] / s;
  r.m3 = m[2] / s;
  return r;
}

}  // namespace

double cube_volume_below(const Vec3& n, double gamma) {
  Reduction r = reduce(n);
  if (r.scale <= 0.0) return 0.0;
  double a = (gamma + r.shift) / r.scale;
  if (a <= 0.0) return 0.0;
  if (a >= 1.0) return 1.0;
  if (a > 0.5) return 1.0 - reduced_volume(r.m1, r.m2, r.m3, 1.0 - a);
  return reduced_volume(r.m1, r.m2, r.m3, a);
}

double cube_gamma_for_volume(const Vec3& n, double frac) {
  Reduction r = reduce(n);
  if (r.scale <= 0.0) return 0.0;
  double v = std::clamp(frac, 0.0, 1.0);
  double a = v <= 0.5 ? reduced_alpha(r.m1, r.m2, r.m3, v)
                      : 1.0 - reduced_alpha(r.m1, r.m2, r.m3, 1.0 - v);
  return a * r.scale - r.shift;
}

double box_liquid_volume(const Vec3& n, double gamma, const Vec3& lo, const Vec3& hi) {
  Vec3 h = hi - lo;
  double vol = h.x * h.y * h.z;
  if (vol <= 0.0) return 0.0;
  Vec3 c = 0.5 * (lo + hi);
  Vec3 ns{n.x * h.x, n.y * h.y, n.z * h.z};
  return vol * cube_volume_below(ns, gamma - dot(n, c));
}

}  // namespace vofeb
