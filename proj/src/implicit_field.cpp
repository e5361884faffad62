#include "vofeb/implicit_field.hpp"

#include <algorithm>
#include <cmath>

namespace vofeb {

ImplicitField everywhere() {
  ImplicitField f;
  f.value = [](const Vec3&) { return 1.0; };
  return f;
}

ImplicitField half_space(const Vec3& outward_normal, const Vec3& point) {
  const Vec3 n = normalized(outward_normal);
  const double d = dot(n, point);
  ImplicitField f;
  f.value = [n, d](const Vec3& x) { return d - dot(n, x); };
  f.is_half_space = true;
  f.hs_normal = n;
  f.hs_offset = d;
  return f;
}

ImplicitField ball(const Vec3& center, double radius) {
  ImplicitField f;
  f.value = [center, radius](const Vec3& x) { return radius - norm(x - center); };
  return f;
}

ImplicitField ball_complement(const Vec3& center, double radius) {
  ImplicitField f;
  f.value = [center, radius](const Vec3& x) { return norm(x - center) - radius; };
  return f;
}

ImplicitField cone(const Vec3& apex, const Vec3& axis, double half_angle) {
  const Vec3 a = normalized(axis);
  const double c = std::cos(half_angle);
  ImplicitField f;
  f.value = [apex, a, c](const Vec3& x) {
    const Vec3 r = x - apex;
    return dot(r, a) - c * norm(r);
  };
  return f;
}

ImplicitField complement(ImplicitField f) {
  ImplicitField g;
  auto inner = std::move(f.value);
  g.value = [inner = std::move(inner)](const Vec3& x) { return -inner(x); };
  if (f.is_half_space) {
    g.is_half_space = true;
    g.hs_normal = -1.0 * f.hs_normal;
    g.hs_offset = -f.hs_offset;
  }
  return g;
}

ImplicitField unite(ImplicitField a, ImplicitField b) {
  ImplicitField f;
  f.value = [fa = std::move(a.value), fb = std::move(b.value)](const Vec3& x) {
    return std::max(fa(x), fb(x));
  };
  return f;
}

ImplicitField intersect(ImplicitField a, ImplicitField b) {
  ImplicitField f;
  f.value = [fa = std::move(a.value), fb = std::move(b.value)](const Vec3& x) {
    return std::min(fa(x), fb(x));
  };
  return f;
}

}  // namespace vofeb
