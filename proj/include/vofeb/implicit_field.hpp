#pragma once

#include <functional>
#include <utility>

#include "vofeb/core.hpp"

namespace vofeb {

// Signed scalar field describing a region: positive inside, negative outside.
// Used both for the fluid region (positive = fluid, negative = solid) and for
// the initial liquid region (positive = liquid).
struct ImplicitField {
  std::function<double(const Vec3&)> value;

  // Set when the region is a single half space n . x <= d (n unit length,
  // positive side n . x < d).  Enables exact volume initialization.
  bool is_half_space = false;
  Vec3 hs_normal{0.0, 0.0, 0.0};
  double hs_offset = 0.0;

  double operator()(const Vec3& x) const { return value(x); }
};

// Region covering all space.
ImplicitField everywhere();

// Half space n . (x - p) < 0 is inside (n points out of the region).
ImplicitField half_space(const Vec3& outward_normal, const Vec3& point);

// Interior of a sphere.
ImplicitField ball(const Vec3& center, double radius);

// Exterior of a sphere.
ImplicitField ball_complement(const Vec3& center, double radius);

// One-sided cone interior: points whose direction from the apex lies within
// half_angle of the axis.
ImplicitField cone(const Vec3& apex, const Vec3& axis, double half_angle);

ImplicitField complement(ImplicitField f);
ImplicitField unite(ImplicitField a, ImplicitField b);
ImplicitField intersect(ImplicitField a, ImplicitField b);

}  // namespace vofeb
