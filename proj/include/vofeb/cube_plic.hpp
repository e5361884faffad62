#pragma once

#include "vofeb/core.hpp"

namespace vofeb {

// Closed-form plane/cube volume relations on the cell-local cube
// [-1/2,1/2]^3. Liquid occupies n.x <= gamma. These are the standard
// piecewise-cubic relations for a plane cutting a rectangular hexahedron and
// agree with the polyhedron kernel to round-off; the advection sweep uses
// them on cells without an embedded solid.

// Liquid volume fraction of the unit cell.
double cube_volume_below(const Vec3& n, double gamma);

// Inverse: gamma such that the liquid fraction equals frac (clamped to [0,1]).
double cube_gamma_for_volume(const Vec3& n, double frac);

// Liquid volume (absolute) of the axis-aligned box [lo, hi] under the same
// cell-local plane.
double box_liquid_volume(const Vec3& n, double gamma, const Vec3& lo, const Vec3& hi);

}  // namespace vofeb
