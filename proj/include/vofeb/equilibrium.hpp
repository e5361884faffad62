#pragma once

#include <array>

namespace vofeb {

// Radius of the contact circle of a spherical cap of the given volume meeting
// a flat plate at contact angle theta (radians).
double equilibrium_radius_flat(double volume, double theta);

// Equilibrium of a droplet of initial radius r0 wetting a solid sphere of the
// same radius at contact angle theta: droplet radius rt, aperture beta1 at
// the droplet center and beta2 at the solid center.
struct SphereEquilibrium {
  double rt = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
};

// Residuals of the angle-sum, contact-circle, and volume-balance equations.
std::array<double, 3> sphere_equilibrium_residuals(double r0, double theta,
                                                   const SphereEquilibrium& s);

// Solves the system by Newton iteration, falling back to bisection on beta1;
// the result zeroes every residual to 1e-12 relative scale.
SphereEquilibrium equilibrium_sphere_system(double r0, double theta);

}  // namespace vofeb
