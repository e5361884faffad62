#pragma once

#include "vofeb/lattice.hpp"
#include "vofeb/velocity.hpp"

namespace vofeb {

// A fully initialized benchmark state: embedded lattice with its starting
// liquid, divergence-cleaned face velocity, and the duration of one cycle.
struct CaseSetup {
  ScalarLattice lat;
  FaceVelocity vel;
  double period = 0.0;
  double theta = 0.0;  // prescribed contact angle (radians), NaN when unused
  Vec3 center{};
  ProjectionReport projection;
  // Smallest c_s over the largest face fraction among mixed cells, after any
  // pruning; gauges how hard small cut cells constrain the strict time step.
  double min_cs_over_sf = 0.0;
};

// Cube of side 1.5 around a solid ball of radius 0.4, resolved at cpr cells
// per liquid radius (0.6), so 19.2 cpr gives a 48^3 grid; the liquid stays
// well clear of the walls.
LatticeSpec shell_domain(double cpr);

// Liquid shell between the solid ball (r = 0.4) and r = 0.6 in rigid rotation
// about the z axis through the center; every liquid cell starts full. Cells
// with an edge fraction below prune are absorbed into the solid.
CaseSetup make_rotating_shell(double cpr, double prune, double projection_tol, int nthreads);

// The same shell with a conical wedge (half-angle 24.6 degrees, apex at the
// center, axis +x) removed, rotating rigidly about (0, 1, -1) through the
// center; the radial cone surface meets the solid sphere at 90 degrees.
CaseSetup make_conical_cutout(double cpr, double prune, double projection_tol, int nthreads);

}  // namespace vofeb
