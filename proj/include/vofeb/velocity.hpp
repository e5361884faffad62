#pragma once

#include <array>
#include <functional>
#include <vector>

#include "vofeb/lattice.hpp"

namespace vofeb {

// Face-normal velocity components sampled at face centers, one array per face
// family.
struct FaceVelocity {
  LatticeSpec spec;
  std::array<std::vector<double>, 3> u;
};

FaceVelocity sample_face_velocity(const LatticeSpec& spec,
                                  const std::function<Vec3(const Vec3&)>& field);

// Largest |u_f| over faces with positive aperture.
double max_open_face_speed(const ScalarLattice& lat, const FaceVelocity& vel);

// Net volume outflow of one cell: sum over its six faces of sign * u_f * s_f
// * delta^2, with sign +1 on the high face and -1 on the low face.
double cell_flux_divergence(const ScalarLattice& lat, const FaceVelocity& vel, long ci);

double max_abs_flux_divergence(const ScalarLattice& lat, const FaceVelocity& vel);

struct ProjectionReport {
  int iterations = 0;
  double max_divergence = 0.0;
  bool converged = false;
};

// Removes the aperture-weighted divergence of the sampled field with a
// potential correction u_f -= (psi_hi - psi_lo)/delta applied on interior
// faces with s_f > 0; domain-boundary faces are left untouched. psi solves
// the aperture-weighted Poisson system by Jacobi-preconditioned conjugate
// gradients, iterated until every cell's flux divergence is within tol. All
// reductions are deterministic, so the result is bit-identical for any
// nthreads.
ProjectionReport project_solenoidal(const ScalarLattice& lat, FaceVelocity& vel, double tol,
                                    int max_iterations, int nthreads);

}  // namespace vofeb
