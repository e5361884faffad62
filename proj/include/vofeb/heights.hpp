#pragma once

#include <array>
#include <vector>

#include "vofeb/lattice.hpp"

namespace vofeb {

inline constexpr int kHeightHalfWidth = 4;

// Column sums of c converted into an absolute interface coordinate. h[a][ci]
// is the interface position along axis a inside the column of cells within
// kHeightHalfWidth of ci (truncated at domain boundaries). A column is valid
// only when it is free of embedded solid and its end cells bracket the
// interface: one full of liquid, the other empty. orient[a][ci] is +1 when
// the liquid sits at the low end of the column, -1 at the high end, and 0
// when the column is invalid (h is NaN there).
struct HeightField {
  LatticeSpec spec;
  std::array<std::vector<double>, 3> h;
  std::array<std::vector<int8_t>, 3> orient;

  bool valid(int axis, long ci) const { return orient[axis][ci] != 0; }
};

HeightField compute_heights(const ScalarLattice& lat, int nthreads);

// Interface normal (unit, pointing into the gas) from the 3x3 stencil of
// heights around ci along `axis`. False when any of the nine columns is
// missing or they disagree on orientation.
bool hf_normal(const HeightField& hf, long ci, int axis, Vec3* n);

// Curvature from the first axis, tried in descending |hint| component order,
// with a complete 3x3 height stencil. Signed so a convex liquid body is
// positive (sphere of radius R: 2/R). False when no axis has a full stencil.
bool hf_curvature(const HeightField& hf, long ci, const Vec3& hint, double* kappa);

}  // namespace vofeb
