#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "vofeb/core.hpp"
#include "vofeb/implicit_field.hpp"
#include "vofeb/polyhedron.hpp"

namespace vofeb {

struct LatticeSpec {
  Vec3 origin{0.0, 0.0, 0.0};
  std::array<int, 3> n{0, 0, 0};
  double delta = 0.0;

  long cells() const { return static_cast<long>(n[0]) * n[1] * n[2]; }
  long cell_index(int i, int j, int k) const {
    return i + static_cast<long>(n[0]) * (j + static_cast<long>(n[1]) * k);
  }
  void cell_coords(long ci, int* i, int* j, int* k) const {
    *i = static_cast<int>(ci % n[0]);
    *j = static_cast<int>((ci / n[0]) % n[1]);
    *k = static_cast<int>(ci / (static_cast<long>(n[0]) * n[1]));
  }
  bool in_domain(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < n[0] && j < n[1] && k < n[2];
  }
  Vec3 cell_center(int i, int j, int k) const {
    return origin + delta * Vec3{i + 0.5, j + 0.5, k + 0.5};
  }
  Vec3 vertex(int i, int j, int k) const {
    return origin + delta * Vec3{double(i), double(j), double(k)};
  }

  std::array<int, 3> face_dims(int axis) const {
    return {n[0] + (axis == 0), n[1] + (axis == 1), n[2] + (axis == 2)};
  }
  long face_count(int axis) const {
    auto d = face_dims(axis);
    return static_cast<long>(d[0]) * d[1] * d[2];
  }
  // Face (i, j, k) of a family is the low face of cell (i, j, k) along that
  // axis; the axis coordinate runs to n[axis] inclusive.
  long face_index(int axis, int i, int j, int k) const {
    auto d = face_dims(axis);
    return i + static_cast<long>(d[0]) * (j + static_cast<long>(d[1]) * k);
  }
  Vec3 face_center(int axis, int i, int j, int k) const {
    Vec3 f{i + 0.5, j + 0.5, k + 0.5};
    f[axis] -= 0.5;
    return origin + delta * f;
  }

  std::array<int, 3> edge_dims(int axis) const {
    return {n[0] + (axis != 0), n[1] + (axis != 1), n[2] + (axis != 2)};
  }
  long edge_count(int axis) const {
    auto d = edge_dims(axis);
    return static_cast<long>(d[0]) * d[1] * d[2];
  }
  // Edge (i, j, k) of a family runs from vertex (i, j, k) along the axis.
  long edge_index(int axis, int i, int j, int k) const {
    auto d = edge_dims(axis);
    return i + static_cast<long>(d[0]) * (j + static_cast<long>(d[1]) * k);
  }
};

enum CellKind : uint8_t { kCellSolid = 0, kCellMixed = 1, kCellFluid = 2 };

// Boundary plane of a mixed cell in cell-local coordinates (cell scaled to the
// unit cube centered at the origin).  The fluid occupies n . x >= gamma, so n
// points from the solid into the fluid.
struct CellPlane {
  Vec3 n{0.0, 0.0, 1.0};
  double gamma = 0.0;
};

struct ScalarLattice {
  LatticeSpec spec;
  std::vector<double> c;
  std::vector<double> cs;
  std::vector<uint8_t> kind;
  std::array<std::vector<double>, 3> sf;
  std::array<std::vector<double>, 3> sl;
  std::vector<int32_t> poly_of;
  std::vector<ConvexPolyhedron> polys;
  std::vector<CellPlane> planes;

  double cell_cs(int i, int j, int k) const {
    return spec.in_domain(i, j, k) ? cs[spec.cell_index(i, j, k)] : 1.0;
  }
  double cell_c(int i, int j, int k) const {
    return spec.in_domain(i, j, k) ? c[spec.cell_index(i, j, k)] : 0.0;
  }
  const ConvexPolyhedron* fluid_poly(long ci) const {
    return poly_of[ci] >= 0 ? &polys[poly_of[ci]] : nullptr;
  }
  const CellPlane* cell_plane(long ci) const {
    return poly_of[ci] >= 0 ? &planes[poly_of[ci]] : nullptr;
  }
};

// Builds the embedded-boundary description of `solid` (positive = fluid).
// Throws std::runtime_error when an edge of the lattice crosses the boundary
// more than once (geometry under-resolved), naming the offending cell.
ScalarLattice init_embedded(const LatticeSpec& spec, const ImplicitField& fluid_region);

// Converts every cell touching an edge with 0 < s_l < sl_min to a plain solid
// (c_s < 1/2) or fluid (otherwise) cell and re-derives the face and edge
// fractions affected.  Returns the resulting minimum of c_s over the largest
// face fraction among mixed cells (+infinity when none remain).  Idempotent.
double prune_small_cells(ScalarLattice& lat, double sl_min);

// Fills c from a liquid region (positive = liquid), clamped into the fluid:
// c <= c_s everywhere.  Half-space regions are computed exactly; other shapes
// use recursive subcell sampling.  Cells strictly inside the liquid get
// c = c_s exactly.
void init_liquid(ScalarLattice& lat, const ImplicitField& liquid_region);

}  // namespace vofeb
