#pragma once

#include <optional>
#include <vector>

#include "vofeb/core.hpp"

namespace vofeb {

// Face provenance tags carried through clipping so cross-sections can be
// attributed (cube faces 0..5 are -x,+x,-y,+y,-z,+z).
enum FaceTag : int {
  kTagCubeFace0 = 0,
  kTagSolid = 6,   // facet on the embedded-solid plane
  kTagLiquid = 7,  // facet on a liquid-interface plane
  kTagSweep = 8,   // facet bounding an advection region
};

// Convex polyhedron with faces stored as vertex loops, counterclockwise when
// viewed from outside. An empty vertex list denotes the empty set.
struct ConvexPolyhedron {
  std::vector<Vec3> verts;
  std::vector<std::vector<int>> faces;
  std::vector<int> tags;  // parallel to faces

  bool empty() const { return verts.empty(); }
};

// Interface plane n.x = gamma with liquid (or fluid) on the side n.x <= gamma.
// In cell-local coordinates gamma is the signed distance from the cell center.
struct PlicPlane {
  Vec3 n;
  double gamma = 0.0;
};

struct Slab {
  double z_lo = 0.0, z_hi = 0.0;
  // Paired boundary polygons in rotated coordinates: lower[m] and upper[m]
  // lie on the same polyhedron edge, so one-to-two connections appear as
  // repeated vertices. Ordered counterclockwise.
  std::vector<Vec3> lower, upper;
  double area_lo = 0.0, area_hi = 0.0, area_mid = 0.0;
  double volume = 0.0;
  // Shoelace sums feeding the cubic height-volume relation:
  // s_ll = sum x_m^l dy_m^l, s_uu = sum x_m^u dy_m^u,
  // s_lu = sum (x_m^l dy_m^u + x_m^u dy_m^l), with dy_m = y_{m+1} - y_{m-1}.
  double s_ll = 0.0, s_uu = 0.0, s_lu = 0.0;
};

struct SlabDecomposition {
  Mat3 rotation;  // maps the requested axis to +z
  std::vector<Slab> slabs;
  double total_volume = 0.0;
};

// Cube [-1/2,1/2]^3 with faces tagged 0..5.
ConvexPolyhedron unit_cell();

double volume(const ConvexPolyhedron& p);
Vec3 centroid(const ConvexPolyhedron& p);

// Keeps the region n.x <= gamma. The closing facet receives new_tag.
ConvexPolyhedron clip_by_plane(const ConvexPolyhedron& p, const Vec3& n, double gamma,
                               int new_tag);

// Rotation with R*n = +z. n must be unit length. Near n = -z the generic
// entries blow up, so that branch composes the matrix for -n with a half-turn
// about x (diag(1,-1,-1)).
Mat3 rotation_to_axis(const Vec3& n);

// Slices the polyhedron by planes normal to `axis` through every vertex and
// measures each slab via the paired-polygon prismatoid rule.
SlabDecomposition decompose_and_measure(const ConvexPolyhedron& p, const Vec3& axis);

// Positions the plane with normal n_l so the volume on the liquid side
// (n_l.x <= gamma) equals target_volume. target outside [0, volume] is
// clamped. p must be non-empty.
PlicPlane reconstruct_interface(const ConvexPolyhedron& p, const Vec3& n_l,
                                double target_volume);

double truncated_volume(const ConvexPolyhedron& p, const PlicPlane& plane);

// Liquid volume inside the upstream band of width `width` behind the cell
// face (axis, side): side=+1 is the face at +1/2. The band region is clipped
// by the liquid plane when given, then measured slab-wise along the face
// normal. Coordinates are cell-local.
double advected_volume(const ConvexPolyhedron& fluid, int axis, int side, double width,
                       const PlicPlane* liquid);

struct SectionEdge {
  Vec3 a, b;
  int tag = -1;  // tag of the polyhedron face the edge lies on
};

// Cross-section polygon of p with the plane n.x = gamma, returned as the
// per-face edge segments (unchained). Empty when the plane misses p.
std::vector<SectionEdge> plane_section(const ConvexPolyhedron& p, const Vec3& n,
                                       double gamma);

// Area and centroid of the (convex, planar) section polygon assembled from
// the segments returned by plane_section.
bool section_area_centroid(const std::vector<SectionEdge>& edges, const Vec3& n,
                           double* area, Vec3* centroid);

}  // namespace vofeb
