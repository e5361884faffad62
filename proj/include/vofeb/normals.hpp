#pragma once

#include <span>
#include <vector>

#include "vofeb/heights.hpp"
#include "vofeb/lattice.hpp"

namespace vofeb {

enum NormalSource : uint8_t {
  kNormalNone = 0,
  kNormalHeight = 1,
  kNormalMyc = 2,
  // MYC with no interfacial cell anywhere in the 26-neighborhood: the stencil
  // carries no orientation information, so the value is low-confidence.
  kNormalMycIsolated = 3,
  kNormalContact = 4,
};

struct InterfaceNormals {
  std::vector<Vec3> n;  // unit, pointing into the gas; zero off the interface
  std::vector<uint8_t> source;
};

// 27-point weighted fraction gradient (unit, into the gas; zero when the
// stencil is uniform).
Vec3 youngs_normal(const ScalarLattice& lat, long ci);

// Mixed-Youngs-centered normal (unit, into the gas): three centered-column
// candidates plus the Youngs gradient, keeping the candidate whose dominant
// component is smallest. Always produces a direction.
Vec3 myc_normal(const ScalarLattice& lat, long ci);

struct NormalOverride {
  long ci = -1;
  Vec3 n{};
};

// Normal for every interfacial cell (0 < c < c_s): height-function based
// where a full 3x3 column stencil exists along some axis, MYC otherwise.
// Entries in `overrides` then replace the computed normal (contact cells).
InterfaceNormals plic_normals(const ScalarLattice& lat, const HeightField& hf,
                              std::span<const NormalOverride> overrides, int nthreads);

// Liquid interface planes recovered from normals and volumes, cell-local
// (liquid on n.x <= gamma).
struct Reconstruction {
  std::vector<PlicPlane> plane;
  std::vector<uint8_t> interfacial;
};

Reconstruction reconstruct_planes(const ScalarLattice& lat, const InterfaceNormals& nrm,
                                  int nthreads);

}  // namespace vofeb
