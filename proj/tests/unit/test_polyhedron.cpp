#include <cmath>
#include <random>

#include "doctest.h"
#include "vofeb/polyhedron.hpp"

using namespace vofeb;

namespace {

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 v{g(rng), g(rng), g(rng)};
  while (norm(v) < 1e-3) v = {g(rng), g(rng), g(rng)};
  return normalized(v);
}

struct HalfSpace {
  Vec3 n;
  double gamma;  // keeps n.x <= gamma
};

// Monte-Carlo volume of the intersection of half-spaces with the unit cell.
// Classifies sample points against the defining planes directly, independent
// of the polyhedron machinery under test.
double mc_volume(const std::vector<HalfSpace>& hs, long samples, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  long in = 0;
  for (long s = 0; s < samples; ++s) {
    Vec3 p{u(rng), u(rng), u(rng)};
    bool ok = true;
    for (const auto& h : hs) ok = ok && dot(h.n, p) <= h.gamma;
    in += ok ? 1 : 0;
  }
  return static_cast<double>(in) / static_cast<double>(samples);
}

double mc_sigma(double v, long samples) {
  return std::sqrt(std::max(v * (1.0 - v), 1e-12) / static_cast<double>(samples));
}

ConvexPolyhedron clip_all(const std::vector<HalfSpace>& hs) {
  ConvexPolyhedron p = unit_cell();
  for (const auto& h : hs) p = clip_by_plane(p, h.n, h.gamma, kTagSolid);
  return p;
}

}  // namespace

TEST_CASE("unit cell measures") {
  ConvexPolyhedron c = unit_cell();
  CHECK(volume(c) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(norm(centroid(c)) < 1e-14);
}

TEST_CASE("rotation maps the axis to +z and is orthonormal") {
  std::mt19937_64 rng(12345);
  for (int k = 0; k < 200; ++k) {
    Vec3 n = random_unit(rng);
    Mat3 r = rotation_to_axis(n);
    Vec3 img = r * n;
    CHECK(std::abs(img.x) < 1e-13);
    CHECK(std::abs(img.y) < 1e-13);
    CHECK(img.z == doctest::Approx(1.0).epsilon(1e-13));
    Mat3 rrt = r * r.transposed();
    CHECK(std::abs(rrt.r0.x - 1.0) < 1e-13);
    CHECK(std::abs(rrt.r1.y - 1.0) < 1e-13);
    CHECK(std::abs(rrt.r2.z - 1.0) < 1e-13);
    CHECK(std::abs(rrt.r0.y) < 1e-13);
    CHECK(std::abs(rrt.r0.z) < 1e-13);
    CHECK(std::abs(rrt.r1.z) < 1e-13);
    // Proper rotation: the rows form a right-handed triad.
    CHECK(dot(cross(r.r0, r.r1), r.r2) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("rotation handles the -z singular direction") {
  for (Vec3 n : {Vec3{0, 0, -1}, normalized(Vec3{1e-6, -2e-6, -1.0}),
                 normalized(Vec3{3e-5, 1e-5, -1.0})}) {
    Mat3 r = rotation_to_axis(n);
    Vec3 img = r * n;
    CHECK(std::abs(img.x) < 1e-9);
    CHECK(std::abs(img.y) < 1e-9);
    CHECK(img.z == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(dot(cross(r.r0, r.r1), r.r2) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("clip complements partition the cell volume exactly") {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> ug(-0.8, 0.8);
  for (int k = 0; k < 300; ++k) {
    Vec3 n = random_unit(rng);
    double g = ug(rng);
    double va = volume(clip_by_plane(unit_cell(), n, g, kTagSolid));
    double vb = volume(clip_by_plane(unit_cell(), -n, -g, kTagSolid));
    CHECK(va + vb == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(va >= -1e-13);
    CHECK(vb >= -1e-13);
  }
}

TEST_CASE("clip volume matches Monte-Carlo oracle") {
  std::mt19937_64 rng(424242);
  std::uniform_real_distribution<double> ug(-0.6, 0.6);
  const long samples = 2000000;
  for (int k = 0; k < 8; ++k) {
    std::vector<HalfSpace> hs;
    int nplanes = 1 + k % 3;
    for (int j = 0; j < nplanes; ++j) hs.push_back({random_unit(rng), ug(rng)});
    double vgeom = volume(clip_all(hs));
    double vmc = mc_volume(hs, samples, 1000 + k);
    CHECK(std::abs(vgeom - vmc) < 4.0 * mc_sigma(vmc, samples) + 1e-9);
  }
}

TEST_CASE("clip through cell vertices and edges stays consistent") {
  // Plane through four cube vertices (diagonal): halves of equal volume.
  Vec3 n = normalized(Vec3{1, 1, 0});
  double v = volume(clip_by_plane(unit_cell(), n, 0.0, kTagSolid));
  CHECK(v == doctest::Approx(0.5).epsilon(1e-13));
  // Plane exactly grazing a face keeps the full cell.
  double vfull = volume(clip_by_plane(unit_cell(), Vec3{1, 0, 0}, 0.5, kTagSolid));
  CHECK(vfull == doctest::Approx(1.0).epsilon(1e-13));
  // Plane through one vertex, cutting a corner of zero size.
  Vec3 nc = normalized(Vec3{1, 1, 1});
  double vz = volume(clip_by_plane(unit_cell(), nc, dot(nc, Vec3{0.5, 0.5, 0.5}), kTagSolid));
  CHECK(vz == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("slab decomposition total equals divergence-theorem volume") {
  std::mt19937_64 rng(90901);
  std::uniform_real_distribution<double> ug(-0.45, 0.45);
  for (int k = 0; k < 60; ++k) {
    std::vector<HalfSpace> hs;
    for (int j = 0; j < k % 3; ++j) hs.push_back({random_unit(rng), ug(rng)});
    ConvexPolyhedron p = clip_all(hs);
    if (p.empty()) continue;
    double vref = volume(p);
    for (int a = 0; a < 3; ++a) {
      Vec3 axis = random_unit(rng);
      SlabDecomposition sd = decompose_and_measure(p, axis);
      CHECK(sd.total_volume == doctest::Approx(vref).epsilon(1e-11));
    }
  }
}

TEST_CASE("slab mid-plane area matches an independent mid-height section") {
  std::mt19937_64 rng(5150);
  std::uniform_real_distribution<double> ug(-0.4, 0.4);
  for (int k = 0; k < 25; ++k) {
    std::vector<HalfSpace> hs = {{random_unit(rng), ug(rng)}};
    ConvexPolyhedron p = clip_all(hs);
    if (p.empty()) continue;
    Vec3 axis = random_unit(rng);
    SlabDecomposition sd = decompose_and_measure(p, axis);
    for (const Slab& sl : sd.slabs) {
      if (sl.z_hi - sl.z_lo < 1e-6) continue;
      double zm = 0.5 * (sl.z_lo + sl.z_hi);
      // The mid cross-section, measured on the unrotated polyhedron.
      auto edges = plane_section(p, normalized(axis), zm);
      double area = 0.0;
      if (!section_area_centroid(edges, axis, &area, nullptr)) continue;
      CHECK(sl.area_mid == doctest::Approx(area).epsilon(1e-9));
    }
  }
}

TEST_CASE("simplex and cube prismatoid volumes are exact") {
  // Tetrahedron via three corner cuts of the cell is awkward; build directly.
  ConvexPolyhedron tet;
  tet.verts = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  tet.faces = {{0, 2, 1}, {0, 1, 3}, {1, 2, 3}, {0, 3, 2}};
  tet.tags = {0, 1, 2, 3};
  CHECK(volume(tet) == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  SlabDecomposition sd = decompose_and_measure(tet, Vec3{0, 0, 1});
  CHECK(sd.total_volume == doctest::Approx(1.0 / 6.0).epsilon(1e-13));
  REQUIRE(sd.slabs.size() == 1);
  CHECK(sd.slabs[0].area_lo == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(sd.slabs[0].area_hi == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(sd.slabs[0].area_mid == doctest::Approx(0.125).epsilon(1e-13));

  SlabDecomposition sc = decompose_and_measure(unit_cell(), normalized(Vec3{1, 1, 1}));
  CHECK(sc.total_volume == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sc.slabs.size() == 3);
}

TEST_CASE("interface reconstruction round-trips the requested volume") {
  std::mt19937_64 rng(31337);
  std::uniform_real_distribution<double> ug(-0.45, 0.45);
  std::uniform_real_distribution<double> uf(0.0, 1.0);
  for (int k = 0; k < 150; ++k) {
    std::vector<HalfSpace> hs;
    for (int j = 0; j < k % 3; ++j) hs.push_back({random_unit(rng), ug(rng)});
    ConvexPolyhedron p = clip_all(hs);
    if (p.empty()) continue;
    double vp = volume(p);
    Vec3 nl = random_unit(rng);
    for (double frac : {uf(rng), 1e-7, 1.0 - 1e-7, 0.5, uf(rng) * uf(rng)}) {
      double target = frac * vp;
      PlicPlane pl = reconstruct_interface(p, nl, target);
      double got = truncated_volume(p, pl);
      CHECK(std::abs(got - target) < 1e-12);
    }
    // Degenerate targets position the plane at the extremes.
    PlicPlane p0 = reconstruct_interface(p, nl, 0.0);
    CHECK(truncated_volume(p, p0) < 1e-12);
    PlicPlane p1 = reconstruct_interface(p, nl, vp);
    CHECK(truncated_volume(p, p1) == doctest::Approx(vp).epsilon(1e-11));
  }
}

TEST_CASE("reconstruction offset grows monotonically with volume") {
  std::mt19937_64 rng(2222);
  for (int k = 0; k < 20; ++k) {
    Vec3 nl = random_unit(rng);
    ConvexPolyhedron p = clip_all({{random_unit(rng), 0.1}});
    if (p.empty()) continue;
    double vp = volume(p);
    double prev = -1e30;
    for (int s = 1; s < 20; ++s) {
      PlicPlane pl = reconstruct_interface(p, nl, vp * s / 20.0);
      CHECK(pl.gamma >= prev - 1e-12);
      prev = pl.gamma;
    }
  }
}

TEST_CASE("derived plane offsets for simple volumes") {
  // Liquid x <= g fills (g + 1/2) of the cell.
  PlicPlane a = reconstruct_interface(unit_cell(), Vec3{1, 0, 0}, 0.25);
  CHECK(a.gamma == doctest::Approx(-0.25).epsilon(1e-12));
  PlicPlane b = reconstruct_interface(unit_cell(), Vec3{0, 0, 1}, 0.5);
  CHECK(std::abs(b.gamma) < 1e-12);
  // Corner tetrahedron of leg 0.6 against the (-,-,-) corner: V = 0.6^3/6.
  Vec3 nc = normalized(Vec3{1, 1, 1});
  double vol = 0.6 * 0.6 * 0.6 / 6.0;
  PlicPlane c = reconstruct_interface(unit_cell(), nc, vol);
  CHECK(c.gamma == doctest::Approx(-0.9 / std::sqrt(3.0)).epsilon(1e-11));
}

TEST_CASE("advected volume matches Monte-Carlo oracle in cut cells") {
  std::mt19937_64 rng(98765);
  const long samples = 2000000;
  for (int k = 0; k < 6; ++k) {
    HalfSpace solid{random_unit(rng), 0.15};  // fluid side: n.x <= 0.15
    ConvexPolyhedron fluid = clip_all({solid});
    if (volume(fluid) < 0.2) continue;
    Vec3 nl = random_unit(rng);
    PlicPlane liq{nl, 0.05};
    int axis = k % 3;
    int side = (k % 2 == 0) ? 1 : -1;
    double w = 0.3;
    double vgeom = advected_volume(fluid, axis, side, w, &liq);

    std::vector<HalfSpace> hs = {solid, {nl, liq.gamma}};
    Vec3 nband = side > 0 ? -axis_unit(axis) : axis_unit(axis);
    hs.push_back({nband, w - 0.5});
    double vmc = mc_volume(hs, samples, 5000 + k);
    CHECK(std::abs(vgeom - vmc) < 4.0 * mc_sigma(vmc, samples) + 1e-9);
  }
}

TEST_CASE("advected volume limits") {
  ConvexPolyhedron fluid = clip_by_plane(unit_cell(), normalized(Vec3{1, 1, 0}), 0.2, kTagSolid);
  CHECK(advected_volume(fluid, 0, 1, 0.0, nullptr) == 0.0);
  // Band covering the whole cell, no liquid plane: the full fluid volume.
  double vf = volume(fluid);
  CHECK(advected_volume(fluid, 0, 1, 1.0, nullptr) == doctest::Approx(vf).epsilon(1e-12));
  // Band width w against a solid-free cell: w * 1 * 1.
  CHECK(advected_volume(unit_cell(), 1, -1, 0.37, nullptr) == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("plane sections report source faces") {
  ConvexPolyhedron cell = unit_cell();
  auto edges = plane_section(cell, Vec3{0, 0, 1}, 0.0);
  double area = 0.0;
  Vec3 ctr;
  REQUIRE(section_area_centroid(edges, Vec3{0, 0, 1}, &area, &ctr));
  CHECK(area == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(norm(ctr) < 1e-12);
  // Each section edge must come from one of the four side faces.
  for (const auto& e : edges) {
    CHECK(e.tag >= 0);
    CHECK(e.tag <= 3);
  }
}
