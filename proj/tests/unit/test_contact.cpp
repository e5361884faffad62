#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "vofeb/contact.hpp"
#include "vofeb/heights.hpp"
#include "vofeb/implicit_field.hpp"
#include "vofeb/lattice.hpp"
#include "vofeb/normals.hpp"
#include "vofeb/polyhedron.hpp"

using namespace vofeb;

namespace {

constexpr double kDeg = M_PI / 180.0;

LatticeSpec box_spec(int nx, int ny, int nz, double delta) {
  LatticeSpec s;
  s.origin = {0.0, 0.0, 0.0};
  s.n = {nx, ny, nz};
  s.delta = delta;
  return s;
}

double angle_deg(const Vec3& a, const Vec3& b) {
  const double c = std::clamp(dot(normalized(a), normalized(b)), -1.0, 1.0);
  return std::acos(c) / kDeg;
}

// Convex clip of the unit square [-1/2, 1/2]^2 by a*y + b*z >= g, plus the
// chord the cut line leaves inside the square.  Used as an independent
// reference for facet sections of solid-cut cells.
struct ClippedSquare {
  double area = 0.0;
  double cy = 0.0, cz = 0.0;
  bool has_chord = false;
  double my = 0.0, mz = 0.0;
};

ClippedSquare clip_square(double a, double b, double g) {
  std::vector<std::array<double, 2>> poly = {
      {-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}};
  std::vector<std::array<double, 2>> kept;
  std::vector<std::array<double, 2>> chord;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % n];
    const double sp = a * p[0] + b * p[1] - g;
    const double sq = a * q[0] + b * q[1] - g;
    if (sp >= 0.0) kept.push_back(p);
    if ((sp > 0.0 && sq < 0.0) || (sp < 0.0 && sq > 0.0)) {
      const double t = sp / (sp - sq);
      std::array<double, 2> x{p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])};
      kept.push_back(x);
      chord.push_back(x);
    }
  }
  ClippedSquare out;
  if (kept.size() < 3) return out;
  double area2 = 0.0, cy = 0.0, cz = 0.0;
  for (size_t i = 0; i < kept.size(); ++i) {
    const auto& p = kept[i];
    const auto& q = kept[(i + 1) % kept.size()];
    const double w = p[0] * q[1] - q[0] * p[1];
    area2 += w;
    cy += (p[0] + q[0]) * w;
    cz += (p[1] + q[1]) * w;
  }
  out.area = 0.5 * std::abs(area2);
  if (out.area > 0.0) {
    out.cy = cy / (3.0 * area2);
    out.cz = cz / (3.0 * area2);
  }
  if (chord.size() == 2) {
    out.has_chord = true;
    out.my = 0.5 * (chord[0][0] + chord[1][0]);
    out.mz = 0.5 * (chord[0][1] + chord[1][1]);
  }
  return out;
}

HeightSample make_sample(int axis, int orient, double u, double v, double h) {
  HeightSample s;
  s.axis = axis;
  s.orient = static_cast<int8_t>(orient);
  s.u = u;
  s.v = v;
  s.h = h;
  s.kind = HeightKind::kFullCell;
  return s;
}

// Cap of a unit-radius sphere resting on the plane z = (base + offset) * delta
// at contact angle theta.  Plate normal +z.
ScalarLattice flat_cap_lattice(double cpr, double theta, double offset, int* plate_k = nullptr) {
  const double delta = 1.0 / cpr;
  const int n = static_cast<int>(std::lround(3.4 * cpr));
  LatticeSpec spec = box_spec(n, n, n, delta);
  const int base = static_cast<int>(std::lround(0.55 * cpr));
  const double zp = (base + offset) * delta;
  ScalarLattice lat = init_embedded(spec, half_space({0.0, 0.0, -1.0}, {0.0, 0.0, zp}));
  const double mid = 0.5 * n * delta;
  init_liquid(lat, ball({mid, mid, zp - std::cos(theta)}, 1.0));
  if (plate_k) *plate_k = base;
  return lat;
}

struct AngleStats {
  double mean = 0.0;
  long cells = 0;
  long with_normal = 0;
  long fit_ok = 0;
};

AngleStats measure_angles(const ScalarLattice& lat, double theta, bool paraboloid) {
  ContactOptions opt;
  opt.theta = theta;
  opt.paraboloid = paraboloid;
  opt.nthreads = 2;
  const ContactField cf = apply_contact_model(lat, opt);
  const HeightField hf = compute_heights(lat, 2);
  const InterfaceNormals nrm = plic_normals(lat, hf, cf.overrides, 2);
  const Reconstruction rec = reconstruct_planes(lat, nrm, 2);
  AngleStats st;
  for (const ContactCell& cc : cf.cells) {
    st.mean += contact_angle_of(lat, rec, cc.ci) / kDeg;
    ++st.cells;
    if (cc.has_normal) ++st.with_normal;
    if (cc.fit_ok) ++st.fit_ok;
  }
  if (st.cells > 0) st.mean /= static_cast<double>(st.cells);
  return st;
}

}  // namespace

TEST_CASE("ghost height across a flat wall follows the tangent rule") {
  CHECK(ghost_height_flat(0.42, 0.1, M_PI / 2.0, 0.3) == 0.42);
  CHECK(ghost_height_flat(0.2, 0.1, 45.0 * kDeg, 0.0) ==
        doctest::Approx(0.3).epsilon(1e-14));
  CHECK(ghost_height_flat(0.0, 0.3, 60.0 * kDeg, 30.0 * kDeg) ==
        doctest::Approx(0.2).epsilon(1e-14));
  // Interface parallel to the wall in the height plane has no finite ghost.
  CHECK_THROWS_AS(ghost_height_flat(0.0, 0.1, 30.0 * kDeg, M_PI / 2.0), std::domain_error);
  CHECK_THROWS_AS(ghost_height_flat(0.0, 0.1, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ghost_height_flat(0.0, 0.1, M_PI, 0.0), std::invalid_argument);
}

TEST_CASE("rotating the solid normal by theta keeps the prescribed opening") {
  const Vec3 ns{0.0, 0.0, 1.0};
  const Vec3 tau{1.0, 0.0, 0.0};
  const Vec3 a = contact_normal(ns, tau, 0.0);
  CHECK(angle_deg(a, ns) < 1e-10);
  const Vec3 b = contact_normal(ns, tau, M_PI / 2.0);
  CHECK(std::abs(b.x) <= 1e-15);
  CHECK(b.y == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::abs(b.z) <= 1e-15);

  CHECK_THROWS_AS(contact_normal(ns, {2.0, 0.0, 0.0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(contact_normal(ns, {0.0, 0.5, 0.866025}, 1.0), std::invalid_argument);

  std::mt19937 rng(2024);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> ang(0.05, M_PI - 0.05);
  for (int t = 0; t < 10000; ++t) {
    Vec3 n{gauss(rng), gauss(rng), gauss(rng)};
    n = normalized(n);
    Vec3 raw{gauss(rng), gauss(rng), gauss(rng)};
    Vec3 tt = raw - dot(raw, n) * n;
    if (norm(tt) < 1e-3) {
      --t;
      continue;
    }
    tt = normalized(tt);
    const double theta = ang(rng);
    const Vec3 out = contact_normal(n, tt, theta);
    CHECK(std::abs(norm(out) - 1.0) <= 1e-12);
    CHECK(std::abs(dot(out, n) - std::cos(theta)) <= 1e-12);
  }
}

TEST_CASE("contact tangent is the normalized cross of the two normals") {
  Vec3 tau;
  REQUIRE(contact_tangent({0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}, &tau));
  CHECK(tau.x == 0.0);
  CHECK(tau.y == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(tau.z == 0.0);
  CHECK_FALSE(contact_tangent({0.0, 0.0, 1.0}, {0.0, 0.0, -1.0}, &tau));
  CHECK_FALSE(contact_tangent({0.0, 0.0, 1.0}, {1e-12, 0.0, 1.0}, &tau));

  std::mt19937 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int t = 0; t < 2000; ++t) {
    const Vec3 a = normalized({gauss(rng), gauss(rng), gauss(rng)});
    const Vec3 b = normalized({gauss(rng), gauss(rng), gauss(rng)});
    if (!contact_tangent(a, b, &tau)) continue;
    CHECK(std::abs(norm(tau) - 1.0) <= 1e-12);
    CHECK(std::abs(dot(tau, a)) <= 1e-12);
    CHECK(std::abs(dot(tau, b)) <= 1e-12);
  }
}

TEST_CASE("stencil curvature matches analytic surfaces") {
  const double delta = 0.05;
  double h[3][3];

  SUBCASE("tilted plane is flat") {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) h[i][j] = 0.3 + 0.2 * (i - 1) * delta - 0.12 * (j - 1) * delta;
    double kap = 1.0;
    REQUIRE(stencil_curvature(h, delta, 1, &kap));
    CHECK(std::abs(kap) <= 1e-12);
  }

  SUBCASE("sphere of radius 12 cells") {
    const double R = 12.0 * delta;
    const double u0 = 0.1 * R, v0 = 0.14 * R;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double u = u0 + (i - 1) * delta, v = v0 + (j - 1) * delta;
        h[i][j] = std::sqrt(R * R - u * u - v * v);
      }
    double kap = 0.0;
    REQUIRE(stencil_curvature(h, delta, 1, &kap));
    CHECK(kap == doctest::Approx(2.0 / R).epsilon(0.05));
    double kneg = 0.0;
    REQUIRE(stencil_curvature(h, delta, -1, &kneg));
    CHECK(kneg == -kap);
  }

  SUBCASE("cylinder of radius 12 cells") {
    const double R = 12.0 * delta;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double u = 0.2 * R + (i - 1) * delta;
        h[i][j] = std::sqrt(R * R - u * u);
      }
    double kap = 0.0;
    REQUIRE(stencil_curvature(h, delta, 1, &kap));
    CHECK(kap == doctest::Approx(1.0 / R).epsilon(0.05));
  }

  SUBCASE("branch jumps are rejected") {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) h[i][j] = 0.0;
    h[2][1] = 1.5 * delta;
    double kap = 0.0;
    CHECK_FALSE(stencil_curvature(h, delta, 1, &kap));
  }
}

TEST_CASE("standard heights recover a flat level per interfacial cell") {
  LatticeSpec spec = box_spec(24, 24, 24, 1.0 / 24.0);
  ScalarLattice lat = init_embedded(spec, everywhere());
  init_liquid(lat, half_space({0.0, 0.0, 1.0}, {0.0, 0.0, 0.3}));

  const auto samples = standard_heights(lat, 2, 2);
  CHECK(samples.size() == 24 * 24);
  for (const HeightSample& s : samples) {
    CHECK(s.kind == HeightKind::kFullCell);
    CHECK(s.orient == 1);
    CHECK(s.h == doctest::Approx(0.3).epsilon(1e-12));
    CHECK_FALSE(s.has_contact);
    int i, j, k;
    spec.cell_coords(s.cell, &i, &j, &k);
    const Vec3 cc = spec.cell_center(i, j, k);
    CHECK(s.u == doctest::Approx(cc.x).epsilon(1e-13));
    CHECK(s.v == doctest::Approx(cc.y).epsilon(1e-13));
    CHECK(lat.c[s.cell] > 0.0);
    CHECK(lat.c[s.cell] < 1.0);
  }

  init_liquid(lat, everywhere());
  CHECK(standard_heights(lat, 2, 2).empty());
}

TEST_CASE("column sample reduces to the standard height without solids") {
  LatticeSpec spec = box_spec(16, 16, 16, 1.0 / 16.0);
  ScalarLattice lat = init_embedded(spec, everywhere());
  init_liquid(lat, half_space(normalized({0.25, 0.35, 0.9}), {0.5, 0.5, 0.5}));
  const HeightField hf = compute_heights(lat, 2);

  long tested = 0;
  for (long ci = 0; ci < spec.cells(); ++ci) {
    if (!hf.valid(2, ci)) continue;
    if (lat.c[ci] <= 0.0 || lat.c[ci] >= 1.0) continue;
    const HeightSample s = mixed_cell_height(lat, ci, 2);
    REQUIRE(s.valid());
    CHECK(s.kind == HeightKind::kFullCell);
    CHECK(s.orient == hf.orient[2][ci]);
    CHECK(s.h == doctest::Approx(hf.h[2][ci]).epsilon(1e-12));
    int i, j, k;
    spec.cell_coords(s.cell, &i, &j, &k);
    const Vec3 cc = spec.cell_center(i, j, k);
    CHECK(std::abs(s.u - cc.x) <= 1e-12);
    CHECK(std::abs(s.v - cc.y) <= 1e-12);
    ++tested;
  }
  CHECK(tested > 100);

  // A fully liquid column has no interface to sample.
  init_liquid(lat, everywhere());
  CHECK_FALSE(mixed_cell_height(lat, spec.cell_index(8, 8, 8), 2).valid());
}

TEST_CASE("half-solid cell anchors the facet at the fluid-part centroid") {
  LatticeSpec spec = box_spec(9, 3, 3, 0.1);
  ScalarLattice lat = init_embedded(spec, half_space({0.0, -1.0, 0.0}, {0.0, 0.15, 0.0}));
  init_liquid(lat, half_space({1.0, 0.0, 0.0}, {0.45, 0.0, 0.0}));

  const long ci = spec.cell_index(4, 1, 1);
  REQUIRE(lat.kind[ci] == kCellMixed);
  CHECK(lat.cs[ci] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(lat.c[ci] == doctest::Approx(0.25).epsilon(1e-13));

  const HeightSample s = mixed_cell_height(lat, ci, 0);
  REQUIRE(s.valid());
  CHECK(s.kind == HeightKind::kPartialFluid);
  CHECK(s.orient == 1);
  CHECK(s.cell == ci);
  CHECK(s.h == doctest::Approx(0.45).epsilon(1e-12));
  // Fluid is the upper half in y: centroid a quarter cell above the center.
  CHECK(s.u == doctest::Approx(0.175).epsilon(1e-12));
  CHECK(s.v == doctest::Approx(0.15).epsilon(1e-12));
  REQUIRE(s.has_contact);
  CHECK(s.contact.x == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(s.contact.y == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(s.contact.z == doctest::Approx(0.15).epsilon(1e-12));

  // Prescribing the same facet normal reconstructs inside the cell itself and
  // must agree with the column march here (all other liquid sits in full
  // cells).
  const Vec3 tilt{1.0, 0.0, 0.0};
  const HeightSample t = mixed_cell_height(lat, ci, 0, &tilt);
  REQUIRE(t.valid());
  CHECK(t.h == doctest::Approx(s.h).epsilon(1e-12));
  CHECK(t.u == doctest::Approx(s.u).epsilon(1e-12));
  CHECK(t.v == doctest::Approx(s.v).epsilon(1e-12));
  REQUIRE(t.has_contact);
  CHECK(norm(t.contact - s.contact) <= 1e-12);
}

TEST_CASE("oblique solid cut matches a planar clipping reference") {
  LatticeSpec spec = box_spec(9, 5, 5, 0.1);
  const Vec3 m = normalized({0.2, 0.55, 0.75});
  const Vec3 p0{0.45, 0.25, 0.22};
  ScalarLattice lat = init_embedded(spec, half_space(-1.0 * m, p0));

  const double xcut = 0.437;
  init_liquid(lat, half_space({1.0, 0.0, 0.0}, {xcut, 0.0, 0.0}));

  const long ci = spec.cell_index(4, 2, 2);
  REQUIRE(lat.kind[ci] == kCellMixed);
  REQUIRE(lat.c[ci] > 0.0);
  REQUIRE(lat.c[ci] < lat.cs[ci]);

  const HeightSample s = mixed_cell_height(lat, ci, 0);
  REQUIRE(s.valid());
  REQUIRE(s.cell == ci);
  CHECK(s.h == doctest::Approx(xcut).epsilon(1e-10));

  // Independent section: clip the (y, z) unit square by the solid half-plane
  // at the recovered facet position.
  const Vec3 cc = spec.cell_center(4, 2, 2);
  const double gs = dot(m, p0 - cc) / spec.delta;  // fluid side: m . xi >= gs
  const double xl = (s.h - cc.x) / spec.delta;
  const ClippedSquare ref = clip_square(m.y, m.z, gs - m.x * xl);
  REQUIRE(ref.area > 0.0);
  CHECK(s.u == doctest::Approx(cc.y + spec.delta * ref.cy).epsilon(1e-9));
  CHECK(s.v == doctest::Approx(cc.z + spec.delta * ref.cz).epsilon(1e-9));
  CHECK(s.kind == HeightKind::kPartialFluid);
  REQUIRE(s.has_contact);
  REQUIRE(ref.has_chord);
  CHECK(s.contact.x == doctest::Approx(s.h).epsilon(1e-9));
  CHECK(s.contact.y == doctest::Approx(cc.y + spec.delta * ref.my).epsilon(1e-9));
  CHECK(s.contact.z == doctest::Approx(cc.z + spec.delta * ref.mz).epsilon(1e-9));
}

TEST_CASE("ghost fractions extend contact-cell planes into the solid") {
  SUBCASE("below a hemispherical cap the extension is full") {
    LatticeSpec spec = box_spec(16, 16, 8, 0.1);
    ScalarLattice lat = init_embedded(spec, half_space({0.0, 0.0, -1.0}, {0.0, 0.0, 0.13}));
    init_liquid(lat, ball({0.85, 0.85, 0.13}, 0.32));

    const GhostFractions g = extend_ghost_fractions(lat, M_PI / 2.0, 2);
    const long recv = spec.cell_index(10, 8, 0);
    REQUIRE(lat.kind[recv] == kCellSolid);
    REQUIRE(g.is_set[recv]);
    CHECK(g.ce[recv] == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("one donor reproduces its own plane, two donors blend by weight") {
    const double theta = 60.0 * kDeg;
    LatticeSpec spec = box_spec(5, 2, 3, 0.1);
    ScalarLattice lat = init_embedded(spec, half_space({0.0, 0.0, -1.0}, {0.0, 0.0, 0.13}));
    init_liquid(lat, half_space(normalized({1.0, 0.12, 0.0}), {0.24, 0.0, 0.0}));

    const GhostFractions g = extend_ghost_fractions(lat, theta, 1);

    auto donor_extension = [&](long dci, const Vec3& off) {
      const Vec3 ns = lat.cell_plane(dci)->n;
      Vec3 tau;
      REQUIRE(contact_tangent(ns, myc_normal(lat, dci), &tau));
      const Vec3 nl = contact_normal(ns, tau, theta);
      const PlicPlane pl = reconstruct_interface(*lat.fluid_poly(dci), nl, lat.c[dci]);
      return truncated_volume(unit_cell(), {pl.n, pl.gamma - dot(pl.n, off)});
    };
    auto donor_weight = [&](long dci) {
      return lat.cs[dci] * (1.0 - lat.cs[dci]) * lat.c[dci] * (1.0 - lat.c[dci]);
    };
    auto is_contact = [&](long dci) {
      return lat.kind[dci] == kCellMixed && lat.c[dci] > 1e-10 && lat.c[dci] < lat.cs[dci] - 1e-10;
    };

    long checked = 0;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 2; ++j) {
        const long recv = spec.cell_index(i, j, 0);
        if (lat.kind[recv] != kCellSolid) continue;
        double wsum = 0.0, csum = 0.0;
        int donors = 0;
        for (int dj = -1; dj <= 1; ++dj)
          for (int di = -1; di <= 1; ++di)
            for (int dk = 0; dk <= 1; ++dk) {
              if (!spec.in_domain(i + di, j + dj, dk)) continue;
              const long dci = spec.cell_index(i + di, j + dj, dk);
              if (!is_contact(dci)) continue;
              const double w = donor_weight(dci);
              wsum += w;
              csum += w * donor_extension(dci, {double(-di), double(-dj), double(0 - dk)});
              ++donors;
            }
        if (donors == 0) {
          CHECK_FALSE(g.is_set[recv]);
          continue;
        }
        REQUIRE(g.is_set[recv]);
        CHECK(g.ce[recv] == doctest::Approx(csum / wsum).epsilon(1e-12));
        ++checked;
      }
    CHECK(checked >= 2);
  }
}

TEST_CASE("prefit recovers an exact quadric from admitted samples") {
  const int axis = 2, orient = 1;
  const Vec3 contact{0.3, 0.1, 0.2};
  const std::array<double, 6> qt{0.031, -0.022, 0.013, 0.21, -0.17, 0.09};
  auto height = [&](double du, double dv) {
    return contact.z + qt[0] * du * du + qt[1] * dv * dv + qt[2] * du * dv + qt[3] * du +
           qt[4] * dv + qt[5];
  };

  std::vector<HeightSample> samples;
  for (double du : {0.4, 0.9, 1.4})
    for (double dv : {-0.5, 0.1, 0.7})
      samples.push_back(make_sample(axis, orient, contact.x + du, contact.y + dv, height(du, dv)));
  const HeightSample anchor = samples[4];

  SUBCASE("quadric coefficients are exact") {
    const ParaboloidFit fit = prefit_paraboloid(samples, anchor, contact, axis, orient);
    REQUIRE(fit.converged);
    for (int t = 0; t < 6; ++t) CHECK(std::abs(fit.q[t] - qt[t]) <= 1e-9);
    CHECK(fit.eval(contact.x + 0.77, contact.y - 0.31) ==
          doctest::Approx(height(0.77, -0.31)).epsilon(1e-9));
  }

  SUBCASE("samples on the far side of the contact point are ignored") {
    std::vector<HeightSample> noisy = samples;
    noisy.push_back(make_sample(axis, orient, contact.x - 0.9, contact.y + 0.2, 99.0));
    noisy.push_back(make_sample(axis, orient, contact.x - 1.4, contact.y - 0.8, -55.0));
    const ParaboloidFit fit = prefit_paraboloid(noisy, anchor, contact, axis, orient);
    REQUIRE(fit.converged);
    CHECK(fit.eval(contact.x + 1.1, contact.y + 0.4) ==
          doctest::Approx(height(1.1, 0.4)).epsilon(1e-9));
  }

  SUBCASE("a plane stays a plane") {
    std::vector<HeightSample> flat;
    for (double du : {0.4, 0.9, 1.4})
      for (double dv : {-0.5, 0.1, 0.7})
        flat.push_back(make_sample(axis, orient, contact.x + du, contact.y + dv,
                                   0.6 + 0.11 * du - 0.07 * dv));
    const ParaboloidFit fit = prefit_paraboloid(flat, flat[4], contact, axis, orient);
    REQUIRE(fit.converged);
    CHECK(std::abs(fit.q[0]) <= 1e-9);
    CHECK(std::abs(fit.q[1]) <= 1e-9);
    CHECK(std::abs(fit.q[2]) <= 1e-9);
  }

  SUBCASE("five samples are not enough") {
    std::vector<HeightSample> few(samples.begin(), samples.begin() + 5);
    CHECK_FALSE(prefit_paraboloid(few, few[0], contact, axis, orient).converged);
  }
}

TEST_CASE("constrained fit keeps a planar interface planar and exact") {
  const double delta = 1.0;
  const Vec3 ns = normalized({0.2, -0.1, 0.95});
  const Vec3 tau = normalized(cross(ns, {0.0, 1.0, 0.2}));
  const double theta = 65.0 * kDeg;
  const Vec3 nl = contact_normal(ns, tau, theta);
  REQUIRE(std::abs(nl.z) > 0.1);
  const int orient = nl.z > 0.0 ? 1 : -1;

  const Vec3 p0{0.4, -0.3, 0.7};  // contact point, on both planes
  auto plane_h = [&](double u, double v) {
    return p0.z - (nl.x * (u - p0.x) + nl.y * (v - p0.y)) / nl.z;
  };

  std::vector<HeightSample> samples;
  for (double du : {-0.2, 0.8, 1.8})
    for (double dv : {-0.5, 0.5, 1.5})
      samples.push_back(
          make_sample(2, orient, p0.x + du, p0.y + dv, plane_h(p0.x + du, p0.y + dv)));
  const HeightSample anchor =
      make_sample(2, orient, p0.x + 0.8, p0.y + 0.5, plane_h(p0.x + 0.8, p0.y + 0.5));

  const ParaboloidFit pre = prefit_paraboloid(samples, anchor, p0, 2, orient);
  REQUIRE(pre.converged);
  const ParaboloidFit fit = fit_contact_paraboloid(pre, anchor, p0, theta, ns, ns, delta);
  REQUIRE(fit.converged);
  CHECK(std::abs(fit.q[0]) <= 1e-9);
  CHECK(std::abs(fit.q[1]) <= 1e-9);
  CHECK(std::abs(fit.q[2]) <= 1e-9);
  CHECK(std::abs(dot(fit.surface_normal(p0.x, p0.y), ns) - std::cos(theta)) <= 1e-9);
  CHECK(fit.eval(anchor.u, anchor.v) == doctest::Approx(anchor.h).epsilon(1e-9));
  CHECK(angle_deg(fit.surface_normal(anchor.u, anchor.v), nl) <= 1e-6);
  CHECK(std::abs(fit.curvature(anchor.u, anchor.v)) <= 1e-9);
}

TEST_CASE("at ninety degrees the fitted wall column matches the flat ghost rule") {
  const double delta = 1.0;
  const Vec3 ns{1.0, 0.0, 0.0};
  const double h0 = 0.6;
  const Vec3 contact{0.0, 0.25, h0};

  std::vector<HeightSample> samples;
  for (double du : {0.5, 1.5, 2.5})
    for (double dv : {-0.75, 0.25, 1.25}) samples.push_back(make_sample(2, 1, du, dv, h0));
  const HeightSample anchor = make_sample(2, 1, 0.5, 0.25, h0);

  const ParaboloidFit pre = prefit_paraboloid(samples, anchor, contact, 2, 1);
  REQUIRE(pre.converged);
  const ParaboloidFit fit =
      fit_contact_paraboloid(pre, anchor, contact, M_PI / 2.0, ns, ns, delta);
  REQUIRE(fit.converged);
  const double ghost = fit.eval(-0.5, 0.25);
  CHECK(ghost == doctest::Approx(fit.eval(0.5, 0.25)).epsilon(1e-12));
  CHECK(ghost == doctest::Approx(ghost_height_flat(h0, delta, M_PI / 2.0, 0.2)).epsilon(1e-12));
}

TEST_CASE("constrained fit tracks a spherical cap near the contact line") {
  const double delta = 1.0;
  const double R = 25.6;
  const double theta = 70.0 * kDeg;
  const double zc = -R * std::cos(theta);
  const double rho = R * std::sin(theta);
  const Vec3 ns{0.0, 0.0, 1.0};

  auto cap_h = [&](double u, double v) { return zc + std::sqrt(R * R - u * u - v * v); };
  const double phi = 0.3;
  const Vec3 contact{rho * std::cos(phi), rho * std::sin(phi), 0.0};
  const double rf = rho - 1.1;
  const HeightSample anchor = make_sample(
      2, 1, rf * std::cos(phi), rf * std::sin(phi), cap_h(rf * std::cos(phi), rf * std::sin(phi)));

  std::vector<HeightSample> samples;
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j) {
      const double u = anchor.u + i * delta, v = anchor.v + j * delta;
      if (u * u + v * v >= rho * rho) continue;  // below the plate
      samples.push_back(make_sample(2, 1, u, v, cap_h(u, v)));
    }
  REQUIRE(samples.size() >= 6);

  const ParaboloidFit pre = prefit_paraboloid(samples, anchor, contact, 2, 1);
  REQUIRE(pre.converged);
  const ParaboloidFit fit = fit_contact_paraboloid(pre, anchor, contact, theta, ns, ns, delta);
  REQUIRE(fit.converged);

  const Vec3 exact{std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                   std::cos(theta)};
  CHECK(angle_deg(fit.surface_normal(contact.x, contact.y), exact) <= 0.5);
  CHECK(std::abs(dot(fit.surface_normal(contact.x, contact.y), ns) - std::cos(theta)) <= 1e-9);
  CHECK(fit.curvature(anchor.u, anchor.v) == doctest::Approx(2.0 / R).epsilon(0.05));
}

TEST_CASE("fit invariants hold over random cap geometries") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> urad(20.0, 40.0);
  std::uniform_real_distribution<double> uphi(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> uth(25.0, 155.0);
  const double delta = 1.0;

  int done = 0;
  for (int trial = 0; trial < 200 && done < 60; ++trial) {
    const double R = urad(rng);
    const double theta = uth(rng) * kDeg;
    const double phi = uphi(rng);
    const double zc = -R * std::cos(theta);
    const double rho = R * std::sin(theta);
    const Vec3 ns{0.0, 0.0, 1.0};

    const bool vertical = theta < 50.0 * kDeg || theta > 130.0 * kDeg;
    const int axis = vertical ? 2 : 0;
    const int orient = vertical ? (theta < M_PI / 2.0 ? 1 : -1) : 1;

    Vec3 contact, inplane;
    HeightSample anchor;
    std::vector<HeightSample> samples;
    if (vertical) {
      contact = {rho * std::cos(phi), rho * std::sin(phi), 0.0};
      const double sgn = theta < M_PI / 2.0 ? 1.0 : -1.0;
      auto cap_h = [&](double u, double v) {
        const double rr = R * R - u * u - v * v;
        return rr <= 0.0 ? std::nan("") : zc + sgn * std::sqrt(rr);
      };
      const double rf = rho - 1.2;
      anchor = make_sample(axis, orient, rf * std::cos(phi), rf * std::sin(phi),
                           cap_h(rf * std::cos(phi), rf * std::sin(phi)));
      for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j) {
          const double u = anchor.u + i * delta, v = anchor.v + j * delta;
          const double hh = cap_h(u, v);
          if (std::isnan(hh) || sgn * hh < 0.0) continue;
          samples.push_back(make_sample(axis, orient, u, v, hh));
        }
      const Vec3 tau = normalized(cross(ns, Vec3{std::cos(phi), std::sin(phi), 0.0}));
      inplane = contact_normal(ns, -1.0 * tau, theta);
    } else {
      // Heights along x at azimuth zero: u = y, v = z.
      contact = {rho, 0.0, 0.0};
      auto cap_h = [&](double y, double z) {
        const double rr = R * R - y * y - (z - zc) * (z - zc);
        return rr <= 0.0 ? std::nan("") : std::sqrt(rr);
      };
      anchor = make_sample(axis, orient, 0.0, 1.1, cap_h(0.0, 1.1));
      for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j) {
          const double y = anchor.u + i * delta, z = anchor.v + j * delta;
          if (z <= 0.0) continue;  // inside the plate
          const double hh = cap_h(y, z);
          if (std::isnan(hh)) continue;
          samples.push_back(make_sample(axis, orient, y, z, hh));
        }
      inplane = ns;
    }
    if (samples.size() < 6 || std::isnan(anchor.h)) continue;

    const ParaboloidFit pre = prefit_paraboloid(samples, anchor, contact, axis, orient);
    if (!pre.converged) continue;
    const ParaboloidFit fit =
        fit_contact_paraboloid(pre, anchor, contact, theta, ns, inplane, delta);
    REQUIRE(fit.converged);

    // Angle constraint at the contact point.
    const int ub = (axis + 1) % 3, vb = (axis + 2) % 3;
    CHECK(std::abs(dot(fit.surface_normal(contact[ub], contact[vb]), ns) - std::cos(theta)) <=
          1e-9);
    // The five interpolation conditions: the anchor and the four auxiliary
    // points placed off the contact line at distances d and d + delta with
    // in-line offsets of half a cell.
    CHECK(std::abs(fit.eval(anchor.u, anchor.v) - anchor.h) <= 1e-9 * delta);
    double bu = inplane[ub], bv = inplane[vb];
    const double bn = std::hypot(bu, bv);
    REQUIRE(bn > 1e-9);
    bu /= bn;
    bv /= bn;
    const double fu = anchor.u - contact[ub], fv = anchor.v - contact[vb];
    double d = bu * fu + bv * fv;
    if (d < 0.0) {
      bu = -bu;
      bv = -bv;
      d = -d;
    }
    const double ru = -bv, rv = bu;
    for (double dist : {d, d + delta})
      for (double off : {0.5 * delta, -0.5 * delta}) {
        const double u = contact[ub] + dist * bu + off * ru;
        const double v = contact[vb] + dist * bv + off * rv;
        CHECK(std::abs(fit.eval(u, v) - pre.eval(u, v)) <= 1e-9 * delta);
      }
    ++done;
  }
  CHECK(done >= 60);
}

TEST_CASE("height mode selection prefers the rotated normal's dominant axis") {
  SUBCASE("moderate angle on a flat plate is horizontal") {
    ScalarLattice lat = flat_cap_lattice(12.8, 70.0 * kDeg, 0.4);
    const LatticeSpec& spec = lat.spec;
    const double mid = 0.5 * spec.n[0] * spec.delta;
    // Ring cell on the +x side of the cap.
    const double rho = std::sin(70.0 * kDeg);
    const int pk = static_cast<int>(std::lround(0.55 * 12.8));
    const int i = static_cast<int>((mid + rho) / spec.delta);
    const int j = spec.n[1] / 2;
    long ci = -1;
    for (int di = -2; di <= 2 && ci < 0; ++di) {
      const long cand = spec.cell_index(i + di, j, pk);
      if (lat.kind[cand] == kCellMixed && lat.c[cand] > 1e-10 &&
          lat.c[cand] < lat.cs[cand] - 1e-10)
        ci = cand;
    }
    REQUIRE(ci >= 0);
    const HfChoice ch = select_hf_mode(lat, ci, 70.0 * kDeg);
    CHECK(ch.mode == HfMode::kHorizontal);
    CHECK(ch.axis == 0);
  }

  SUBCASE("shallow angle on a flat plate is vertical") {
    ScalarLattice lat = flat_cap_lattice(12.8, 15.0 * kDeg, 0.4);
    const LatticeSpec& spec = lat.spec;
    long ci = -1;
    for (long t = 0; t < spec.cells() && ci < 0; ++t)
      if (lat.kind[t] == kCellMixed && lat.c[t] > 1e-6 && lat.c[t] < lat.cs[t] - 1e-6) ci = t;
    REQUIRE(ci >= 0);
    const HfChoice ch = select_hf_mode(lat, ci, 15.0 * kDeg);
    CHECK(ch.mode == HfMode::kVertical);
    CHECK(ch.axis == 2);
    CHECK(ch.orient == 1);
  }

  SUBCASE("an interface meeting the floor at ninety degrees uses its own axis") {
    LatticeSpec spec = box_spec(16, 8, 8, 0.1);
    ScalarLattice lat = init_embedded(spec, half_space({0.0, 0.0, -1.0}, {0.0, 0.0, 0.13}));
    init_liquid(lat, half_space({1.0, 0.0, 0.0}, {0.74, 0.0, 0.0}));
    const long ci = spec.cell_index(7, 4, 1);
    REQUIRE(lat.kind[ci] == kCellMixed);
    REQUIRE(lat.c[ci] > 0.0);
    REQUIRE(lat.c[ci] < lat.cs[ci]);
    const HfChoice ch = select_hf_mode(lat, ci, M_PI / 2.0);
    CHECK(ch.mode == HfMode::kHorizontal);
    CHECK(ch.axis == 0);
    CHECK(ch.orient == 1);
  }
}

TEST_CASE("measured contact angle is the opening between the two normals") {
  LatticeSpec spec = box_spec(6, 6, 6, 0.1);
  ScalarLattice lat = init_embedded(spec, half_space({0.0, 0.0, -1.0}, {0.0, 0.0, 0.13}));
  init_liquid(lat, half_space({1.0, 0.0, 0.0}, {0.31, 0.0, 0.0}));
  const long ci = spec.cell_index(3, 3, 1);
  REQUIRE(lat.kind[ci] == kCellMixed);

  Reconstruction rec;
  rec.plane.assign(spec.cells(), PlicPlane{});
  rec.interfacial.assign(spec.cells(), 0);
  rec.interfacial[ci] = 1;

  rec.plane[ci] = {lat.cell_plane(ci)->n, 0.0};
  CHECK(contact_angle_of(lat, rec, ci) <= 1e-12);
  rec.plane[ci] = {{1.0, 0.0, 0.0}, 0.0};
  CHECK(contact_angle_of(lat, rec, ci) == doctest::Approx(M_PI / 2.0).epsilon(1e-12));
}

TEST_CASE("hysteresis pins the contact point when the window allows it") {
  LatticeSpec spec = box_spec(4, 4, 4, 0.25);
  ScalarLattice lat = init_embedded(spec, half_space({0.0, 0.0, -1.0}, {0.0, 0.0, 0.3}));
  const long ci = spec.cell_index(1, 1, 1);
  REQUIRE(lat.kind[ci] == kCellMixed);
  const Vec3 ns = lat.cell_plane(ci)->n;
  CHECK(angle_deg(ns, {0.0, 0.0, 1.0}) <= 1e-10);
  const Vec3 tau{0.0, 1.0, 0.0};

  auto contact_at = [&](double theta_star, double cnew) {
    const Vec3 nl = contact_normal(ns, tau, theta_star);
    const PlicPlane pl = reconstruct_interface(*lat.fluid_poly(ci), nl, cnew);
    const auto edges = plane_section(*lat.fluid_poly(ci), pl.n, pl.gamma);
    for (const SectionEdge& e : edges)
      if (e.tag == kTagSolid) {
        const Vec3 cc = spec.cell_center(1, 1, 1);
        return cc + spec.delta * (0.5 * (e.a + e.b));
      }
    REQUIRE(false);
    return Vec3{};
  };

  const double cnew = 0.3;
  const HysteresisWindow win{40.0 * kDeg, 90.0 * kDeg};

  SUBCASE("an attainable fifty-five degree pin is found") {
    const Vec3 prev = contact_at(55.0 * kDeg, cnew);
    const double th = resolve_hysteresis(lat, ci, win, tau, prev, cnew);
    CHECK(std::abs(th / kDeg - 55.0) <= 0.2);
    CHECK(norm(contact_at(th, cnew) - prev) <= 1.5e-3 * spec.delta);
  }

  SUBCASE("a pin outside the window clamps to the nearest bound") {
    const Vec3 prev = contact_at(35.0 * kDeg, cnew);
    const double th = resolve_hysteresis(lat, ci, win, tau, prev, cnew);
    CHECK(th == win.theta_rec);
  }

  SUBCASE("a collapsed window returns its angle") {
    const Vec3 prev = contact_at(70.0 * kDeg, cnew);
    const HysteresisWindow tight{55.0 * kDeg, 55.0 * kDeg};
    CHECK(resolve_hysteresis(lat, ci, tight, tau, prev, cnew) == 55.0 * kDeg);
  }
}

TEST_CASE("planar wedge at the prescribed angle is reproduced exactly") {
  const double theta = 25.0 * kDeg;
  LatticeSpec spec = box_spec(20, 20, 20, 0.05);
  ScalarLattice lat = init_embedded(spec, half_space({0.0, 0.0, -1.0}, {0.0, 0.0, 0.115}));
  const Vec3 nl_true{std::sin(theta), 0.0, std::cos(theta)};
  init_liquid(lat, half_space(nl_true, {0.5, 0.0, 0.115}));

  ContactOptions opt;
  opt.theta = theta;
  opt.nthreads = 2;
  const ContactField cf = apply_contact_model(lat, opt);
  REQUIRE(cf.cells.size() >= 10);

  long ok = 0;
  for (const ContactCell& cc : cf.cells) {
    if (!cc.fit_ok) continue;
    CHECK(cc.mode == HfMode::kVertical);
    CHECK(angle_deg(cc.n_imposed, nl_true) <= 1e-6);
    if (cc.has_kappa) CHECK(std::abs(cc.kappa) <= 1e-10);
    ++ok;
  }
  CHECK(ok >= static_cast<long>(cf.cells.size() * 3 / 4));

  const HeightField hf = compute_heights(lat, 2);
  const InterfaceNormals nrm = plic_normals(lat, hf, cf.overrides, 2);
  const Reconstruction rec = reconstruct_planes(lat, nrm, 2);
  for (const ContactCell& cc : cf.cells) {
    if (!cc.has_normal) continue;
    CHECK(std::abs(contact_angle_of(lat, rec, cc.ci) - theta) <= 1e-7);
  }
}

TEST_CASE("hemispherical cap recovers the prescribed angle and curvature") {
  const double theta = 70.0 * kDeg;
  ScalarLattice lat = flat_cap_lattice(12.8, theta, 0.4);
  ContactOptions opt;
  opt.theta = theta;
  opt.nthreads = 2;
  const ContactField cf = apply_contact_model(lat, opt);
  REQUIRE(cf.cells.size() >= 20);

  long with_normal = 0, fit_ok = 0, with_kappa = 0;
  std::vector<double> kerr;
  for (const ContactCell& cc : cf.cells) {
    if (cc.has_normal) ++with_normal;
    if (cc.fit_ok) ++fit_ok;
    if (cc.has_kappa) {
      ++with_kappa;
      kerr.push_back(std::abs(cc.kappa - 2.0) / 2.0);
    }
  }
  CHECK(with_normal >= static_cast<long>(cf.cells.size() * 9 / 10));
  CHECK(fit_ok >= static_cast<long>(cf.cells.size() * 3 / 4));
  REQUIRE(with_kappa >= 10);
  std::sort(kerr.begin(), kerr.end());
  CHECK(kerr[kerr.size() / 2] <= 0.4);

  const AngleStats st = measure_angles(lat, theta, true);
  CHECK(std::abs(st.mean - 70.0) <= 2.0);
}

TEST_CASE("plate embedding depth barely moves the fitted angle") {
  const double theta = 110.0 * kDeg;
  double lo_p = 1e9, hi_p = -1e9, lo_l = 1e9, hi_l = -1e9;
  for (double d : {0.2, 0.4, 0.6, 0.8}) {
    ScalarLattice lat = flat_cap_lattice(12.8, theta, d);
    const AngleStats par = measure_angles(lat, theta, true);
    const AngleStats lin = measure_angles(lat, theta, false);
    REQUIRE(par.cells > 0);
    lo_p = std::min(lo_p, par.mean);
    hi_p = std::max(hi_p, par.mean);
    lo_l = std::min(lo_l, lin.mean);
    hi_l = std::max(hi_l, lin.mean);
  }
  const double spread_par = hi_p - lo_p;
  const double spread_lin = hi_l - lo_l;
  CHECK(spread_par <= 1.0);
  CHECK(spread_lin > spread_par);
}

TEST_CASE("contact model is deterministic across worker counts") {
  ScalarLattice lat = flat_cap_lattice(12.8, 70.0 * kDeg, 0.3);
  ContactOptions opt;
  opt.theta = 70.0 * kDeg;
  opt.nthreads = 1;
  const ContactField a = apply_contact_model(lat, opt);
  opt.nthreads = 4;
  const ContactField b = apply_contact_model(lat, opt);
  REQUIRE(a.overrides.size() == b.overrides.size());
  for (size_t t = 0; t < a.overrides.size(); ++t) {
    CHECK(a.overrides[t].ci == b.overrides[t].ci);
    CHECK(a.overrides[t].n.x == b.overrides[t].n.x);
    CHECK(a.overrides[t].n.y == b.overrides[t].n.y);
    CHECK(a.overrides[t].n.z == b.overrides[t].n.z);
  }
  REQUIRE(a.cells.size() == b.cells.size());
  for (size_t t = 0; t < a.cells.size(); ++t) {
    CHECK(a.cells[t].kappa == b.cells[t].kappa);
    CHECK(a.cells[t].has_kappa == b.cells[t].has_kappa);
  }
}

TEST_CASE("cap on a solid sphere meets it at the prescribed angle") {
  const double theta = 60.0 * kDeg;
  const double D = std::sqrt(2.0 + 2.0 * std::cos(theta));
  const double delta = 1.0 / 12.8;
  const int n = static_cast<int>(std::lround(4.4 / delta));
  LatticeSpec spec = box_spec(n, n, n, delta);
  const double mid = 0.5 * n * delta;
  ScalarLattice lat = init_embedded(spec, ball_complement({mid, mid, mid - 0.5 * D}, 1.0));
  init_liquid(lat, ball({mid, mid, mid + 0.5 * D}, 1.0));

  const AngleStats st = measure_angles(lat, theta, true);
  REQUIRE(st.cells >= 30);
  CHECK(st.with_normal >= st.cells * 9 / 10);
  CHECK(std::abs(st.mean - 60.0) <= 2.0);
}
