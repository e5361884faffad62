#include <cmath>
#include <random>

#include "doctest.h"
#include "vofeb/cube_plic.hpp"
#include "vofeb/polyhedron.hpp"

using namespace vofeb;

namespace {

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec3 v{g(rng), g(rng), g(rng)};
  while (norm(v) < 1e-3) v = {g(rng), g(rng), g(rng)};
  return normalized(v);
}

}  // namespace

TEST_CASE("closed-form cube volume agrees with the geometric kernel") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ug(-0.9, 0.9);
  for (int k = 0; k < 500; ++k) {
    Vec3 n = random_unit(rng);
    double g = ug(rng);
    double va = cube_volume_below(n, g);
    double vb = volume(clip_by_plane(unit_cell(), n, g, kTagLiquid));
    CHECK(std::abs(va - vb) < 1e-12);
  }
}

TEST_CASE("closed-form volume handles axis-aligned and degenerate normals") {
  CHECK(cube_volume_below(Vec3{1, 0, 0}, 0.2) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(cube_volume_below(Vec3{0, -1, 0}, -0.3) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(cube_volume_below(Vec3{0, 0, 1}, 0.6) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(cube_volume_below(Vec3{0, 0, 1}, -0.6) == doctest::Approx(0.0).epsilon(1e-14));
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> ug(-0.6, 0.6);
  for (int k = 0; k < 200; ++k) {
    // Normals hugging a coordinate plane stress the small-component branches.
    Vec3 n = normalized(Vec3{1.0, 1e-11 * (k % 7), 1e-13 * (k % 5)});
    if (k % 2) n = normalized(Vec3{1e-12, 1.0, 1e-10});
    double g = ug(rng);
    double va = cube_volume_below(n, g);
    double vb = volume(clip_by_plane(unit_cell(), n, g, kTagLiquid));
    CHECK(std::abs(va - vb) < 1e-11);
  }
}

TEST_CASE("closed-form inverse round-trips the fraction") {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> uf(0.0, 1.0);
  for (int k = 0; k < 500; ++k) {
    Vec3 n = random_unit(rng);
    double f = uf(rng);
    if (k % 17 == 0) f = 1e-9;
    if (k % 19 == 0) f = 1.0 - 1e-9;
    double g = cube_gamma_for_volume(n, f);
    CHECK(cube_volume_below(n, g) == doctest::Approx(f).epsilon(1e-11).scale(1.0));
    CHECK(std::abs(cube_volume_below(n, g) - f) < 1e-12);
  }
  CHECK(cube_gamma_for_volume(Vec3{1, 0, 0}, 0.0) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(cube_gamma_for_volume(Vec3{1, 0, 0}, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("volume is symmetric under the complement map") {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> ug(-0.8, 0.8);
  for (int k = 0; k < 300; ++k) {
    Vec3 n = random_unit(rng);
    double g = ug(rng);
    CHECK(cube_volume_below(n, g) + cube_volume_below(-n, -g) ==
          doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("box liquid volume matches kernel band clips") {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> ug(-0.5, 0.5);
  std::uniform_real_distribution<double> ub(0.0, 0.5);
  for (int k = 0; k < 300; ++k) {
    Vec3 n = random_unit(rng);
    double g = ug(rng);
    Vec3 lo{-0.5 + ub(rng), -0.5 + ub(rng), -0.5 + ub(rng)};
    Vec3 hi{0.5 - ub(rng), 0.5 - ub(rng), 0.5 - ub(rng)};
    double va = box_liquid_volume(n, g, lo, hi);

    ConvexPolyhedron p = unit_cell();
    p = clip_by_plane(p, Vec3{-1, 0, 0}, -lo.x, kTagSweep);
    p = clip_by_plane(p, Vec3{0, -1, 0}, -lo.y, kTagSweep);
    p = clip_by_plane(p, Vec3{0, 0, -1}, -lo.z, kTagSweep);
    p = clip_by_plane(p, Vec3{1, 0, 0}, hi.x, kTagSweep);
    p = clip_by_plane(p, Vec3{0, 1, 0}, hi.y, kTagSweep);
    p = clip_by_plane(p, Vec3{0, 0, 1}, hi.z, kTagSweep);
    double vb = p.empty() ? 0.0 : volume(clip_by_plane(p, n, g, kTagLiquid));
    CHECK(std::abs(va - vb) < 1e-12);
  }
}
