#include "vofeb/cases.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "vofeb/implicit_field.hpp"

namespace vofeb {

namespace {

constexpr double kSolidRadius = 0.4;
constexpr double kLiquidRadius = 0.6;
constexpr double kDomainSide = 1.5;
constexpr double kCutoutHalfAngleDeg = 24.6;
constexpr int kProjectionMaxIterations = 200000;

CaseSetup finish_setup(ScalarLattice lat, FaceVelocity vel, double period, double theta,
                       const Vec3& center, double projection_tol, int nthreads,
                       double min_cs_over_sf) {
  CaseSetup setup;
  setup.min_cs_over_sf = min_cs_over_sf;
  setup.projection =
      project_solenoidal(lat, vel, projection_tol, kProjectionMaxIterations, nthreads);
  setup.lat = std::move(lat);
  setup.vel = std::move(vel);
  setup.period = period;
  setup.theta = theta;
  setup.center = center;
  return setup;
}

}  // namespace

LatticeSpec shell_domain(double cpr) {
  const double delta = kLiquidRadius / cpr;
  const int n = static_cast<int>(std::lround(kDomainSide / delta));
  LatticeSpec spec;
  spec.origin = Vec3{0.0, 0.0, 0.0};
  spec.n = {n, n, n};
  spec.delta = delta;
  return spec;
}

CaseSetup make_rotating_shell(double cpr, double prune, double projection_tol, int nthreads) {
  const LatticeSpec spec = shell_domain(cpr);
  const Vec3 center = 0.5 * spec.delta * Vec3{double(spec.n[0]), double(spec.n[1]),
                                              double(spec.n[2])};

  ScalarLattice lat = init_embedded(spec, ball_complement(center, kSolidRadius));
  const double min_cs_over_sf = prune_small_cells(lat, prune);
  init_liquid(lat, ball(center, kLiquidRadius));

  const double w = 2.0 * std::numbers::pi;
  FaceVelocity vel = sample_face_velocity(spec, [center, w](const Vec3& x) {
    return Vec3{w * (x[1] - center[1]), w * (center[0] - x[0]), 0.0};
  });

  return finish_setup(std::move(lat), std::move(vel), 1.0,
                      std::numeric_limits<double>::quiet_NaN(), center, projection_tol, nthreads,
                      min_cs_over_sf);
}

CaseSetup make_conical_cutout(double cpr, double prune, double projection_tol, int nthreads) {
  const LatticeSpec spec = shell_domain(cpr);
  const Vec3 center = 0.5 * spec.delta * Vec3{double(spec.n[0]), double(spec.n[1]),
                                              double(spec.n[2])};

  ScalarLattice lat = init_embedded(spec, ball_complement(center, kSolidRadius));
  const double min_cs_over_sf = prune_small_cells(lat, prune);
  const double half_angle = kCutoutHalfAngleDeg * std::numbers::pi / 180.0;
  init_liquid(lat, intersect(ball(center, kLiquidRadius),
                             complement(cone(center, Vec3{1.0, 0.0, 0.0}, half_angle))));

  // Rigid rotation with angular velocity 2 pi (0, 1, -1); one revolution
  // takes 1/sqrt(2).
  const double w = 2.0 * std::numbers::pi;
  FaceVelocity vel = sample_face_velocity(spec, [center, w](const Vec3& x) {
    const Vec3 d = x - center;
    return Vec3{w * (d[1] + d[2]), -w * d[0], -w * d[0]};
  });

  return finish_setup(std::move(lat), std::move(vel), 1.0 / std::sqrt(2.0),
                      0.5 * std::numbers::pi, center, projection_tol, nthreads, min_cs_over_sf);
}

}  // namespace vofeb
