#include "vofeb/equilibrium.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace vofeb {

namespace {

double cap_term(double r, double beta) {
  const double c = std::cos(beta);
  return M_PI * r * r * r * (1.0 + c) * (1.0 + c) * (2.0 - c);
}

// Volume balance as a function of beta1 alone, with beta2 and rt eliminated
// through the angle-sum and contact-circle equations.
double reduced_balance(double r0, double theta, double beta1, SphereEquilibrium* s) {
  const double beta2 = M_PI - theta - beta1;
  const double rt = r0 * std::sin(beta2) / std::sin(beta1);
  if (s != nullptr) *s = {rt, beta1, beta2};
  return cap_term(rt, beta1) + cap_term(r0, beta2) - 8.0 * M_PI * r0 * r0 * r0;
}

SphereEquilibrium bisect_beta1(double r0, double theta) {
  const double span = M_PI - theta;
  double lo = 1e-9 * span, hi = (1.0 - 1e-9) * span;
  double flo = reduced_balance(r0, theta, lo, nullptr);
  if (!(flo > 0.0))
    throw std::runtime_error("sphere equilibrium: no sign change in the volume balance");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (reduced_balance(r0, theta, mid, nullptr) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  SphereEquilibrium s;
  reduced_balance(r0, theta, 0.5 * (lo + hi), &s);
  return s;
}

}  // namespace

double equilibrium_radius_flat(double volume, double theta) {
  if (!(volume > 0.0) || !(theta > 0.0) || !(theta < M_PI))
    throw std::invalid_argument("equilibrium_radius_flat: need v > 0 and 0 < theta < pi");
  const double c = std::cos(theta);
  const double r = std::cbrt(3.0 * volume / (M_PI * (2.0 + c) * (1.0 - c) * (1.0 - c)));
  return r * std::sin(theta);
}

std::array<double, 3> sphere_equilibrium_residuals(double r0, double theta,
                                                   const SphereEquilibrium& s) {
  return {
      s.beta1 + s.beta2 + theta - M_PI,
      s.rt * std::sin(s.beta1) - r0 * std::sin(s.beta2),
      cap_term(s.rt, s.beta1) + cap_term(r0, s.beta2) - 8.0 * M_PI * r0 * r0 * r0,
  };
}

SphereEquilibrium equilibrium_sphere_system(double r0, double theta) {
  if (!(r0 > 0.0) || !(theta > 0.0) || !(theta < M_PI))
    throw std::invalid_argument("equilibrium_sphere_system: need r0 > 0 and 0 < theta < pi");

  const double volume_scale = 8.0 * M_PI * r0 * r0 * r0;
  SphereEquilibrium s{r0, 0.5 * (M_PI - theta), 0.5 * (M_PI - theta)};
  s.rt = r0 * std::sin(s.beta2) / std::sin(s.beta1);

  bool converged = false;
  for (int it = 0; it < 50 && !converged; ++it) {
    const auto f = sphere_equilibrium_residuals(r0, theta, s);
    converged = std::abs(f[0]) <= 1e-14 && std::abs(f[1]) <= 1e-14 * r0 &&
                std::abs(f[2]) <= 1e-14 * volume_scale;
    if (converged) break;

    const double s1 = std::sin(s.beta1), c1 = std::cos(s.beta1);
    const double s2 = std::sin(s.beta2), c2 = std::cos(s.beta2);
    Eigen::Matrix3d J;
    J << 0.0, 1.0, 1.0,
        s1, s.rt * c1, -r0 * c2,
        3.0 * M_PI * s.rt * s.rt * (1.0 + c1) * (1.0 + c1) * (2.0 - c1),
        -3.0 * M_PI * s.rt * s.rt * s.rt * s1 * s1 * s1, -3.0 * M_PI * r0 * r0 * r0 * s2 * s2 * s2;
    const Eigen::Vector3d rhs(-f[0], -f[1], -f[2]);
    const Eigen::Vector3d dx = J.fullPivLu().solve(rhs);
    if (!dx.allFinite()) break;
    s.rt += dx[0];
    s.beta1 += dx[1];
    s.beta2 += dx[2];
    if (!(s.rt > 0.0) || !(s.beta1 > 0.0) || !(s.beta1 < M_PI) || !(s.beta2 > 0.0) ||
        !(s.beta2 < M_PI))
      break;
  }

  if (!converged) {
    s = bisect_beta1(r0, theta);
  } else {
    const auto f = sphere_equilibrium_residuals(r0, theta, s);
    if (std::abs(f[2]) > 1e-12 * volume_scale) s = bisect_beta1(r0, theta);
  }
  return s;
}

}  // namespace vofeb
