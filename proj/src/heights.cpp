#include "vofeb/heights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vofeb {

namespace {

constexpr double kFullTol = 1e-10;

bool gather_stencil(const HeightField& hf, long ci, int axis, double h[3][3], int8_t* orient) {
  const LatticeSpec& spec = hf.spec;
  int ijk[3];
  spec.cell_coords(ci, &ijk[0], &ijk[1], &ijk[2]);
  const int bax = (axis + 1) % 3, cax = (axis + 2) % 3;
  const int8_t o = hf.orient[axis][ci];
  if (o == 0) return false;
  for (int db = -1; db <= 1; ++db)
    for (int dc = -1; dc <= 1; ++dc) {
      int idx[3] = {ijk[0], ijk[1], ijk[2]};
      idx[bax] += db;
      idx[cax] += dc;
      if (!spec.in_domain(idx[0], idx[1], idx[2])) return false;
      const long cj = spec.cell_index(idx[0], idx[1], idx[2]);
      if (hf.orient[axis][cj] != o) return false;
      h[db + 1][dc + 1] = hf.h[axis][cj];
    }
  *orient = o;
  return true;
}

}  // namespace

HeightField compute_heights(const ScalarLattice& lat, int nthreads) {
  const LatticeSpec& spec = lat.spec;
  const long N = spec.cells();
  HeightField hf;
  hf.spec = spec;
  for (int a = 0; a < 3; ++a) {
    hf.h[a].assign(N, std::numeric_limits<double>::quiet_NaN());
    hf.orient[a].assign(N, 0);
  }
  for (int a = 0; a < 3; ++a) {
    parallel_for(N, nthreads, [&lat, &hf, &spec, a](long lo, long hi) {
      for (long ci = lo; ci < hi; ++ci) {
        int ijk[3];
        spec.cell_coords(ci, &ijk[0], &ijk[1], &ijk[2]);
        const int m0 = std::max(ijk[a] - kHeightHalfWidth, 0);
        const int m1 = std::min(ijk[a] + kHeightHalfWidth, spec.n[a] - 1);
        int idx[3] = {ijk[0], ijk[1], ijk[2]};
        double sum = 0.0;
        bool fluid_only = true;
        for (int m = m0; m <= m1; ++m) {
          idx[a] = m;
          const long cj = spec.cell_index(idx[0], idx[1], idx[2]);
          if (lat.cs[cj] != 1.0) {
            fluid_only = false;
            break;
          }
          sum += lat.c[cj];
        }
        if (!fluid_only) continue;
        idx[a] = m0;
        const double clo = lat.c[spec.cell_index(idx[0], idx[1], idx[2])];
        idx[a] = m1;
        const double chi = lat.c[spec.cell_index(idx[0], idx[1], idx[2])];
        const bool lo_full = clo >= 1.0 - kFullTol, lo_empty = clo <= kFullTol;
        const bool hi_full = chi >= 1.0 - kFullTol, hi_empty = chi <= kFullTol;
        int8_t o = 0;
        if (lo_full && hi_empty)
          o = 1;
        else if (lo_empty && hi_full)
          o = -1;
        if (o == 0) continue;
        hf.h[a][ci] = o > 0 ? spec.origin[a] + spec.delta * (m0 + sum)
                            : spec.origin[a] + spec.delta * (m1 + 1 - sum);
        hf.orient[a][ci] = o;
      }
    });
  }
  return hf;
}

bool hf_normal(const HeightField& hf, long ci, int axis, Vec3* n) {
  double h[3][3];
  int8_t o = 0;
  if (!gather_stencil(hf, ci, axis, h, &o)) return false;
  const double dx = hf.spec.delta;
  const double hb = (h[2][1] - h[0][1]) / (2.0 * dx);
  const double hc = (h[1][2] - h[1][0]) / (2.0 * dx);
  Vec3 m{};
  m[axis] = o;
  m[(axis + 1) % 3] = -o * hb;
  m[(axis + 2) % 3] = -o * hc;
  *n = normalized(m);
  return true;
}

bool hf_curvature(const HeightField& hf, long ci, const Vec3& hint, double* kappa) {
  int order[3] = {0, 1, 2};
  std::sort(order, order + 3,
            [&hint](int x, int y) { return std::abs(hint[x]) > std::abs(hint[y]); });
  for (int t = 0; t < 3; ++t) {
    const int axis = order[t];
    double h[3][3];
    int8_t o = 0;
    if (!gather_stencil(hf, ci, axis, h, &o)) continue;
    const double dx = hf.spec.delta;
    const double hb = (h[2][1] - h[0][1]) / (2.0 * dx);
    const double hc = (h[1][2] - h[1][0]) / (2.0 * dx);
    const double hbb = (h[2][1] - 2.0 * h[1][1] + h[0][1]) / (dx * dx);
    const double hcc = (h[1][2] - 2.0 * h[1][1] + h[1][0]) / (dx * dx);
    const double hbc = (h[2][2] + h[0][0] - h[2][0] - h[0][2]) / (4.0 * dx * dx);
    *kappa = -o * (hbb + hcc + hbb * hc * hc + hcc * hb * hb - 2.0 * hbc * hb * hc) /
             std::pow(1.0 + hb * hb + hc * hc, 1.5);
    return true;
  }
  return false;
}

}  // namespace vofeb
