#include "vofeb/normals.hpp"

#include <algorithm>
#include <cmath>

#include "vofeb/cube_plic.hpp"

namespace vofeb {

namespace {

struct Stencil27 {
  double v[3][3][3];

  // Value at offset ia along axis a, ib along (a+1)%3, ic along (a+2)%3,
  // each in 0..2 with 1 the center.
  double at(int a, int ia, int ib, int ic) const {
    int off[3];
    off[a] = ia;
    off[(a + 1) % 3] = ib;
    off[(a + 2) % 3] = ic;
    return v[off[0]][off[1]][off[2]];
  }
};

Stencil27 gather27(const ScalarLattice& lat, long ci) {
  int i, j, k;
  lat.spec.cell_coords(ci, &i, &j, &k);
  Stencil27 s;
  for (int di = 0; di < 3; ++di)
    for (int dj = 0; dj < 3; ++dj)
      for (int dk = 0; dk < 3; ++dk)
        s.v[di][dj][dk] = lat.cell_c(i + di - 1, j + dj - 1, k + dk - 1);
  return s;
}

Vec3 youngs_gradient(const Stencil27& s) {
  Vec3 g{};
  for (int a = 0; a < 3; ++a) {
    double lo = 0.0, hi = 0.0;
    for (int ib = 0; ib < 3; ++ib)
      for (int ic = 0; ic < 3; ++ic) {
        const double w = (ib == 1 ? 2.0 : 1.0) * (ic == 1 ? 2.0 : 1.0);
        lo += w * s.at(a, 0, ib, ic);
        hi += w * s.at(a, 2, ib, ic);
      }
    g[a] = lo - hi;
  }
  return g;
}

double norm_l1(const Vec3& v) { return std::abs(v.x) + std::abs(v.y) + std::abs(v.z); }

bool has_interfacial_neighbor(const ScalarLattice& lat, long ci) {
  int i, j, k;
  lat.spec.cell_coords(ci, &i, &j, &k);
  for (int di = -1; di <= 1; ++di)
    for (int dj = -1; dj <= 1; ++dj)
      for (int dk = -1; dk <= 1; ++dk) {
        if (di == 0 && dj == 0 && dk == 0) continue;
        if (!lat.spec.in_domain(i + di, j + dj, k + dk)) continue;
        const long cj = lat.spec.cell_index(i + di, j + dj, k + dk);
        if (lat.cs[cj] > 0.0 && lat.c[cj] > 0.0 && lat.c[cj] < lat.cs[cj]) return true;
      }
  return false;
}

}  // namespace

Vec3 youngs_normal(const ScalarLattice& lat, long ci) {
  const Vec3 g = youngs_gradient(gather27(lat, ci));
  const double n1 = norm_l1(g);
  return n1 > 1e-30 ? normalized(g) : Vec3{};
}

Vec3 myc_normal(const ScalarLattice& lat, long ci) {
  const Stencil27 s = gather27(lat, ci);

  // Centered-column candidate per axis: own-axis sign from the two 5-cell
  // face-plane sums, transverse slopes from 3-cell column-sum differences.
  Vec3 cand[4];
  for (int a = 0; a < 3; ++a) {
    const double lo5 =
        s.at(a, 0, 1, 1) + s.at(a, 0, 0, 1) + s.at(a, 0, 2, 1) + s.at(a, 0, 1, 0) + s.at(a, 0, 1, 2);
    const double hi5 =
        s.at(a, 2, 1, 1) + s.at(a, 2, 0, 1) + s.at(a, 2, 2, 1) + s.at(a, 2, 1, 0) + s.at(a, 2, 1, 2);
    Vec3 m{};
    m[a] = lo5 > hi5 ? 1.0 : -1.0;
    m[(a + 1) % 3] = 0.5 * ((s.at(a, 0, 0, 1) + s.at(a, 1, 0, 1) + s.at(a, 2, 0, 1)) -
                            (s.at(a, 0, 2, 1) + s.at(a, 1, 2, 1) + s.at(a, 2, 2, 1)));
    m[(a + 2) % 3] = 0.5 * ((s.at(a, 0, 1, 0) + s.at(a, 1, 1, 0) + s.at(a, 2, 1, 0)) -
                            (s.at(a, 0, 1, 2) + s.at(a, 1, 1, 2) + s.at(a, 2, 1, 2)));
    cand[a] = m / norm_l1(m);
  }

  int cn = 0;
  double own = std::abs(cand[0][0]);
  if (std::abs(cand[1][1]) > own) {
    own = std::abs(cand[1][1]);
    cn = 1;
  }
  if (std::abs(cand[2][2]) > own) {
    own = std::abs(cand[2][2]);
    cn = 2;
  }

  cand[3] = youngs_gradient(s);
  const double yl1 = norm_l1(cand[3]);
  if (yl1 > 1e-30) {
    cand[3] = cand[3] / yl1;
    const double ymax =
        std::max({std::abs(cand[3].x), std::abs(cand[3].y), std::abs(cand[3].z)});
    if (own > ymax) cn = 3;
  }
  return normalized(cand[cn]);
}

InterfaceNormals plic_normals(const ScalarLattice& lat, const HeightField& hf,
                              std::span<const NormalOverride> overrides, int nthreads) {
  const long N = lat.spec.cells();
  InterfaceNormals out;
  out.n.assign(N, Vec3{});
  out.source.assign(N, kNormalNone);
  parallel_for(N, nthreads, [&](long lo, long hi) {
    for (long ci = lo; ci < hi; ++ci) {
      const double cs = lat.cs[ci], c = lat.c[ci];
      if (!(cs > 0.0 && c > 0.0 && c < cs)) continue;
      const Vec3 m = myc_normal(lat, ci);
      int i, j, k;
      lat.spec.cell_coords(ci, &i, &j, &k);
      const int ijk[3] = {i, j, k};
      int order[3] = {0, 1, 2};
      std::sort(order, order + 3, [&m](int x, int y) { return std::abs(m[x]) > std::abs(m[y]); });
      Vec3 nh;
      bool got = false;
      for (int t = 0; t < 3 && !got; ++t) {
        const int axis = order[t];
        // Only trust the column stencil when its central column crosses the
        // interface inside this cell; otherwise the stencil describes a
        // neighboring piece of surface.
        const double center = lat.spec.origin[axis] + lat.spec.delta * (ijk[axis] + 0.5);
        if (hf.valid(axis, ci) &&
            std::abs(hf.h[axis][ci] - center) > 0.5 * lat.spec.delta * (1.0 + 1e-9))
          continue;
        got = hf_normal(hf, ci, axis, &nh);
      }
      if (got) {
        out.n[ci] = nh;
        out.source[ci] = kNormalHeight;
      } else {
        out.n[ci] = m;
        out.source[ci] = has_interfacial_neighbor(lat, ci) ? kNormalMyc : kNormalMycIsolated;
      }
    }
  });
  for (const NormalOverride& ov : overrides) {
    if (ov.ci < 0 || ov.ci >= N || out.source[ov.ci] == kNormalNone) continue;
    out.n[ov.ci] = normalized(ov.n);
    out.source[ov.ci] = kNormalContact;
  }
  return out;
}

Reconstruction reconstruct_planes(const ScalarLattice& lat, const InterfaceNormals& nrm,
                                  int nthreads) {
  const long N = lat.spec.cells();
  Reconstruction rec;
  rec.plane.assign(N, PlicPlane{});
  rec.interfacial.assign(N, 0);
  parallel_for(N, nthreads, [&](long lo, long hi) {
    for (long ci = lo; ci < hi; ++ci) {
      if (nrm.source[ci] == kNormalNone) continue;
      const Vec3& n = nrm.n[ci];
      if (const ConvexPolyhedron* poly = lat.fluid_poly(ci))
        rec.plane[ci] = reconstruct_interface(*poly, n, lat.c[ci]);
      else
        rec.plane[ci] = PlicPlane{n, cube_gamma_for_volume(n, lat.c[ci])};
      rec.interfacial[ci] = 1;
    }
  });
  return rec;
}

}  // namespace vofeb
