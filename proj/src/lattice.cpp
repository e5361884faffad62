#include "vofeb/lattice.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "vofeb/cube_plic.hpp"

namespace vofeb {

namespace {

constexpr double kSnapFraction = 1e-12;

struct VertexField {
  std::array<int, 3> d;
  std::vector<double> v;

  double at(int i, int j, int k) const {
    return v[i + static_cast<long>(d[0]) * (j + static_cast<long>(d[1]) * k)];
  }
};

VertexField sample_vertices(const LatticeSpec& spec, const ImplicitField& f,
                            bool perturb_zeros) {
  VertexField vf;
  vf.d = {spec.n[0] + 1, spec.n[1] + 1, spec.n[2] + 1};
  vf.v.resize(static_cast<size_t>(vf.d[0]) * vf.d[1] * vf.d[2]);
  const double zero_shift = 1e-12 * spec.delta;
  long idx = 0;
  for (int k = 0; k < vf.d[2]; ++k)
    for (int j = 0; j < vf.d[1]; ++j)
      for (int i = 0; i < vf.d[0]; ++i) {
        double p = f(spec.vertex(i, j, k));
        if (perturb_zeros && p == 0.0) p = zero_shift;
        vf.v[idx++] = p;
      }
  return vf;
}

[[noreturn]] void throw_under_resolved(const LatticeSpec& spec, int axis, int i, int j,
                                       int k) {
  int ci = i, cj = j, ck = k;
  if (axis != 0 && ci > 0 && ci >= spec.n[0]) ci = spec.n[0] - 1;
  if (axis != 1 && cj > 0 && cj >= spec.n[1]) cj = spec.n[1] - 1;
  if (axis != 2 && ck > 0 && ck >= spec.n[2]) ck = spec.n[2] - 1;
  throw std::runtime_error(
      "lattice edge crosses the boundary more than once near cell (" +
      std::to_string(ci) + ", " + std::to_string(cj) + ", " + std::to_string(ck) +
      "); geometry under-resolved");
}

// Root of f along the segment [a, b] whose endpoint values have opposite
// signs; returns the parameter from a.
double edge_root(const ImplicitField& f, const Vec3& a, const Vec3& b, double fa) {
  double lo = 0.0, hi = 1.0;
  bool lo_pos = fa > 0.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = f(a + mid * (b - a));
    if ((fm > 0.0) == lo_pos)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct EdgeData {
  std::array<std::vector<double>, 3> frac;
  std::array<std::vector<double>, 3> root;
};

EdgeData build_edges(const LatticeSpec& spec, const ImplicitField& f,
                     const VertexField& vf) {
  EdgeData ed;
  for (int a = 0; a < 3; ++a) {
    auto d = spec.edge_dims(a);
    ed.frac[a].assign(spec.edge_count(a), 0.0);
    ed.root[a].assign(spec.edge_count(a), -1.0);
    const int step[3] = {a == 0, a == 1, a == 2};
    for (int k = 0; k < d[2]; ++k)
      for (int j = 0; j < d[1]; ++j)
        for (int i = 0; i < d[0]; ++i) {
          const double pa = vf.at(i, j, k);
          const double pb = vf.at(i + step[0], j + step[1], k + step[2]);
          const long e = spec.edge_index(a, i, j, k);
          const Vec3 va = spec.vertex(i, j, k);
          const Vec3 vb = spec.vertex(i + step[0], j + step[1], k + step[2]);
          if ((pa > 0.0) == (pb > 0.0)) {
            // Same sign at both ends: any interior dip (a near-tangent
            // boundary) is below edge resolution and the edge is kept uncut.
            ed.frac[a][e] = pa > 0.0 ? 1.0 : 0.0;
            continue;
          }
          bool prev_pos = pa > 0.0;
          int changes = 0;
          for (int s = 1; s <= 7; ++s) {
            bool pos = f(va + (s / 8.0) * (vb - va)) > 0.0;
            if (pos != prev_pos) ++changes;
            prev_pos = pos;
          }
          if ((pb > 0.0) != prev_pos) ++changes;
          if (changes > 1) throw_under_resolved(spec, a, i, j, k);
          const double t = edge_root(f, va, vb, pa);
          ed.root[a][e] = t;
          ed.frac[a][e] = pa > 0.0 ? t : 1.0 - t;
        }
  }
  return ed;
}

void build_faces(const LatticeSpec& spec, const VertexField& vf, const EdgeData& ed,
                 ScalarLattice& lat) {
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3;
    const int c = (a + 2) % 3;
    auto d = spec.face_dims(a);
    lat.sf[a].assign(spec.face_count(a), 0.0);
    for (int k = 0; k < d[2]; ++k)
      for (int j = 0; j < d[1]; ++j)
        for (int i = 0; i < d[0]; ++i) {
          int fc[3] = {i, j, k};
          auto vert = [&](int ub, int uc) {
            int v[3] = {fc[0], fc[1], fc[2]};
            v[b] += ub;
            v[c] += uc;
            return vf.at(v[0], v[1], v[2]);
          };
          const double p00 = vert(0, 0), p10 = vert(1, 0), p11 = vert(1, 1),
                       p01 = vert(0, 1);
          const long fi = spec.face_index(a, i, j, k);
          if (p00 > 0.0 && p10 > 0.0 && p11 > 0.0 && p01 > 0.0) {
            lat.sf[a][fi] = 1.0;
            continue;
          }
          if (p00 < 0.0 && p10 < 0.0 && p11 < 0.0 && p01 < 0.0) continue;
          const double corner[4] = {p00, p10, p11, p01};
          int changes = 0;
          for (int s = 0; s < 4; ++s)
            if ((corner[s] > 0.0) != (corner[(s + 1) % 4] > 0.0)) ++changes;
          if (changes > 2) throw_under_resolved(spec, a, i, j, k);

          auto edge_t = [&](int family, int ub, int uc) {
            int v[3] = {fc[0], fc[1], fc[2]};
            v[b] += ub;
            v[c] += uc;
            return ed.root[family][spec.edge_index(family, v[0], v[1], v[2])];
          };
          // Walk the four corners counter-clockwise in the (b, c) plane,
          // inserting the cached crossing point on each cut side.
          const double cu[4] = {0.0, 1.0, 1.0, 0.0};
          const double cv[4] = {0.0, 0.0, 1.0, 1.0};
          double px[8], py[8];
          int np = 0;
          for (int s = 0; s < 4; ++s) {
            if (corner[s] > 0.0) {
              px[np] = cu[s];
              py[np] = cv[s];
              ++np;
            }
            if ((corner[s] > 0.0) != (corner[(s + 1) % 4] > 0.0)) {
              double t;
              switch (s) {
                case 0: t = edge_t(b, 0, 0); px[np] = t; py[np] = 0.0; break;
                case 1: t = edge_t(c, 1, 0); px[np] = 1.0; py[np] = t; break;
                case 2: t = edge_t(b, 0, 1); px[np] = t; py[np] = 1.0; break;
                default: t = edge_t(c, 0, 0); px[np] = 0.0; py[np] = t; break;
              }
              ++np;
            }
          }
          double area = 0.0;
          for (int s = 0; s < np; ++s) {
            int s1 = (s + 1) % np;
            area += px[s] * py[s1] - px[s1] * py[s];
          }
          lat.sf[a][fi] = std::clamp(0.5 * area, 0.0, 1.0);
        }
  }
}

Vec3 center_gradient(const ImplicitField& f, const Vec3& center, double h) {
  Vec3 g;
  for (int d = 0; d < 3; ++d) {
    Vec3 e = axis_unit(d);
    g[d] = (f(center + h * e) - f(center - h * e)) / (2.0 * h);
  }
  return g;
}

void build_cells(const LatticeSpec& spec, const ImplicitField& f, const VertexField& vf,
                 const EdgeData& ed, ScalarLattice& lat) {
  lat.cs.assign(spec.cells(), 0.0);
  lat.kind.assign(spec.cells(), kCellSolid);
  lat.poly_of.assign(spec.cells(), -1);
  const ConvexPolyhedron cell = unit_cell();
  for (int k = 0; k < spec.n[2]; ++k)
    for (int j = 0; j < spec.n[1]; ++j)
      for (int i = 0; i < spec.n[0]; ++i) {
        const long ci = spec.cell_index(i, j, k);
        int pos = 0;
        for (int dz = 0; dz < 2; ++dz)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
              pos += vf.at(i + dx, j + dy, k + dz) > 0.0;
        if (pos == 8) {
          lat.cs[ci] = 1.0;
          lat.kind[ci] = kCellFluid;
          continue;
        }
        if (pos == 0) continue;

        const Vec3 center = spec.cell_center(i, j, k);
        Vec3 ns = normalized(center_gradient(f, center, 0.25 * spec.delta));
        if (norm2(ns) == 0.0) ns = {0.0, 0.0, 1.0};

        double gamma = 0.0;
        int nroots = 0;
        for (int a = 0; a < 3; ++a) {
          const int b = (a + 1) % 3;
          const int c = (a + 2) % 3;
          for (int ub = 0; ub < 2; ++ub)
            for (int uc = 0; uc < 2; ++uc) {
              int v[3] = {i, j, k};
              v[b] += ub;
              v[c] += uc;
              const double t = ed.root[a][spec.edge_index(a, v[0], v[1], v[2])];
              if (t < 0.0) continue;
              Vec3 p{v[0] - i - 0.5, v[1] - j - 0.5, v[2] - k - 0.5};
              p[a] += t;
              gamma += dot(ns, p);
              ++nroots;
            }
        }
        if (nroots == 0) {
          // Both vertex signs present yet no crossing cached can only happen
          // for degenerate fields; classify by majority.
          lat.cs[ci] = pos >= 4 ? 1.0 : 0.0;
          lat.kind[ci] = pos >= 4 ? kCellFluid : kCellSolid;
          continue;
        }
        gamma /= nroots;

        ConvexPolyhedron poly = clip_by_plane(cell, -ns, -gamma, kTagSolid);
        const double cs = poly.empty() ? 0.0 : volume(poly);
        if (cs <= kSnapFraction) continue;
        if (cs >= 1.0 - kSnapFraction) {
          lat.cs[ci] = 1.0;
          lat.kind[ci] = kCellFluid;
          continue;
        }
        lat.cs[ci] = cs;
        lat.kind[ci] = kCellMixed;
        lat.poly_of[ci] = static_cast<int32_t>(lat.polys.size());
        lat.polys.push_back(std::move(poly));
        lat.planes.push_back({ns, gamma});
      }
}

}  // namespace

ScalarLattice init_embedded(const LatticeSpec& spec, const ImplicitField& fluid_region) {
  ScalarLattice lat;
  lat.spec = spec;
  const VertexField vf = sample_vertices(spec, fluid_region, true);
  const EdgeData ed = build_edges(spec, fluid_region, vf);
  build_faces(spec, vf, ed, lat);
  for (int a = 0; a < 3; ++a) lat.sl[a] = ed.frac[a];
  build_cells(spec, fluid_region, vf, ed, lat);
  lat.c.assign(spec.cells(), 0.0);
  return lat;
}

double prune_small_cells(ScalarLattice& lat, double sl_min) {
  const LatticeSpec& spec = lat.spec;
  if (sl_min > 0.0) {
    std::vector<uint8_t> convert(spec.cells(), 0);
    bool any = false;
    for (int a = 0; a < 3; ++a) {
      const int b = (a + 1) % 3;
      const int c = (a + 2) % 3;
      auto d = spec.edge_dims(a);
      for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
          for (int i = 0; i < d[0]; ++i) {
            const double s = lat.sl[a][spec.edge_index(a, i, j, k)];
            if (s <= 0.0 || s >= sl_min) continue;
            for (int ub = -1; ub < 1; ++ub)
              for (int uc = -1; uc < 1; ++uc) {
                int cc[3] = {i, j, k};
                cc[b] += ub;
                cc[c] += uc;
                if (!spec.in_domain(cc[0], cc[1], cc[2])) continue;
                convert[spec.cell_index(cc[0], cc[1], cc[2])] = 1;
                any = true;
              }
          }
    }
    if (any) {
      for (long ci = 0; ci < spec.cells(); ++ci) {
        if (!convert[ci]) continue;
        const bool to_solid = lat.cs[ci] < 0.5;
        lat.cs[ci] = to_solid ? 0.0 : 1.0;
        lat.kind[ci] = to_solid ? kCellSolid : kCellFluid;
        lat.poly_of[ci] = -1;
      }
      for (int a = 0; a < 3; ++a) {
        auto d = spec.face_dims(a);
        for (int k = 0; k < d[2]; ++k)
          for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i) {
              int lo[3] = {i, j, k};
              lo[a] -= 1;
              const bool has_lo = spec.in_domain(lo[0], lo[1], lo[2]);
              const bool has_hi = spec.in_domain(i, j, k);
              const long lo_ci = has_lo ? spec.cell_index(lo[0], lo[1], lo[2]) : -1;
              const long hi_ci = has_hi ? spec.cell_index(i, j, k) : -1;
              const bool touched = (has_lo && convert[lo_ci]) || (has_hi && convert[hi_ci]);
              if (!touched) continue;
              const uint8_t klo = has_lo ? lat.kind[lo_ci] : uint8_t{kCellFluid};
              const uint8_t khi = has_hi ? lat.kind[hi_ci] : uint8_t{kCellFluid};
              const long fi = spec.face_index(a, i, j, k);
              if (klo == kCellSolid || khi == kCellSolid)
                lat.sf[a][fi] = 0.0;
              else if (klo == kCellFluid && khi == kCellFluid)
                lat.sf[a][fi] = 1.0;
            }
      }
      for (int a = 0; a < 3; ++a) {
        const int b = (a + 1) % 3;
        const int c = (a + 2) % 3;
        auto d = spec.edge_dims(a);
        for (int k = 0; k < d[2]; ++k)
          for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i) {
              int nsolid = 0, nfluid = 0, ncells = 0, nconv = 0;
              for (int ub = -1; ub < 1; ++ub)
                for (int uc = -1; uc < 1; ++uc) {
                  int cc[3] = {i, j, k};
                  cc[b] += ub;
                  cc[c] += uc;
                  if (!spec.in_domain(cc[0], cc[1], cc[2])) continue;
                  const long ci = spec.cell_index(cc[0], cc[1], cc[2]);
                  ++ncells;
                  nconv += convert[ci];
                  nsolid += lat.kind[ci] == kCellSolid;
                  nfluid += lat.kind[ci] == kCellFluid;
                }
              if (nconv == 0) continue;
              const long e = spec.edge_index(a, i, j, k);
              if (nsolid == ncells)
                lat.sl[a][e] = 0.0;
              else if (nfluid == ncells)
                lat.sl[a][e] = 1.0;
            }
      }
    }
  }

  double ratio = std::numeric_limits<double>::infinity();
  for (int k = 0; k < spec.n[2]; ++k)
    for (int j = 0; j < spec.n[1]; ++j)
      for (int i = 0; i < spec.n[0]; ++i) {
        const long ci = spec.cell_index(i, j, k);
        if (lat.kind[ci] != kCellMixed) continue;
        double mx = 0.0;
        for (int a = 0; a < 3; ++a) {
          int hi[3] = {i, j, k};
          hi[a] += 1;
          mx = std::max(mx, lat.sf[a][spec.face_index(a, i, j, k)]);
          mx = std::max(mx, lat.sf[a][spec.face_index(a, hi[0], hi[1], hi[2])]);
        }
        if (mx > 0.0) ratio = std::min(ratio, lat.cs[ci] / mx);
      }
  return ratio;
}

namespace {

struct LiquidSampler {
  const ImplicitField& liq;
  Vec3 center;
  double delta;
  bool mixed;
  CellPlane plane;

  double sign_at(const Vec3& local) const { return liq(center + delta * local); }

  double fluid_volume(const Vec3& lo, const Vec3& hi) const {
    const double box = (hi.x - lo.x) * (hi.y - lo.y) * (hi.z - lo.z);
    if (!mixed) return box;
    return box - box_liquid_volume(plane.n, plane.gamma, lo, hi);
  }

  double contribution(const Vec3& lo, const Vec3& hi, int depth) const {
    double corner[8];
    int pos = 0;
    for (int s = 0; s < 8; ++s) {
      Vec3 p{s & 1 ? hi.x : lo.x, s & 2 ? hi.y : lo.y, s & 4 ? hi.z : lo.z};
      corner[s] = sign_at(p);
      pos += corner[s] > 0.0;
    }
    const Vec3 mid = 0.5 * (lo + hi);
    const double fc = sign_at(mid);
    if (pos == 8 && fc > 0.0) return fluid_volume(lo, hi);
    if (pos == 0 && fc <= 0.0) return 0.0;
    if (depth > 0) {
      double v = 0.0;
      for (int s = 0; s < 8; ++s) {
        Vec3 blo{s & 1 ? mid.x : lo.x, s & 2 ? mid.y : lo.y, s & 4 ? mid.z : lo.z};
        Vec3 bhi{s & 1 ? hi.x : mid.x, s & 2 ? hi.y : mid.y, s & 4 ? hi.z : mid.z};
        v += contribution(blo, bhi, depth - 1);
      }
      return v;
    }
    // Leaf: treat the liquid boundary as the plane of the trilinear fit.
    Vec3 g;
    g.x = (corner[1] + corner[3] + corner[5] + corner[7] - corner[0] - corner[2] -
           corner[4] - corner[6]) /
          (4.0 * (hi.x - lo.x));
    g.y = (corner[2] + corner[3] + corner[6] + corner[7] - corner[0] - corner[1] -
           corner[4] - corner[5]) /
          (4.0 * (hi.y - lo.y));
    g.z = (corner[4] + corner[5] + corner[6] + corner[7] - corner[0] - corner[1] -
           corner[2] - corner[3]) /
          (4.0 * (hi.z - lo.z));
    const double gn = norm(g);
    if (gn < 1e-300)
      return fc > 0.0 ? fluid_volume(lo, hi) : 0.0;
    const Vec3 n = -1.0 / gn * g;
    const double gamma = dot(n, mid) + fc / gn;
    const double liquid = box_liquid_volume(n, gamma, lo, hi);
    if (!mixed) return liquid;
    // Both the liquid boundary and the solid plane cross this leaf only in a
    // narrow band around the contact line; bound the overlap by each phase.
    const double fluid = fluid_volume(lo, hi);
    return std::min(liquid, fluid);
  }
};

}  // namespace

void init_liquid(ScalarLattice& lat, const ImplicitField& liquid_region) {
  const LatticeSpec& spec = lat.spec;
  lat.c.assign(spec.cells(), 0.0);

  if (liquid_region.is_half_space) {
    const Vec3 n = liquid_region.hs_normal;
    const double d = liquid_region.hs_offset;
    for (int k = 0; k < spec.n[2]; ++k)
      for (int j = 0; j < spec.n[1]; ++j)
        for (int i = 0; i < spec.n[0]; ++i) {
          const long ci = spec.cell_index(i, j, k);
          if (lat.kind[ci] == kCellSolid) continue;
          const double gloc = (d - dot(n, spec.cell_center(i, j, k))) / spec.delta;
          if (lat.kind[ci] == kCellFluid) {
            lat.c[ci] = cube_volume_below(n, gloc);
          } else {
            ConvexPolyhedron wet = clip_by_plane(*lat.fluid_poly(ci), n, gloc, kTagLiquid);
            lat.c[ci] = wet.empty() ? 0.0 : std::min(volume(wet), lat.cs[ci]);
          }
        }
    return;
  }

  const VertexField vl = sample_vertices(spec, liquid_region, false);
  for (int k = 0; k < spec.n[2]; ++k)
    for (int j = 0; j < spec.n[1]; ++j)
      for (int i = 0; i < spec.n[0]; ++i) {
        const long ci = spec.cell_index(i, j, k);
        if (lat.kind[ci] == kCellSolid) continue;
        int pos = 0;
        for (int dz = 0; dz < 2; ++dz)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
              pos += vl.at(i + dx, j + dy, k + dz) > 0.0;
        const Vec3 center = spec.cell_center(i, j, k);
        if (pos == 8 && liquid_region(center) > 0.0) {
          lat.c[ci] = lat.cs[ci];
          continue;
        }
        if (pos == 0 && liquid_region(center) <= 0.0) continue;

        LiquidSampler sampler{liquid_region, center, spec.delta,
                              lat.kind[ci] == kCellMixed,
                              lat.kind[ci] == kCellMixed ? *lat.cell_plane(ci)
                                                         : CellPlane{}};
        double v = 0.0;
        for (int sz = 0; sz < 4; ++sz)
          for (int sy = 0; sy < 4; ++sy)
            for (int sx = 0; sx < 4; ++sx) {
              Vec3 lo{-0.5 + 0.25 * sx, -0.5 + 0.25 * sy, -0.5 + 0.25 * sz};
              Vec3 hi = lo + Vec3{0.25, 0.25, 0.25};
              v += sampler.contribution(lo, hi, 3);
            }
        lat.c[ci] = std::min(v, lat.cs[ci]);
      }
}

}  // namespace vofeb
