#include "vofeb/polyhedron.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace vofeb {

namespace {

// Signed sextuple volume of the tetra (origin, a, b, c).
double tet6(const Vec3& a, const Vec3& b, const Vec3& c) { return dot(a, cross(b, c)); }

Mat3 rotation_generic(const Vec3& n) {
  double w = 1.0 + n.z;
  return {{1.0 - n.x * n.x / w, -n.x * n.y / w, -n.x},
          {-n.x * n.y / w, 1.0 - n.y * n.y / w, -n.y},
          {n.x, n.y, n.z}};
}

// Shoelace sum S = sum_m x[m]*(y[m+1]-y[m-1]) over a closed loop = 2*area for
// counterclockwise order.
double shoelace2(const std::vector<Vec3>& q) {
  int m = static_cast<int>(q.size());
  double s = 0.0;
  for (int i = 0; i < m; ++i) {
    const Vec3& ynext = q[(i + 1) % m];
    const Vec3& yprev = q[(i + m - 1) % m];
    s += q[i].x * (ynext.y - yprev.y);
  }
  return s;
}

// Cross pairing sum sum_m (a_x[m]*(b_y[m+1]-b_y[m-1])) for two paired loops.
double shoelace2_cross(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  int m = static_cast<int>(a.size());
  double s = 0.0;
  for (int i = 0; i < m; ++i) {
    s += a[i].x * (b[(i + 1) % m].y - b[(i + m - 1) % m].y);
  }
  return s;
}

void drop_consecutive_duplicates(std::vector<int>& loop) {
  std::vector<int> out;
  out.reserve(loop.size());
  for (int v : loop) {
    if (out.empty() || out.back() != v) out.push_back(v);
  }
  while (out.size() > 1 && out.front() == out.back()) out.pop_back();
  loop = std::move(out);
}

}  // namespace

ConvexPolyhedron unit_cell() {
  ConvexPolyhedron p;
  p.verts = {{-0.5, -0.5, -0.5}, {0.5, -0.5, -0.5}, {0.5, 0.5, -0.5}, {-0.5, 0.5, -0.5},
             {-0.5, -0.5, 0.5},  {0.5, -0.5, 0.5},  {0.5, 0.5, 0.5},  {-0.5, 0.5, 0.5}};
  p.faces = {{0, 4, 7, 3}, {1, 2, 6, 5}, {0, 1, 5, 4}, {3, 7, 6, 2}, {0, 3, 2, 1}, {4, 5, 6, 7}};
  p.tags = {0, 1, 2, 3, 4, 5};
  return p;
}

double volume(const ConvexPolyhedron& p) {
  double v6 = 0.0;
  for (const auto& f : p.faces) {
    for (size_t i = 1; i + 1 < f.size(); ++i) {
      v6 += tet6(p.verts[f[0]], p.verts[f[i]], p.verts[f[i + 1]]);
    }
  }
  return v6 / 6.0;
}

Vec3 centroid(const ConvexPolyhedron& p) {
  double vsum = 0.0;
  Vec3 csum{};
  for (const auto& f : p.faces) {
    for (size_t i = 1; i + 1 < f.size(); ++i) {
      const Vec3& a = p.verts[f[0]];
      const Vec3& b = p.verts[f[i]];
      const Vec3& c = p.verts[f[i + 1]];
      double w = tet6(a, b, c);
      vsum += w;
      csum += w * 0.25 * (a + b + c);
    }
  }
  return vsum != 0.0 ? csum / vsum : Vec3{};
}

ConvexPolyhedron clip_by_plane(const ConvexPolyhedron& p, const Vec3& n, double gamma,
                               int new_tag) {
  if (p.empty()) return {};
  const int nv = static_cast<int>(p.verts.size());
  std::vector<double> d(nv);
  double dmin = 1e300, dmax = -1e300;
  for (int i = 0; i < nv; ++i) {
    d[i] = dot(n, p.verts[i]) - gamma;
    dmin = std::min(dmin, d[i]);
    dmax = std::max(dmax, d[i]);
  }
  if (dmax <= kGeomEps) return p;
  if (dmin >= -kGeomEps) return {};

  auto inside = [&](int i) { return d[i] <= kGeomEps; };

  ConvexPolyhedron out;
  std::vector<int> vmap(nv, -1);
  auto keep_vertex = [&](int i) {
    if (vmap[i] < 0) {
      vmap[i] = static_cast<int>(out.verts.size());
      out.verts.push_back(p.verts[i]);
    }
    return vmap[i];
  };

  // Cut vertices cached per original edge so adjacent faces agree exactly.
  std::vector<std::array<int, 3>> cuts;  // {min(a,b), max(a,b), new index}
  auto cut_edge = [&](int a, int b) {
    int lo = std::min(a, b), hi = std::max(a, b);
    for (const auto& c : cuts) {
      if (c[0] == lo && c[1] == hi) return c[2];
    }
    int pin = inside(a) ? a : b;
    int pout = inside(a) ? b : a;
    double t = d[pin] / (d[pin] - d[pout]);
    Vec3 v = p.verts[pin] + t * (p.verts[pout] - p.verts[pin]);
    int idx = static_cast<int>(out.verts.size());
    out.verts.push_back(v);
    cuts.push_back({lo, hi, idx});
    return idx;
  };

  std::vector<std::pair<int, int>> chain;  // closing face: entry -> exit

  for (size_t fi = 0; fi < p.faces.size(); ++fi) {
    const auto& loop = p.faces[fi];
    int m = static_cast<int>(loop.size());
    bool any_in = false, any_out = false;
    for (int v : loop) (inside(v) ? any_in : any_out) = true;
    if (!any_in) continue;
    if (!any_out) {
      std::vector<int> nl;
      nl.reserve(loop.size());
      for (int v : loop) nl.push_back(keep_vertex(v));
      out.faces.push_back(std::move(nl));
      out.tags.push_back(p.tags[fi]);
      continue;
    }

    std::vector<int> nl;
    nl.reserve(loop.size() + 2);
    int entry = -1, exit = -1;
    for (int k = 0; k < m; ++k) {
      int a = loop[k], b = loop[(k + 1) % m];
      bool ia = inside(a), ib = inside(b);
      if (ib) {
        if (!ia) {
          int c = std::abs(d[b]) <= kGeomEps ? keep_vertex(b) : cut_edge(a, b);
          nl.push_back(c);
          entry = c;
        }
        nl.push_back(keep_vertex(b));
      } else if (ia) {
        int c = std::abs(d[a]) <= kGeomEps ? keep_vertex(a) : cut_edge(a, b);
        nl.push_back(c);
        exit = c;
      }
    }
    drop_consecutive_duplicates(nl);
    if (nl.size() >= 3) {
      out.faces.push_back(std::move(nl));
      out.tags.push_back(p.tags[fi]);
    }
    if (entry >= 0 && exit >= 0 && entry != exit) chain.push_back({entry, exit});
  }

  // Assemble the closing face on the cut plane by walking entry->exit links.
  if (chain.size() >= 3) {
    std::vector<int> loop;
    loop.push_back(chain.front().first);
    for (size_t step = 0; step <= chain.size(); ++step) {
      int cur = loop.back();
      int nxt = -1;
      for (const auto& e : chain) {
        if (e.first == cur) {
          nxt = e.second;
          break;
        }
      }
      if (nxt < 0 || nxt == loop.front()) break;
      loop.push_back(nxt);
    }
    if (loop.size() < chain.size()) {
      // Degeneracies broke the walk; fall back to angular ordering in the cut
      // plane (valid because the closing polygon of a convex body is convex).
      loop.clear();
      for (const auto& e : chain) loop.push_back(e.first);
      std::sort(loop.begin(), loop.end());
      loop.erase(std::unique(loop.begin(), loop.end()), loop.end());
      Vec3 mid{};
      for (int v : loop) mid += out.verts[v];
      mid = mid / static_cast<double>(loop.size());
      Vec3 e1 = normalized(cross(n, std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0}));
      Vec3 e2 = cross(n, e1);
      std::sort(loop.begin(), loop.end(), [&](int a, int b) {
        Vec3 pa = out.verts[a] - mid, pb = out.verts[b] - mid;
        return std::atan2(dot(pa, e2), dot(pa, e1)) < std::atan2(dot(pb, e2), dot(pb, e1));
      });
    }
    drop_consecutive_duplicates(loop);
    if (loop.size() >= 3) {
      // Outward normal of the closing face must align with +n.
      Vec3 a2{};
      for (size_t i = 1; i + 1 < loop.size(); ++i) {
        a2 += cross(out.verts[loop[i]] - out.verts[loop[0]],
                    out.verts[loop[i + 1]] - out.verts[loop[0]]);
      }
      if (dot(a2, n) < 0.0) std::reverse(loop.begin(), loop.end());
      out.faces.push_back(std::move(loop));
      out.tags.push_back(new_tag);
    }
  }

  if (out.faces.empty()) return {};

  // Compact away vertices orphaned by dropped degenerate faces.
  std::vector<int> used(out.verts.size(), -1);
  ConvexPolyhedron res;
  res.faces.reserve(out.faces.size());
  res.tags = out.tags;
  for (auto& f : out.faces) {
    for (int& v : f) {
      if (used[v] < 0) {
        used[v] = static_cast<int>(res.verts.size());
        res.verts.push_back(out.verts[v]);
      }
      v = used[v];
    }
    res.faces.push_back(std::move(f));
  }
  return res;
}

Mat3 rotation_to_axis(const Vec3& n) {
  if (std::abs(1.0 + n.z) < 1e-9) {
    return Mat3::diag(1.0, -1.0, -1.0) * rotation_generic(-n);
  }
  return rotation_generic(n);
}

SlabDecomposition decompose_and_measure(const ConvexPolyhedron& p, const Vec3& axis) {
  SlabDecomposition sd;
  sd.rotation = rotation_to_axis(normalized(axis));
  if (p.empty()) return sd;

  const int nv = static_cast<int>(p.verts.size());
  std::vector<Vec3> r(nv);
  for (int i = 0; i < nv; ++i) r[i] = sd.rotation * p.verts[i];

  std::vector<double> zs(nv);
  for (int i = 0; i < nv; ++i) zs[i] = r[i].z;
  std::sort(zs.begin(), zs.end());
  std::vector<double> levels;
  for (double z : zs) {
    // Slabs thinner than the merge tolerance collapse into one boundary.
    if (levels.empty() || z - levels.back() > kGeomEps) levels.push_back(z);
  }
  if (levels.size() < 2) return sd;

  std::vector<std::pair<int, int>> edges;
  for (const auto& f : p.faces) {
    int m = static_cast<int>(f.size());
    for (int i = 0; i < m; ++i) {
      int a = f[i], b = f[(i + 1) % m];
      edges.push_back({std::min(a, b), std::max(a, b)});
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  const double span_eps = 2.0 * kGeomEps;
  for (size_t li = 0; li + 1 < levels.size(); ++li) {
    Slab sl;
    sl.z_lo = levels[li];
    sl.z_hi = levels[li + 1];
    double zm = 0.5 * (sl.z_lo + sl.z_hi);

    std::vector<Vec3> mid;
    for (const auto& e : edges) {
      double z1 = r[e.first].z, z2 = r[e.second].z;
      if (std::min(z1, z2) > sl.z_lo + span_eps || std::max(z1, z2) < sl.z_hi - span_eps) {
        continue;
      }
      const Vec3& p1 = r[e.first];
      const Vec3& p2 = r[e.second];
      double dz = z2 - z1;
      auto at = [&](double z) {
        double t = std::clamp((z - z1) / dz, 0.0, 1.0);
        return p1 + t * (p2 - p1);
      };
      sl.lower.push_back(at(sl.z_lo));
      sl.upper.push_back(at(sl.z_hi));
      mid.push_back(at(zm));
    }
    if (mid.size() < 3) continue;

    Vec3 ctr{};
    for (const Vec3& q : mid) ctr += q;
    ctr = ctr / static_cast<double>(mid.size());
    std::vector<int> order(mid.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::vector<double> ang(mid.size());
    for (size_t i = 0; i < mid.size(); ++i) {
      ang[i] = std::atan2(mid[i].y - ctr.y, mid[i].x - ctr.x);
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) { return ang[a] < ang[b]; });
    auto permute = [&](std::vector<Vec3>& v) {
      std::vector<Vec3> t(v.size());
      for (size_t i = 0; i < order.size(); ++i) t[i] = v[order[i]];
      v = std::move(t);
    };
    permute(sl.lower);
    permute(sl.upper);

    sl.s_ll = shoelace2(sl.lower);
    sl.s_uu = shoelace2(sl.upper);
    sl.s_lu = shoelace2_cross(sl.lower, sl.upper) + shoelace2_cross(sl.upper, sl.lower);
    sl.area_lo = 0.5 * sl.s_ll;
    sl.area_hi = 0.5 * sl.s_uu;
    sl.area_mid = 0.25 * (sl.area_hi + sl.area_lo) + 0.125 * sl.s_lu;
    sl.volume = (sl.z_hi - sl.z_lo) / 6.0 * (sl.area_hi + sl.area_lo + 4.0 * sl.area_mid);
    sd.total_volume += sl.volume;
    sd.slabs.push_back(std::move(sl));
  }
  return sd;
}

PlicPlane reconstruct_interface(const ConvexPolyhedron& p, const Vec3& n_l,
                                double target_volume) {
  Vec3 n = normalized(n_l);
  SlabDecomposition sd = decompose_and_measure(p, n);
  if (sd.slabs.empty()) return {n, 0.0};

  double total = sd.total_volume;
  double target = std::clamp(target_volume, 0.0, total);
  double vtol = 1e-15 * std::max(total, 1e-30);
  if (target <= vtol) return {n, sd.slabs.front().z_lo};
  if (target >= total - vtol) return {n, sd.slabs.back().z_hi};

  size_t mi = 0;
  double cum = 0.0;
  for (; mi + 1 < sd.slabs.size(); ++mi) {
    if (cum + sd.slabs[mi].volume >= target) break;
    cum += sd.slabs[mi].volume;
  }
  const Slab& sl = sd.slabs[mi];
  double rem = std::clamp(target - cum, 0.0, sl.volume);
  double dd = sl.z_hi - sl.z_lo;

  // Cubic in the fractional slab height lambda in [0,1].
  double a1 = dd * (2.0 * sl.s_ll + 2.0 * sl.s_uu - 2.0 * sl.s_lu) / 12.0;
  double a2 = dd * (-6.0 * sl.s_ll + 3.0 * sl.s_lu) / 12.0;
  double a3 = dd * (6.0 * sl.s_ll) / 12.0;

  auto f = [&](double l) { return ((a1 * l + a2) * l + a3) * l - rem; };
  auto fp = [&](double l) { return (3.0 * a1 * l + 2.0 * a2) * l + a3; };

  double l = sl.volume > 0.0 ? rem / sl.volume : 0.5;
  bool ok = false;
  for (int it = 0; it < 50; ++it) {
    double fv = f(l);
    if (std::abs(fv) <= vtol) {
      ok = true;
      break;
    }
    double dv = fp(l);
    if (dv <= 0.0) break;
    double step = fv / dv;
    l = std::clamp(l - step, 0.0, 1.0);
    if (std::abs(step) < 1e-17) {
      ok = std::abs(f(l)) <= 1e-13 * std::max(total, 1e-30);
      break;
    }
  }
  if (!ok && std::abs(f(l)) > 1e-13 * std::max(total, 1e-30)) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      l = 0.5 * (lo + hi);
      if (f(l) < 0.0) {
        lo = l;
      } else {
        hi = l;
      }
      if (hi - lo < 1e-16) break;
    }
  }
  return {n, sl.z_lo + l * dd};
}

double truncated_volume(const ConvexPolyhedron& p, const PlicPlane& plane) {
  return volume(clip_by_plane(p, plane.n, plane.gamma, kTagLiquid));
}

double advected_volume(const ConvexPolyhedron& fluid, int axis, int side, double width,
                       const PlicPlane* liquid) {
  if (fluid.empty() || width <= 0.0) return 0.0;
  Vec3 nband;
  double gband;
  if (side > 0) {
    nband = -axis_unit(axis);
    gband = width - 0.5;  // keeps x_axis >= 0.5 - width
  } else {
    nband = axis_unit(axis);
    gband = width - 0.5;  // keeps x_axis <= width - 0.5
  }
  ConvexPolyhedron band = clip_by_plane(fluid, nband, gband, kTagSweep);
  if (band.empty()) return 0.0;
  if (liquid != nullptr) {
    band = clip_by_plane(band, liquid->n, liquid->gamma, kTagLiquid);
    if (band.empty()) return 0.0;
  }
  return decompose_and_measure(band, axis_unit(axis)).total_volume;
}

std::vector<SectionEdge> plane_section(const ConvexPolyhedron& p, const Vec3& n,
                                       double gamma) {
  std::vector<SectionEdge> out;
  if (p.empty()) return out;
  const int nv = static_cast<int>(p.verts.size());
  std::vector<double> d(nv);
  for (int i = 0; i < nv; ++i) d[i] = dot(n, p.verts[i]) - gamma;

  for (size_t fi = 0; fi < p.faces.size(); ++fi) {
    const auto& loop = p.faces[fi];
    int m = static_cast<int>(loop.size());
    std::vector<Vec3> pts;
    for (int k = 0; k < m; ++k) {
      int a = loop[k], b = loop[(k + 1) % m];
      if (std::abs(d[a]) <= kGeomEps) {
        pts.push_back(p.verts[a]);
      } else if ((d[a] > 0.0) != (d[b] > 0.0) && std::abs(d[b]) > kGeomEps) {
        double t = d[a] / (d[a] - d[b]);
        pts.push_back(p.verts[a] + t * (p.verts[b] - p.verts[a]));
      }
    }
    // Remove near-duplicates, keep the extreme pair along the section line.
    std::vector<Vec3> uniq;
    for (const Vec3& q : pts) {
      bool dup = false;
      for (const Vec3& u : uniq) dup = dup || norm2(q - u) < kGeomEps * kGeomEps;
      if (!dup) uniq.push_back(q);
    }
    if (uniq.size() < 2) continue;
    if (uniq.size() > 2) {
      Vec3 dir = uniq[1] - uniq[0];
      std::sort(uniq.begin(), uniq.end(),
                [&](const Vec3& a, const Vec3& b) { return dot(dir, a) < dot(dir, b); });
      uniq = {uniq.front(), uniq.back()};
    }
    out.push_back({uniq[0], uniq[1], p.tags[fi]});
  }
  return out;
}

bool section_area_centroid(const std::vector<SectionEdge>& edges, const Vec3& n,
                           double* area, Vec3* centroid_out) {
  std::vector<Vec3> pts;
  for (const auto& e : edges) {
    for (const Vec3& q : {e.a, e.b}) {
      bool dup = false;
      for (const Vec3& u : pts) dup = dup || norm2(q - u) < 100.0 * kGeomEps * kGeomEps;
      if (!dup) pts.push_back(q);
    }
  }
  if (pts.size() < 3) return false;

  Vec3 mid{};
  for (const Vec3& q : pts) mid += q;
  mid = mid / static_cast<double>(pts.size());
  Vec3 e1 = normalized(cross(n, std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0}));
  Vec3 e2 = cross(normalized(n), e1);
  std::sort(pts.begin(), pts.end(), [&](const Vec3& a, const Vec3& b) {
    Vec3 pa = a - mid, pb = b - mid;
    return std::atan2(dot(pa, e2), dot(pa, e1)) < std::atan2(dot(pb, e2), dot(pb, e1));
  });

  double a2 = 0.0;
  Vec3 csum{};
  int m = static_cast<int>(pts.size());
  for (int i = 0; i < m; ++i) {
    const Vec3& pa = pts[i];
    const Vec3& pb = pts[(i + 1) % m];
    double xa = dot(pa - mid, e1), ya = dot(pa - mid, e2);
    double xb = dot(pb - mid, e1), yb = dot(pb - mid, e2);
    double w = xa * yb - xb * ya;
    a2 += w;
    csum += w * (pa + pb);
  }
  if (std::abs(a2) < kGeomEps * kGeomEps) return false;
  if (area != nullptr) *area = 0.5 * std::abs(a2);
  if (centroid_out != nullptr) *centroid_out = mid + (csum / (3.0 * a2) - mid * (2.0 / 3.0));
  return true;
}

}  // namespace vofeb
