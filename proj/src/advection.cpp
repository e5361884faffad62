#include "vofeb/advection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <stdexcept>

#include "vofeb/cube_plic.hpp"
#include "vofeb/heights.hpp"

namespace vofeb {

namespace {

// First error wins; workers record instead of throwing so thread joins stay
// clean, and the sweep rethrows afterwards.
struct ErrorOnce {
  std::mutex m;
  std::string msg;
  bool armed = false;

  void set(const std::string& s) {
    std::lock_guard<std::mutex> lock(m);
    if (!armed) {
      armed = true;
      msg = s;
    }
  }
};

std::string cell_label(const LatticeSpec& spec, long ci) {
  int i, j, k;
  spec.cell_coords(ci, &i, &j, &k);
  char buf[64];
  std::snprintf(buf, sizeof buf, "(%d, %d, %d)", i, j, k);
  return buf;
}

double max_line_fraction(const ScalarLattice& lat, int axis, const int cell[3]) {
  const int b = (axis + 1) % 3, c = (axis + 2) % 3;
  double m = 0.0;
  for (int db = 0; db < 2; ++db)
    for (int dc = 0; dc < 2; ++dc) {
      int v[3] = {cell[0], cell[1], cell[2]};
      v[b] += db;
      v[c] += dc;
      m = std::max(m, lat.sl[axis][lat.spec.edge_index(axis, v[0], v[1], v[2])]);
    }
  return m;
}

// Liquid volume of the band of width w (cell units) behind the face
// (axis, side) of a solid-free donor, cut by its liquid plane.
double band_volume_free(const PlicPlane& liquid, int axis, int side, double w) {
  Vec3 lo{-0.5, -0.5, -0.5}, hi{0.5, 0.5, 0.5};
  if (side > 0)
    lo[axis] = 0.5 - w;
  else
    hi[axis] = -0.5 + w;
  return box_liquid_volume(liquid.n, liquid.gamma, lo, hi);
}

// Signed liquid volume (cell units, positive along +axis) crossing the face
// whose low-cell coordinates are f_ijk with f_ijk[axis] the face plane index.
double face_flux(const ScalarLattice& lat, const Reconstruction& rec, AdvectScheme scheme,
                 int axis, const int f_ijk[3], double u, double s, double B, ErrorOnce* err) {
  if (u == 0.0 || s <= 0.0) return 0.0;
  int d[3] = {f_ijk[0], f_ijk[1], f_ijk[2]};
  int side = -1;
  if (u > 0.0) {
    d[axis] -= 1;
    side = +1;
  }
  if (d[axis] < 0 || d[axis] >= lat.spec.n[axis]) return 0.0;
  const long dc = lat.spec.cell_index(d[0], d[1], d[2]);
  const double c = lat.c[dc], cs = lat.cs[dc];
  if (!(c > 0.0)) return 0.0;
  const double sgn = u > 0.0 ? 1.0 : -1.0;
  const double Bmag = std::abs(B);
  const ConvexPolyhedron* fp = lat.fluid_poly(dc);

  if (fp == nullptr) {
    // Solid-free donor: the corrected width equals the demand itself, and the
    // band-by-plane volume has a closed form.
    if (c >= 1.0) return B;
    const double w = scheme == AdvectScheme::kTraditional ? Bmag / s : Bmag;
    return sgn * band_volume_free(rec.plane[dc], axis, side, w);
  }

  switch (scheme) {
    case AdvectScheme::kConservative: {
      if (c >= cs) return B;
      auto w = corrected_width(*fp, axis, side, cs, Bmag);
      if (!w) {
        err->set("small-cell overflow at cell " + cell_label(lat.spec, dc) +
                 ": swept volume " + std::to_string(Bmag) + " exceeds c_s " +
                 std::to_string(cs));
        return 0.0;
      }
      return sgn * advected_volume(*fp, axis, side, *w, &rec.plane[dc]);
    }
    case AdvectScheme::kTraditional: {
      const double w = Bmag / s;
      const PlicPlane* liquid = c >= cs ? nullptr : &rec.plane[dc];
      return sgn * advected_volume(*fp, axis, side, w, liquid);
    }
    case AdvectScheme::kRedistribution: {
      if (c >= cs) return B;
      const double un_w = Bmag / s;
      double unstar_w = 0.0;
      if (cs > Bmag) unstar_w = *corrected_width(*fp, axis, side, cs, Bmag);
      const double slmax = max_line_fraction(lat, axis, d);
      switch (redistribution_flux_case(c, cs, Bmag, slmax, un_w, unstar_w)) {
        case RedistFluxRule::kCorrectedWidth:
          return sgn * advected_volume(*fp, axis, side, unstar_w, &rec.plane[dc]);
        case RedistFluxRule::kPlainWidth:
          return sgn * advected_volume(*fp, axis, side, un_w, &rec.plane[dc]);
        case RedistFluxRule::kTotalEvacuation:
          return sgn * c;
        default:
          return 0.0;  // kZeroFlux/kFullColumn handled above
      }
    }
  }
  return 0.0;
}

}  // namespace

double c_c_mixed(double c, double c_s) { return c > 0.5 * c_s ? 1.0 : 0.0; }

std::optional<double> corrected_width(const ConvexPolyhedron& fluid, int axis, int side,
                                      double c_s, double swept_volume) {
  if (swept_volume > c_s) return std::nullopt;
  Vec3 n{};
  n[axis] = side > 0 ? -1.0 : 1.0;
  const PlicPlane band = reconstruct_interface(fluid, n, swept_volume);
  return 0.5 + band.gamma;
}

RedistFluxRule redistribution_flux_case(double c, double c_s, double swept_volume,
                                        double sl_max, double un_width, double unstar_width) {
  if (c <= 0.0) return RedistFluxRule::kZeroFlux;
  if (c >= c_s) return RedistFluxRule::kFullColumn;
  if (c_s > swept_volume)
    return sl_max > unstar_width ? RedistFluxRule::kCorrectedWidth
                                 : RedistFluxRule::kTotalEvacuation;
  return sl_max > un_width ? RedistFluxRule::kPlainWidth : RedistFluxRule::kTotalEvacuation;
}

std::array<int, 3> sweep_order(long step) {
  const int r = static_cast<int>(((step % 3) + 3) % 3);
  return {r, (r + 1) % 3, (r + 2) % 3};
}

double max_stable_dt(const ScalarLattice& lat, const FaceVelocity& vel, AdvectScheme scheme,
                     double cfl) {
  const LatticeSpec& sp = lat.spec;
  if (scheme == AdvectScheme::kRedistribution) {
    const double umax = max_open_face_speed(lat, vel);
    return umax > 0.0 ? cfl * sp.delta / umax : HUGE_VAL;
  }
  double dt = HUGE_VAL;
  for (int a = 0; a < 3; ++a) {
    const auto d = sp.face_dims(a);
    for (int k = 0; k < d[2]; ++k)
      for (int j = 0; j < d[1]; ++j)
        for (int i = 0; i < d[0]; ++i) {
          const long fi = sp.face_index(a, i, j, k);
          const double us = std::abs(vel.u[a][fi]) * lat.sf[a][fi];
          if (us <= 0.0) continue;
          int lo[3] = {i, j, k}, hi[3] = {i, j, k};
          lo[a] -= 1;
          double csmin = 1.0;
          if (lo[a] >= 0) csmin = std::min(csmin, lat.cs[sp.cell_index(lo[0], lo[1], lo[2])]);
          if (hi[a] < sp.n[a])
            csmin = std::min(csmin, lat.cs[sp.cell_index(hi[0], hi[1], hi[2])]);
          if (csmin > 0.0) dt = std::min(dt, cfl * csmin * sp.delta / us);
        }
  }
  return dt;
}

long steps_for_interval(double duration, double dt_max) {
  if (!(duration > 0.0)) return 1;
  if (!(dt_max > 0.0) || !std::isfinite(dt_max)) return 1;
  return std::max<long>(1, static_cast<long>(std::ceil(duration / dt_max * (1.0 - 1e-12))));
}

void sweep(ScalarLattice& lat, const Reconstruction& rec, const FaceVelocity& vel, double dt,
           int axis, AdvectScheme scheme, std::span<const double> q, int nthreads,
           AdvectStats* stats) {
  const LatticeSpec& sp = lat.spec;
  const int a = axis;
  const int bax = (a + 1) % 3, cax = (a + 2) % 3;
  const int na = sp.n[a];
  const long nlines = static_cast<long>(sp.n[bax]) * sp.n[cax];
  const double width_scale = dt / sp.delta;
  ErrorOnce err;

  parallel_for(nlines, nthreads, [&](long llo, long lhi) {
    std::vector<double> flux(static_cast<size_t>(na) + 1);
    std::vector<double> band(static_cast<size_t>(na) + 1);
    int ijk[3];
    for (long line = llo; line < lhi; ++line) {
      ijk[bax] = static_cast<int>(line % sp.n[bax]);
      ijk[cax] = static_cast<int>(line / sp.n[bax]);
      for (int i = 0; i <= na; ++i) {
        ijk[a] = i;
        const long fi = sp.face_index(a, ijk[0], ijk[1], ijk[2]);
        const double u = vel.u[a][fi];
        const double s = lat.sf[a][fi];
        const double B = u * s * width_scale;
        band[i] = B;
        flux[i] = face_flux(lat, rec, scheme, a, ijk, u, s, B, &err);
      }
      for (int i = 0; i < na; ++i) {
        ijk[a] = i;
        const long ci = sp.cell_index(ijk[0], ijk[1], ijk[2]);
        const double dF = flux[i] - flux[i + 1];
        const double dB = band[i] - band[i + 1];
        lat.c[ci] += dF - q[ci] * dB;
      }
    }
  });
  if (err.armed) throw std::runtime_error(err.msg);

  const long N = sp.cells();
  const bool check_negative = scheme == AdvectScheme::kConservative;
  const double worst = chunked_max(N, nthreads, [&](long lo, long hi) {
    double m = 0.0;
    for (long ci = lo; ci < hi; ++ci) {
      const double c = lat.c[ci];
      if (std::isnan(c)) return HUGE_VAL;
      if (check_negative) m = std::max(m, -c);
    }
    return m;
  });
  if (worst > 1e-10) {
    for (long ci = 0; ci < N; ++ci) {
      const double c = lat.c[ci];
      if (std::isnan(c) || (check_negative && c < -1e-10))
        throw std::runtime_error("sweep produced invalid fraction " + std::to_string(c) +
                                 " at cell " + cell_label(sp, ci) + " (c_s " +
                                 std::to_string(lat.cs[ci]) + ", axis " + std::to_string(a) +
                                 ")");
    }
  }

  if (scheme == AdvectScheme::kTraditional) {
    for (long ci = 0; ci < N; ++ci) {
      const double c = lat.c[ci];
      if (c < 0.0 || c > 1.0) {
        const double b = std::clamp(c, 0.0, 1.0);
        if (stats != nullptr) {
          stats->clamped_cells += 1;
          stats->clamped_volume += b - c;
        }
        lat.c[ci] = b;
      }
    }
  }
}

namespace {

struct Candidate {
  long ci = -1;
  double w = 0.0;
};

// Face neighbors of a violating cell, tier 1 (downstream interfacial) or
// tier 2 (any face neighbor with capacity).
int collect_receivers(const ScalarLattice& lat, const FaceVelocity& vel, long ci,
                      bool overfilled, bool widen, Candidate out[6]) {
  const LatticeSpec& sp = lat.spec;
  int i, j, k;
  sp.cell_coords(ci, &i, &j, &k);
  const int cell[3] = {i, j, k};
  int n = 0;
  for (int a = 0; a < 3; ++a)
    for (int dir = -1; dir <= 1; dir += 2) {
      int nb[3] = {cell[0], cell[1], cell[2]};
      nb[a] += dir;
      if (!sp.in_domain(nb[0], nb[1], nb[2])) continue;
      int f[3] = {cell[0], cell[1], cell[2]};
      if (dir > 0) f[a] += 1;
      const double u = vel.u[a][sp.face_index(a, f[0], f[1], f[2])];
      const bool downstream = dir > 0 ? u > 0.0 : u < 0.0;
      const long nci = sp.cell_index(nb[0], nb[1], nb[2]);
      const double cn = lat.c[nci], csn = lat.cs[nci];
      if (csn <= 0.0) continue;
      const double w = overfilled ? 1.0 - cn / csn : cn / csn;
      if (!(w > 0.0)) continue;
      if (!widen && !(downstream && csn < 1.0 && cn > 0.0 && cn < csn)) continue;
      out[n++] = {nci, w};
    }
  return n;
}

}  // namespace

void redistribute_excess(ScalarLattice& lat, const FaceVelocity& vel, AdvectStats* stats,
                         int nthreads, int max_passes) {
  const LatticeSpec& sp = lat.spec;
  const long N = sp.cells();
  auto violating = [&](long ci) {
    const double c = lat.c[ci];
    return c < 0.0 || c > lat.cs[ci];
  };

  std::vector<long> violators;
  {
    const long nchunks = std::min<long>(64, std::max<long>(N, 1));
    const long chunk = (N + nchunks - 1) / nchunks;
    std::vector<std::vector<long>> parts(static_cast<size_t>(nchunks));
    parallel_for(nchunks, nthreads, [&](long qlo, long qhi) {
      for (long qc = qlo; qc < qhi; ++qc) {
        const long lo = qc * chunk, hi = std::min(N, lo + chunk);
        for (long ci = lo; ci < hi; ++ci)
          if (violating(ci)) parts[static_cast<size_t>(qc)].push_back(ci);
      }
    });
    for (auto& p : parts) violators.insert(violators.end(), p.begin(), p.end());
  }

  struct Put {
    long ci;
    double dv;
  };
  std::vector<Put> puts;
  std::vector<std::pair<long, double>> sets;
  std::vector<long> touched;

  for (int pass = 0; pass < max_passes && !violators.empty(); ++pass) {
    puts.clear();
    sets.clear();
    touched.clear();
    for (long ci : violators) {
      const double c = lat.c[ci], cs = lat.cs[ci];
      const bool over = c > cs;
      const double amount = over ? c - cs : c;
      Candidate nb[6];
      int n = collect_receivers(lat, vel, ci, over, false, nb);
      bool widened = false;
      if (n == 0) {
        n = collect_receivers(lat, vel, ci, over, true, nb);
        widened = n > 0;
      }
      if (n == 0) {
        sets.emplace_back(ci, over ? cs : 0.0);
        stats->clamped_cells += 1;
        stats->clamped_volume += -amount;
        continue;
      }
      double wsum = 0.0;
      for (int m = 0; m < n; ++m) wsum += nb[m].w;
      double given = 0.0;
      for (int m = 0; m + 1 < n; ++m) {
        const double t = amount * (nb[m].w / wsum);
        puts.push_back({nb[m].ci, t});
        given += t;
      }
      puts.push_back({nb[n - 1].ci, amount - given});
      sets.emplace_back(ci, over ? cs : 0.0);
      for (int m = 0; m < n; ++m) touched.push_back(nb[m].ci);
      stats->redistribution_transfers += 1;
      if (widened) stats->widened_cells += 1;
    }
    for (const auto& [ci, v] : sets) lat.c[ci] = v;
    for (const Put& p : puts) lat.c[p.ci] += p.dv;
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    violators.clear();
    for (long ci : touched)
      if (violating(ci)) violators.push_back(ci);
  }

  for (long ci : violators) {
    const double c = lat.c[ci], cs = lat.cs[ci];
    const double bound = std::clamp(c, 0.0, cs);
    stats->clamped_cells += 1;
    stats->clamped_volume += bound - c;
    lat.c[ci] = bound;
  }
}

AdvectStats advance(ScalarLattice& lat, const FaceVelocity& vel, double dt, long step,
                    AdvectScheme scheme, int nthreads, const ContactHook& contact) {
  const long N = lat.spec.cells();
  AdvectStats stats;
  std::vector<double> q(static_cast<size_t>(N));
  parallel_for(N, nthreads, [&](long lo, long hi) {
    for (long ci = lo; ci < hi; ++ci) {
      const double c = lat.c[ci], cs = lat.cs[ci];
      if (scheme == AdvectScheme::kRedistribution)
        q[ci] = cs > 0.0 ? std::clamp(c / cs, 0.0, 1.0) : 0.0;
      else
        q[ci] = c_c_mixed(c, cs);
    }
  });

  const std::array<int, 3> order = sweep_order(step);
  for (int pass = 0; pass < 3; ++pass) {
    HeightField hf = compute_heights(lat, nthreads);
    std::vector<NormalOverride> overrides;
    if (contact) overrides = contact(lat);
    InterfaceNormals nrm = plic_normals(lat, hf, overrides, nthreads);
    Reconstruction rec = reconstruct_planes(lat, nrm, nthreads);
    sweep(lat, rec, vel, dt, order[pass], scheme, q, nthreads, &stats);
    if (scheme == AdvectScheme::kRedistribution) redistribute_excess(lat, vel, &stats, nthreads);
  }
  return stats;
}

}  // namespace vofeb
