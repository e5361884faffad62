#include "vofeb/contact.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "vofeb/heights.hpp"
#include "vofeb/polyhedron.hpp"

namespace vofeb {

namespace {

// Matches the full/empty bracketing tolerance of the standard height columns.
constexpr double kFullTol = 1e-10;
constexpr double kOrthoTol = 1e-9;
// Newton tolerance in cell-scaled units: interpolation defects in units of
// delta, the angle constraint in cosine units.
constexpr double kFitTol = 1e-12;

const ConvexPolyhedron& whole_cell() {
  static const ConvexPolyhedron cube = unit_cell();
  return cube;
}

bool is_contact_cell(const ScalarLattice& lat, long ci) {
  return lat.kind[ci] == kCellMixed && lat.c[ci] > kFullTol &&
         lat.c[ci] < lat.cs[ci] - kFullTol;
}

struct FacetInfo {
  bool ok = false;
  Vec3 centroid{};  // cell-local
  bool has_contact = false;
  Vec3 contact{};  // cell-local
};

FacetInfo facet_section(const ConvexPolyhedron& poly, const Vec3& n, double gamma) {
  FacetInfo out;
  const auto edges = plane_section(poly, n, gamma);
  double area = 0.0;
  if (!section_area_centroid(edges, n, &area, &out.centroid)) return out;
  out.ok = true;
  for (const SectionEdge& e : edges)
    if (e.tag == kTagSolid) {
      out.has_contact = true;
      out.contact = 0.5 * (e.a + e.b);
      break;
    }
  return out;
}

struct ColumnRun {
  int lo = 0, hi = -1;  // absolute indices along the axis, inclusive
  int orient = 0;       // +1 liquid at the low end, 0 invalid
  double volume = 0.0;  // liquid in the run, cell units
};

// The contiguous stretch of cells with fluid space nearest to co[axis] inside
// the stencil window, bracketed like a standard height column: one end full
// of liquid, the other empty.
ColumnRun column_run(const ScalarLattice& lat, const int co[3], int axis) {
  const LatticeSpec& spec = lat.spec;
  const int i0 = co[axis];
  const int wlo = std::max(0, i0 - kHeightHalfWidth);
  const int whi = std::min(spec.n[axis] - 1, i0 + kHeightHalfWidth);

  auto cell_at = [&](int t) {
    int q[3] = {co[0], co[1], co[2]};
    q[axis] = t;
    return spec.cell_index(q[0], q[1], q[2]);
  };

  ColumnRun best;
  int best_dist = 1 << 20;
  int t = wlo;
  while (t <= whi) {
    if (lat.kind[cell_at(t)] == kCellSolid) {
      ++t;
      continue;
    }
    const int lo = t;
    while (t <= whi && lat.kind[cell_at(t)] != kCellSolid) ++t;
    const int hi = t - 1;
    const int dist = i0 < lo ? lo - i0 : (i0 > hi ? i0 - hi : 0);
    if (dist < best_dist) {
      best_dist = dist;
      best.lo = lo;
      best.hi = hi;
    }
  }
  if (best.hi <= best.lo) return {};

  const long clo = cell_at(best.lo), chi = cell_at(best.hi);
  const bool lo_full = lat.c[clo] >= lat.cs[clo] - kFullTol;
  const bool lo_empty = lat.c[clo] <= kFullTol;
  const bool hi_full = lat.c[chi] >= lat.cs[chi] - kFullTol;
  const bool hi_empty = lat.c[chi] <= kFullTol;
  if (lo_full && hi_empty)
    best.orient = 1;
  else if (lo_empty && hi_full)
    best.orient = -1;
  else
    return {};
  for (int s = best.lo; s <= best.hi; ++s) best.volume += lat.c[cell_at(s)];
  return best;
}

HeightSample sample_from_facet(const ScalarLattice& lat, long ci, int axis, int orient,
                               const ConvexPolyhedron& poly, const PlicPlane& pl) {
  HeightSample out;
  out.axis = axis;
  const FacetInfo fi = facet_section(poly, pl.n, pl.gamma);
  if (!fi.ok) return out;
  int i, j, k;
  lat.spec.cell_coords(ci, &i, &j, &k);
  const Vec3 cc = lat.spec.cell_center(i, j, k);
  const Vec3 w = cc + lat.spec.delta * fi.centroid;
  out.h = w[axis];
  out.u = w[(axis + 1) % 3];
  out.v = w[(axis + 2) % 3];
  out.orient = static_cast<int8_t>(orient);
  out.kind = fi.has_contact ? HeightKind::kPartialFluid : HeightKind::kFullCell;
  out.cell = ci;
  out.has_contact = fi.has_contact;
  if (fi.has_contact) out.contact = cc + lat.spec.delta * fi.contact;
  return out;
}

// Volume march along the column through co: fill capacity cell by cell from
// the liquid end and place an axis-perpendicular facet in the cell where the
// liquid runs out.
HeightSample column_march(const ScalarLattice& lat, const int co[3], int axis) {
  const ColumnRun run = column_run(lat, co, axis);
  if (run.orient == 0) return {};
  const LatticeSpec& spec = lat.spec;

  auto cell_at = [&](int t) {
    int q[3] = {co[0], co[1], co[2]};
    q[axis] = t;
    return spec.cell_index(q[0], q[1], q[2]);
  };

  int land = run.orient > 0 ? run.lo : run.hi;
  const int last = run.orient > 0 ? run.hi : run.lo;
  const int step = run.orient > 0 ? 1 : -1;
  double remain = run.volume;
  while (land != last && remain > lat.cs[cell_at(land)] + kGeomEps) {
    remain -= lat.cs[cell_at(land)];
    land += step;
  }
  const long lci = cell_at(land);
  const double vin = std::clamp(remain, 0.0, lat.cs[lci]);

  const ConvexPolyhedron* fp = lat.fluid_poly(lci);
  const ConvexPolyhedron& poly = fp ? *fp : whole_cell();
  const Vec3 n = static_cast<double>(run.orient) * axis_unit(axis);
  const PlicPlane pl = reconstruct_interface(poly, n, vin);
  HeightSample out = sample_from_facet(lat, lci, axis, run.orient, poly, pl);
  if (out.valid()) out.kind = out.has_contact ? HeightKind::kPartialFluid : HeightKind::kFullCell;
  return out;
}

// Facet reconstructed inside ci itself with a prescribed normal, for cells
// whose axis-perpendicular facet cannot reach the solid.
HeightSample tilted_facet(const ScalarLattice& lat, long ci, int axis, const Vec3& tilt) {
  if (lat.kind[ci] == kCellSolid) return {};
  if (std::abs(tilt[axis]) <= kGeomEps) return {};
  const double c = lat.c[ci];
  const double cs = lat.cs[ci];
  if (c <= kFullTol || c >= cs - kFullTol) return {};
  const ConvexPolyhedron* fp = lat.fluid_poly(ci);
  const ConvexPolyhedron& poly = fp ? *fp : whole_cell();
  const PlicPlane pl = reconstruct_interface(poly, tilt, c);
  HeightSample out =
      sample_from_facet(lat, ci, axis, tilt[axis] > 0.0 ? 1 : -1, poly, pl);
  if (out.valid()) out.kind = HeightKind::kPartialFluid;
  return out;
}

// Tilted sample for the column through bc along axis: the nearest contact
// cell in the column reconstructs its own theta-rotated facet.
HeightSample column_tilted(const ScalarLattice& lat, const int bc[3], int axis, int orient,
                           double theta) {
  const LatticeSpec& spec = lat.spec;
  for (int dd = 0; dd <= kHeightHalfWidth; ++dd)
    for (int sgn : {-1, 1}) {
      if (dd == 0 && sgn > 0) continue;
      int q[3] = {bc[0], bc[1], bc[2]};
      q[axis] += sgn * dd;
      if (!spec.in_domain(q[0], q[1], q[2])) continue;
      const long tci = spec.cell_index(q[0], q[1], q[2]);
      if (!is_contact_cell(lat, tci)) continue;
      const CellPlane* cp = lat.cell_plane(tci);
      if (!cp) return {};
      Vec3 tau;
      if (!contact_tangent(cp->n, myc_normal(lat, tci), &tau)) return {};
      const Vec3 nl = contact_normal(cp->n, tau, theta);
      HeightSample s = tilted_facet(lat, tci, axis, nl);
      if (s.valid() && static_cast<int>(s.orient) == orient) return s;
      return {};
    }
  return {};
}

struct ModeInternals {
  bool ok = false;  // tangent direction exists
  Vec3 ns{}, tau{}, nlt{};
  HfChoice choice;
  HeightSample own;
};

ModeInternals choose_mode(const ScalarLattice& lat, long ci, double theta) {
  ModeInternals m;
  const CellPlane* cp = lat.cell_plane(ci);
  if (!cp) return m;
  m.ns = cp->n;
  if (!contact_tangent(m.ns, myc_normal(lat, ci), &m.tau)) return m;
  m.ok = true;
  m.nlt = contact_normal(m.ns, m.tau, theta);

  int a = 0;
  for (int t = 1; t < 3; ++t)
    if (std::abs(m.nlt[t]) > std::abs(m.nlt[a])) a = t;
  int co[3];
  lat.spec.cell_coords(ci, &co[0], &co[1], &co[2]);
  HeightSample s = column_march(lat, co, a);
  if (s.valid() && s.has_contact) {
    m.choice = {HfMode::kHorizontal, a, s.orient};
    m.own = s;
    return m;
  }
  int av = 0;
  for (int t = 1; t < 3; ++t)
    if (std::abs(m.ns[t]) > std::abs(m.ns[av])) av = t;
  m.choice = {HfMode::kVertical, av, static_cast<int8_t>(m.nlt[av] >= 0.0 ? 1 : -1)};
  m.own = tilted_facet(lat, ci, av, m.nlt);
  return m;
}

}  // namespace

std::vector<HeightSample> standard_heights(const ScalarLattice& lat, int axis, int nthreads) {
  const HeightField hf = compute_heights(lat, nthreads);
  const LatticeSpec& spec = lat.spec;
  std::vector<HeightSample> out;
  for (long ci = 0; ci < spec.cells(); ++ci) {
    if (!hf.valid(axis, ci)) continue;
    if (lat.c[ci] <= kFullTol || lat.c[ci] >= lat.cs[ci] - kFullTol) continue;
    HeightSample s;
    s.axis = axis;
    s.orient = hf.orient[axis][ci];
    s.h = hf.h[axis][ci];
    int i, j, k;
    spec.cell_coords(ci, &i, &j, &k);
    const Vec3 cc = spec.cell_center(i, j, k);
    s.u = cc[(axis + 1) % 3];
    s.v = cc[(axis + 2) % 3];
    s.kind = HeightKind::kFullCell;
    s.cell = ci;
    out.push_back(s);
  }
  return out;
}

HeightSample mixed_cell_height(const ScalarLattice& lat, long ci, int axis, const Vec3* tilt) {
  if (tilt) return tilted_facet(lat, ci, axis, *tilt);
  int co[3];
  lat.spec.cell_coords(ci, &co[0], &co[1], &co[2]);
  return column_march(lat, co, axis);
}

bool stencil_curvature(const double h[3][3], double delta, int orient, double* kappa) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (!std::isfinite(h[i][j])) return false;
  const double jump = delta * (1.0 + 1e-9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (i < 2 && std::abs(h[i + 1][j] - h[i][j]) > jump) return false;
      if (j < 2 && std::abs(h[i][j + 1] - h[i][j]) > jump) return false;
    }
  const double hb = (h[2][1] - h[0][1]) / (2.0 * delta);
  const double hc = (h[1][2] - h[1][0]) / (2.0 * delta);
  const double hbb = (h[2][1] - 2.0 * h[1][1] + h[0][1]) / (delta * delta);
  const double hcc = (h[1][2] - 2.0 * h[1][1] + h[1][0]) / (delta * delta);
  const double hbc = (h[2][2] + h[0][0] - h[2][0] - h[0][2]) / (4.0 * delta * delta);
  const double K = (hbb + hcc + hbb * hc * hc + hcc * hb * hb - 2.0 * hbc * hb * hc) /
                   std::pow(1.0 + hb * hb + hc * hc, 1.5);
  *kappa = -static_cast<double>(orient) * K;
  return true;
}

double ghost_height_flat(double h0, double delta, double theta, double alpha) {
  if (!(theta > 0.0) || !(theta < M_PI))
    throw std::invalid_argument("ghost_height_flat: theta must lie in (0, pi)");
  if (std::abs(std::cos(theta)) <= 1e-15) return h0;
  const double denom = std::tan(theta) * std::cos(alpha);
  if (!std::isfinite(denom) || std::abs(denom) < 1e-12)
    throw std::domain_error("ghost_height_flat: interface parallel to the height axis");
  return h0 + delta / denom;
}

Vec3 contact_normal(const Vec3& n_s, const Vec3& tau_s, double theta) {
  if (std::abs(norm(n_s) - 1.0) > kOrthoTol || std::abs(norm(tau_s) - 1.0) > kOrthoTol ||
      std::abs(dot(n_s, tau_s)) > kOrthoTol)
    throw std::invalid_argument("contact_normal: n_s and tau_s must be orthonormal");
  return normalized(std::cos(theta) * n_s + std::sin(theta) * cross(tau_s, n_s));
}

bool contact_tangent(const Vec3& n_s, const Vec3& n_myc, Vec3* tau_s) {
  const Vec3 t = cross(n_s, n_myc);
  const double tn = norm(t);
  if (tn <= kOrthoTol) return false;
  *tau_s = t / tn;
  return true;
}

GhostFractions extend_ghost_fractions(const ScalarLattice& lat, double theta, int nthreads) {
  const LatticeSpec& spec = lat.spec;
  const long N = spec.cells();
  GhostFractions out;
  out.ce.assign(N, 0.0);
  out.is_set.assign(N, 0);

  std::vector<long> contacts;
  for (long ci = 0; ci < N; ++ci)
    if (is_contact_cell(lat, ci)) contacts.push_back(ci);
  std::vector<int32_t> slot(N, -1);
  for (size_t t = 0; t < contacts.size(); ++t) slot[contacts[t]] = static_cast<int32_t>(t);

  struct Donor {
    PlicPlane pl;
    double w = 0.0;
    bool ok = false;
  };
  std::vector<Donor> donors(contacts.size());
  parallel_for(static_cast<long>(contacts.size()), nthreads, [&](long b, long e) {
    for (long t = b; t < e; ++t) {
      const long ci = contacts[t];
      const CellPlane* cp = lat.cell_plane(ci);
      if (!cp) continue;
      Vec3 tau;
      if (!contact_tangent(cp->n, myc_normal(lat, ci), &tau)) continue;
      const Vec3 nl = contact_normal(cp->n, tau, theta);
      Donor& d = donors[t];
      d.pl = reconstruct_interface(*lat.fluid_poly(ci), nl, lat.c[ci]);
      d.w = lat.cs[ci] * (1.0 - lat.cs[ci]) * lat.c[ci] * (1.0 - lat.c[ci]);
      d.ok = d.w > 0.0;
    }
  });

  parallel_for(N, nthreads, [&](long b, long e) {
    for (long ci = b; ci < e; ++ci) {
      if (lat.kind[ci] != kCellSolid) continue;
      int i, j, k;
      spec.cell_coords(ci, &i, &j, &k);
      double wsum = 0.0, csum = 0.0;
      for (int dk = -1; dk <= 1; ++dk)
        for (int dj = -1; dj <= 1; ++dj)
          for (int di = -1; di <= 1; ++di) {
            if (di == 0 && dj == 0 && dk == 0) continue;
            if (!spec.in_domain(i + di, j + dj, k + dk)) continue;
            const int32_t s = slot[spec.cell_index(i + di, j + dj, k + dk)];
            if (s < 0 || !donors[s].ok) continue;
            const Donor& d = donors[s];
            const Vec3 off{static_cast<double>(-di), static_cast<double>(-dj),
                           static_cast<double>(-dk)};
            const double ce =
                truncated_volume(whole_cell(), {d.pl.n, d.pl.gamma - dot(d.pl.n, off)});
            wsum += d.w;
            csum += d.w * ce;
          }
      if (wsum > 0.0) {
        out.ce[ci] = csum / wsum;
        out.is_set[ci] = 1;
      }
    }
  });
  return out;
}

double ParaboloidFit::eval(double u, double v) const {
  const double du = u - origin_u, dv = v - origin_v;
  return origin_h + q[0] * du * du + q[1] * dv * dv + q[2] * du * dv + q[3] * du + q[4] * dv +
         q[5];
}

Vec3 ParaboloidFit::surface_normal(double u, double v) const {
  const double du = u - origin_u, dv = v - origin_v;
  const double hu = 2.0 * q[0] * du + q[2] * dv + q[3];
  const double hv = 2.0 * q[1] * dv + q[2] * du + q[4];
  Vec3 n;
  n[axis] = static_cast<double>(orient);
  n[(axis + 1) % 3] = -static_cast<double>(orient) * hu;
  n[(axis + 2) % 3] = -static_cast<double>(orient) * hv;
  return normalized(n);
}

double ParaboloidFit::curvature(double u, double v) const {
  const double du = u - origin_u, dv = v - origin_v;
  const double hu = 2.0 * q[0] * du + q[2] * dv + q[3];
  const double hv = 2.0 * q[1] * dv + q[2] * du + q[4];
  const double huu = 2.0 * q[0], hvv = 2.0 * q[1], huv = q[2];
  const double K = (huu + hvv + huu * hv * hv + hvv * hu * hu - 2.0 * huv * hu * hv) /
                   std::pow(1.0 + hu * hu + hv * hv, 1.5);
  return -static_cast<double>(orient) * K;
}

ParaboloidFit prefit_paraboloid(std::span<const HeightSample> samples,
                                const HeightSample& anchor, const Vec3& contact, int axis,
                                int orient) {
  ParaboloidFit fit;
  fit.axis = axis;
  fit.orient = static_cast<int8_t>(orient);
  const int ub = (axis + 1) % 3, vb = (axis + 2) % 3;
  fit.origin_u = contact[ub];
  fit.origin_v = contact[vb];
  fit.origin_h = contact[axis];

  const double fu = anchor.u - fit.origin_u, fv = anchor.v - fit.origin_v;
  std::vector<std::array<double, 3>> pts;
  for (const HeightSample& s : samples) {
    if (!s.valid() || s.axis != axis || static_cast<int>(s.orient) != orient) continue;
    const double du = s.u - fit.origin_u, dv = s.v - fit.origin_v;
    if (fu * du + fv * dv <= 0.0) continue;
    pts.push_back({du, dv, s.h - fit.origin_h});
  }
  if (pts.size() < 6) return fit;

  double L = 0.0;
  for (const auto& p : pts) L = std::max({L, std::abs(p[0]), std::abs(p[1])});
  if (L <= 0.0) return fit;

  Eigen::MatrixXd A(static_cast<Eigen::Index>(pts.size()), 6);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(pts.size()));
  for (size_t r = 0; r < pts.size(); ++r) {
    const double u = pts[r][0] / L, v = pts[r][1] / L;
    const auto ri = static_cast<Eigen::Index>(r);
    A(ri, 0) = u * u;
    A(ri, 1) = v * v;
    A(ri, 2) = u * v;
    A(ri, 3) = u;
    A(ri, 4) = v;
    A(ri, 5) = 1.0;
    rhs(ri) = pts[r][2] / L;
  }
  const Eigen::VectorXd x =
      A.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rhs);
  if (!x.allFinite()) return fit;
  fit.q = {x(0) / L, x(1) / L, x(2) / L, x(3), x(4), x(5) * L};
  double rmax = 0.0;
  for (const auto& p : pts)
    rmax = std::max(rmax,
                    std::abs(fit.eval(fit.origin_u + p[0], fit.origin_v + p[1]) -
                             (fit.origin_h + p[2])));
  fit.residual = rmax;
  fit.converged = true;
  return fit;
}

ParaboloidFit fit_contact_paraboloid(const ParaboloidFit& prefit, const HeightSample& anchor,
                                     const Vec3& contact, double theta, const Vec3& n_s,
                                     const Vec3& inplane_dir, double delta) {
  ParaboloidFit fit = prefit;
  fit.converged = false;
  fit.residual = HUGE_VAL;
  if (!prefit.converged || !(delta > 0.0)) return fit;
  const int axis = prefit.axis;
  const int ub = (axis + 1) % 3, vb = (axis + 2) % 3;
  fit.origin_u = contact[ub];
  fit.origin_v = contact[vb];
  fit.origin_h = contact[axis];

  double bu = inplane_dir[ub], bv = inplane_dir[vb];
  const double bn = std::hypot(bu, bv);
  if (bn <= kOrthoTol) return fit;
  bu /= bn;
  bv /= bn;
  const double fu = anchor.u - fit.origin_u, fv = anchor.v - fit.origin_v;
  double d = bu * fu + bv * fv;
  if (d < 0.0) {
    bu = -bu;
    bv = -bv;
    d = -d;
  }
  const double ru = -bv, rv = bu;

  // Interpolation points in units of delta relative to the contact point: the
  // anchor plus four points sampled off the prefit surface.
  std::array<double, 5> pu, pv, ph;
  int t = 0;
  for (double dist : {d, d + delta})
    for (double off : {0.5 * delta, -0.5 * delta}) {
      const double du = dist * bu + off * ru, dv = dist * bv + off * rv;
      pu[t] = du / delta;
      pv[t] = dv / delta;
      ph[t] =
          (prefit.eval(fit.origin_u + du, fit.origin_v + dv) - fit.origin_h) / delta;
      ++t;
    }
  pu[4] = fu / delta;
  pv[4] = fv / delta;
  ph[4] = (anchor.h - fit.origin_h) / delta;

  const double s = static_cast<double>(prefit.orient);
  const double na = n_s[axis], nb = n_s[ub], nc = n_s[vb];
  const double ct = std::cos(theta);

  using Vec6 = Eigen::Matrix<double, 6, 1>;
  using Mat6 = Eigen::Matrix<double, 6, 6>;

  auto eval_res = [&](const Vec6& x, Vec6& r) {
    for (int i = 0; i < 5; ++i)
      r(i) = x(0) * pu[i] * pu[i] + x(1) * pv[i] * pv[i] + x(2) * pu[i] * pv[i] + x(3) * pu[i] +
             x(4) * pv[i] + x(5) - ph[i];
    const double qn = std::sqrt(1.0 + x(3) * x(3) + x(4) * x(4));
    r(5) = s * (na - x(3) * nb - x(4) * nc) / qn - ct;
  };

  Mat6 J = Mat6::Zero();
  for (int i = 0; i < 5; ++i) {
    J(i, 0) = pu[i] * pu[i];
    J(i, 1) = pv[i] * pv[i];
    J(i, 2) = pu[i] * pv[i];
    J(i, 3) = pu[i];
    J(i, 4) = pv[i];
    J(i, 5) = 1.0;
  }

  Vec6 x0;
  x0 << prefit.q[0] * delta, prefit.q[1] * delta, prefit.q[2] * delta, prefit.q[3], prefit.q[4],
      prefit.q[5] / delta;

  for (double damp : {1.0, 0.5, 0.25, 0.0}) {
    Vec6 x = x0;
    x(0) *= damp;
    x(1) *= damp;
    x(2) *= damp;
    Vec6 r;
    eval_res(x, r);
    double rn = r.cwiseAbs().maxCoeff();
    if (!std::isfinite(rn)) continue;
    for (int it = 0; it < 50 && rn > kFitTol; ++it) {
      const double qn = std::sqrt(1.0 + x(3) * x(3) + x(4) * x(4));
      const double nv = s * (na - x(3) * nb - x(4) * nc);
      J(5, 3) = -s * nb / qn - nv * x(3) / (qn * qn * qn);
      J(5, 4) = -s * nc / qn - nv * x(4) / (qn * qn * qn);
      const Eigen::FullPivLU<Mat6> lu(J);
      if (!lu.isInvertible()) break;
      const Vec6 dx = lu.solve(-r);
      if (!dx.allFinite()) break;
      double step = 1.0;
      Vec6 xn, rr;
      double rnn = HUGE_VAL;
      for (int half = 0; half <= 8; ++half) {
        xn = x + step * dx;
        eval_res(xn, rr);
        rnn = rr.cwiseAbs().maxCoeff();
        if (std::isfinite(rnn) && rnn < rn) break;
        step *= 0.5;
      }
      if (!(rnn < rn)) break;
      x = xn;
      r = rr;
      rn = rnn;
    }
    if (rn <= kFitTol) {
      fit.q = {x(0) / delta, x(1) / delta, x(2) / delta, x(3), x(4), x(5) * delta};
      fit.residual = rn;
      fit.converged = true;
      return fit;
    }
  }
  return fit;
}

HfChoice select_hf_mode(const ScalarLattice& lat, long ci, double theta) {
  const ModeInternals m = choose_mode(lat, ci, theta);
  if (m.ok) return m.choice;
  const CellPlane* cp = lat.cell_plane(ci);
  int av = 0;
  if (cp)
    for (int t = 1; t < 3; ++t)
      if (std::abs(cp->n[t]) > std::abs(cp->n[av])) av = t;
  return {HfMode::kVertical, av, 1};
}

double contact_angle_of(const ScalarLattice& lat, const Reconstruction& rec, long ci) {
  const CellPlane* cp = lat.cell_plane(ci);
  if (!cp || !rec.interfacial[ci])
    throw std::invalid_argument("contact_angle_of: cell is not a mixed interfacial cell");
  return std::acos(std::clamp(dot(rec.plane[ci].n, cp->n), -1.0, 1.0));
}

double resolve_hysteresis(const ScalarLattice& lat, long ci, const HysteresisWindow& window,
                          const Vec3& tau_s, const Vec3& prev_contact, double c_new) {
  const double lo = window.theta_rec, hi = window.theta_adv;
  if (!(hi > lo)) return lo;
  const CellPlane* cp = lat.cell_plane(ci);
  const ConvexPolyhedron* poly = lat.fluid_poly(ci);
  if (!cp || !poly) return lo;
  const Vec3 ns = cp->n;
  int i, j, k;
  lat.spec.cell_coords(ci, &i, &j, &k);
  const Vec3 cc = lat.spec.cell_center(i, j, k);

  auto point_at = [&](double th, Vec3* p) {
    const Vec3 nl = contact_normal(ns, tau_s, th);
    const PlicPlane pl = reconstruct_interface(*poly, nl, c_new);
    for (const SectionEdge& e : plane_section(*poly, pl.n, pl.gamma))
      if (e.tag == kTagSolid) {
        *p = cc + lat.spec.delta * (0.5 * (e.a + e.b));
        return true;
      }
    return false;
  };

  Vec3 plo, phi;
  const bool blo = point_at(lo, &plo);
  const bool bhi = point_at(hi, &phi);
  if (!blo && !bhi) return lo;
  if (!blo) return hi;
  if (!bhi) return lo;

  const double tol = 1e-3 * lat.spec.delta;
  const Vec3 dirv = phi - plo;
  const double dn = norm(dirv);
  if (dn <= tol)
    return norm(plo - prev_contact) <= norm(phi - prev_contact) ? lo : hi;
  const Vec3 dir = dirv / dn;
  const double slo = dot(plo - prev_contact, dir);
  const double shi = dot(phi - prev_contact, dir);
  if (slo * shi > 0.0) return std::abs(slo) <= std::abs(shi) ? lo : hi;

  double a = lo, b = hi, sa = slo;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (a + b);
    Vec3 pm;
    if (!point_at(mid, &pm)) break;
    if (norm(pm - prev_contact) <= tol) return mid;
    const double sm = dot(pm - prev_contact, dir);
    if (sa * sm <= 0.0) {
      b = mid;
    } else {
      a = mid;
      sa = sm;
    }
  }
  return 0.5 * (a + b);
}

ContactField apply_contact_model(const ScalarLattice& lat, const ContactOptions& opt) {
  if (!(opt.theta > 0.0) || !(opt.theta < M_PI))
    throw std::invalid_argument("apply_contact_model: theta must lie in (0, pi)");
  const LatticeSpec& spec = lat.spec;
  const long N = spec.cells();

  std::vector<long> contacts;
  for (long ci = 0; ci < N; ++ci)
    if (is_contact_cell(lat, ci)) contacts.push_back(ci);
  std::vector<int32_t> slot(N, -1);
  for (size_t t = 0; t < contacts.size(); ++t) slot[contacts[t]] = static_cast<int32_t>(t);
  const long M = static_cast<long>(contacts.size());

  ContactField out;
  out.cells.reserve(contacts.size());

  if (opt.paraboloid) {
    struct Rec {
      ModeInternals mi;
      HeightSample near[3][3];
      ParaboloidFit fit;
      bool fit_ok = false;
      bool fallback = false;
      bool has_normal = false;
      Vec3 nimp{};
      bool has_kappa = false;
      double kappa = 0.0;
    };
    std::vector<Rec> recs(contacts.size());

    parallel_for(M, opt.nthreads, [&](long b, long e) {
      for (long t = b; t < e; ++t) {
        Rec& R = recs[t];
        const long ci = contacts[t];
        R.mi = choose_mode(lat, ci, opt.theta);
        if (!R.mi.ok) continue;
        const HeightSample& own = R.mi.own;
        if (!own.valid() || !own.has_contact) {
          R.fallback = true;
          continue;
        }
        const int a = R.mi.choice.axis;
        const int orient = R.mi.choice.orient;
        const int ub = (a + 1) % 3, vb = (a + 2) % 3;
        int bc[3];
        spec.cell_coords(ci, &bc[0], &bc[1], &bc[2]);

        auto column_sample = [&](int db, int dc) -> HeightSample {
          if (db == 0 && dc == 0) return own;
          int q[3] = {bc[0], bc[1], bc[2]};
          q[ub] += db;
          q[vb] += dc;
          if (!spec.in_domain(q[0], q[1], q[2])) return {};
          const HeightSample s = column_march(lat, q, a);
          if (s.valid() && static_cast<int>(s.orient) == orient) return s;
          if (R.mi.choice.mode == HfMode::kVertical)
            return column_tilted(lat, q, a, orient, opt.theta);
          return {};
        };

        for (int db = -1; db <= 1; ++db)
          for (int dc = -1; dc <= 1; ++dc) R.near[db + 1][dc + 1] = column_sample(db, dc);

        const Vec3 inplane =
            R.mi.choice.mode == HfMode::kHorizontal ? R.mi.ns : R.mi.nlt;
        std::vector<HeightSample> sam;
        for (int db = -1; db <= 1; ++db)
          for (int dc = -1; dc <= 1; ++dc)
            if (R.near[db + 1][dc + 1].valid()) sam.push_back(R.near[db + 1][dc + 1]);

        ParaboloidFit fit;
        ParaboloidFit pre = prefit_paraboloid(sam, own, own.contact, a, orient);
        if (pre.converged)
          fit = fit_contact_paraboloid(pre, own, own.contact, opt.theta, R.mi.ns, inplane,
                                       spec.delta);
        if (!fit.converged) {
          for (int db = -2; db <= 2; ++db)
            for (int dc = -2; dc <= 2; ++dc) {
              if (std::max(std::abs(db), std::abs(dc)) != 2) continue;
              const HeightSample s = column_sample(db, dc);
              if (s.valid()) sam.push_back(s);
            }
          pre = prefit_paraboloid(sam, own, own.contact, a, orient);
          if (pre.converged)
            fit = fit_contact_paraboloid(pre, own, own.contact, opt.theta, R.mi.ns, inplane,
                                         spec.delta);
        }
        if (fit.converged) {
          R.fit = fit;
          R.fit_ok = true;
        } else {
          R.fallback = true;
        }
      }
    });

    parallel_for(M, opt.nthreads, [&](long b, long e) {
      for (long t = b; t < e; ++t) {
        Rec& R = recs[t];
        const long ci = contacts[t];
        if (!R.fit_ok) {
          if (R.fallback && R.mi.ok) {
            R.nimp = R.mi.nlt;
            R.has_normal = true;
          }
          continue;
        }
        const int a = R.mi.choice.axis;
        const int orient = R.mi.choice.orient;
        const int ub = (a + 1) % 3, vb = (a + 2) % 3;
        int bc[3];
        spec.cell_coords(ci, &bc[0], &bc[1], &bc[2]);
        const Vec3 cc = spec.cell_center(bc[0], bc[1], bc[2]);

        // Nearest compatible fit owned by a contact cell of the neighboring
        // column; used to complete the stencil where no full-cell sample
        // exists.
        auto column_fit_eval = [&](int db, int dc, double u, double v, bool* got) {
          for (int dd = 0; dd <= kHeightHalfWidth; ++dd)
            for (int sgn : {-1, 1}) {
              if (dd == 0 && sgn > 0) continue;
              int q[3] = {bc[0], bc[1], bc[2]};
              q[ub] += db;
              q[vb] += dc;
              q[a] += sgn * dd;
              if (!spec.in_domain(q[0], q[1], q[2])) continue;
              const int32_t sl = slot[spec.cell_index(q[0], q[1], q[2])];
              if (sl < 0) continue;
              const Rec& D = recs[sl];
              if (!D.fit_ok || D.fit.axis != a ||
                  static_cast<int>(D.fit.orient) != orient)
                continue;
              *got = true;
              return D.fit.eval(u, v);
            }
          *got = false;
          return 0.0;
        };

        double h[3][3];
        for (int db = -1; db <= 1; ++db)
          for (int dc = -1; dc <= 1; ++dc) {
            const double u = cc[ub] + db * spec.delta;
            const double v = cc[vb] + dc * spec.delta;
            if (db == 0 && dc == 0) {
              h[1][1] = R.fit.eval(u, v);
              continue;
            }
            const HeightSample& s = R.near[db + 1][dc + 1];
            if (s.valid() && s.kind == HeightKind::kFullCell) {
              h[db + 1][dc + 1] = s.h;
              continue;
            }
            bool got = false;
            const double hfit = column_fit_eval(db, dc, u, v, &got);
            h[db + 1][dc + 1] = got ? hfit : R.fit.eval(u, v);
          }
        double kap = 0.0;
        if (stencil_curvature(h, spec.delta, orient, &kap))
          R.kappa = kap;
        else
          R.kappa = R.fit.curvature(cc[ub], cc[vb]);
        R.has_kappa = true;
        R.nimp = R.fit.surface_normal(R.mi.own.contact[ub], R.mi.own.contact[vb]);
        R.has_normal = true;
      }
    });

    for (long t = 0; t < M; ++t) {
      const Rec& R = recs[t];
      ContactCell cell;
      cell.ci = contacts[t];
      cell.degenerate = !R.mi.ok;
      cell.mode = R.mi.choice.mode;
      cell.axis = R.mi.choice.axis;
      cell.orient = R.mi.choice.orient;
      cell.fit_ok = R.fit_ok;
      cell.fallback = R.fallback;
      cell.has_normal = R.has_normal;
      cell.n_imposed = R.nimp;
      cell.has_kappa = R.has_kappa;
      cell.kappa = R.kappa;
      if (R.mi.own.valid() && R.mi.own.has_contact) {
        cell.has_contact = true;
        cell.contact = R.mi.own.contact;
      }
      out.cells.push_back(cell);
      if (cell.has_normal) out.overrides.push_back({cell.ci, cell.n_imposed});
    }
    return out;
  }

  // Plane-extension path: column sums over a virtual fraction field whose
  // solid cells carry the extended fractions and whose contact cells carry
  // their own theta-rotated plane truncated over the full cube.
  const GhostFractions ghosts = extend_ghost_fractions(lat, opt.theta, opt.nthreads);

  struct LinRec {
    ModeInternals mi;
    bool has_plane = false;
    PlicPlane pl;
    int axis = 0;
    int orient = 0;
    bool fallback = false;
    bool has_normal = false;
    Vec3 nimp{};
    bool has_kappa = false;
    double kappa = 0.0;
  };
  std::vector<LinRec> recs(contacts.size());

  parallel_for(M, opt.nthreads, [&](long b, long e) {
    for (long t = b; t < e; ++t) {
      LinRec& R = recs[t];
      const long ci = contacts[t];
      R.mi = choose_mode(lat, ci, opt.theta);
      const Vec3 nrm = R.mi.ok ? R.mi.nlt : myc_normal(lat, ci);
      if (norm(nrm) < 0.5) continue;
      R.pl = reconstruct_interface(*lat.fluid_poly(ci), nrm, lat.c[ci]);
      R.has_plane = true;
    }
  });

  auto virtual_at = [&](int i, int j, int k, bool* ok) -> double {
    const long ci = spec.cell_index(i, j, k);
    switch (lat.kind[ci]) {
      case kCellFluid:
        *ok = true;
        return lat.c[ci];
      case kCellSolid:
        *ok = ghosts.is_set[ci] != 0;
        return ghosts.ce[ci];
      default: {
        if (lat.c[ci] >= lat.cs[ci] - kFullTol) {
          *ok = true;
          return 1.0;
        }
        if (lat.c[ci] <= kFullTol) {
          *ok = true;
          return 0.0;
        }
        const int32_t sl = slot[ci];
        if (sl >= 0 && recs[sl].has_plane) {
          *ok = true;
          return truncated_volume(whole_cell(), recs[sl].pl);
        }
        *ok = false;
        return 0.0;
      }
    }
  };

  parallel_for(M, opt.nthreads, [&](long b, long e) {
    for (long t = b; t < e; ++t) {
      LinRec& R = recs[t];
      if (!R.mi.ok) continue;
      const long ci = contacts[t];
      const Vec3& nl = R.mi.nlt;
      int a = 0;
      for (int w = 1; w < 3; ++w)
        if (std::abs(nl[w]) > std::abs(nl[a])) a = w;
      const int o = nl[a] > 0.0 ? 1 : (nl[a] < 0.0 ? -1 : 0);
      if (o == 0) continue;
      R.axis = a;
      R.orient = o;
      const int ub = (a + 1) % 3, vb = (a + 2) % 3;
      int bc[3];
      spec.cell_coords(ci, &bc[0], &bc[1], &bc[2]);

      double h[3][3];
      bool all = true;
      for (int db = -1; db <= 1 && all; ++db)
        for (int dc = -1; dc <= 1 && all; ++dc) {
          int q[3] = {bc[0], bc[1], bc[2]};
          q[ub] += db;
          q[vb] += dc;
          if (q[ub] < 0 || q[ub] >= spec.n[ub] || q[vb] < 0 || q[vb] >= spec.n[vb]) {
            all = false;
            break;
          }
          const int i0 = q[a];
          const int wlo = std::max(0, i0 - kHeightHalfWidth);
          const int whi = std::min(spec.n[a] - 1, i0 + kHeightHalfWidth);
          double col[2 * kHeightHalfWidth + 1];
          bool okc[2 * kHeightHalfWidth + 1];
          for (int s2 = wlo; s2 <= whi; ++s2) {
            int w[3] = {q[0], q[1], q[2]};
            w[a] = s2;
            col[s2 - wlo] = virtual_at(w[0], w[1], w[2], &okc[s2 - wlo]);
          }
          if (!okc[i0 - wlo]) {
            all = false;
            break;
          }
          int rlo = i0, rhi = i0;
          while (rlo > wlo && okc[rlo - 1 - wlo]) --rlo;
          while (rhi < whi && okc[rhi + 1 - wlo]) ++rhi;
          if (rhi - rlo < 1) {
            all = false;
            break;
          }
          const double vlo = col[rlo - wlo], vhi = col[rhi - wlo];
          int oc = 0;
          if (vlo >= 1.0 - 1e-9 && vhi <= 1e-9)
            oc = 1;
          else if (vlo <= 1e-9 && vhi >= 1.0 - 1e-9)
            oc = -1;
          if (oc != o) {
            all = false;
            break;
          }
          double sum = 0.0;
          for (int s2 = rlo; s2 <= rhi; ++s2) sum += col[s2 - wlo];
          int qv[3] = {q[0], q[1], q[2]};
          qv[a] = o > 0 ? rlo : rhi + 1;
          const double base = spec.vertex(qv[0], qv[1], qv[2])[a];
          h[db + 1][dc + 1] = o > 0 ? base + spec.delta * sum : base - spec.delta * sum;
        }

      if (all) {
        const double hb = (h[2][1] - h[0][1]) / (2.0 * spec.delta);
        const double hc = (h[1][2] - h[1][0]) / (2.0 * spec.delta);
        Vec3 n;
        n[a] = static_cast<double>(o);
        n[ub] = -static_cast<double>(o) * hb;
        n[vb] = -static_cast<double>(o) * hc;
        R.nimp = normalized(n);
        R.has_normal = true;
        double kap = 0.0;
        if (stencil_curvature(h, spec.delta, o, &kap)) {
          R.has_kappa = true;
          R.kappa = kap;
        }
      } else {
        R.nimp = nl;
        R.has_normal = true;
        R.fallback = true;
      }
    }
  });

  for (long t = 0; t < M; ++t) {
    const LinRec& R = recs[t];
    ContactCell cell;
    cell.ci = contacts[t];
    cell.degenerate = !R.mi.ok;
    cell.mode = HfMode::kHorizontal;
    cell.axis = R.axis;
    cell.orient = static_cast<int8_t>(R.orient);
    cell.fallback = R.fallback;
    cell.has_normal = R.has_normal;
    cell.n_imposed = R.nimp;
    cell.has_kappa = R.has_kappa;
    cell.kappa = R.kappa;
    if (R.mi.own.valid() && R.mi.own.has_contact) {
      cell.has_contact = true;
      cell.contact = R.mi.own.contact;
    }
    out.cells.push_back(cell);
    if (cell.has_normal) out.overrides.push_back({cell.ci, cell.n_imposed});
  }
  return out;
}

}  // namespace vofeb
