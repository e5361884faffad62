#include "vofeb/velocity.hpp"

#include <algorithm>
#include <cmath>

namespace vofeb {

namespace {

}  // namespace

FaceVelocity sample_face_velocity(const LatticeSpec& spec,
                                  const std::function<Vec3(const Vec3&)>& field) {
  FaceVelocity v;
  v.spec = spec;
  for (int a = 0; a < 3; ++a) {
    auto d = spec.face_dims(a);
    v.u[a].resize(spec.face_count(a));
    for (int k = 0; k < d[2]; ++k)
      for (int j = 0; j < d[1]; ++j)
        for (int i = 0; i < d[0]; ++i)
          v.u[a][spec.face_index(a, i, j, k)] = field(spec.face_center(a, i, j, k))[a];
  }
  return v;
}

double max_open_face_speed(const ScalarLattice& lat, const FaceVelocity& vel) {
  double m = 0.0;
  for (int a = 0; a < 3; ++a)
    for (long fi = 0; fi < lat.spec.face_count(a); ++fi)
      if (lat.sf[a][fi] > 0.0) m = std::max(m, std::abs(vel.u[a][fi]));
  return m;
}

double cell_flux_divergence(const ScalarLattice& lat, const FaceVelocity& vel, long ci) {
  const LatticeSpec& spec = lat.spec;
  const double dA = spec.delta * spec.delta;
  int i, j, k;
  spec.cell_coords(ci, &i, &j, &k);
  double div = 0.0;
  for (int a = 0; a < 3; ++a) {
    int f[3] = {i, j, k};
    const long flo = spec.face_index(a, f[0], f[1], f[2]);
    f[a] += 1;
    const long fhi = spec.face_index(a, f[0], f[1], f[2]);
    div += (vel.u[a][fhi] * lat.sf[a][fhi] - vel.u[a][flo] * lat.sf[a][flo]) * dA;
  }
  return div;
}

double max_abs_flux_divergence(const ScalarLattice& lat, const FaceVelocity& vel) {
  double m = 0.0;
  for (long ci = 0; ci < lat.spec.cells(); ++ci)
    m = std::max(m, std::abs(cell_flux_divergence(lat, vel, ci)));
  return m;
}

ProjectionReport project_solenoidal(const ScalarLattice& lat, FaceVelocity& vel, double tol,
                                    int max_iterations, int nthreads) {
  const LatticeSpec& spec = lat.spec;
  const long N = spec.cells();
  const double delta = spec.delta;
  const double dA = delta * delta;

  // Cells couple to face neighbors through open interior faces; the diagonal
  // collects the aperture-length weights, and b holds the flux divergences.
  std::vector<double> diag(N, 0.0), b(N, 0.0);
  parallel_for(N, nthreads, [&](long lo, long hi) {
    for (long ci = lo; ci < hi; ++ci) {
      int i, j, k;
      spec.cell_coords(ci, &i, &j, &k);
      const int c[3] = {i, j, k};
      double bb = 0.0, dd = 0.0;
      for (int a = 0; a < 3; ++a) {
        int f[3] = {i, j, k};
        const long flo = spec.face_index(a, f[0], f[1], f[2]);
        f[a] += 1;
        const long fhi = spec.face_index(a, f[0], f[1], f[2]);
        const double slo = lat.sf[a][flo], shi = lat.sf[a][fhi];
        bb += (vel.u[a][fhi] * shi - vel.u[a][flo] * slo) * dA;
        if (c[a] > 0 && slo > 0.0) dd += slo * delta;
        if (c[a] + 1 < spec.n[a] && shi > 0.0) dd += shi * delta;
      }
      diag[ci] = dd;
      b[ci] = -bb;
    }
  });

  ProjectionReport rep;
  long ncoupled = 0;
  for (long ci = 0; ci < N; ++ci)
    if (diag[ci] > 0.0) ++ncoupled;
  if (ncoupled == 0) {
    rep.max_divergence = max_abs_flux_divergence(lat, vel);
    rep.converged = rep.max_divergence <= tol;
    return rep;
  }

  // Neumann problem: the right-hand side must be mean-free on the coupled
  // cells (it is, analytically, for closed domains; this removes round-off).
  const double bmean = chunked_sum(N, nthreads, [&](long lo, long hi) {
                         double s = 0.0;
                         for (long ci = lo; ci < hi; ++ci)
                           if (diag[ci] > 0.0) s += b[ci];
                         return s;
                       }) /
                       static_cast<double>(ncoupled);
  parallel_for(N, nthreads, [&](long lo, long hi) {
    for (long ci = lo; ci < hi; ++ci) b[ci] = diag[ci] > 0.0 ? b[ci] - bmean : 0.0;
  });

  auto apply_laplacian = [&](const std::vector<double>& x, std::vector<double>& y) {
    parallel_for(N, nthreads, [&](long lo, long hi) {
      for (long ci = lo; ci < hi; ++ci) {
        if (diag[ci] <= 0.0) {
          y[ci] = 0.0;
          continue;
        }
        int i, j, k;
        spec.cell_coords(ci, &i, &j, &k);
        double acc = diag[ci] * x[ci];
        for (int a = 0; a < 3; ++a) {
          int f[3] = {i, j, k};
          const long flo = spec.face_index(a, f[0], f[1], f[2]);
          f[a] += 1;
          const long fhi = spec.face_index(a, f[0], f[1], f[2]);
          int nb[3] = {i, j, k};
          if (nb[a] > 0 && lat.sf[a][flo] > 0.0) {
            nb[a] -= 1;
            acc -= lat.sf[a][flo] * delta * x[spec.cell_index(nb[0], nb[1], nb[2])];
            nb[a] += 1;
          }
          if (nb[a] + 1 < spec.n[a] && lat.sf[a][fhi] > 0.0) {
            nb[a] += 1;
            acc -= lat.sf[a][fhi] * delta * x[spec.cell_index(nb[0], nb[1], nb[2])];
            nb[a] -= 1;
          }
        }
        y[ci] = acc;
      }
    });
  };
  auto dot_coupled = [&](const std::vector<double>& x, const std::vector<double>& y) {
    return chunked_sum(N, nthreads, [&](long lo, long hi) {
      double s = 0.0;
      for (long ci = lo; ci < hi; ++ci) s += x[ci] * y[ci];
      return s;
    });
  };
  auto max_abs = [&](const std::vector<double>& x) {
    return chunked_max(N, nthreads, [&](long lo, long hi) {
      double m = 0.0;
      for (long ci = lo; ci < hi; ++ci) m = std::max(m, std::abs(x[ci]));
      return m;
    });
  };

  std::vector<double> psi(N, 0.0), r = b, z(N, 0.0), p(N, 0.0), Ap(N, 0.0);
  auto precondition = [&](const std::vector<double>& rr, std::vector<double>& zz) {
    parallel_for(N, nthreads, [&](long lo, long hi) {
      for (long ci = lo; ci < hi; ++ci) zz[ci] = diag[ci] > 0.0 ? rr[ci] / diag[ci] : 0.0;
    });
  };

  double rmax = max_abs(r);
  if (rmax > tol) {
    precondition(r, z);
    p = z;
    double rz = dot_coupled(r, z);
    for (int it = 1; it <= max_iterations; ++it) {
      apply_laplacian(p, Ap);
      const double pAp = dot_coupled(p, Ap);
      if (!(pAp > 0.0)) break;
      const double alpha = rz / pAp;
      parallel_for(N, nthreads, [&](long lo, long hi) {
        for (long ci = lo; ci < hi; ++ci) {
          psi[ci] += alpha * p[ci];
          r[ci] -= alpha * Ap[ci];
        }
      });
      rep.iterations = it;
      rmax = max_abs(r);
      if (rmax <= tol) break;
      precondition(r, z);
      const double rz_next = dot_coupled(r, z);
      const double beta = rz_next / rz;
      rz = rz_next;
      parallel_for(N, nthreads, [&](long lo, long hi) {
        for (long ci = lo; ci < hi; ++ci) p[ci] = z[ci] + beta * p[ci];
      });
    }

    for (int a = 0; a < 3; ++a) {
      auto d = spec.face_dims(a);
      for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
          for (int i = 0; i < d[0]; ++i) {
            int f[3] = {i, j, k};
            if (f[a] == 0 || f[a] == spec.n[a]) continue;
            const long fi = spec.face_index(a, i, j, k);
            if (!(lat.sf[a][fi] > 0.0)) continue;
            int cl[3] = {i, j, k};
            cl[a] -= 1;
            const double psi_lo = psi[spec.cell_index(cl[0], cl[1], cl[2])];
            const double psi_hi = psi[spec.cell_index(i, j, k)];
            vel.u[a][fi] -= (psi_hi - psi_lo) / delta;
          }
    }
  }

  rep.max_divergence = max_abs_flux_divergence(lat, vel);
  rep.converged = rep.max_divergence <= tol;
  return rep;
}

}  // namespace vofeb
