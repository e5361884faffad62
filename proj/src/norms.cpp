#include "vofeb/norms.hpp"

#include <cmath>
#include <stdexcept>

namespace vofeb {

NormContext::NormContext(const ScalarLattice& initial, int nthreads) {
  const long N = initial.spec.cells();
  c0_ = initial.c;
  sum0_ = chunked_sum(N, nthreads, [&](long lo, long hi) {
    double s = 0.0;
    for (long ci = lo; ci < hi; ++ci) s += c0_[ci];
    return s;
  });
  for (long ci = 0; ci < N; ++ci) {
    if (initial.kind[ci] != kCellMixed) continue;
    mixed_.push_back(ci);
    if (c0_[ci] > 0.0 && c0_[ci] < initial.cs[ci]) {
      contact_.push_back(ci);
      contact_den_ += c0_[ci];
    }
  }
}

Norms NormContext::measure(const ScalarLattice& lat, int nthreads) const {
  const long N = lat.spec.cells();
  if (static_cast<size_t>(N) != c0_.size())
    throw std::invalid_argument("norms: lattice does not match the initial state");
  Norms out;

  if (!mixed_.empty()) {
    double sq = 0.0, worst = 0.0;
    for (long ci : mixed_) {
      const double d = lat.cs[ci] - lat.c[ci];
      sq += d * d;
      worst = std::max(worst, std::abs(d));
    }
    out.l2 = std::sqrt(sq / static_cast<double>(mixed_.size()));
    out.linf = worst;
  }

  const double total = chunked_sum(N, nthreads, [&](long lo, long hi) {
    double s = 0.0;
    for (long ci = lo; ci < hi; ++ci) s += lat.c[ci];
    return s;
  });
  out.ev = sum0_ > 0.0 ? std::abs(total - sum0_) / sum0_ : 0.0;

  const double dev1 = chunked_sum(N, nthreads, [&](long lo, long hi) {
    double s = 0.0;
    for (long ci = lo; ci < hi; ++ci) s += std::abs(lat.c[ci] - c0_[ci]);
    return s;
  });
  out.eshape1 = sum0_ > 0.0 ? dev1 / sum0_ : 0.0;

  if (contact_den_ > 0.0) {
    double dev2 = 0.0;
    for (long ci : contact_) dev2 += std::abs(lat.c[ci] - c0_[ci]);
    out.eshape2 = dev2 / contact_den_;
  }

  out.min_c = -chunked_max(N, nthreads, [&](long lo, long hi) {
    double m = -HUGE_VAL;
    for (long ci = lo; ci < hi; ++ci) m = std::max(m, -lat.c[ci]);
    return m;
  });
  out.max_over = chunked_max(N, nthreads, [&](long lo, long hi) {
    double m = -HUGE_VAL;
    for (long ci = lo; ci < hi; ++ci) m = std::max(m, lat.c[ci] - lat.cs[ci]);
    return m;
  });
  return out;
}

}  // namespace vofeb
