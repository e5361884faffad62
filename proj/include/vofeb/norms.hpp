#pragma once

#include <optional>
#include <vector>

#include "vofeb/lattice.hpp"

namespace vofeb {

// Error norms of a run relative to its initial state. l2 and linf are taken
// over the mixed cells adjacent to the solid (absent when there are none);
// ev compares the liquid total against step 0; eshape1 integrates |c - c0|
// over every cell and eshape2 over the cells that started as three-phase
// contact cells (mixed with an interface), each normalized by the initial
// liquid content of its own cell set.
struct Norms {
  std::optional<double> l2;
  std::optional<double> linf;
  double ev = 0.0;
  double eshape1 = 0.0;
  std::optional<double> eshape2;
  double min_c = 0.0;
  double max_over = 0.0;  // max (c - c_s)
};

// Frozen view of the initial state against which norms are measured.
class NormContext {
 public:
  NormContext(const ScalarLattice& initial, int nthreads);

  Norms measure(const ScalarLattice& lat, int nthreads) const;

  double initial_total() const { return sum0_; }
  long mixed_count() const { return static_cast<long>(mixed_.size()); }
  long contact_count() const { return static_cast<long>(contact_.size()); }

 private:
  std::vector<double> c0_;
  std::vector<long> mixed_;
  std::vector<long> contact_;
  double sum0_ = 0.0;
  double contact_den_ = 0.0;
};

}  // namespace vofeb
