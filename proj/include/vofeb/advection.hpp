#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "vofeb/lattice.hpp"
#include "vofeb/normals.hpp"
#include "vofeb/polyhedron.hpp"
#include "vofeb/velocity.hpp"

namespace vofeb {

enum class AdvectScheme : uint8_t { kTraditional, kConservative, kRedistribution };

// Compressibility weight of the dilation term, adapted to cut cells: 1 when
// the cell holds more than half of its accessible volume, else 0.
double c_c_mixed(double c, double c_s);

// Width (cell units) of the band behind the cell face (axis, side) that
// sweeps exactly swept_volume of the donor's fluid region; the part of the
// nominal band blocked by the solid is recovered by extending the band
// inward. side=+1 is the face at +1/2. Empty when the demand exceeds the
// fluid volume (small-cell overflow).
std::optional<double> corrected_width(const ConvexPolyhedron& fluid, int axis, int side,
                                      double c_s, double swept_volume);

enum class RedistFluxRule : uint8_t {
  kZeroFlux,          // gas donor
  kFullColumn,        // liquid-filled donor: the whole swept band is liquid
  kCorrectedWidth,    // geometric flux with the solid-compensated width
  kPlainWidth,        // demand exceeds the fluid volume: plain width, no correction
  kTotalEvacuation,   // band spans the whole fluid extent: everything leaves
};

// Donor-side flux rule of the relaxed-timestep scheme. swept_volume and the
// widths are in cell units; sl_max is the largest edge fluid fraction of the
// donor along the sweep axis.
RedistFluxRule redistribution_flux_case(double c, double c_s, double swept_volume,
                                        double sl_max, double un_width, double unstar_width);

struct AdvectStats {
  long redistribution_transfers = 0;
  long widened_cells = 0;
  long clamped_cells = 0;
  double clamped_volume = 0.0;  // net c (cell-volume units) added by clamping, signed

  void merge(const AdvectStats& o) {
    redistribution_transfers += o.redistribution_transfers;
    widened_cells += o.widened_cells;
    clamped_cells += o.clamped_cells;
    clamped_volume += o.clamped_volume;
  }
};

// Sweep axes for one step; the order rotates across steps so no direction is
// privileged.
std::array<int, 3> sweep_order(long step);

// Largest stable step for the scheme: the band swept through any open face
// must stay below cfl times the accessible volume of either adjacent cell
// (relaxed to cfl cell widths for the redistribution scheme).
double max_stable_dt(const ScalarLattice& lat, const FaceVelocity& vel, AdvectScheme scheme,
                     double cfl);

// Number of equal steps covering `duration` without exceeding dt_max.
long steps_for_interval(double duration, double dt_max);

// One directional sweep: donor-cell geometric fluxes plus the dilation term
// with frozen weights q. The reconstruction must describe the current c.
// Throws on NaN, on c below -1e-10 under the conservative scheme, and on
// small-cell overflow, naming the offending cell. The traditional scheme
// clamps c into [0, 1] afterwards, recording the change in stats.
void sweep(ScalarLattice& lat, const Reconstruction& rec, const FaceVelocity& vel, double dt,
           int axis, AdvectScheme scheme, std::span<const double> q, int nthreads,
           AdvectStats* stats = nullptr);

// Pushes each over-filled cell's excess (and pulls each over-emptied cell's
// deficit) to downstream interfacial neighbors weighted by their remaining
// capacity (occupancy for deficits); widens to all face neighbors when no
// downstream candidate exists, and clamps with a record when none remains.
// Deterministic: violating cells are processed in ascending index order with
// gathered transfers applied per pass.
void redistribute_excess(ScalarLattice& lat, const FaceVelocity& vel, AdvectStats* stats,
                         int nthreads, int max_passes = 8);

// Optional per-sweep normal overrides (contact-angle enforcement).
using ContactHook = std::function<std::vector<NormalOverride>(const ScalarLattice&)>;

// One full step: three directional sweeps in rotating order, reconstruction
// refreshed before each, weights frozen at step start, plus a redistribution
// pass after each sweep under that scheme. The traditional scheme clamps c
// into [0, 1] after each sweep.
AdvectStats advance(ScalarLattice& lat, const FaceVelocity& vel, double dt, long step,
                    AdvectScheme scheme, int nthreads, const ContactHook& contact = {});

}  // namespace vofeb
