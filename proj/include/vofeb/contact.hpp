#pragma once

#include <array>
#include <span>
#include <vector>

#include "vofeb/lattice.hpp"
#include "vofeb/normals.hpp"

namespace vofeb {

enum class HeightKind : uint8_t {
  kInvalid = 0,
  kFullCell,      // facet spans the full cell cross-section; anchor at the cell center
  kPartialFluid,  // facet clipped by the solid; anchor at the facet centroid
  kInterpolated,  // evaluated from a fitted surface at a cell center
  kGhost,         // extrapolated into a column with no interface of its own
};

// One column's interface location for a given height axis. h is the world
// coordinate of the reconstructed facet centroid along that axis; (u, v) are
// its world coordinates along axes (axis+1)%3 and (axis+2)%3. orient is +1
// when the liquid occupies the low-h side of the column and -1 when the high
// side. When the facet meets the embedded solid, `contact` holds the world
// midpoint of the intersection segment.
struct HeightSample {
  double h = 0.0;
  double u = 0.0, v = 0.0;
  int axis = 0;
  int8_t orient = 0;
  HeightKind kind = HeightKind::kInvalid;
  long cell = -1;
  bool has_contact = false;
  Vec3 contact{};

  bool valid() const { return kind != HeightKind::kInvalid; }
};

// Column-sum heights for every interfacial cell whose solid-free column along
// `axis` brackets the interface (one full and one empty end cell within the
// stencil reach). Unbounded or solid-crossed columns yield no sample.
std::vector<HeightSample> standard_heights(const ScalarLattice& lat, int axis, int nthreads);

// Interface sample for the column through `ci` along `axis`. Without `tilt`
// the column's liquid volume is marched cell by cell and a planar facet
// perpendicular to the axis is positioned inside the landing cell, so a
// solid-free column reproduces the standard column sum while a partially
// blocked one accounts for the displaced volume. With `tilt` (a unit
// into-the-gas normal) the facet is reconstructed inside `ci` itself from its
// own volume, which lets the facet reach the solid when an axis-perpendicular
// plane cannot. Invalid when the column does not bracket the interface.
HeightSample mixed_cell_height(const ScalarLattice& lat, long ci, int axis,
                               const Vec3* tilt = nullptr);

// Curvature from a 3x3 stencil of world heights (h[i][j] with i along
// (axis+1)%3 and j along (axis+2)%3), spacing delta, oriented as in
// HeightSample. Positive for a convex liquid body. Fails when adjacent
// heights differ by more than delta (the stencil straddles different
// interface branches).
bool stencil_curvature(const double h[3][3], double delta, int orient, double* kappa);

// Ghost height one cell inside a flat wall: h0 + delta / (tan(theta) cos(alpha)),
// with alpha the angle between the wall normal and the in-plane projection of
// the interface normal. theta = pi/2 returns h0 exactly. Throws
// std::domain_error when |tan(theta) cos(alpha)| < 1e-12 (the configuration
// needs the tilted-facet path) and std::invalid_argument for theta outside
// (0, pi).
double ghost_height_flat(double h0, double delta, double theta, double alpha);

// Interface normal obtained by rotating the solid normal about the
// contact-line tangent by theta (right-hand rule):
//   cos(theta) n_s + sin(theta) (tau_s x n_s).
// Inputs must be unit length and orthogonal within 1e-9 (throws
// std::invalid_argument otherwise); the result is unit with
// dot(result, n_s) = cos(theta).
Vec3 contact_normal(const Vec3& n_s, const Vec3& tau_s, double theta);

// Contact-line tangent n_s x n_myc, normalized. False when the two normals
// are parallel within 1e-9 (no tangent direction exists).
bool contact_tangent(const Vec3& n_s, const Vec3& n_myc, Vec3* tau_s);

// Liquid fractions extended into solid cells around contact lines: every
// contact cell reconstructs its interface with the theta-rotated normal and
// extends that plane over neighboring solid cells as a full-cube fraction.
// Solid cells reachable from several contact cells blend the candidates with
// donor weights c_s (1 - c_s) c (1 - c).
struct GhostFractions {
  std::vector<double> ce;  // per cell, meaningful where is_set
  std::vector<uint8_t> is_set;
};
GhostFractions extend_ghost_fractions(const ScalarLattice& lat, double theta, int nthreads);

// Quadric height surface about an expansion point (the contact point):
//   h(u, v) = origin_h + q0 du^2 + q1 dv^2 + q2 du dv + q3 du + q4 dv + q5
// with du = u - origin_u, dv = v - origin_v, all in world lengths.
struct ParaboloidFit {
  std::array<double, 6> q{};
  int axis = 0;
  int8_t orient = 0;
  double origin_u = 0.0, origin_v = 0.0, origin_h = 0.0;
  double residual = 0.0;
  bool converged = false;

  double eval(double u, double v) const;
  // Unit normal of the height surface, pointing into the gas.
  Vec3 surface_normal(double u, double v) const;
  // Mean curvature of the height surface, positive for a convex liquid body.
  double curvature(double u, double v) const;
};

// Least-squares quadric through the samples passing the same-side test
// [(anchor - contact) . (sample - contact) > 0 in the (u, v) plane]. Needs at
// least six admitted samples; `converged` is false otherwise. Samples whose
// axis or orientation disagree are ignored.
ParaboloidFit prefit_paraboloid(std::span<const HeightSample> samples,
                                const HeightSample& anchor, const Vec3& contact, int axis,
                                int orient);

// Constrained quadric through the anchor and four auxiliary points read off
// `prefit`, satisfying dot(surface_normal, n_s) = cos(theta) at the contact
// point. The auxiliary points sit at perpendicular distances d and d + delta
// from the contact line on the anchor side (d = the anchor's own distance)
// with in-line offsets of +-delta/2; the line direction comes from the
// in-plane projection of `inplane_dir` (the solid normal for
// axis-perpendicular facets, the theta-rotated normal for tilted ones).
// Solved by Newton iteration with step halving and damped restarts;
// `converged` reports the outcome and `residual` the final defect.
ParaboloidFit fit_contact_paraboloid(const ParaboloidFit& prefit, const HeightSample& anchor,
                                     const Vec3& contact, double theta, const Vec3& n_s,
                                     const Vec3& inplane_dir, double delta);

enum class HfMode : uint8_t { kHorizontal, kVertical };

struct HfChoice {
  HfMode mode = HfMode::kHorizontal;
  int axis = 0;
  int8_t orient = 0;
};

// Height mode for a contact cell: the axis carrying the largest component of
// the theta-rotated interface normal, provided its column brackets the
// interface and the axis-perpendicular facet reaches the solid; otherwise the
// tilted-facet mode along the axis closest to the solid normal.
HfChoice select_hf_mode(const ScalarLattice& lat, long ci, double theta);

// Angle between the cell's reconstructed interface normal and the solid
// normal, arccos(n_plic . n_s). The cell must be mixed and interfacial.
double contact_angle_of(const ScalarLattice& lat, const Reconstruction& rec, long ci);

struct HysteresisWindow {
  double theta_rec = 0.0;
  double theta_adv = 0.0;
};

// Contact angle within [theta_rec, theta_adv] whose interface reconstruction
// (normal rotated by the candidate angle about the fixed tangent, volume
// c_new) keeps the cell's contact point closest to prev_contact. Bisection
// stops once the displacement drops below 1e-3 delta or after 40 iterations;
// when even the window bounds cannot pin the point, the nearer bound is
// returned and the contact line moves.
double resolve_hysteresis(const ScalarLattice& lat, long ci, const HysteresisWindow& window,
                          const Vec3& tau_s, const Vec3& prev_contact, double c_new);

struct ContactOptions {
  double theta = 0.0;      // prescribed contact angle (radians)
  bool paraboloid = true;  // false: plane-extended column sums only
  int nthreads = 1;
};

struct ContactCell {
  long ci = -1;
  HfMode mode = HfMode::kHorizontal;
  int axis = 0;
  int8_t orient = 0;
  bool degenerate = false;  // no tangent direction; cell left to default normals
  bool fit_ok = false;      // constrained paraboloid converged
  bool fallback = false;    // plane-extension estimate used instead
  bool has_normal = false;
  Vec3 n_imposed{};  // unit normal imposed on the cell's reconstruction
  bool has_kappa = false;
  double kappa = 0.0;
  bool has_contact = false;
  Vec3 contact{};  // world contact point carrying the angle constraint
};

struct ContactField {
  std::vector<ContactCell> cells;
  std::vector<NormalOverride> overrides;
};

// Contact-angle enforcement over all contact cells (mixed cells whose fluid
// part holds both phases). Per cell: pick the height mode, assemble the
// neighborhood height samples, fit the constrained paraboloid (3x3 stencil,
// then 5x5, then the plane-extension fallback), impose the fitted surface
// normal at the contact point, and evaluate the curvature from the completed
// height stencil (fit-evaluated ghosts fill columns without samples). With
// `paraboloid` disabled, normals and curvatures come from plane-extended
// fractions summed through ghost cells instead.
ContactField apply_contact_model(const ScalarLattice& lat, const ContactOptions& opt);

}  // namespace vofeb
