#pragma once

// Lattice spacetimes: a uniform (t, x) grid over a line or circle spatial
// section, a site-sampled Lorentzian metric, and the causal/region
// calculus used by the localization analysis.  Cones are counted at one
// cell per step, which bounds every physical cone once the grid passes
// its CFL check, so discrete causality statements hold exactly.

#include <cstdint>
#include <utility>
#include <vector>

#include "dynloc/linalg.hpp"

namespace dynloc {

enum class Topology { Line, Circle };

struct GridGeom {
  Topology topology = Topology::Circle;
  int nt = 0, nx = 0;
  double dt = 0, dx = 0;

  long sites() const { return static_cast<long>(nt) * nx; }
  long site(int n, int i) const { return static_cast<long>(n) * nx + i; }
  int wrap_x(int i) const {
    if (topology == Topology::Circle) return ((i % nx) + nx) % nx;
    return i;  // caller handles out-of-range on the line
  }
  // Pinned boundary cells on the line stand in for the field vanishing
  // toward spatial infinity; the circle has no such cells.
  int active_lo() const { return topology == Topology::Line ? 1 : 0; }
  int active_hi() const { return topology == Topology::Line ? nx - 2 : nx - 1; }
  int active_width() const { return active_hi() - active_lo() + 1; }
};

struct Spacetime {
  GridGeom geom;
  RMat g_tt, g_tx, g_xx;  // covariant metric at sites, nt x nx
  // Densitized inverse components sqrt|g| g^{ab} feeding the wave operator.
  RMat cap_a, cap_b, cap_c, vol;
};

Spacetime make_flat(const GridGeom& geom);
Spacetime make_spacetime(const GridGeom& geom, RMat g_tt, RMat g_tx, RMat g_xx);

// Signature (t timelike, x spacelike, det < 0 everywhere) and strict CFL.
void validate_spacetime(const Spacetime& st);

// Smallest factor by which dt could grow before some site breaks CFL.
double cfl_margin(const Spacetime& st);

struct Region {
  Topology topology = Topology::Circle;
  int nt = 0, nx = 0;
  std::vector<uint8_t> mask;  // nt*nx, 1 = inside

  bool at(int n, int i) const { return mask[static_cast<long>(n) * nx + i] != 0; }
  void set(int n, int i, bool v) { mask[static_cast<long>(n) * nx + i] = v ? 1 : 0; }
  long count() const;
  bool empty() const { return count() == 0; }
};

Region empty_region(const GridGeom& geom);
Region row_interval_region(const GridGeom& geom, int row, int lo, int hi);
// Double cone: rows row +- k keep [lo+k, hi-k] while nonempty.
Region diamond_region(const GridGeom& geom, int row, int lo, int hi);
// Full-width band of rows (active columns only on the line).
Region slab_region(const GridGeom& geom, int row_lo, int row_hi);

Region region_union(const Region& a, const Region& b);
Region region_intersect(const Region& a, const Region& b);
Region region_minus(const Region& a, const Region& b);
bool region_subset(const Region& inner, const Region& outer);
bool regions_disjoint(const Region& a, const Region& b);

// Spatial dilation by k cells (wraps on the circle, clips on the line).
Region dilate_space(const Region& r, int k);

// Chebyshev dilation by k cells in both time and space.
Region dilate_box(const Region& r, int k);

// One-step 4-neighbour dilation: the exact set of field cells whose
// values enter equations altered by a metric change inside r.
Region dilate_plus(const Region& r);

Region causal_future(const GridGeom& geom, const Region& r);
Region causal_past(const GridGeom& geom, const Region& r);
Region causal_hull(const GridGeom& geom, const Region& r);        // J(r)
Region causal_complement(const GridGeom& geom, const Region& r);  // M minus J(r)

// 4-neighbor components (x wraps on the circle).
std::vector<Region> connected_components(const Region& r);

// Columns of r on one row, as maximal intervals in active coordinates.
std::vector<std::pair<int, int>> row_intervals(const GridGeom& geom, const Region& r, int row);

// A compact piece of a Cauchy surface: disjoint closed column intervals on
// the reference row.  The full circle is the single interval [0, nx-1].
struct CompactBase {
  std::vector<std::pair<int, int>> intervals;

  bool is_empty() const { return intervals.empty(); }
};

Region base_region(const GridGeom& geom, const CompactBase& k, int row);
Region bowtie(const GridGeom& geom, const CompactBase& k, int row);  // J(K)

// Candidate compact bases inside O: per connected component of O, dyadic
// subintervals of the component footprint on the reference row (inset one
// cell so closures stay inside O; insets clip at pinned line edges), at
// subdivision levels 0..levels, plus all pairs whose one-cell dilations
// stay disjoint.  Monotonicity of the invariant-subspace map makes this
// family exhaust the union over arbitrary compact regions.
std::vector<CompactBase> enumerate_compact_bases(const GridGeom& geom, const Region& o,
                                                 int row, int levels);

// Metric perturbations: compactly supported bumps added to g.
enum class BumpKind { Conformal, Shear, TimeTime };

struct MetricBump {
  BumpKind kind = BumpKind::Conformal;
  double amplitude = 0;
  int t_center = 0, x_center = 0;
  int t_halfwidth = 1, x_halfwidth = 1;
};

struct Perturbation {
  RMat h_tt, h_tx, h_xx;
  Region support;
};

Perturbation make_perturbation(const Spacetime& st, const std::vector<MetricBump>& bumps);
Perturbation scale_perturbation(const Perturbation& h, double s);
// g + h spacetime; throws if the result fails validation.
Spacetime perturb(const Spacetime& st, const Perturbation& h);

} // namespace dynloc
