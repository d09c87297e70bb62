#pragma once

// Localization analysis for the lattice field.  Two nets of phase-space
// subspaces are attached to spacetime regions: the kinematic one spans
// propagated point sources inside the region, the dynamical one collects
// the subspaces left fixed by every relative Cauchy evolution through
// metric probes spacelike to a compact surface piece.  Comparing the two
// is the dynamical-locality question; the charge-quotient spaces at the
// end carry the same analysis for the massless current observables.

#include "dynloc/solver.hpp"

namespace dynloc {

// Fixed background, mass, reference row carrying the phase space, and the
// inclusive band of rows metric probes may occupy.  The band must straddle
// the reference row by at least two rows on each side and leave two more
// rows of margin to the grid boundary for the evolution surfaces.
struct LocalityContext {
  const Spacetime* st = nullptr;
  double mass = 0;
  int row = 0;
  int band_lo = 0, band_hi = 0;
  ExecPolicy pol = ExecPolicy::Serial;

  const GridGeom& geom() const { return st->geom; }
  RceRows rce_rows() const { return RceRows{row, band_lo - 2, band_hi + 2}; }
};

void validate_context(const LocalityContext& ctx);

// Span of E(delta at cell) over cells of o, read at the reference row: the
// data reachable by smeared observables supported in o.
RMat kin_space(const LocalityContext& ctx, const Region& o);

// Data-to-solution map; column j is the flattened nt*nx solution grown
// from the j-th packed basis vector.  Computed once and shared by all the
// invariant subspaces of a context.
RMat solution_map(const LocalityContext& ctx);

// Rows and columns where a probe spacelike to base k may live: the band
// minus a one-cell Chebyshev margin around the causal hull of k.
Region probe_region(const LocalityContext& ctx, const CompactBase& k);

// Cells whose field values enter some equation a probe can alter: the
// 4-neighbour dilation of the probe region.
Region constraint_region(const LocalityContext& ctx, const CompactBase& k);

// Subspace fixed by all evolutions through probes spacelike to k.  With
// mass the solution must vanish on the constraint region; massless it
// must be locally constant there (every in-region edge difference zero),
// which on the line anchors to zero through the pinned columns.
RMat invariant_space(const LocalityContext& ctx, const RMat& solmap, const CompactBase& k);

// The same subspace measured directly: stacked fixed-point equations of
// sampled evolutions.  Probes tile the given region so that every cell
// lies inside some bump that actually couples to the field there.
std::vector<Perturbation> sample_probes(const LocalityContext& ctx, const Region& region,
                                        Rng& rng);
RMat invariant_space_sampled(const LocalityContext& ctx,
                             const std::vector<Perturbation>& probes);

// Largest relative displacement of the basis columns under the sampled
// evolutions; cheap one-sided check of invariance.
double max_rce_deviation(const LocalityContext& ctx, const std::vector<Perturbation>& probes,
                         const RMat& basis);

struct DynResult {
  RMat space;
  std::vector<CompactBase> bases;
  std::vector<int> member_dims;  // dimension contributed by each base
};

// Union of the invariant subspaces over the enumerated compact bases of o.
DynResult dyn_space(const LocalityContext& ctx, const RMat& solmap, const Region& o,
                    int levels);

// Locally constant data compatible with the boundary: one constant on the
// circle, nothing on the line.
RMat locally_constant_space(const LocalityContext& ctx);

enum class CompareVerdict { Equal, FirstInsideSecond, SecondInsideFirst, Incomparable };

const char* verdict_name(CompareVerdict v);

struct SpaceComparison {
  CompareVerdict verdict = CompareVerdict::Equal;
  int dim_first = 0, dim_second = 0, dim_intersection = 0;
  double defect_first_in_second = 0;
  double defect_second_in_first = 0;
  // Basis vectors documenting strictness, kept empty when contained.
  RVec witness_first_not_second;
  RVec witness_second_not_first;
};

SpaceComparison compare_spaces(const RMat& first, const RMat& second, double tol);

// Symmetric span distance: larger of the two containment defects.
double subspace_distance(const RMat& a, const RMat& b);

// max |sigma(u, v)| over orthonormal bases of a and b; spacelike regions
// should pair to zero.
double max_symplectic_pairing(const GridGeom& geom, const RMat& a, const RMat& b);

// Charge-quotient observables of the massless field.  Every function
// below requires ctx.mass == 0.

// Phase vectors with vanishing total charge.
RMat charge_zero_space(const LocalityContext& ctx);

// Data class of the current observable attached to a one-form: the
// propagator applied to its codifferential, read at the reference row.
RVec current_class(const LocalityContext& ctx, const OneForm& w);

// Kinematic current space: per connected component of o, the charge-zero
// part of its kinematic span, plus the locally constant classes.
RMat current_kin_space(const LocalityContext& ctx, const Region& o);

// One base's member of the current net: the charge-zero part of its
// invariant subspace joined with the locally constant classes.
RMat current_invariant_space(const LocalityContext& ctx, const RMat& solmap,
                             const CompactBase& k);

// Dynamical current space: charge-zero parts of the invariant subspaces
// over the enumerated bases, plus the locally constant classes.
DynResult current_dyn_space(const LocalityContext& ctx, const RMat& solmap, const Region& o,
                            int levels);

} // namespace dynloc
