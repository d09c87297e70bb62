#pragma once

// Exponential presentation of the canonical commutation relations over
// exact rational phase-space labels: finite sums of amp * e^{i theta} W(u)
// with rational theta and rational label vectors u.  Distinct rational
// exponents give linearly independent unit phases, so the canonical form
// (sorted, merged, zero-free) decides equality exactly; no floating point
// enters the algebra at all.

#include <gmpxx.h>

#include <string>
#include <vector>

#include "dynloc/spacetime.hpp"
#include "dynloc/tensor.hpp"

namespace dynloc {

// Entries must be canonical (call canonicalize() after the two-integer
// mpq_class constructor); gmp comparisons assume it.
using RatVec = std::vector<mpq_class>;
using RatMat = std::vector<RatVec>;  // row-major, possibly non-square

// amp * e^{i theta} * W(label); theta in radians, kept exact.
struct WeylTerm {
  RatVec label;
  mpq_class theta;
  CmplxRat amp;
};

struct WeylElement {
  int dim = 0;
  std::vector<WeylTerm> terms;  // canonical after every operation
};

WeylElement weyl_zero(int dim);
WeylElement weyl_one(int dim);
WeylElement weyl_generator(const RatVec& label);

WeylElement weyl_add(const WeylElement& a, const WeylElement& b);
WeylElement weyl_scale(const WeylElement& a, const CmplxRat& amp, const mpq_class& theta);
bool weyl_equal(const WeylElement& a, const WeylElement& b);

// The composition law W(u) W(v) = e^{-i sigma(u,v)/2} W(u+v), with sigma
// given as an exact matrix acting on labels.
mpq_class weyl_pairing(const RatMat& sigma, const RatVec& u, const RatVec& v);
WeylElement weyl_mul(const WeylElement& a, const WeylElement& b, const RatMat& sigma);

// W(u)* = W(-u), antilinear on coefficients.
WeylElement weyl_star(const WeylElement& a);

// Float value of the coefficient in front of W(label), summing phases.
cplx weyl_coeff_float(const WeylElement& a, const RatVec& label);

// Exact linear algebra over the rationals (row-span conventions).
int rat_rank(RatMat rows);
bool rat_span_contains(RatMat rows, const RatVec& v);
bool rat_same_span(const RatMat& a, const RatMat& b);
// Basis of {u : m u = 0}, exact.
RatMat rat_kernel(const RatMat& m);

// Labels transform by the matrix; an algebra endomorphism needs the form
// preserved exactly, which preserves_form checks.
bool preserves_form(const RatMat& map, const RatMat& sigma);
WeylElement weyl_map(const WeylElement& a, const RatMat& map);

// Orbit of a label under repeated application, up to max_len; empty result
// means the orbit did not close in the budget.
std::vector<RatVec> label_orbit(const RatMat& map, const RatVec& u, int max_len);
// Normalized sum over a closed orbit, a fixed element of the induced
// automorphism by construction.
WeylElement orbit_average(const std::vector<RatVec>& orbit);

// Exact joint kernel of (map - I) over a family.
RatMat family_fixed_labels(const std::vector<RatMat>& maps);

// The symplectic form of a grid row on packed (phi, pi) labels: pairing
// dx * sum(phi_u pi_v - pi_u phi_v), exact via rationalized spacings.
RatMat weyl_form_of_grid(const GridGeom& geom);

// Structural label bases on the reference row, packed in active
// coordinates.  The prints of one interval are the exact basis shared by
// the invariant subspace of base [c,d] and the kinematic span of the
// diamond over [c-1,d+1]: phi on [c,d], pi on [c-1,d+1].
RatMat interval_print_labels(const GridGeom& geom, int c, int d);
// Global constant mode phi = 1, pi = 0 (circle only).
RatVec constant_label(const GridGeom& geom);
// Massless line mode that ramps up over [a,b], holds 1 on [b,c], ramps
// down over [c,d]; pi = 0.
RatVec plateau_label(const GridGeom& geom, int a, int b, int c, int d);

RVec label_to_float(const RatVec& v);

// Exact comparison of assembled label spans; the witness is the first dyn
// label outside the kin span when the inclusion fails.
struct WeylLocalityReport {
  int kin_rank = 0, dyn_rank = 0;
  bool kin_inside_dyn = false, dyn_inside_kin = false;
  RatVec witness;
};
WeylLocalityReport weyl_locality_check(const RatMat& kin_labels, const RatMat& dyn_labels);

// Finite-support vector in the l2-over-labels model, the space the algebra
// acts on.  Entries reuse the term bookkeeping: label = support point,
// amp * e^(i theta) = value there.  Kept canonical like elements.
struct WeylVector {
  int dim = 0;
  std::vector<WeylTerm> entries;
};

WeylVector vector_zero(int dim);
WeylVector vector_point(const RatVec& at, const CmplxRat& amp, const mpq_class& theta);
WeylVector vector_add(const WeylVector& f, const WeylVector& g);
bool vector_equal(const WeylVector& f, const WeylVector& g);

// (W(u) f)(x) = e^(i sigma(u,x)/2) f(x + u); on a point mass this moves the
// support by -u and tacks on the phase at the landing point.  Extended
// linearly over the terms of a, this is a *-representation: products
// compose and the star lands on the l2 adjoint.
WeylVector ell2_action(const RatMat& sigma, const WeylElement& a, const WeylVector& f);

// Exact scalar sum_j amp_j e^(i theta_j), canonical by phase angle.  The
// l2 inner product lands here since distinct label points contribute
// independent phase products.
struct PhaseSum {
  std::vector<std::pair<mpq_class, CmplxRat>> parts;
};

// <f, g>, antilinear in f.
PhaseSum ell2_inner(const WeylVector& f, const WeylVector& g);
bool phase_sum_equal(const PhaseSum& a, const PhaseSum& b);

// One averaged element per distinct orbit of the pool labels under an
// exact symplectic map with finite orbits (throws past max_orbit, like
// label_orbit).  Their span is the fixed-point subspace of the induced
// algebra map on the span of the pooled generators.
std::vector<WeylElement> orbit_sum_basis(const RatMat& map, const std::vector<RatVec>& pool,
                                         int max_orbit);

} // namespace dynloc
