#pragma once

// Pre-symplectic linear spaces (V, sigma, C): sigma an antisymmetric
// *bilinear* form (no conjugate in either slot) and C an antilinear
// involution with sigma(Cu, Cv) = conj(sigma(u, v)).  Real spaces carry
// real sigma and C = identity.  Subspace calculus (equalizers,
// intersections, unions, conjugation fixed points, restriction) backs
// the localization analysis and both quantization layers.

#include "dynloc/linalg.hpp"

namespace dynloc {

enum class Field { Real, Complex };

struct PreSymplecticSpace {
  Field field = Field::Complex;
  CMat sigma;  // dim x dim, sigma^T = -sigma
  CMat conj;   // antilinear part J; C(v) = J * bar(v)

  int dim() const { return static_cast<int>(sigma.rows()); }
  CVec apply_conj(const CVec& v) const { return conj * v.conjugate(); }
};

// Validates antisymmetry, involution, compatibility; throws on violation.
PreSymplecticSpace make_space(const CMat& sigma, const CMat& conj_part,
                              Field field = Field::Complex);

// Real space with C = id.
PreSymplecticSpace make_real_space(const RMat& sigma);

void validate_space(const PreSymplecticSpace& v, double tol = 1e-10);

// sigma(u, v) with the bilinear convention.
cplx sigma_pair(const PreSymplecticSpace& v, const CVec& a, const CVec& b);

// The zero-dimensional space counts as weakly nondegenerate.
bool is_weakly_nondegenerate(const PreSymplecticSpace& v, double tol = kRankTol);

struct SymplecticMap {
  CMat mat;               // action v -> mat*v, or mat*bar(v) if antilinear
  bool antilinear = false;

  CVec apply(const CVec& v) const { return antilinear ? CVec(mat * v.conjugate()) : CVec(mat * v); }
};

// Does f pull the target form back to the source form (and intertwine C)?
bool is_symplectic_map(const PreSymplecticSpace& from, const PreSymplecticSpace& to,
                       const SymplecticMap& f, double tol = 1e-10);

struct Subspace {
  CMat basis;  // ambient x k, orthonormal columns

  int ambient() const { return static_cast<int>(basis.rows()); }
  int dim() const { return static_cast<int>(basis.cols()); }
};

Subspace full_subspace(int ambient_dim);
Subspace zero_subspace(int ambient_dim);

// ker(f - g) for two maps of matching linearity (throws on mixed kinds).
Subspace equalizer(const SymplecticMap& f, const SymplecticMap& g, double tol = kRankTol);

Subspace subspace_intersect(const Subspace& a, const Subspace& b, double tol = kRankTol);
Subspace subspace_union(const Subspace& a, const Subspace& b, double tol = kRankTol);

// Restriction of (sigma, C) to a C-invariant subspace; throws otherwise.
PreSymplecticSpace restrict_space(const PreSymplecticSpace& v, const Subspace& s,
                                  double tol = 1e-8);

struct Realified {
  PreSymplecticSpace space;  // Field::Real
  CMat embedding;            // complex ambient x real dim; columns fixed by C
};

// Fixed points of C as a real symplectic space (functor R of the category
// layer).  For Real input this is the identity operation.
Realified realify(const PreSymplecticSpace& v, double tol = kRankTol);

// Fixed points of C inside a C-invariant subspace (for the commutation
// properties of R with intersections/equalizers).
CMat conj_fixed_points(const PreSymplecticSpace& v, const CMat& within, double tol = kRankTol);

} // namespace dynloc
