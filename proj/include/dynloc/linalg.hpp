#pragma once

// Dense linear-algebra helpers shared by all modules: SVD-thresholded
// column spaces, kernels, intersections, and a deterministic RNG whose
// output does not depend on the standard library's distribution code.

#include <Eigen/Dense>
#include <gmpxx.h>
#include <complex>
#include <cstdint>
#include <vector>

namespace dynloc {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// Default relative singular-value threshold for rank decisions.
constexpr double kRankTol = 1e-10;

// Orthonormal basis of the column space (thin, SVD-based).
CMat orth(const CMat& m, double tol = kRankTol);

int rank_of(const CMat& m, double tol = kRankTol);

// Orthonormal basis of the right null space of m.
CMat nullspace(const CMat& m, double tol = kRankTol);

// Column space of [a b], rank-reduced.
CMat span_union(const CMat& a, const CMat& b, double tol = kRankTol);

// Intersection of the column spaces of a and b.
CMat span_intersect(const CMat& a, const CMat& b, double tol = kRankTol);

// ||v - P_basis v||; basis must have orthonormal columns.
double residual_norm(const CMat& basis, const CVec& v);

// max over columns w of b of residual(a, w)/||w||.  0 for empty b.
double containment_defect(const CMat& a, const CMat& b);

bool space_contains(const CMat& basis, const CVec& v, double tol);

// a == b as subspaces, up to tol on relative residuals.
bool same_space(const CMat& a, const CMat& b, double tol);

// Real-field variants.  Cauchy data lives in a real phase space, and a
// complex SVD of a real matrix can rotate basis vectors off the real
// axis, so the locality code works with these directly.
RMat orth(const RMat& m, double tol = kRankTol);
int rank_of(const RMat& m, double tol = kRankTol);
RMat nullspace(const RMat& m, double tol = kRankTol);
RMat span_union(const RMat& a, const RMat& b, double tol = kRankTol);
RMat span_intersect(const RMat& a, const RMat& b, double tol = kRankTol);
double residual_norm(const RMat& basis, const RVec& v);
double containment_defect(const RMat& a, const RMat& b);
bool space_contains(const RMat& basis, const RVec& v, double tol);
bool same_space(const RMat& a, const RMat& b, double tol);

// Deterministic RNG.  Uniform doubles come from the raw 64-bit stream
// (shift-scale), so sequences are identical on any conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : s_(seed ? seed : 0x9e3779b97f4a7c15ull) {}
  std::uint64_t next_u64();
  double u01();                       // [0, 1)
  double uniform(double a, double b); // [a, b)
  int uniform_int(int lo, int hi);    // inclusive
  double gauss();                     // Box-Muller, deterministic
  cplx cgauss();
  CVec cgauss_vec(int n);
  CMat cgauss_mat(int r, int c);

 private:
  std::uint64_t s_;
};

// Best rational approximation with |x - p/q| <= eps, by continued fractions.
mpq_class rationalize(double x, double eps = 1e-9);

double to_double(const mpq_class& q);

} // namespace dynloc
