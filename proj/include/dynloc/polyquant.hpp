#pragma once

// Polynomial quantization of a presymplectic space: elements are
// degree-capped symmetric tensors, multiplied by a Moyal-type formula
// whose r-th term contracts r slot pairs through (i/2) sigma.  A
// normal-ordering rewriter over the raw tensor algebra provides an
// independent oracle for the product, exact over Gaussian rationals.
// The degree-2 fixed-space helpers at the bottom carry the quantized
// localization check and the single-map counterexample.

#include <algorithm>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "dynloc/locality.hpp"
#include "dynloc/tensor.hpp"

namespace dynloc {

// Raised when a product would need degrees beyond the cap.
struct TruncationOverflow : std::runtime_error {
  explicit TruncationOverflow(const std::string& w) : std::runtime_error(w) {}
};

// One symmetric tensor per degree 0..cap.
template <typename S>
struct PolyElement {
  int dim = 0, cap = 0;
  std::vector<TensorND<S>> terms;
};

template <typename S>
PolyElement<S> poly_zero(int dim, int cap) {
  PolyElement<S> p;
  p.dim = dim;
  p.cap = cap;
  p.terms.reserve(static_cast<size_t>(cap) + 1);
  for (int k = 0; k <= cap; ++k) p.terms.emplace_back(dim, k);
  return p;
}

template <typename S>
PolyElement<S> poly_scalar(int dim, int cap, const S& c) {
  PolyElement<S> p = poly_zero<S>(dim, cap);
  p.terms[0].a[0] = c;
  return p;
}

template <typename S>
PolyElement<S> poly_vector(int cap, const std::vector<S>& v) {
  PolyElement<S> p = poly_zero<S>(static_cast<int>(v.size()), cap);
  p.terms[1].a = v;
  return p;
}

template <typename S>
PolyElement<S> poly_from_tensor(int cap, const TensorND<S>& t) {
  if (t.degree > cap) throw TruncationOverflow("tensor degree beyond cap");
  PolyElement<S> p = poly_zero<S>(t.dim, cap);
  p.terms[t.degree] = t;
  return p;
}

template <typename S>
PolyElement<S> poly_add(const PolyElement<S>& a, const PolyElement<S>& b) {
  if (a.dim != b.dim || a.cap != b.cap) throw std::invalid_argument("poly shape mismatch");
  PolyElement<S> p = a;
  for (int k = 0; k <= a.cap; ++k) p.terms[k] += b.terms[k];
  return p;
}

template <typename S>
PolyElement<S> poly_scale(const PolyElement<S>& a, const S& c) {
  PolyElement<S> p = a;
  for (auto& t : p.terms) t = t * c;
  return p;
}

template <typename S>
bool tensor_nonzero(const TensorND<S>& t) {
  for (const auto& e : t.a)
    if (!scalar_is_zero(e, 0.0)) return true;
  return false;
}

template <typename S>
S i_power_scalar(int r) {
  // i^r, exact in both scalar models.
  static const int re[4] = {1, 0, -1, 0};
  static const int im[4] = {0, 1, 0, -1};
  const int q = ((r % 4) + 4) % 4;
  if constexpr (std::is_same_v<S, CmplxRat>) {
    return CmplxRat{mpq_class(re[q]), mpq_class(im[q])};
  } else {
    return S(static_cast<double>(re[q]), static_cast<double>(im[q]));
  }
}

inline long binom_long(int n, int k) {
  if (k < 0 || k > n) return 0;
  long r = 1;
  for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

inline long fact_long(int n) {
  long r = 1;
  for (int j = 2; j <= n; ++j) r *= j;
  return r;
}

// (i/2)^r m! n! / (r! (m-r)! (n-r)!)
template <typename S>
S moyal_coeff(int m, int n, int r) {
  const long combi = binom_long(m, r) * binom_long(n, r) * fact_long(r);
  S c = i_power_scalar<S>(r);
  if constexpr (std::is_same_v<S, CmplxRat>) {
    mpq_class scale(combi);
    scale /= ipow(2, r);
    return c * CmplxRat{scale, mpq_class(0)};
  } else {
    return c * S(static_cast<double>(combi) / static_cast<double>(ipow(2, r)), 0.0);
  }
}

// Symmetric-ordered product.  Throws TruncationOverflow as soon as two
// nonzero homogeneous parts would overflow the cap, so a result is always
// the exact product, never a silently clipped one.
template <typename S>
PolyElement<S> poly_product(const PolyElement<S>& a, const PolyElement<S>& b,
                            const TensorND<S>& sigma) {
  if (a.dim != b.dim || a.cap != b.cap) throw std::invalid_argument("poly shape mismatch");
  if (sigma.degree != 2 || sigma.dim != a.dim) throw std::invalid_argument("bad form");
  PolyElement<S> out = poly_zero<S>(a.dim, a.cap);
  for (int m = 0; m <= a.cap; ++m) {
    if (!tensor_nonzero(a.terms[m])) continue;
    for (int n = 0; n <= b.cap; ++n) {
      if (!tensor_nonzero(b.terms[n])) continue;
      if (m + n > a.cap)
        throw TruncationOverflow("product of degrees " + std::to_string(m) + " and " +
                                 std::to_string(n) + " beyond cap " + std::to_string(a.cap));
      for (int r = 0; r <= std::min(m, n); ++r) {
        const TensorND<S> piece = contract_outer(a.terms[m], b.terms[n], r, sigma);
        out.terms[m + n - 2 * r] += symmetrize(piece) * moyal_coeff<S>(m, n, r);
      }
    }
  }
  return out;
}

// Adjoint: conjugate coefficients, push the antilinear involution of the
// base space through every slot.  conj_mat is row-major dim x dim.
template <typename S>
PolyElement<S> poly_star(const PolyElement<S>& a, const std::vector<S>& conj_mat) {
  PolyElement<S> p = a;
  for (auto& t : p.terms) {
    for (auto& e : t.a) e = conj_scalar(e);
    if (t.degree > 0) t = apply_to_all_slots(t, conj_mat, a.dim);
  }
  return p;
}

// Degreewise functor action along a (possibly non-square) linear map,
// realized as pad to square, apply, crop.
template <typename S>
PolyElement<S> poly_map(const PolyElement<S>& a, const std::vector<S>& mat, int rows,
                        int cols) {
  if (cols != a.dim) throw std::invalid_argument("map domain mismatch");
  const int s = std::max(rows, cols);
  std::vector<S> pad(static_cast<size_t>(s) * s, S(0));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) pad[static_cast<long>(r) * s + c] = mat[static_cast<long>(r) * cols + c];
  PolyElement<S> out = poly_zero<S>(rows, a.cap);
  out.terms[0].a[0] = a.terms[0].a[0];
  for (int k = 1; k <= a.cap; ++k) {
    if (!tensor_nonzero(a.terms[k])) continue;
    TensorND<S> t = resize_ambient(a.terms[k], s);
    t = apply_to_all_slots(t, pad, s);
    out.terms[k] = resize_ambient(t, rows);
  }
  return out;
}

// Normal-ordering rewriter on the raw tensor algebra, where slot order is
// multiplication order: an adjacent out-of-order pair rewrites through
//   e_a (x) e_b = e_b (x) e_a + i sigma(a, b),
// a bubble-sort step that strictly lowers the inversion count, so the
// process terminates in sorted-monomial coordinates of degrees n, n-2, ...
// Confluence (same normal form whichever side rewrites first) is exactly
// the consistency of the commutation relations, which makes this an
// independent oracle for the product formula above.
enum class RewriteOrder { LeftFirst, RightFirst };

template <typename S>
std::vector<TensorND<S>> rewrite_normal_form(const TensorND<S>& t, const TensorND<S>& sigma,
                                             RewriteOrder order) {
  if (sigma.degree != 2 || sigma.dim != t.dim) throw std::invalid_argument("bad form");
  std::vector<TensorND<S>> out;
  out.reserve(static_cast<size_t>(t.degree) + 1);
  for (int k = 0; k <= t.degree; ++k) out.emplace_back(t.dim, k);

  std::vector<TensorND<S>> queue{t};
  std::vector<int> idx;
  while (!queue.empty()) {
    TensorND<S> cur = std::move(queue.back());
    queue.pop_back();
    if (!tensor_nonzero(cur)) continue;

    int slot = -1;
    const int last = cur.degree - 1;
    for (int step = 0; step < last && slot < 0; ++step) {
      const int j = order == RewriteOrder::LeftFirst ? step : last - 1 - step;
      for (long o = 0; o < cur.size() && slot < 0; ++o) {
        if (scalar_is_zero(cur.a[o], 0.0)) continue;
        decode_index(o, cur.dim, cur.degree, idx);
        if (idx[j] > idx[j + 1]) slot = j;
      }
    }
    if (slot < 0) {
      out[cur.degree] += cur;
      continue;
    }

    TensorND<S> inv(cur.dim, cur.degree);
    TensorND<S> keep(cur.dim, cur.degree);
    for (long o = 0; o < cur.size(); ++o) {
      decode_index(o, cur.dim, cur.degree, idx);
      (idx[slot] > idx[slot + 1] ? inv : keep).a[o] = cur.a[o];
    }
    queue.push_back(std::move(keep));
    queue.push_back(swap_adjacent(inv, slot));
    queue.push_back(contract_slots(inv, slot, slot + 1, sigma) * i_power_scalar<S>(1));
  }
  return out;
}

double poly_diff_max(const PolyElement<cplx>& a, const PolyElement<cplx>& b);
bool poly_exact_equal(const PolyElement<CmplxRat>& a, const PolyElement<CmplxRat>& b);

// sigma as a degree-2 tensor form.
TensorND<cplx> form_from_matrix(const CMat& m);

// Truncated exponential series with the argument in degree one:
// terms[k] = i^k u^(x k) / k!.
PolyElement<cplx> weyl_series_element(const std::vector<cplx>& u, int cap);

// Exact piece of the multiplication law for exponential series: among the
// degree-k output terms of W(u) W(v), those produced by exactly j
// contractions must reproduce the j-th Taylor coefficient of the phase
// exp(-i sigma(u,v)/2) times i^k (u+v)^(x k)/k!.  Finite, term-by-term,
// no truncation error; valid whenever k + 2j fits the cap used to source
// the homogeneous inputs.  Returns the max coefficient defect.
double weyl_identity_defect(const std::vector<cplx>& u, const std::vector<cplx>& v,
                            const TensorND<cplx>& sigma, int k, int j);

// Support of an algebra element: the smallest subspace Y whose symmetric
// algebra contains it, computed as the union of the slot supports of the
// nonzero homogeneous parts (degree zero contributes nothing).
CMat poly_support(const PolyElement<cplx>& a, double tol = kRankTol);

// Does every homogeneous part of a live inside span(u)^(its degree)?
// With u = poly_support(a) this is the reconstruction property.
bool poly_in_envelope(const PolyElement<cplx>& a, const CMat& u, double tol = 1e-8);

// vec convention: a degree-2 tensor T maps to the length-d^2 vector with
// T(a, b) at a*d + b; pair_power_matrix(r) acts on it as r T r^T.  The
// evolution maps are real, so this layer stays real throughout.
RMat pair_power_matrix(const RMat& r);
RVec vec_of_pair_tensor(const TensorND<cplx>& t);
TensorND<cplx> pair_tensor_of_vec(const RVec& v, int dim);

// Joint fixed space of T -> r T r^T over a family of maps, within the
// symmetric pair tensors (the antisymmetric sector always contains the
// form itself, which is not an algebra element).  Refined iteratively so
// only the first map pays the full-size cost.
RMat joint_pair_fixed_space(const std::vector<RMat>& maps, double tol = 1e-9);

// Span of the symmetrized pair tensors over a basis (and over two bases).
RMat sym_square_space(const RMat& basis);
RMat sym_mixed_space(const RMat& a, const RMat& b);

// Quarter-turn symplectic map on the standard plane: no fixed vectors,
// yet e1 (.) e1 + e2 (.) e2 is a fixed degree-2 tensor.  The reason the
// quantized localization maps need whole probe families, not single maps.
RMat quarter_turn_map();

struct QuantizedLocalityReport {
  int classical_dim = 0;
  int fixed_pair_dim = 0;
  int sym_square_dim = 0;
  double defect = 0;  // span distance between fixed pairs and Sym^2(classical)
  size_t probes = 0;
  RMat classical;    // constraint-kernel invariant subspace of the base
  RMat fixed_pairs;  // jointly fixed symmetric pair tensors, vec'd
};

// Degree-2 localization check at one compact base: the jointly fixed pair
// tensors of the sampled evolutions against the symmetric square of the
// classical invariant subspace.
QuantizedLocalityReport quantized_locality_check(const LocalityContext& ctx,
                                                 const RMat& solmap, const CompactBase& k,
                                                 Rng& rng);

} // namespace dynloc
