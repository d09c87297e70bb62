#pragma once

// Dense degree-n tensors over a dim-d base space, templated on the scalar
// so the polynomial algebra can run both in double precision and exactly
// over Gaussian rationals.  Degrees stay small (truncation caps them), so
// everything is straightforward strided storage.

#include <gmpxx.h>

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "dynloc/linalg.hpp"

namespace dynloc {

// Exact complex rationals a + b*i.
struct CmplxRat {
  mpq_class re, im;

  CmplxRat() : re(0), im(0) {}
  CmplxRat(mpq_class r, mpq_class i) : re(std::move(r)), im(std::move(i)) {}
  explicit CmplxRat(long r) : re(r), im(0) {}

  CmplxRat operator+(const CmplxRat& o) const { return {re + o.re, im + o.im}; }
  CmplxRat operator-(const CmplxRat& o) const { return {re - o.re, im - o.im}; }
  CmplxRat operator*(const CmplxRat& o) const {
    return {re * o.re - im * o.im, re * o.im + im * o.re};
  }
  CmplxRat& operator+=(const CmplxRat& o) { re += o.re; im += o.im; return *this; }
  bool operator==(const CmplxRat& o) const { return re == o.re && im == o.im; }
};

inline cplx conj_scalar(const cplx& z) { return std::conj(z); }
inline CmplxRat conj_scalar(const CmplxRat& z) { return {z.re, mpq_class(-z.im)}; }
inline bool scalar_is_zero(const cplx& z, double tol) { return std::abs(z) <= tol; }
inline bool scalar_is_zero(const CmplxRat& z, double) { return z.re == 0 && z.im == 0; }
inline cplx to_cplx(const cplx& z) { return z; }
inline cplx to_cplx(const CmplxRat& z) { return {z.re.get_d(), z.im.get_d()}; }

inline long ipow(long base, int n) {
  long r = 1;
  while (n-- > 0) r *= base;
  return r;
}

template <typename S>
struct TensorND {
  int dim = 0;
  int degree = 0;
  std::vector<S> a;  // size dim^degree, first slot slowest

  TensorND() = default;
  TensorND(int d, int n) : dim(d), degree(n) {
    // Guard before allocating; the stepwise product also avoids overflow.
    if (d < 0 || n < 0) throw std::length_error("tensor too large");
    long sz = 1;
    for (int k = 0; k < n; ++k) {
      sz *= d;
      if (sz > 80'000'000L) throw std::length_error("tensor too large");
    }
    a.resize(static_cast<size_t>(sz));
  }

  long size() const { return static_cast<long>(a.size()); }

  long offset(const std::vector<int>& idx) const {
    long o = 0;
    for (int v : idx) o = o * dim + v;
    return o;
  }

  S& at(const std::vector<int>& idx) { return a[offset(idx)]; }
  const S& at(const std::vector<int>& idx) const { return a[offset(idx)]; }

  TensorND& operator+=(const TensorND& o) {
    for (long i = 0; i < size(); ++i) a[i] += o.a[i];
    return *this;
  }
  TensorND operator*(const S& c) const {
    TensorND r = *this;
    for (auto& v : r.a) v = v * c;
    return r;
  }
};

// Multi-index walk without materializing tuples.
inline void decode_index(long off, int dim, int degree, std::vector<int>& idx) {
  idx.resize(degree);
  for (int k = degree - 1; k >= 0; --k) {
    idx[k] = static_cast<int>(off % dim);
    off /= dim;
  }
}

template <typename S>
TensorND<S> tensor_from_power(const std::vector<S>& v, int degree) {
  TensorND<S> t(static_cast<int>(v.size()), degree);
  std::vector<int> idx;
  for (long o = 0; o < t.size(); ++o) {
    decode_index(o, t.dim, degree, idx);
    S prod = S(1);
    for (int k : idx) prod = prod * v[k];
    t.a[o] = prod;
  }
  return t;
}

// Exchange slots j and j+1.
template <typename S>
TensorND<S> swap_adjacent(const TensorND<S>& t, int j) {
  if (j < 0 || j + 1 >= t.degree) throw std::out_of_range("swap slot");
  TensorND<S> r(t.dim, t.degree);
  std::vector<int> idx;
  for (long o = 0; o < t.size(); ++o) {
    decode_index(o, t.dim, t.degree, idx);
    std::swap(idx[j], idx[j + 1]);
    r.a[t.offset(idx)] = t.a[o];
  }
  return r;
}

// Average over all slot permutations.  degree! stays tiny under truncation.
template <typename S>
TensorND<S> symmetrize(const TensorND<S>& t) {
  TensorND<S> r(t.dim, t.degree);
  std::vector<int> perm(t.degree);
  std::iota(perm.begin(), perm.end(), 0);
  long nperm = 0;
  std::vector<int> idx, pidx(t.degree);
  do {
    ++nperm;
    for (long o = 0; o < t.size(); ++o) {
      decode_index(o, t.dim, t.degree, idx);
      for (int k = 0; k < t.degree; ++k) pidx[k] = idx[perm[k]];
      r.a[o] += t.a[t.offset(pidx)];
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  // Scalar division kept out of the S interface: multiply by 1/nperm.
  S inv = S(1);
  if constexpr (std::is_same_v<S, CmplxRat>) {
    inv.re /= nperm;
  } else {
    inv = S(1.0 / static_cast<double>(nperm));
  }
  return r * inv;
}

// Contract slots j and k (j < k) against the bilinear form: sum over a,b of
// form(a,b) * T(... a at j ... b at k ...).
template <typename S>
TensorND<S> contract_slots(const TensorND<S>& t, int j, int k,
                           const TensorND<S>& form) {
  if (form.degree != 2 || form.dim != t.dim) throw std::invalid_argument("bad form");
  if (j < 0 || k <= j || k >= t.degree) throw std::out_of_range("contract slots");
  TensorND<S> r(t.dim, t.degree - 2);
  std::vector<int> ridx, tidx(t.degree);
  for (long o = 0; o < r.size(); ++o) {
    decode_index(o, r.dim, r.degree, ridx);
    int p = 0;
    for (int s = 0; s < t.degree; ++s)
      if (s != j && s != k) tidx[s] = ridx[p++];
    S acc{};
    for (int a = 0; a < t.dim; ++a)
      for (int b = 0; b < t.dim; ++b) {
        tidx[j] = a;
        tidx[k] = b;
        acc += form.a[a * form.dim + b] * t.a[t.offset(tidx)];
      }
    r.a[o] = acc;
  }
  return r;
}

// Outer product with the last r slots of `left` contracted against the
// first r slots of `right`, each pair through the bilinear form.
template <typename S>
TensorND<S> contract_outer(const TensorND<S>& left, const TensorND<S>& right,
                           int r, const TensorND<S>& form) {
  if (r < 0 || r > left.degree || r > right.degree)
    throw std::out_of_range("contraction order");
  const int d = left.dim;
  if (right.dim != d || form.dim != d) throw std::invalid_argument("dim mismatch");
  TensorND<S> out(d, left.degree + right.degree - 2 * r);
  const int lfree = left.degree - r;
  std::vector<int> oidx, lidx(left.degree), ridx(right.degree), cidx;
  const long ncontr = ipow(d, 2 * r);
  for (long o = 0; o < out.size(); ++o) {
    decode_index(o, d, out.degree, oidx);
    for (int s = 0; s < lfree; ++s) lidx[s] = oidx[s];
    for (int s = 0; s < right.degree - r; ++s) ridx[r + s] = oidx[lfree + s];
    S acc{};
    for (long c = 0; c < ncontr; ++c) {
      decode_index(c, d, 2 * r, cidx);
      S w = S(1);
      for (int p = 0; p < r; ++p) {
        lidx[lfree + p] = cidx[2 * p];
        ridx[p] = cidx[2 * p + 1];
        w = w * form.a[cidx[2 * p] * static_cast<long>(d) + cidx[2 * p + 1]];
      }
      acc += w * left.a[left.offset(lidx)] * right.a[right.offset(ridx)];
    }
    out.a[o] = acc;
  }
  return out;
}

// Apply one matrix to every slot (degreewise functor action).
template <typename S>
TensorND<S> apply_to_all_slots(const TensorND<S>& t, const std::vector<S>& mat,
                               int rows) {
  const int d = t.dim;
  if (static_cast<long>(mat.size()) != static_cast<long>(rows) * d)
    throw std::invalid_argument("matrix shape");
  TensorND<S> cur = t;
  for (int slot = 0; slot < t.degree; ++slot) {
    TensorND<S> next(rows, t.degree);
    // Intermediate mixed-dimension stages are avoided by requiring square
    // maps unless degree fits one pass; square covers every use here.
    if (rows != d && t.degree > 1)
      throw std::invalid_argument("non-square slot map on degree > 1");
    std::vector<int> idx;
    for (long o = 0; o < next.size(); ++o) {
      decode_index(o, next.dim, next.degree, idx);
      const int row = idx[slot];
      S acc{};
      for (int col = 0; col < d; ++col) {
        idx[slot] = col;
        acc += mat[static_cast<long>(row) * d + col] * cur.a[cur.offset(idx)];
      }
      idx[slot] = row;
      next.a[o] = acc;
    }
    cur = std::move(next);
  }
  return cur;
}

// Zero-extend or truncate the coordinate range (leading coordinates kept),
// so non-square slot maps can run pad -> square apply -> crop.
template <typename S>
TensorND<S> resize_ambient(const TensorND<S>& t, int new_dim) {
  TensorND<S> r(new_dim, t.degree);
  std::vector<int> idx;
  const int common = std::min(new_dim, t.dim);
  for (long o = 0; o < t.size(); ++o) {
    decode_index(o, t.dim, t.degree, idx);
    bool keep = true;
    for (int v : idx) keep = keep && v < common;
    if (keep) r.a[r.offset(idx)] = t.a[o];
  }
  return r;
}

double tensor_max_abs(const TensorND<cplx>& t);
double tensor_diff_max(const TensorND<cplx>& a, const TensorND<cplx>& b);
TensorND<cplx> tensor_to_float(const TensorND<CmplxRat>& t);

// Mode-0 matricization: dim x dim^(degree-1).
CMat mode0_unfolding(const TensorND<cplx>& t);

// Smallest subspace U with t inside U tensor (ambient)^(degree-1); for
// symmetric tensors this is the full support envelope.
CMat support_subspace(const TensorND<cplx>& t, double tol = kRankTol);

// Is t contained in span(U)^(tensor degree)?  Projects every slot.
bool envelope_membership(const TensorND<cplx>& t, const CMat& u, double tol = 1e-8);

} // namespace dynloc
