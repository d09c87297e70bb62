#include "dynloc/tensor.hpp"

namespace dynloc {

double tensor_max_abs(const TensorND<cplx>& t) {
  double m = 0;
  for (const auto& v : t.a) m = std::max(m, std::abs(v));
  return m;
}

double tensor_diff_max(const TensorND<cplx>& a, const TensorND<cplx>& b) {
  if (a.dim != b.dim || a.degree != b.degree)
    throw std::invalid_argument("tensor shape mismatch");
  double m = 0;
  for (long i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.a[i] - b.a[i]));
  return m;
}

TensorND<cplx> tensor_to_float(const TensorND<CmplxRat>& t) {
  TensorND<cplx> r(t.dim, t.degree);
  for (long i = 0; i < t.size(); ++i) r.a[i] = to_cplx(t.a[i]);
  return r;
}

CMat mode0_unfolding(const TensorND<cplx>& t) {
  const long cols = t.degree == 0 ? 1 : t.size() / t.dim;
  CMat m(t.dim, cols);
  if (t.degree == 0) {
    m.setZero();
    return m;
  }
  for (int r = 0; r < t.dim; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = t.a[r * cols + c];
  return m;
}

CMat support_subspace(const TensorND<cplx>& t, double tol) {
  if (t.degree == 0) return CMat(t.dim, 0);
  // Scale-relative cutoff keeps tiny tensors from reporting phantom rank.
  const double scale = tensor_max_abs(t);
  if (scale == 0.0) return CMat(t.dim, 0);
  return orth(mode0_unfolding(t), tol);
}

bool envelope_membership(const TensorND<cplx>& t, const CMat& u, double tol) {
  if (u.rows() != t.dim) throw std::invalid_argument("ambient mismatch");
  CMat q = orth(u);
  CMat proj = q * q.adjoint();
  std::vector<cplx> pm(static_cast<size_t>(t.dim) * t.dim);
  for (int r = 0; r < t.dim; ++r)
    for (int c = 0; c < t.dim; ++c) pm[static_cast<long>(r) * t.dim + c] = proj(r, c);
  TensorND<cplx> projected = apply_to_all_slots(t, pm, t.dim);
  const double scale = std::max(1.0, tensor_max_abs(t));
  return tensor_diff_max(projected, t) <= tol * scale;
}

} // namespace dynloc
