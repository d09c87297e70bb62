#include "dynloc/symplectic.hpp"

#include <stdexcept>

namespace dynloc {

namespace {

double inf_norm(const CMat& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Real 2n x 2n representation of the antilinear map v -> J*bar(v) acting
// on (Re v, Im v) stacked coordinates.
RMat antilinear_real_rep(const CMat& j) {
  const int n = static_cast<int>(j.rows());
  RMat rep(2 * n, 2 * n);
  rep.topLeftCorner(n, n) = j.real();
  rep.topRightCorner(n, n) = j.imag();
  rep.bottomLeftCorner(n, n) = j.imag();
  rep.bottomRightCorner(n, n) = -j.real();
  return rep;
}

// Real-linearly independent fixed vectors of v -> J*bar(v), as complex columns.
CMat fixed_vectors_of(const CMat& j, double tol) {
  const int n = static_cast<int>(j.rows());
  if (n == 0) return CMat(0, 0);
  RMat rep = antilinear_real_rep(j) - RMat::Identity(2 * n, 2 * n);
  CMat ker = nullspace(CMat(rep.cast<cplx>()), tol);
  CMat out(n, ker.cols());
  for (int c = 0; c < ker.cols(); ++c)
    out.col(c) = ker.col(c).head(n).real() + cplx(0, 1) * ker.col(c).tail(n).real();
  return out;
}

} // namespace

void validate_space(const PreSymplecticSpace& v, double tol) {
  const auto& s = v.sigma;
  const auto& j = v.conj;
  if (s.rows() != s.cols()) throw std::invalid_argument("sigma must be square");
  if (j.rows() != s.rows() || j.cols() != s.cols())
    throw std::invalid_argument("conj part must match sigma in shape");
  const double scale = 1.0 + inf_norm(s);
  if (inf_norm(CMat(s + s.transpose())) > tol * scale)
    throw std::invalid_argument("sigma not antisymmetric");
  if (inf_norm(CMat(j * j.conjugate() - CMat::Identity(j.rows(), j.cols()))) > tol)
    throw std::invalid_argument("conj part not an antilinear involution");
  if (inf_norm(CMat(j.transpose() * s * j - s.conjugate())) > tol * scale)
    throw std::invalid_argument("conj incompatible with sigma");
  if (v.field == Field::Real) {
    if (inf_norm(CMat(s.imag().cast<cplx>())) > tol * scale ||
        inf_norm(CMat(j - CMat::Identity(j.rows(), j.cols()))) > tol)
      throw std::invalid_argument("real space needs real sigma and trivial conj");
  }
}

PreSymplecticSpace make_space(const CMat& sigma, const CMat& conj_part, Field field) {
  PreSymplecticSpace v{field, sigma, conj_part};
  validate_space(v);
  return v;
}

PreSymplecticSpace make_real_space(const RMat& sigma) {
  const int n = static_cast<int>(sigma.rows());
  return make_space(sigma.cast<cplx>(), CMat::Identity(n, n), Field::Real);
}

cplx sigma_pair(const PreSymplecticSpace& v, const CVec& a, const CVec& b) {
  return (a.transpose() * v.sigma * b)(0);
}

bool is_weakly_nondegenerate(const PreSymplecticSpace& v, double tol) {
  return rank_of(v.sigma, tol) == v.dim();
}

bool is_symplectic_map(const PreSymplecticSpace& from, const PreSymplecticSpace& to,
                       const SymplecticMap& f, double tol) {
  if (f.mat.rows() != to.dim() || f.mat.cols() != from.dim()) return false;
  const double scale = 1.0 + inf_norm(from.sigma) + inf_norm(f.mat);
  CMat pulled = f.mat.transpose() * to.sigma * f.mat;
  CMat want = f.antilinear ? CMat(from.sigma.conjugate()) : from.sigma;
  if (inf_norm(CMat(pulled - want)) > tol * scale * scale) return false;
  // Intertwining with conjugations: f(C u) must equal C(f u).
  CMat lhs, rhs;
  if (!f.antilinear) {
    lhs = f.mat * from.conj;
    rhs = to.conj * f.mat.conjugate();
  } else {
    // f(J_f bar u) = F bar(J_f) u vs C_to(F bar u) = J_t bar(F) u.
    lhs = f.mat * from.conj.conjugate();
    rhs = to.conj * f.mat.conjugate();
  }
  return inf_norm(CMat(lhs - rhs)) <= tol * scale;
}

Subspace full_subspace(int ambient_dim) {
  return Subspace{CMat::Identity(ambient_dim, ambient_dim)};
}

Subspace zero_subspace(int ambient_dim) {
  return Subspace{CMat(ambient_dim, 0)};
}

Subspace equalizer(const SymplecticMap& f, const SymplecticMap& g, double tol) {
  if (f.antilinear != g.antilinear)
    throw std::invalid_argument("equalizer of maps with mixed linearity");
  if (f.mat.rows() != g.mat.rows() || f.mat.cols() != g.mat.cols())
    throw std::invalid_argument("equalizer shape mismatch");
  CMat ker = nullspace(CMat(f.mat - g.mat), tol);
  // Antilinear pair: (F-G) bar(v) = 0 means bar(v) lies in the kernel.
  if (f.antilinear) ker = ker.conjugate();
  return Subspace{ker};
}

Subspace subspace_intersect(const Subspace& a, const Subspace& b, double tol) {
  if (a.ambient() != b.ambient()) throw std::invalid_argument("ambient mismatch");
  return Subspace{span_intersect(a.basis, b.basis, tol)};
}

Subspace subspace_union(const Subspace& a, const Subspace& b, double tol) {
  if (a.ambient() != b.ambient()) throw std::invalid_argument("ambient mismatch");
  return Subspace{span_union(a.basis, b.basis, tol)};
}

PreSymplecticSpace restrict_space(const PreSymplecticSpace& v, const Subspace& s,
                                  double tol) {
  if (s.ambient() != v.dim()) throw std::invalid_argument("ambient mismatch");
  const CMat& b = s.basis;
  CMat conj_images = v.conj * b.conjugate();
  CMat conj_in_coords = b.adjoint() * conj_images;
  if (inf_norm(CMat(b * conj_in_coords - conj_images)) > tol * (1.0 + inf_norm(v.conj)))
    throw std::invalid_argument("restriction to a non conj-invariant subspace");
  PreSymplecticSpace out;
  out.field = v.field;
  out.sigma = b.transpose() * v.sigma * b;  // bilinear: transpose, not adjoint
  out.conj = conj_in_coords;
  validate_space(out, 1e-8);
  return out;
}

CMat conj_fixed_points(const PreSymplecticSpace& v, const CMat& within, double tol) {
  CMat w = orth(within, tol);
  if (w.cols() == 0) return CMat(v.dim(), 0);
  // Conjugation in subspace coordinates; fixed coordinates embed back via w.
  CMat j_sub = w.adjoint() * v.conj * w.conjugate();
  return w * fixed_vectors_of(j_sub, tol);
}

Realified realify(const PreSymplecticSpace& v, double tol) {
  CMat fixed = fixed_vectors_of(v.conj, tol);
  const int n = static_cast<int>(fixed.cols());
  RMat sig(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      cplx val = sigma_pair(v, fixed.col(i), fixed.col(k));
      sig(i, k) = val.real();
    }
  Realified out;
  out.space = make_real_space(RMat((sig - sig.transpose()) / 2.0));
  out.embedding = fixed;
  return out;
}

} // namespace dynloc
