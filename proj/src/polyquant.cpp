#include "dynloc/polyquant.hpp"

#include <cmath>
#include <stdexcept>

namespace dynloc {

double poly_diff_max(const PolyElement<cplx>& a, const PolyElement<cplx>& b) {
  if (a.dim != b.dim || a.cap != b.cap) throw std::invalid_argument("poly shape mismatch");
  double worst = 0.0;
  for (int k = 0; k <= a.cap; ++k)
    worst = std::max(worst, tensor_diff_max(a.terms[k], b.terms[k]));
  return worst;
}

bool poly_exact_equal(const PolyElement<CmplxRat>& a, const PolyElement<CmplxRat>& b) {
  if (a.dim != b.dim || a.cap != b.cap) return false;
  for (int k = 0; k <= a.cap; ++k)
    for (long o = 0; o < a.terms[k].size(); ++o)
      if (!(a.terms[k].a[o] == b.terms[k].a[o])) return false;
  return true;
}

TensorND<cplx> form_from_matrix(const CMat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("form matrix must be square");
  const int d = static_cast<int>(m.rows());
  TensorND<cplx> f(d, 2);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) f.a[static_cast<long>(a) * d + b] = m(a, b);
  return f;
}

PolyElement<cplx> weyl_series_element(const std::vector<cplx>& u, int cap) {
  PolyElement<cplx> p = poly_zero<cplx>(static_cast<int>(u.size()), cap);
  double kfact = 1.0;
  for (int k = 0; k <= cap; ++k) {
    if (k > 0) kfact *= k;
    p.terms[k] = tensor_from_power(u, k) * (i_power_scalar<cplx>(k) / kfact);
  }
  return p;
}

double weyl_identity_defect(const std::vector<cplx>& u, const std::vector<cplx>& v,
                            const TensorND<cplx>& sigma, int k, int j) {
  const int d = static_cast<int>(u.size());
  if (v.size() != u.size()) throw std::invalid_argument("length mismatch");
  if (sigma.degree != 2 || sigma.dim != d) throw std::invalid_argument("bad form");
  if (k < 0 || j < 0) throw std::invalid_argument("negative order");

  auto fact = [](int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
  };

  // Terms of W(u) W(v) that land in degree k through exactly j contractions.
  TensorND<cplx> lhs(d, k);
  for (int m = j; m <= k + j; ++m) {
    const int n = k + 2 * j - m;
    const cplx coeff = moyal_coeff<cplx>(m, n, j) * i_power_scalar<cplx>(m) *
                       i_power_scalar<cplx>(n) / (fact(m) * fact(n));
    const TensorND<cplx> piece =
        contract_outer(tensor_from_power(u, m), tensor_from_power(v, n), j, sigma);
    lhs += symmetrize(piece) * coeff;
  }

  cplx suv = 0.0;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) suv += sigma.a[static_cast<long>(a) * d + b] * u[a] * v[b];

  std::vector<cplx> w(u.size());
  for (size_t i = 0; i < w.size(); ++i) w[i] = u[i] + v[i];
  const cplx phase = std::pow(cplx(0, -0.5) * suv, j) / fact(j);
  const TensorND<cplx> rhs =
      tensor_from_power(w, k) * (i_power_scalar<cplx>(k) / fact(k) * phase);

  return tensor_diff_max(lhs, rhs);
}

CMat poly_support(const PolyElement<cplx>& a, double tol) {
  CMat u(a.dim, 0);
  for (int deg = 1; deg <= a.cap; ++deg)
    if (tensor_nonzero(a.terms[deg]))
      u = span_union(u, support_subspace(a.terms[deg], tol), tol);
  return u;
}

bool poly_in_envelope(const PolyElement<cplx>& a, const CMat& u, double tol) {
  for (int deg = 1; deg <= a.cap; ++deg)
    if (tensor_nonzero(a.terms[deg]) && !envelope_membership(a.terms[deg], u, tol))
      return false;
  return true;
}

RMat pair_power_matrix(const RMat& r) {
  if (r.rows() != r.cols()) throw std::invalid_argument("map must be square");
  const int d = static_cast<int>(r.rows());
  RMat m(static_cast<long>(d) * d, static_cast<long>(d) * d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b)
      for (int c = 0; c < d; ++c)
        for (int e = 0; e < d; ++e)
          m(static_cast<long>(a) * d + b, static_cast<long>(c) * d + e) = r(a, c) * r(b, e);
  return m;
}

RVec vec_of_pair_tensor(const TensorND<cplx>& t) {
  if (t.degree != 2) throw std::invalid_argument("need a degree-2 tensor");
  RVec v(t.size());
  for (long o = 0; o < t.size(); ++o) {
    if (std::abs(t.a[o].imag()) > 1e-12 * std::max(1.0, tensor_max_abs(t)))
      throw std::invalid_argument("pair tensor has an imaginary part");
    v(o) = t.a[o].real();
  }
  return v;
}

TensorND<cplx> pair_tensor_of_vec(const RVec& v, int dim) {
  if (v.size() != static_cast<long>(dim) * dim) throw std::invalid_argument("length mismatch");
  TensorND<cplx> t(dim, 2);
  for (long o = 0; o < t.size(); ++o) t.a[o] = v(o);
  return t;
}

namespace {

// Kernel with an absolute tolerance floor.  The refinement loop below
// feeds in residual matrices that shrink toward zero as the basis
// converges onto the joint kernel; a purely relative cut would then
// start treating rounding noise as signal and wipe the basis out.
RMat kernel_with_floor(const RMat& m, double tol) {
  if (m.rows() == 0 || m.cols() == 0) return RMat::Identity(m.cols(), m.cols());
  Eigen::VectorXd sv;
  RMat v;
  if (m.rows() >= 512) {
    Eigen::BDCSVD<RMat> svd(m, Eigen::ComputeFullV);
    sv = svd.singularValues();
    v = svd.matrixV();
  } else {
    Eigen::JacobiSVD<RMat> svd(m, Eigen::ComputeFullV);
    sv = svd.singularValues();
    v = svd.matrixV();
  }
  const double cut = tol * std::max(1.0, sv.size() ? sv(0) : 0.0);
  int r = 0;
  while (r < sv.size() && sv(r) > cut) ++r;
  return v.rightCols(m.cols() - r);
}

// Orthonormal basis of the symmetric pair tensors inside R^(d^2).
RMat sym_pair_seed(int d) {
  RMat s(static_cast<long>(d) * d, static_cast<long>(d) * (d + 1) / 2);
  s.setZero();
  long col = 0;
  const double half = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < d; ++i) {
    s(static_cast<long>(i) * d + i, col++) = 1.0;
    for (int j = i + 1; j < d; ++j) {
      s(static_cast<long>(i) * d + j, col) = half;
      s(static_cast<long>(j) * d + i, col) = half;
      ++col;
    }
  }
  return s;
}

} // namespace

RMat joint_pair_fixed_space(const std::vector<RMat>& maps, double tol) {
  if (maps.empty()) throw std::invalid_argument("need at least one map");
  const int d = static_cast<int>(maps[0].rows());
  // Restrict to symmetric pairs from the start: the form itself is an
  // antisymmetric tensor fixed by every symplectic map, and degree-2
  // algebra elements are symmetric, so the antisymmetric sector is noise
  // here.  R (x) R preserves the split, making the restriction exact.
  RMat basis = sym_pair_seed(d);
  for (const RMat& r : maps) {
    if (basis.cols() == 0) break;
    if (r.rows() != d || r.cols() != d) throw std::invalid_argument("map size mismatch");
    RMat m = pair_power_matrix(r);
    m.diagonal().array() -= 1.0;
    const RMat ker = kernel_with_floor(RMat(m * basis), tol);
    basis = RMat(basis * ker);  // orthonormal times orthonormal
  }
  return basis;
}

RMat sym_square_space(const RMat& basis) {
  const long d = basis.rows();
  const int f = static_cast<int>(basis.cols());
  RMat out(d * d, static_cast<long>(f) * (f + 1) / 2);
  long col = 0;
  for (int i = 0; i < f; ++i)
    for (int j = i; j < f; ++j) {
      // Symmetric, so the flattening order cannot matter.
      const RMat pair = 0.5 * (basis.col(i) * basis.col(j).transpose() +
                               basis.col(j) * basis.col(i).transpose());
      out.col(col++) = Eigen::Map<const RVec>(pair.data(), d * d);
    }
  return orth(out, kRankTol);
}

RMat sym_mixed_space(const RMat& a, const RMat& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("row mismatch");
  const long d = a.rows();
  RMat out(d * d, a.cols() * b.cols());
  long col = 0;
  for (int i = 0; i < a.cols(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      const RMat pair =
          0.5 * (a.col(i) * b.col(j).transpose() + b.col(j) * a.col(i).transpose());
      out.col(col++) = Eigen::Map<const RVec>(pair.data(), d * d);
    }
  return orth(out, kRankTol);
}

RMat quarter_turn_map() {
  RMat r(2, 2);
  r << 0, -1, 1, 0;
  return r;
}

QuantizedLocalityReport quantized_locality_check(const LocalityContext& ctx,
                                                 const RMat& solmap, const CompactBase& k,
                                                 Rng& rng) {
  validate_context(ctx);
  const auto probes = sample_probes(ctx, probe_region(ctx, k), rng);
  const RceRows rows = ctx.rce_rows();
  std::vector<RMat> maps;
  maps.reserve(probes.size());
  for (const auto& p : probes) maps.push_back(rce_matrix(*ctx.st, ctx.mass, p, rows, ctx.pol));

  const RMat fixed2 = joint_pair_fixed_space(maps);
  const RMat classical = invariant_space(ctx, solmap, k);
  const RMat sym2 = sym_square_space(classical);

  QuantizedLocalityReport rep;
  rep.classical_dim = static_cast<int>(classical.cols());
  rep.fixed_pair_dim = static_cast<int>(fixed2.cols());
  rep.sym_square_dim = static_cast<int>(sym2.cols());
  rep.defect = std::max(containment_defect(fixed2, sym2), containment_defect(sym2, fixed2));
  rep.probes = probes.size();
  rep.classical = classical;
  rep.fixed_pairs = fixed2;
  return rep;
}

} // namespace dynloc
