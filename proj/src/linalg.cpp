#include "dynloc/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace dynloc {

CMat orth(const CMat& m, double tol) {
  if (m.cols() == 0 || m.rows() == 0) return CMat(m.rows(), 0);
  Eigen::JacobiSVD<CMat> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return CMat(m.rows(), 0);
  int r = 0;
  while (r < sv.size() && sv(r) > tol * sv(0)) ++r;
  return svd.matrixU().leftCols(r);
}

int rank_of(const CMat& m, double tol) { return static_cast<int>(orth(m, tol).cols()); }

CMat nullspace(const CMat& m, double tol) {
  if (m.rows() == 0 || m.cols() == 0) return CMat::Identity(m.cols(), m.cols());
  Eigen::JacobiSVD<CMat> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  int r = 0;
  while (r < sv.size() && sv(r) > tol * (smax > 0 ? smax : 1.0)) ++r;
  return svd.matrixV().rightCols(m.cols() - r);
}

CMat span_union(const CMat& a, const CMat& b, double tol) {
  if (a.cols() == 0) return orth(b, tol);
  if (b.cols() == 0) return orth(a, tol);
  CMat ab(a.rows(), a.cols() + b.cols());
  ab << a, b;
  return orth(ab, tol);
}

CMat span_intersect(const CMat& a, const CMat& b, double tol) {
  if (a.cols() == 0 || b.cols() == 0) return CMat(a.rows(), 0);
  CMat qa = orth(a, tol), qb = orth(b, tol);
  if (qa.cols() == 0 || qb.cols() == 0) return CMat(a.rows(), 0);
  // x in both spans iff x = qa u = qb v; kernel of [qa, -qb] gives (u; v).
  CMat stack(qa.rows(), qa.cols() + qb.cols());
  stack << qa, -qb;
  CMat ker = nullspace(stack, tol);
  if (ker.cols() == 0) return CMat(a.rows(), 0);
  return orth(CMat(qa * ker.topRows(qa.cols())), tol);
}

double residual_norm(const CMat& basis, const CVec& v) {
  if (basis.cols() == 0) return v.norm();
  return (v - basis * (basis.adjoint() * v)).norm();
}

double containment_defect(const CMat& a, const CMat& b) {
  double worst = 0.0;
  for (int j = 0; j < b.cols(); ++j) {
    const CVec w = b.col(j);
    const double n = w.norm();
    if (n == 0.0) continue;
    worst = std::max(worst, residual_norm(a, w) / n);
  }
  return worst;
}

bool space_contains(const CMat& basis, const CVec& v, double tol) {
  const double n = v.norm();
  if (n == 0.0) return true;
  return residual_norm(basis, v) <= tol * n;
}

bool same_space(const CMat& a, const CMat& b, double tol) {
  return containment_defect(a, b) <= tol && containment_defect(b, a) <= tol;
}

RMat orth(const RMat& m, double tol) {
  if (m.cols() == 0 || m.rows() == 0) return RMat(m.rows(), 0);
  Eigen::JacobiSVD<RMat> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return RMat(m.rows(), 0);
  int r = 0;
  while (r < sv.size() && sv(r) > tol * sv(0)) ++r;
  return svd.matrixU().leftCols(r);
}

int rank_of(const RMat& m, double tol) { return static_cast<int>(orth(m, tol).cols()); }

RMat nullspace(const RMat& m, double tol) {
  if (m.rows() == 0 || m.cols() == 0) return RMat::Identity(m.cols(), m.cols());
  // Constraint stacks get tall; the divide-and-conquer SVD is much faster
  // there while Jacobi stays the accurate choice for small systems.
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
  const double smax = sv.size() ? sv(0) : 0.0;
  int r = 0;
  while (r < sv.size() && sv(r) > tol * (smax > 0 ? smax : 1.0)) ++r;
  return v.rightCols(m.cols() - r);
}

RMat span_union(const RMat& a, const RMat& b, double tol) {
  if (a.cols() == 0) return orth(b, tol);
  if (b.cols() == 0) return orth(a, tol);
  RMat ab(a.rows(), a.cols() + b.cols());
  ab << a, b;
  return orth(ab, tol);
}

RMat span_intersect(const RMat& a, const RMat& b, double tol) {
  if (a.cols() == 0 || b.cols() == 0) return RMat(a.rows(), 0);
  RMat qa = orth(a, tol), qb = orth(b, tol);
  if (qa.cols() == 0 || qb.cols() == 0) return RMat(a.rows(), 0);
  RMat stack(qa.rows(), qa.cols() + qb.cols());
  stack << qa, -qb;
  RMat ker = nullspace(stack, tol);
  if (ker.cols() == 0) return RMat(a.rows(), 0);
  return orth(RMat(qa * ker.topRows(qa.cols())), tol);
}

double residual_norm(const RMat& basis, const RVec& v) {
  if (basis.cols() == 0) return v.norm();
  return (v - basis * (basis.transpose() * v)).norm();
}

double containment_defect(const RMat& a, const RMat& b) {
  double worst = 0.0;
  for (int j = 0; j < b.cols(); ++j) {
    const RVec w = b.col(j);
    const double n = w.norm();
    if (n == 0.0) continue;
    worst = std::max(worst, residual_norm(a, w) / n);
  }
  return worst;
}

bool space_contains(const RMat& basis, const RVec& v, double tol) {
  const double n = v.norm();
  if (n == 0.0) return true;
  return residual_norm(basis, v) <= tol * n;
}

bool same_space(const RMat& a, const RMat& b, double tol) {
  return containment_defect(a, b) <= tol && containment_defect(b, a) <= tol;
}

std::uint64_t Rng::next_u64() {
  // splitmix64; small state, solid stream, fully portable.
  s_ += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = s_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Rng::u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double a, double b) { return a + (b - a) * u01(); }

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(next_u64() % span);
}

double Rng::gauss() {
  double u1 = u01(), u2 = u01();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

cplx Rng::cgauss() {
  const double re = gauss(), im = gauss();
  return {re, im};
}

CVec Rng::cgauss_vec(int n) {
  CVec v(n);
  for (int i = 0; i < n; ++i) v(i) = cgauss();
  return v;
}

CMat Rng::cgauss_mat(int r, int c) {
  CMat m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = cgauss();
  return m;
}

mpq_class rationalize(double x, double eps) {
  if (!std::isfinite(x)) throw std::invalid_argument("rationalize: non-finite input");
  const bool neg = x < 0;
  double t = std::fabs(x);
  // Continued-fraction convergents p/q of t.
  long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double frac = t;
  for (int it = 0; it < 64; ++it) {
    const double fl = std::floor(frac);
    if (fl > 9e17) break;
    const long a = static_cast<long>(fl);
    const long p2 = a * p1 + p0, q2 = a * q1 + q0;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    if (q1 > 0 && std::fabs(t - static_cast<double>(p1) / static_cast<double>(q1)) <= eps) break;
    const double rem = frac - fl;
    if (rem < 1e-18) break;
    frac = 1.0 / rem;
  }
  mpq_class q(neg ? -p1 : p1, q1 == 0 ? 1 : q1);
  q.canonicalize();
  return q;
}

double to_double(const mpq_class& q) { return q.get_d(); }

} // namespace dynloc
