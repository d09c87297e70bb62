// Category-layer checks: presymplectic spaces, symplectic maps,
// equalizers, subspace calculus, and realification.  The transported
// instances (standard form pushed through a random complex change of
// basis) exercise nontrivial conjugations; commutation of realification
// with equalizers and intersections is verified against independently
// computed real-representation kernels.
#include <cmath>
#include <cstdio>

#include "dynloc/symplectic.hpp"

using namespace dynloc;

static int fails = 0;

static void check(bool ok, const char* what) {
  std::printf("%-64s %s\n", what, ok ? "ok" : "FAIL");
  if (!ok) ++fails;
}

static void close_to(double v, double tol, const char* what) {
  std::printf("%-56s %.3e %s\n", what, v, v <= tol ? "ok" : "FAIL");
  if (!(v <= tol)) ++fails;
}

// Standard form on C^{2n}: sigma(q_k, p_k) = 1.
static CMat std_form(int pairs) {
  const int d = 2 * pairs;
  CMat s = CMat::Zero(d, d);
  for (int k = 0; k < pairs; ++k) {
    s(k, pairs + k) = 1;
    s(pairs + k, k) = -1;
  }
  return s;
}

// Well-conditioned random complex change of basis.
static CMat rand_basis_change(Rng& rng, int d) {
  return CMat::Identity(d, d) + 0.3 * rng.cgauss_mat(d, d);
}

// Standard space transported along m: sigma' = m^T J m, C'(v) = m^{-1} bar(m v).
static PreSymplecticSpace transported_space(const CMat& m, int pairs) {
  CMat sig = m.transpose() * std_form(pairs) * m;
  CMat conj_part = m.inverse() * m.conjugate();
  return make_space(sig, conj_part);
}

// Real symplectic matrix from elementary generators.  With fix_first set
// the generators avoid the first coordinate pair, so the (q1, p1) plane
// is fixed pointwise and (generically) nothing else is.
static RMat rand_real_symplectic(Rng& rng, int pairs, bool fix_first) {
  const int n = pairs, d = 2 * n;
  const int start = fix_first ? 1 : 0;
  RMat b = RMat::Zero(n, n), c = RMat::Zero(n, n);
  for (int i = start; i < n; ++i)
    for (int j = i; j < n; ++j) {
      b(i, j) = b(j, i) = 0.4 * rng.uniform(-1, 1);
      c(i, j) = c(j, i) = 0.4 * rng.uniform(-1, 1);
    }
  RMat s1 = RMat::Identity(d, d), s2 = RMat::Identity(d, d), s3 = RMat::Identity(d, d);
  s1.topRightCorner(n, n) = b;
  s2.bottomLeftCorner(n, n) = c;
  for (int i = start; i < n; ++i) {
    const double a = 1.0 + 0.5 * rng.uniform(-1, 1);
    s3(i, i) = a;
    s3(n + i, n + i) = 1.0 / a;
  }
  return s1 * s2 * s3;
}

// Stack a set of complex columns into real coordinates, so real spans of
// conjugation-fixed vectors can be compared with real linear algebra.
static RMat real_stack(const CMat& m) {
  RMat out(2 * m.rows(), m.cols());
  out.topRows(m.rows()) = m.real();
  out.bottomRows(m.rows()) = m.imag();
  return out;
}

// C'-invariant subspace spanned by the given vectors and their conjugates.
static CMat invariant_span(const PreSymplecticSpace& v, const std::vector<CVec>& gens) {
  CMat cols(v.dim(), 2 * static_cast<int>(gens.size()));
  for (size_t k = 0; k < gens.size(); ++k) {
    cols.col(2 * k) = gens[k];
    cols.col(2 * k + 1) = v.apply_conj(gens[k]);
  }
  return orth(cols);
}

int main() {
  Rng rng(40917);

  // Standard space basics.
  {
    PreSymplecticSpace v = make_space(std_form(2), CMat::Identity(4, 4));
    check(v.dim() == 4, "standard space has the right dimension");
    check(is_weakly_nondegenerate(v), "standard form is weakly nondegenerate");
    CVec q1 = CVec::Zero(4), p1 = CVec::Zero(4);
    q1(0) = 1;
    p1(2) = 1;
    check(std::abs(sigma_pair(v, q1, p1) - cplx(1, 0)) < 1e-14, "sigma(q1, p1) = 1");
    check(std::abs(sigma_pair(v, p1, q1) + cplx(1, 0)) < 1e-14, "sigma(p1, q1) = -1");

    PreSymplecticSpace vr = make_real_space(RMat(std_form(2).real()));
    check(vr.field == Field::Real, "real space carries the real field tag");

    PreSymplecticSpace degen = make_space(CMat::Zero(2, 2), CMat::Identity(2, 2));
    check(!is_weakly_nondegenerate(degen), "zero form on dim 2 is degenerate");
    PreSymplecticSpace nil = make_space(CMat(0, 0), CMat(0, 0));
    check(is_weakly_nondegenerate(nil), "zero-dimensional space passes");
  }

  // Constructor rejects malformed data.
  {
    bool threw = false;
    CMat bad = CMat::Identity(2, 2);  // symmetric, not antisymmetric
    try {
      (void)make_space(bad, CMat::Identity(2, 2));
    } catch (const std::invalid_argument&) {
      threw = true;
    }
    check(threw, "non-antisymmetric sigma is rejected");

    threw = false;
    try {  // conjugation that fails to be an involution
      (void)make_space(std_form(1), CMat(2.0 * CMat::Identity(2, 2)));
    } catch (const std::invalid_argument&) {
      threw = true;
    }
    check(threw, "non-involutive conjugation is rejected");
  }

  // Maps on the standard space: shear is symplectic, stretch is not.
  {
    PreSymplecticSpace v = make_space(std_form(1), CMat::Identity(2, 2));
    CMat shear = CMat::Identity(2, 2);
    shear(0, 1) = 0.7;
    check(is_symplectic_map(v, v, SymplecticMap{shear, false}), "shear preserves the form");
    check(!is_symplectic_map(v, v, SymplecticMap{CMat(2.0 * CMat::Identity(2, 2)), false}),
          "uniform stretch does not");
    // Conjugation itself is an antilinear automorphism.
    check(is_symplectic_map(v, v, SymplecticMap{CMat::Identity(2, 2), true}),
          "conjugation is antilinear symplectic");
  }

  // Equalizer of a plane-fixing map with the identity.
  {
    Rng lrng(11);
    const int pairs = 3, d = 6;
    RMat f = rand_real_symplectic(lrng, pairs, true);
    SymplecticMap fm{f.cast<cplx>(), false};
    SymplecticMap id{CMat::Identity(d, d), false};
    Subspace eq = equalizer(fm, id);
    check(eq.dim() == 2, "equalizer of plane-fixing map has dim 2");
    double worst = 0;
    for (int c = 0; c < eq.dim(); ++c)
      worst = std::max(worst, (fm.apply(eq.basis.col(c)) - eq.basis.col(c)).norm());
    close_to(worst, 1e-10, "equalizer columns are honestly fixed");

    bool threw = false;
    try {
      (void)equalizer(fm, SymplecticMap{CMat::Identity(d, d), true});
    } catch (const std::invalid_argument&) {
      threw = true;
    }
    check(threw, "equalizer refuses mixed linearity");
  }

  // Restriction to a non-invariant subspace throws.
  {
    PreSymplecticSpace v = make_space(std_form(2), CMat::Identity(4, 4));
    CMat one(4, 1);
    one.setZero();
    one(0, 0) = 1;
    one(1, 0) = cplx(0, 1);  // bar of it leaves the complex line
    bool threw = false;
    try {
      (void)restrict_space(v, Subspace{one});
    } catch (const std::invalid_argument&) {
      threw = true;
    }
    check(threw, "restriction to non-invariant subspace throws");
  }

  // Transported instances: structure, maps, realify commutation.
  {
    double worst_fix = 0, worst_eq = 0, worst_cap = 0, worst_closure = 0;
    bool all_maps = true, all_dims = true, all_restrict = true;
    const int instances = 25;
    for (int trial = 0; trial < instances; ++trial) {
      const int pairs = 1 + trial % 3;
      const int d = 2 * pairs;
      CMat m = rand_basis_change(rng, d);
      PreSymplecticSpace v = transported_space(m, pairs);

      // Realified space: dimension d, embedding honestly fixed.
      Realified r = realify(v);
      if (r.space.dim() != d) all_dims = false;
      for (int c = 0; c < r.embedding.cols(); ++c) {
        CVec col = r.embedding.col(c);
        worst_fix = std::max(worst_fix, (v.apply_conj(col) - col).norm() / col.norm());
      }

      // Transported real symplectic map, checked and equalized.  With a
      // single coordinate pair nothing is left to fix, so the map is
      // generic there and both kernels come out empty.
      RMat f0 = rand_real_symplectic(rng, pairs, pairs > 1);
      CMat fp = m.inverse() * f0.cast<cplx>() * m;
      SymplecticMap fmap{fp, false};
      if (!is_symplectic_map(v, v, fmap, 1e-8)) all_maps = false;
      Subspace eq = equalizer(fmap, SymplecticMap{CMat::Identity(d, d), false}, 1e-8);

      // Realification commutes with the equalizer: fixed points of the
      // conjugation inside eq match the kernel of the realified map.
      CMat a = conj_fixed_points(v, eq.basis);
      RMat emb = real_stack(r.embedding);
      RMat femb = real_stack(CMat(fp * r.embedding));
      RMat fr = emb.colPivHouseholderQr().solve(femb);
      worst_closure = std::max(
          worst_closure, (emb * fr - femb).cwiseAbs().maxCoeff());
      RMat kerr = nullspace(RMat(fr - RMat::Identity(d, d)), 1e-8);
      CMat b = r.embedding * kerr.cast<cplx>();
      worst_eq = std::max(worst_eq, a.cols() == b.cols()
                                        ? containment_defect(real_stack(a), real_stack(b))
                                        : 1.0);
      worst_eq = std::max(worst_eq, containment_defect(real_stack(b), real_stack(a)));

      // Realification commutes with intersections of invariant subspaces
      // sharing a generator (needs at least three pairs of coordinates).
      if (pairs == 3) {
        CVec x1 = rng.cgauss_vec(d), x2 = rng.cgauss_vec(d), x3 = rng.cgauss_vec(d);
        CMat u = invariant_span(v, {x1, x2});
        CMat w = invariant_span(v, {x2, x3});
        CMat both = conj_fixed_points(v, span_intersect(u, w));
        RMat left = real_stack(both);
        RMat right = span_intersect(real_stack(conj_fixed_points(v, u)),
                                    real_stack(conj_fixed_points(v, w)));
        worst_cap = std::max(worst_cap, containment_defect(left, right));
        worst_cap = std::max(worst_cap, containment_defect(right, left));

        // Restriction to the invariant subspace is again a valid space.
        try {
          PreSymplecticSpace sub = restrict_space(v, Subspace{u});
          if (sub.dim() != u.cols()) all_restrict = false;
        } catch (const std::exception&) {
          all_restrict = false;
        }
      }
    }
    check(all_dims, "realified dimension equals the complex dimension");
    check(all_maps, "transported real maps verify as symplectic");
    check(all_restrict, "restriction to invariant subspaces validates");
    close_to(worst_fix, 1e-9, "embedding columns fixed by conjugation");
    close_to(worst_closure, 1e-9, "realified map closes on the fixed space");
    close_to(worst_eq, 1e-9, "realify commutes with equalizers");
    close_to(worst_cap, 1e-9, "realify commutes with intersections");
  }

  // Subspace dimension bookkeeping on generic data.
  {
    CMat g1 = rng.cgauss_mat(6, 2), g2 = rng.cgauss_mat(6, 3);
    Subspace a{orth(g1)}, b{orth(g2)};
    Subspace cap = subspace_intersect(a, b);
    Subspace cup = subspace_union(a, b);
    check(cap.dim() == 0 && cup.dim() == 5, "generic 2+3 in dim 6: meet 0, join 5");
    check(cap.dim() + cup.dim() == a.dim() + b.dim(), "dimension formula holds");
    check(full_subspace(6).dim() == 6 && zero_subspace(6).dim() == 0,
          "full and zero subspaces");
  }

  std::printf("%s\n", fails == 0 ? "all ok" : "FAILURES");
  return fails == 0 ? 0 : 1;
}
