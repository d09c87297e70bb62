// Exact Weyl layer: the twisted group algebra over rational labels, orbit
// machinery under exactly symplectic permutations, span comparisons with
// witnesses, and the l2 representation.
#include <cmath>
#include <cstdio>
#include <vector>

#include "dynloc/locality.hpp"
#include "dynloc/weyl.hpp"

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

static RatVec rand_label(Rng& rng, int d) {
  RatVec u(d);
  for (auto& q : u) {
    q = mpq_class(rng.uniform_int(-4, 4));
    q /= rng.uniform_int(1, 3);
  }
  return u;
}

int main() {
  Rng rng(97);

  // Small standard form, d = 4.
  const int d = 4;
  RatMat sigma(d, RatVec(d, mpq_class(0)));
  sigma[0][2] = 1; sigma[2][0] = -1;
  sigma[1][3] = 1; sigma[3][1] = -1;

  const RatVec u = rand_label(rng, d), v = rand_label(rng, d), w = rand_label(rng, d);
  const auto wu = weyl_generator(u), wv = weyl_generator(v), ww = weyl_generator(w);

  // Composition law and exchange relation, exactly.
  {
    auto lhs = weyl_mul(wu, wv, sigma);
    auto rhs = weyl_scale(weyl_mul(wv, wu, sigma), CmplxRat(1),
                          mpq_class(-weyl_pairing(sigma, u, v)));
    check(weyl_equal(lhs, rhs), "exchange relation with exact phase");
    check(lhs.terms.size() == 1, "product is a single generator term");
  }
  {
    auto lhs = weyl_mul(weyl_mul(wu, wv, sigma), ww, sigma);
    auto rhs = weyl_mul(wu, weyl_mul(wv, ww, sigma), sigma);
    check(weyl_equal(lhs, rhs), "associativity of the twisted product");
  }
  {
    auto prod = weyl_mul(wu, weyl_star(wu), sigma);
    check(weyl_equal(prod, weyl_one(d)), "W(u) W(u)* is the identity");
  }
  {
    auto a = weyl_add(wu, weyl_scale(wv, CmplxRat{mpq_class(2), mpq_class(1)}, mpq_class(1, 3)));
    auto b = weyl_add(ww, weyl_one(d));
    auto lhs = weyl_star(weyl_mul(a, b, sigma));
    auto rhs = weyl_mul(weyl_star(b), weyl_star(a), sigma);
    check(weyl_equal(lhs, rhs), "star reverses twisted products");
  }
  {
    auto prod = weyl_mul(wu, wv, sigma);
    RatVec sum(d);
    for (int i = 0; i < d; ++i) sum[i] = u[i] + v[i];
    const double th = -weyl_pairing(sigma, u, v).get_d() / 2;
    const cplx expect(std::cos(th), std::sin(th));
    close_to(std::abs(weyl_coeff_float(prod, sum) - expect), 1e-15,
             "float coefficient matches the phase");
  }

  // Orbit machinery under an exactly symplectic permutation: rotate the
  // circle by one site in both phi and pi.
  {
    GridGeom geom{Topology::Circle, 20, 12, 0.2, 0.25};
    const RatMat gsig = weyl_form_of_grid(geom);
    const int aw = geom.active_width();
    const int gd = 2 * aw;
    RatMat rot(gd, RatVec(gd, mpq_class(0)));
    for (int i = 0; i < aw; ++i) {
      rot[(i + 1) % aw][i] = 1;
      rot[aw + (i + 1) % aw][aw + i] = 1;
    }
    check(preserves_form(rot, gsig), "rotation preserves the grid form");

    RatVec e0(gd, mpq_class(0));
    e0[0] = 1;
    auto orbit = label_orbit(rot, e0, 64);
    check(static_cast<int>(orbit.size()) == aw, "unit label orbit closes after nx steps");
    auto avg = orbit_average(orbit);
    check(weyl_equal(weyl_map(avg, rot), avg), "orbit average is fixed");
    check(!weyl_equal(weyl_map(weyl_generator(e0), rot), weyl_generator(e0)),
          "single generator is moved");

    auto fixed = family_fixed_labels({rot});
    check(static_cast<int>(fixed.size()) == 2, "rotation fixes the two constant labels");

    // A homomorphism on products, exactly.
    auto a = weyl_add(weyl_generator(e0), weyl_one(gd));
    RatVec e7(gd, mpq_class(0));
    e7[aw + 3] = 1;
    auto b = weyl_generator(e7);
    auto lhs = weyl_map(weyl_mul(a, b, gsig), rot);
    auto rhs = weyl_mul(weyl_map(a, rot), weyl_map(b, rot), gsig);
    check(weyl_equal(lhs, rhs), "mapping along the rotation is multiplicative");
  }

  // Exact span comparisons: massive nets agree; the massless circle gains
  // exactly the constant, with the constant exhibited as witness.
  {
    GridGeom geom{Topology::Circle, 20, 12, 0.2, 0.25};
    RatMat kin = interval_print_labels(geom, 4, 7);
    RatMat dyn_massive = kin;
    auto rep = weyl_locality_check(kin, dyn_massive);
    check(rep.kin_inside_dyn && rep.dyn_inside_kin && rep.kin_rank == rep.dyn_rank,
          "massive circle diamond: spans coincide");

    RatMat dyn_massless = kin;
    dyn_massless.push_back(constant_label(geom));
    rep = weyl_locality_check(kin, dyn_massless);
    check(rep.kin_inside_dyn && !rep.dyn_inside_kin && rep.dyn_rank == rep.kin_rank + 1,
          "massless circle diamond: dyn exceeds kin by one");
    check(!rep.witness.empty() && rep.witness == constant_label(geom),
          "witness is the constant label");
  }

  // Line pair of diamonds at zero mass: the plateau joins the dynamical
  // span but not the kinematic one.
  {
    GridGeom geom{Topology::Line, 12, 48, 0.2, 0.25};
    RatMat kin = interval_print_labels(geom, 10, 14);
    for (auto& row : interval_print_labels(geom, 34, 38)) kin.push_back(row);
    RatMat dyn = kin;
    dyn.push_back(plateau_label(geom, 9, 15, 33, 39));
    auto rep = weyl_locality_check(kin, dyn);
    check(rep.kin_inside_dyn && !rep.dyn_inside_kin && rep.dyn_rank == rep.kin_rank + 1,
          "line pair: plateau enlarges the dynamical span");
    check(!rep.witness.empty() && rep.witness == plateau_label(geom, 9, 15, 33, 39),
          "witness is the plateau label");
  }

  // The structural labels really span the float invariant subspace.
  {
    GridGeom geom{Topology::Circle, 20, 12, 0.2, 0.25};
    Spacetime st = make_flat(geom);
    LocalityContext ctx;
    ctx.st = &st;
    ctx.mass = 0.5;
    ctx.row = 9;
    ctx.band_lo = 4;
    ctx.band_hi = 14;
    RMat solmap = solution_map(ctx);
    CompactBase k{{{4, 7}}};
    RMat inv = invariant_space(ctx, solmap, k);
    RatMat prints = interval_print_labels(geom, 4, 7);
    check(static_cast<int>(prints.size()) == inv.cols(), "print count matches invariant dim");
    double worst = 0;
    for (const auto& row : prints) {
      RVec f = label_to_float(row);
      worst = std::max(worst, residual_norm(inv, f) / f.norm());
    }
    close_to(worst, 1e-9, "prints lie in the float invariant space");
  }

  // l2 action of the exact algebra.
  {
    Rng lrng(31);
    auto rand_l = [&](void) {
      RatVec x(d);
      for (auto& q : x) {
        q = mpq_class(lrng.uniform_int(-3, 3), 1 + lrng.uniform_int(0, 2));
        q.canonicalize();
      }
      return x;
    };
    auto rand_elem = [&](int nterms) {
      WeylElement e = weyl_zero(d);
      for (int t = 0; t < nterms; ++t) {
        CmplxRat amp{mpq_class(lrng.uniform_int(-2, 2)), mpq_class(lrng.uniform_int(-2, 2))};
        mpq_class th(lrng.uniform_int(-4, 4), 3);
        th.canonicalize();
        e = weyl_add(e, weyl_scale(weyl_generator(rand_l()), amp, th));
      }
      return e;
    };
    auto rand_vec = [&](int npts) {
      WeylVector f = vector_zero(d);
      for (int t = 0; t < npts; ++t) {
        CmplxRat amp{mpq_class(lrng.uniform_int(-2, 2)), mpq_class(lrng.uniform_int(-2, 2))};
        mpq_class th(lrng.uniform_int(-4, 4), 5);
        th.canonicalize();
        f = vector_add(f, vector_point(rand_l(), amp, th));
      }
      return f;
    };

    bool rep_ok = true, star_ok = true, unit_ok = true;
    for (int trial = 0; trial < 60; ++trial) {
      auto A = rand_elem(3);
      auto B = rand_elem(2);
      auto f = rand_vec(3);
      auto g = rand_vec(3);
      if (!vector_equal(ell2_action(sigma, weyl_mul(A, B, sigma), f),
                        ell2_action(sigma, A, ell2_action(sigma, B, f))))
        rep_ok = false;
      if (!phase_sum_equal(ell2_inner(f, ell2_action(sigma, weyl_star(A), g)),
                           ell2_inner(ell2_action(sigma, A, f), g)))
        star_ok = false;
      if (!vector_equal(ell2_action(sigma, weyl_one(d), f), f)) unit_ok = false;
    }
    check(rep_ok, "pi(AB) f = pi(A) pi(B) f, exactly, 60 trials");
    check(star_ok, "<f, pi(A*) g> = <pi(A) f, g>, exactly, 60 trials");
    check(unit_ok, "unit acts as the identity");

    // Inner product of a point with itself sits at phase zero.
    auto p = vector_point(rand_l(), CmplxRat{mpq_class(2), mpq_class(1)}, mpq_class(1, 7));
    auto ip = ell2_inner(p, p);
    const CmplxRat five{mpq_class(5), mpq_class(0)};
    check(ip.parts.size() == 1 && ip.parts[0].first == 0 && ip.parts[0].second == five,
          "point norm is |amp|^2 at phase zero");
  }

  // Orbit sums under the quarter rotation of the plane.
  {
    Rng orng(31);
    RatMat rot(2, RatVec(2, mpq_class(0)));
    rot[0][1] = -1;
    rot[1][0] = 1;

    std::vector<RatVec> pool;
    for (int t = 0; t < 25; ++t) {
      RatVec x(2);
      x[0] = mpq_class(orng.uniform_int(-4, 4), 1 + orng.uniform_int(0, 1));
      x[1] = mpq_class(orng.uniform_int(-4, 4), 1 + orng.uniform_int(0, 1));
      x[0].canonicalize();
      x[1].canonicalize();
      pool.push_back(x);
    }
    auto basis = orbit_sum_basis(rot, pool, 8);
    bool all_fixed = true;
    for (const auto& e : basis)
      if (!weyl_equal(weyl_map(e, rot), e)) all_fixed = false;
    check(all_fixed, "every orbit sum is rotation fixed");
    check(basis.size() <= pool.size(), "orbits dedupe the pool");

    // Each pool label must land in exactly one basis element's support.
    bool covered = true;
    for (const auto& x : pool) {
      int hits = 0;
      for (const auto& e : basis)
        for (const auto& t : e.terms)
          if (t.label == x) ++hits;
      if (hits != 1) covered = false;
    }
    check(covered, "pool labels partition into orbits");
  }

  std::printf("%s\n", fails == 0 ? "all ok" : "FAILURES");
  return fails == 0 ? 0 : 1;
}
