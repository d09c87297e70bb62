// Dense tensor layer: indexing, symmetrization, contractions, slot maps,
// the exact rational scalar, and support-subspace reconstruction.
#include <cmath>
#include <cstdio>
#include <vector>

#include "dynloc/tensor.hpp"

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

static TensorND<cplx> rand_tensor(Rng& rng, int dim, int deg) {
  TensorND<cplx> t(dim, deg);
  for (long o = 0; o < t.size(); ++o) t.a[o] = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
  return t;
}

static TensorND<cplx> rand_form(Rng& rng, int dim) {
  TensorND<cplx> s(dim, 2);
  for (int a = 0; a < dim; ++a)
    for (int b = a + 1; b < dim; ++b) {
      const double v = rng.uniform(-1, 1);
      s.a[(long)a * dim + b] = v;
      s.a[(long)b * dim + a] = -v;
    }
  return s;
}

static std::vector<cplx> rand_cvec(Rng& rng, int d) {
  std::vector<cplx> v(d);
  for (auto& z : v) z = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
  return v;
}

int main() {
  Rng rng(60309);

  // Exact complex rationals.
  {
    CmplxRat a{mpq_class(1, 3), mpq_class(2)};
    CmplxRat b{mpq_class(-2), mpq_class(1, 2)};
    CmplxRat p = a * b;  // (1/3 + 2i)(-2 + i/2) = -5/3 - 23i/6
    check(p.re == mpq_class(-5, 3) && p.im == mpq_class(-23, 6),
          "rational complex product is exact");
    check(conj_scalar(a).im == mpq_class(-2), "rational conjugation flips the sign");
    check(std::abs(to_cplx(a) - cplx(1.0 / 3.0, 2.0)) < 1e-15, "float conversion");
  }

  // Index bookkeeping.
  {
    TensorND<cplx> t(3, 4);
    std::vector<int> idx{2, 0, 1, 2};
    t.at(idx) = cplx(5, -1);
    std::vector<int> back;
    decode_index(t.offset(idx), 3, 4, back);
    check(back == idx, "offset and decode are inverse");
    check(t.a[t.offset(idx)] == cplx(5, -1), "at() addresses the same cell");
  }

  // Power tensors and adjacent swaps.
  {
    auto v = rand_cvec(rng, 3);
    auto t = tensor_from_power(v, 3);
    check(std::abs(t.at({1, 0, 2}) - v[1] * v[0] * v[2]) < 1e-15,
          "power tensor entries are products");
    auto s = swap_adjacent(t, 1);
    check(std::abs(s.at({1, 2, 0}) - t.at({1, 0, 2})) < 1e-15, "swap moves entries");
    auto ss = swap_adjacent(s, 1);
    close_to(tensor_diff_max(ss, t), 0.0, "double swap is the identity");
    bool threw = false;
    try {
      (void)swap_adjacent(t, 2);
    } catch (const std::out_of_range&) {
      threw = true;
    }
    check(threw, "swap at the last slot is rejected");
  }

  // Symmetrization: matches the degree-2 closed form, is idempotent, and
  // leaves power tensors alone (exactly so over the rationals).
  {
    auto t = rand_tensor(rng, 4, 2);
    auto sym = symmetrize(t);
    double worst = 0;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        worst = std::max(worst,
                         std::abs(sym.at({a, b}) - 0.5 * (t.at({a, b}) + t.at({b, a}))));
    close_to(worst, 1e-15, "degree-2 symmetrization is the half sum");
    close_to(tensor_diff_max(symmetrize(sym), sym), 1e-14, "symmetrize is idempotent");

    std::vector<CmplxRat> vq{CmplxRat{mpq_class(1, 2), mpq_class(1)},
                             CmplxRat{mpq_class(3), mpq_class(-1, 4)}};
    auto tq = tensor_from_power(vq, 3);
    auto symq = symmetrize(tq);
    bool same = true;
    for (long o = 0; o < tq.size(); ++o)
      if (!(symq.a[o] == tq.a[o])) same = false;
    check(same, "power tensors are exactly symmetric");
  }

  // Contractions against an antisymmetric form.
  {
    const int d = 3;
    auto sigma = rand_form(rng, d);
    auto t = rand_tensor(rng, d, 3);

    auto c = contract_slots(t, 0, 2, sigma);
    double worst = 0;
    for (int j = 0; j < d; ++j) {
      cplx manual = 0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) manual += sigma.at({a, b}) * t.at({a, j, b});
      worst = std::max(worst, std::abs(c.at({j}) - manual));
    }
    close_to(worst, 1e-14, "contract_slots matches the double sum");

    auto u = rand_cvec(rng, d), v = rand_cvec(rng, d);
    auto tu = tensor_from_power(u, 1), tv = tensor_from_power(v, 1);
    auto pair = contract_outer(tu, tv, 1, sigma);
    cplx suv = 0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) suv += sigma.at({a, b}) * u[a] * v[b];
    check(pair.degree == 0 && std::abs(pair.a[0] - suv) < 1e-14,
          "full outer contraction of two vectors is sigma(u, v)");

    auto outer = contract_outer(tu, tv, 0, sigma);
    close_to(std::abs(outer.at({1, 2}) - u[1] * v[2]), 1e-15,
             "zero-order contraction is the outer product");

    // One contraction of (u (x) v) against w pairs v with w.
    auto tuv = contract_outer(tu, tv, 0, sigma);
    auto w = rand_cvec(rng, d);
    auto tw = tensor_from_power(w, 1);
    auto once = contract_outer(tuv, tw, 1, sigma);
    cplx svw = 0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) svw += sigma.at({a, b}) * v[a] * w[b];
    worst = 0;
    for (int j = 0; j < d; ++j) worst = std::max(worst, std::abs(once.at({j}) - u[j] * svw));
    close_to(worst, 1e-14, "partial contraction pairs the inner slots");
  }

  // Slot maps: degree-2 congruence, the non-square guard, pad-and-crop.
  {
    const int d = 3;
    auto t = rand_tensor(rng, d, 2);
    std::vector<cplx> m = rand_cvec(rng, d * d);
    auto mt = apply_to_all_slots(t, m, d);
    double worst = 0;
    for (int r = 0; r < d; ++r)
      for (int s = 0; s < d; ++s) {
        cplx manual = 0;
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            manual += m[(long)r * d + a] * m[(long)s * d + b] * t.at({a, b});
        worst = std::max(worst, std::abs(mt.at({r, s}) - manual));
      }
    close_to(worst, 1e-13, "slotwise map on degree 2 is the congruence");

    bool threw = false;
    try {
      (void)apply_to_all_slots(t, std::vector<cplx>((size_t)2 * d, cplx(1)), 2);
    } catch (const std::invalid_argument&) {
      threw = true;
    }
    check(threw, "non-square slot map on degree 2 throws");

    auto padded = resize_ambient(t, 5);
    auto back = resize_ambient(padded, d);
    close_to(tensor_diff_max(back, t), 0.0, "pad then crop restores the tensor");
    check(padded.at({4, 4}) == cplx(0), "padding is zero filled");
  }

  // Construction guard.
  {
    bool threw = false;
    try {
      TensorND<cplx> huge(100, 5);
    } catch (const std::length_error&) {
      threw = true;
    }
    check(threw, "oversized tensor allocation throws");
  }

  // Mode-0 unfolding and support subspaces.
  {
    const int d = 4;
    auto t = rand_tensor(rng, d, 3);
    CMat unf = mode0_unfolding(t);
    check(unf.rows() == d && unf.cols() == d * d, "unfolding shape");
    check(std::abs(unf(2, (long)1 * d + 3) - t.at({2, 1, 3})) < 1e-15, "unfolding layout");

    auto u = rand_cvec(rng, d);
    auto pu = tensor_from_power(u, 3);
    CMat supp = support_subspace(pu);
    CMat uc(d, 1);
    for (int i = 0; i < d; ++i) uc(i, 0) = u[i];
    check(supp.cols() == 1 && same_space(supp, orth(uc), 1e-10),
          "support of a cube is the line it is built on");

    auto v = rand_cvec(rng, d);
    TensorND<cplx> two = pu;
    two += tensor_from_power(v, 3);
    CMat supp2 = support_subspace(two);
    check(supp2.cols() == 2, "sum of two cubes has plane support");
    check(envelope_membership(two, supp2), "tensor reconstructs from its support");
    check(!envelope_membership(two, supp), "one line is not enough");
  }

  // Random mixtures inside a fixed plane stay inside it: build symmetric
  // tensors from vectors of the plane and reconstruct the plane.
  {
    const int d = 5;
    double worst = 0;
    bool dims_ok = true, member_ok = true;
    for (int trial = 0; trial < 30; ++trial) {
      const int deg = 2 + trial % 3;
      auto u = rand_cvec(rng, d), v = rand_cvec(rng, d);
      TensorND<cplx> t(d, deg);
      for (int k = 0; k < 4; ++k) {
        const cplx ca(rng.uniform(-1, 1), rng.uniform(-1, 1));
        const cplx cb(rng.uniform(-1, 1), rng.uniform(-1, 1));
        std::vector<cplx> w(d);
        for (int i = 0; i < d; ++i) w[i] = ca * u[i] + cb * v[i];
        t += tensor_from_power(w, deg);
      }
      CMat plane(d, 2);
      for (int i = 0; i < d; ++i) {
        plane(i, 0) = u[i];
        plane(i, 1) = v[i];
      }
      CMat supp = support_subspace(t);
      if (supp.cols() != 2) dims_ok = false;
      worst = std::max(worst, containment_defect(orth(plane), supp));
      if (!envelope_membership(t, supp)) member_ok = false;
    }
    check(dims_ok, "mixture support recovers the plane dimension");
    close_to(worst, 1e-10, "mixture support sits inside the plane");
    check(member_ok, "mixtures reconstruct from their support");
  }

  // Float conversion of an exact tensor.
  {
    std::vector<CmplxRat> vq{CmplxRat{mpq_class(1, 4), mpq_class(0)},
                             CmplxRat{mpq_class(0), mpq_class(-3, 2)},
                             CmplxRat{mpq_class(2), mpq_class(1, 8)}};
    auto tq = tensor_from_power(vq, 2);
    auto tf = tensor_to_float(tq);
    check(std::abs(tf.at({0, 1}) - cplx(0.0, -0.375)) < 1e-15,
          "rational tensor converts entrywise");
  }

  std::printf("%s\n", fails == 0 ? "all ok" : "FAILURES");
  return fails == 0 ? 0 : 1;
}
