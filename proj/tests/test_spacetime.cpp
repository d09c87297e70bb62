// Grids, metrics, the region calculus, exact one-cell cones, compact-base
// enumeration, and metric bumps.
#include <cmath>
#include <cstdio>
#include <vector>

#include "dynloc/spacetime.hpp"

using namespace dynloc;

static int fails = 0;

static void check(bool ok, const char* what) {
  std::printf("%-64s %s\n", what, ok ? "ok" : "FAIL");
  if (!ok) ++fails;
}

static GridGeom circle_geom(int nt, int nx) {
  GridGeom g;
  g.topology = Topology::Circle;
  g.nt = nt;
  g.nx = nx;
  g.dt = 0.2;
  g.dx = 0.25;
  return g;
}

int main() {
  // Geometry bookkeeping on both topologies.
  {
    GridGeom g = circle_geom(10, 8);
    check(g.wrap_x(-1) == 7 && g.wrap_x(9) == 1, "circle coordinates wrap");
    check(g.active_lo() == 0 && g.active_hi() == 7, "circle has no pinned columns");
    GridGeom gl = g;
    gl.topology = Topology::Line;
    check(gl.active_lo() == 1 && gl.active_hi() == 6, "line pins its edge columns");
    check(gl.active_width() == 6, "line active width excludes the pins");
    check(g.site(3, 5) == 29, "site index is row major");
  }

  // Flat metric and its densitized coefficients.
  {
    Spacetime st = make_flat(circle_geom(10, 8));
    check(std::abs(st.cap_a(4, 4) - 1.0) < 1e-15 && std::abs(st.cap_c(4, 4) + 1.0) < 1e-15 &&
              st.cap_b(4, 4) == 0.0 && std::abs(st.vol(4, 4) - 1.0) < 1e-15,
          "flat coefficients are (1, 0, -1) with unit volume");
    check(std::abs(cfl_margin(st) - 1.25) < 1e-12, "flat margin is dx over dt");

    GridGeom fast = circle_geom(10, 8);
    fast.dt = 0.3;  // light crosses more than one cell per step
    bool threw = false;
    try {
      (void)make_flat(fast);
    } catch (const std::domain_error&) {
      threw = true;
    }
    check(threw, "grid breaking the cell-per-step bound is rejected");

    threw = false;
    try {  // wrong signature: x direction timelike
      GridGeom g = circle_geom(10, 8);
      (void)make_spacetime(g, RMat::Constant(10, 8, 1.0), RMat::Zero(10, 8),
                           RMat::Constant(10, 8, 1.0));
    } catch (const std::domain_error&) {
      threw = true;
    }
    check(threw, "wrong signature is rejected");
  }

  // Region algebra.
  {
    GridGeom g = circle_geom(12, 16);
    Region a = row_interval_region(g, 5, 2, 6);
    Region b = row_interval_region(g, 5, 5, 9);
    check(a.count() == 5 && region_union(a, b).count() == 8 &&
              region_intersect(a, b).count() == 2,
          "union and intersection count cells");
    check(region_minus(a, b).count() == 3 && region_subset(region_intersect(a, b), a),
          "difference and subset agree");
    check(!regions_disjoint(a, b) && regions_disjoint(a, row_interval_region(g, 7, 2, 6)),
          "disjointness sees rows");

    Region d = diamond_region(g, 5, 4, 9);
    check(d.count() == 6 + 2 * 4 + 2 * 2, "diamond cell count (widths 6, 4, 2)");
    check(d.at(5, 4) && d.at(3, 6) && !d.at(3, 5) && !d.at(8, 6), "diamond shape");

    Region s = slab_region(g, 3, 5);
    check(s.count() == 3 * 16, "slab covers full rows on the circle");
    GridGeom gl = g;
    gl.topology = Topology::Line;
    check(slab_region(gl, 3, 5).count() == 3 * 14, "line slab skips pinned columns");

    Region wrap = row_interval_region(g, 5, 14, 17);  // crosses the seam
    check(wrap.count() == 4 && wrap.at(5, 15) && wrap.at(5, 1), "intervals wrap on the circle");
  }

  // Dilations.
  {
    GridGeom g = circle_geom(12, 16);
    Region p = row_interval_region(g, 5, 8, 8);  // single cell
    check(dilate_space(p, 2).count() == 5, "space dilation widens rows");
    check(dilate_box(p, 1).count() == 9, "box dilation fills the 3x3 block");
    Region plus = dilate_plus(p);
    check(plus.count() == 5 && plus.at(5, 8) && plus.at(4, 8) && plus.at(6, 8) &&
              plus.at(5, 7) && plus.at(5, 9),
          "plus dilation is the exact 4-neighbour cross");

    GridGeom gl = g;
    gl.topology = Topology::Line;
    Region edge = row_interval_region(gl, 5, 1, 2);
    Region grown = dilate_space(edge, 2);
    check(grown.count() == 5 && grown.at(5, 0) && !grown.at(5, 15),
          "line dilation clips at the grid edge instead of wrapping");
  }

  // Causal cones move one cell per row, exactly.
  {
    GridGeom g = circle_geom(12, 16);
    Region p = row_interval_region(g, 5, 8, 8);
    Region fut = causal_future(g, p);
    check(fut.at(5, 8) && fut.at(7, 10) && fut.at(7, 6) && !fut.at(7, 11) && !fut.at(4, 8),
          "future cone spreads one cell per row");
    Region past = causal_past(g, p);
    check(past.at(3, 6) && !past.at(3, 5) && !past.at(6, 8), "past cone mirrors it");
    Region hull = causal_hull(g, p);
    check(hull.count() == fut.count() + past.count() - 1, "hull glues the cones at the tip");
    Region comp = causal_complement(g, p);
    check(regions_disjoint(hull, comp) &&
              hull.count() + comp.count() == g.sites(),
          "complement partitions the grid against the hull");
  }

  // Connected components, including the seam of the circle.
  {
    GridGeom g = circle_geom(12, 16);
    Region two = region_union(diamond_region(g, 5, 2, 4), diamond_region(g, 5, 9, 11));
    check(connected_components(two).size() == 2, "separated diamonds split");
    Region seam = row_interval_region(g, 5, 14, 17);
    check(connected_components(seam).size() == 1, "seam-crossing interval is one piece");
    auto iv = row_intervals(g, two, 5);
    check(iv.size() == 2 && iv[0] == std::make_pair(2, 4) && iv[1] == std::make_pair(9, 11),
          "row intervals recover the footprints");
  }

  // Compact bases and their enumeration.
  {
    GridGeom g = circle_geom(16, 24);
    CompactBase k{{{6, 9}}};
    Region base = base_region(g, k, 8);
    check(base.count() == 4, "base region marks the interval");
    Region bt = bowtie(g, k, 8);
    check(bt.at(8, 6) && bt.at(11, 7) && !bt.at(11, 2), "bowtie is the causal hull");

    Region o = diamond_region(g, 8, 5, 14);
    auto bases = enumerate_compact_bases(g, o, 8, 2);
    check(!bases.empty(), "enumeration finds bases");
    bool has_max = false;
    bool all_inside = true;
    bool pairs_ok = true;
    for (const auto& cb : bases) {
      if (cb.intervals.size() == 1 && cb.intervals[0] == std::make_pair(6, 13)) has_max = true;
      for (auto [lo, hi] : cb.intervals)
        if (!region_subset(row_interval_region(g, 8, lo, hi), o)) all_inside = false;
      if (cb.intervals.size() == 2) {
        Region d0 = dilate_space(row_interval_region(g, 8, cb.intervals[0].first,
                                                     cb.intervals[0].second), 1);
        Region d1 = dilate_space(row_interval_region(g, 8, cb.intervals[1].first,
                                                     cb.intervals[1].second), 1);
        if (!regions_disjoint(d0, d1)) pairs_ok = false;
      }
    }
    check(has_max, "enumeration includes the maximal inset interval");
    check(all_inside, "all base intervals stay inside the region");
    check(pairs_ok, "paired bases keep dilated intervals disjoint");
    auto shallow = enumerate_compact_bases(g, o, 8, 0);
    check(shallow.size() < bases.size(), "deeper levels enumerate more bases");
  }

  // Metric bumps and perturbed spacetimes.
  {
    Spacetime st = make_flat(circle_geom(16, 24));
    MetricBump mb;
    mb.kind = BumpKind::Conformal;
    mb.amplitude = 0.2;
    mb.t_center = 8;
    mb.x_center = 10;
    mb.t_halfwidth = 3;
    mb.x_halfwidth = 4;
    Perturbation h = make_perturbation(st, {mb});
    check(h.support.at(8, 10) && !h.support.at(8, 15) && !h.support.at(12, 10),
          "bump support is the open box");
    check(h.h_tx.cwiseAbs().maxCoeff() == 0.0, "conformal bump keeps the shift zero");
    check(std::abs(h.h_tt(8, 10) - 0.2) < 1e-15 && std::abs(h.h_xx(8, 10) + 0.2) < 1e-15,
          "conformal bump scales the flat metric at its center");

    MetricBump sh = mb;
    sh.kind = BumpKind::Shear;
    Perturbation hs = make_perturbation(st, {sh});
    check(hs.h_tt.cwiseAbs().maxCoeff() == 0.0 && hs.h_tx(8, 10) != 0.0,
          "shear bump only touches the shift");

    Perturbation half = scale_perturbation(h, 0.5);
    check(std::abs(half.h_tt(8, 10) - 0.1) < 1e-15, "scaling is linear");

    Spacetime stp = perturb(st, h);
    check(std::abs(stp.g_tt(8, 10) - 1.2) < 1e-15, "perturbed metric adds the bump");

    MetricBump big = mb;
    big.kind = BumpKind::TimeTime;
    big.amplitude = -1.5;  // drives g_tt negative at the center
    bool threw = false;
    try {
      (void)perturb(st, make_perturbation(st, {big}));
    } catch (const std::domain_error&) {
      threw = true;
    }
    check(threw, "signature-breaking bump is rejected");

    GridGeom gl = circle_geom(16, 24);
    gl.topology = Topology::Line;
    Spacetime stl = make_flat(gl);
    MetricBump atedge = mb;
    atedge.x_center = 1;
    threw = false;
    try {
      (void)make_perturbation(stl, {atedge});
    } catch (const std::invalid_argument&) {
      threw = true;
    }
    check(threw, "bump reaching pinned line cells is rejected");
  }

  std::printf("%s\n", fails == 0 ? "all ok" : "FAILURES");
  return fails == 0 ? 0 : 1;
}
