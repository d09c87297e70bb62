#include "dynloc/spacetime.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dynloc {

namespace {

void check_geom(const GridGeom& g) {
  if (g.nt < 3 || g.nx < 4) throw std::invalid_argument("grid too small");
  if (!(g.dt > 0) || !(g.dx > 0)) throw std::invalid_argument("grid spacing must be positive");
  if (g.topology == Topology::Line && g.nx < 6)
    throw std::invalid_argument("line grid too narrow for pinned edges");
}

// Characteristic speeds at one site: roots of g_xx c^2 + 2 g_tx c + g_tt = 0.
std::pair<double, double> char_speeds(double gtt, double gtx, double gxx) {
  const double w = std::sqrt(gtx * gtx - gtt * gxx);
  return {(-gtx + w) / gxx, (-gtx - w) / gxx};
}

} // namespace

Spacetime make_flat(const GridGeom& geom) {
  check_geom(geom);
  RMat gtt = RMat::Constant(geom.nt, geom.nx, 1.0);
  RMat gtx = RMat::Zero(geom.nt, geom.nx);
  RMat gxx = RMat::Constant(geom.nt, geom.nx, -1.0);
  return make_spacetime(geom, std::move(gtt), std::move(gtx), std::move(gxx));
}

Spacetime make_spacetime(const GridGeom& geom, RMat g_tt, RMat g_tx, RMat g_xx) {
  check_geom(geom);
  if (g_tt.rows() != geom.nt || g_tt.cols() != geom.nx || g_tx.rows() != geom.nt ||
      g_tx.cols() != geom.nx || g_xx.rows() != geom.nt || g_xx.cols() != geom.nx)
    throw std::invalid_argument("metric array shape mismatch");
  Spacetime st;
  st.geom = geom;
  st.g_tt = std::move(g_tt);
  st.g_tx = std::move(g_tx);
  st.g_xx = std::move(g_xx);
  st.cap_a.resize(geom.nt, geom.nx);
  st.cap_b.resize(geom.nt, geom.nx);
  st.cap_c.resize(geom.nt, geom.nx);
  st.vol.resize(geom.nt, geom.nx);
  for (int n = 0; n < geom.nt; ++n)
    for (int i = 0; i < geom.nx; ++i) {
      const double det = st.g_tt(n, i) * st.g_xx(n, i) - st.g_tx(n, i) * st.g_tx(n, i);
      const double w = std::sqrt(-det);
      st.vol(n, i) = w;
      st.cap_a(n, i) = -st.g_xx(n, i) / w;
      st.cap_b(n, i) = st.g_tx(n, i) / w;
      st.cap_c(n, i) = -st.g_tt(n, i) / w;
    }
  validate_spacetime(st);
  return st;
}

void validate_spacetime(const Spacetime& st) {
  const GridGeom& g = st.geom;
  for (int n = 0; n < g.nt; ++n)
    for (int i = 0; i < g.nx; ++i) {
      if (!(st.g_tt(n, i) > 0)) throw std::domain_error("t direction not timelike");
      if (!(st.g_xx(n, i) < 0)) throw std::domain_error("x direction not spacelike");
      const double det = st.g_tt(n, i) * st.g_xx(n, i) - st.g_tx(n, i) * st.g_tx(n, i);
      if (!(det < 0)) throw std::domain_error("metric signature degenerate");
    }
  if (cfl_margin(st) <= 1.0) throw std::domain_error("time step breaks the CFL bound");
}

double cfl_margin(const Spacetime& st) {
  const GridGeom& g = st.geom;
  double margin = 1e300;
  for (int n = 0; n < g.nt; ++n)
    for (int i = 0; i < g.nx; ++i) {
      auto [cp, cm] = char_speeds(st.g_tt(n, i), st.g_tx(n, i), st.g_xx(n, i));
      const double fastest = std::max(std::abs(cp), std::abs(cm));
      margin = std::min(margin, g.dx / (g.dt * fastest));
    }
  return margin;
}

long Region::count() const {
  long c = 0;
  for (uint8_t v : mask) c += v;
  return c;
}

Region empty_region(const GridGeom& geom) {
  Region r;
  r.topology = geom.topology;
  r.nt = geom.nt;
  r.nx = geom.nx;
  r.mask.assign(geom.sites(), 0);
  return r;
}

Region row_interval_region(const GridGeom& geom, int row, int lo, int hi) {
  Region r = empty_region(geom);
  for (int i = lo; i <= hi; ++i) r.set(row, geom.wrap_x(i), true);
  return r;
}

Region diamond_region(const GridGeom& geom, int row, int lo, int hi) {
  Region r = empty_region(geom);
  for (int k = 0; lo + k <= hi - k; ++k)
    for (int s : {-k, k}) {
      const int n = row + s;
      if (n < 0 || n >= geom.nt) continue;
      for (int i = lo + k; i <= hi - k; ++i) r.set(n, geom.wrap_x(i), true);
    }
  return r;
}

Region slab_region(const GridGeom& geom, int row_lo, int row_hi) {
  Region r = empty_region(geom);
  for (int n = std::max(0, row_lo); n <= std::min(geom.nt - 1, row_hi); ++n)
    for (int i = geom.active_lo(); i <= geom.active_hi(); ++i) r.set(n, i, true);
  return r;
}

static void check_same_grid(const Region& a, const Region& b) {
  if (a.nt != b.nt || a.nx != b.nx || a.topology != b.topology)
    throw std::invalid_argument("region grid mismatch");
}

Region region_union(const Region& a, const Region& b) {
  check_same_grid(a, b);
  Region r = a;
  for (size_t i = 0; i < r.mask.size(); ++i) r.mask[i] = a.mask[i] | b.mask[i];
  return r;
}

Region region_intersect(const Region& a, const Region& b) {
  check_same_grid(a, b);
  Region r = a;
  for (size_t i = 0; i < r.mask.size(); ++i) r.mask[i] = a.mask[i] & b.mask[i];
  return r;
}

Region region_minus(const Region& a, const Region& b) {
  check_same_grid(a, b);
  Region r = a;
  for (size_t i = 0; i < r.mask.size(); ++i) r.mask[i] = a.mask[i] & (b.mask[i] ^ 1);
  return r;
}

bool region_subset(const Region& inner, const Region& outer) {
  check_same_grid(inner, outer);
  for (size_t i = 0; i < inner.mask.size(); ++i)
    if (inner.mask[i] && !outer.mask[i]) return false;
  return true;
}

bool regions_disjoint(const Region& a, const Region& b) {
  check_same_grid(a, b);
  for (size_t i = 0; i < a.mask.size(); ++i)
    if (a.mask[i] && b.mask[i]) return false;
  return true;
}

Region dilate_space(const Region& r, int k) {
  Region out = r;
  for (int n = 0; n < r.nt; ++n)
    for (int i = 0; i < r.nx; ++i) {
      if (!r.at(n, i)) continue;
      for (int d = -k; d <= k; ++d) {
        int j = i + d;
        if (r.topology == Topology::Circle) j = ((j % r.nx) + r.nx) % r.nx;
        else if (j < 0 || j >= r.nx) continue;
        out.set(n, j, true);
      }
    }
  return out;
}

Region dilate_box(const Region& r, int k) {
  // Chebyshev (8-neighbour) dilation, matching the full reach of the
  // evolution stencil including its diagonal corner terms.
  Region out = r;
  for (int n = 0; n < r.nt; ++n)
    for (int i = 0; i < r.nx; ++i) {
      if (!r.at(n, i)) continue;
      for (int dn = -k; dn <= k; ++dn) {
        const int m = n + dn;
        if (m < 0 || m >= r.nt) continue;
        for (int d = -k; d <= k; ++d) {
          int j = i + d;
          if (r.topology == Topology::Circle) j = ((j % r.nx) + r.nx) % r.nx;
          else if (j < 0 || j >= r.nx) continue;
          out.set(m, j, true);
        }
      }
    }
  return out;
}

Region dilate_plus(const Region& r) {
  // Von Neumann (4-neighbour) dilation by one step.  A metric change at
  // one cell alters evolution equations only through terms multiplying
  // field values at that cell and its edge neighbours, so this is the
  // exact reach of a single-cell perturbation.
  Region out = r;
  for (int n = 0; n < r.nt; ++n)
    for (int i = 0; i < r.nx; ++i) {
      if (!r.at(n, i)) continue;
      if (n > 0) out.set(n - 1, i, true);
      if (n + 1 < r.nt) out.set(n + 1, i, true);
      for (int d = -1; d <= 1; d += 2) {
        int j = i + d;
        if (r.topology == Topology::Circle) j = ((j % r.nx) + r.nx) % r.nx;
        else if (j < 0 || j >= r.nx) continue;
        out.set(n, j, true);
      }
    }
  return out;
}

namespace {

Region cone_sweep(const GridGeom& geom, const Region& r, int dir) {
  Region out = r;
  const int start = dir > 0 ? 1 : geom.nt - 2;
  for (int n = start; n >= 0 && n < geom.nt; n += dir)
    for (int i = 0; i < geom.nx; ++i) {
      if (out.at(n, i)) continue;
      for (int d = -1; d <= 1; ++d) {
        int j = i + d;
        if (geom.topology == Topology::Circle) j = geom.wrap_x(j);
        else if (j < 0 || j >= geom.nx) continue;
        if (out.at(n - dir, j)) {
          out.set(n, i, true);
          break;
        }
      }
    }
  return out;
}

} // namespace

Region causal_future(const GridGeom& geom, const Region& r) { return cone_sweep(geom, r, +1); }
Region causal_past(const GridGeom& geom, const Region& r) { return cone_sweep(geom, r, -1); }

Region causal_hull(const GridGeom& geom, const Region& r) {
  return region_union(causal_future(geom, r), causal_past(geom, r));
}

Region causal_complement(const GridGeom& geom, const Region& r) {
  Region hull = causal_hull(geom, r);
  Region out = empty_region(geom);
  for (int n = 0; n < geom.nt; ++n)
    for (int i = 0; i < geom.nx; ++i) out.set(n, i, !hull.at(n, i));
  return out;
}

std::vector<Region> connected_components(const Region& r) {
  std::vector<Region> out;
  std::vector<uint8_t> seen(r.mask.size(), 0);
  std::vector<long> stack;
  for (long s0 = 0; s0 < static_cast<long>(r.mask.size()); ++s0) {
    if (!r.mask[s0] || seen[s0]) continue;
    Region comp = r;
    std::fill(comp.mask.begin(), comp.mask.end(), 0);
    stack.assign(1, s0);
    seen[s0] = 1;
    while (!stack.empty()) {
      const long s = stack.back();
      stack.pop_back();
      comp.mask[s] = 1;
      const int n = static_cast<int>(s / r.nx), i = static_cast<int>(s % r.nx);
      auto visit = [&](int nn, int ii) {
        if (nn < 0 || nn >= r.nt) return;
        if (r.topology == Topology::Circle) ii = ((ii % r.nx) + r.nx) % r.nx;
        else if (ii < 0 || ii >= r.nx) return;
        const long t = static_cast<long>(nn) * r.nx + ii;
        if (r.mask[t] && !seen[t]) {
          seen[t] = 1;
          stack.push_back(t);
        }
      };
      visit(n - 1, i);
      visit(n + 1, i);
      visit(n, i - 1);
      visit(n, i + 1);
    }
    out.push_back(std::move(comp));
  }
  return out;
}

std::vector<std::pair<int, int>> row_intervals(const GridGeom& geom, const Region& r, int row) {
  std::vector<std::pair<int, int>> out;
  int start = -1;
  for (int i = 0; i < geom.nx; ++i) {
    if (r.at(row, i)) {
      if (start < 0) start = i;
    } else if (start >= 0) {
      out.emplace_back(start, i - 1);
      start = -1;
    }
  }
  if (start >= 0) out.emplace_back(start, geom.nx - 1);
  // A run wrapping the seam stays split; footprints here never wrap unless
  // they cover the whole circle, which the single full run already handles.
  return out;
}

Region base_region(const GridGeom& geom, const CompactBase& k, int row) {
  Region r = empty_region(geom);
  for (auto [lo, hi] : k.intervals)
    for (int i = lo; i <= hi; ++i) r.set(row, geom.wrap_x(i), true);
  return r;
}

Region bowtie(const GridGeom& geom, const CompactBase& k, int row) {
  return causal_hull(geom, base_region(geom, k, row));
}

std::vector<CompactBase> enumerate_compact_bases(const GridGeom& geom, const Region& o,
                                                 int row, int levels) {
  std::vector<std::pair<int, int>> singles;
  for (const Region& comp : connected_components(o)) {
    for (auto [b0, b1] : row_intervals(geom, comp, row)) {
      int lo = b0, hi = b1;
      const bool full_circle =
          geom.topology == Topology::Circle && b1 - b0 + 1 == geom.nx;
      if (!full_circle) {
        // Inset so the one-cell closure of each base stays inside the
        // component; pinned line edges already behave like infinity.
        if (!(geom.topology == Topology::Line && b0 == geom.active_lo())) lo = b0 + 1;
        if (!(geom.topology == Topology::Line && b1 == geom.active_hi())) hi = b1 - 1;
      }
      if (lo > hi) continue;
      const int width = hi - lo + 1;
      for (int level = 0; level <= levels; ++level) {
        const int pieces = 1 << level;
        if (pieces > width) break;
        for (int j = 0; j < pieces; ++j) {
          const int a = lo + (j * width) / pieces;
          const int b = lo + ((j + 1) * width) / pieces - 1;
          if (a <= b) singles.emplace_back(a, b);
        }
      }
    }
  }
  std::sort(singles.begin(), singles.end());
  singles.erase(std::unique(singles.begin(), singles.end()), singles.end());

  auto dilated_disjoint = [&](std::pair<int, int> p, std::pair<int, int> q) {
    std::vector<uint8_t> hit(geom.nx, 0);
    for (int i = p.first - 1; i <= p.second + 1; ++i) {
      int j = i;
      if (geom.topology == Topology::Circle) j = geom.wrap_x(i);
      else if (j < 0 || j >= geom.nx) continue;
      hit[j] = 1;
    }
    for (int i = q.first - 1; i <= q.second + 1; ++i) {
      int j = i;
      if (geom.topology == Topology::Circle) j = geom.wrap_x(i);
      else if (j < 0 || j >= geom.nx) continue;
      if (hit[j]) return false;
    }
    return true;
  };

  std::vector<CompactBase> out;
  for (auto s : singles) out.push_back(CompactBase{{s}});
  for (size_t p = 0; p < singles.size(); ++p)
    for (size_t q = p + 1; q < singles.size(); ++q)
      if (dilated_disjoint(singles[p], singles[q]))
        out.push_back(CompactBase{{singles[p], singles[q]}});
  return out;
}

namespace {

// C2 bump, supported strictly inside |s| < 1.
double bump(double s) {
  const double u = 1.0 - s * s;
  return u > 0 ? u * u * u : 0.0;
}

} // namespace

Perturbation make_perturbation(const Spacetime& st, const std::vector<MetricBump>& bumps) {
  const GridGeom& g = st.geom;
  Perturbation h;
  h.h_tt = RMat::Zero(g.nt, g.nx);
  h.h_tx = RMat::Zero(g.nt, g.nx);
  h.h_xx = RMat::Zero(g.nt, g.nx);
  h.support = empty_region(g);
  for (const MetricBump& b : bumps) {
    if (b.t_halfwidth < 1 || b.x_halfwidth < 1)
      throw std::invalid_argument("bump halfwidths must be at least 1");
    for (int n = 0; n < g.nt; ++n)
      for (int i = 0; i < g.nx; ++i) {
        int di = i - b.x_center;
        if (g.topology == Topology::Circle) {
          di = ((di % g.nx) + g.nx) % g.nx;
          if (di > g.nx / 2) di -= g.nx;
        }
        const double chi = bump(static_cast<double>(n - b.t_center) / b.t_halfwidth) *
                           bump(static_cast<double>(di) / b.x_halfwidth);
        if (chi == 0.0) continue;
        const double a = b.amplitude * chi;
        switch (b.kind) {
          case BumpKind::Conformal:
            h.h_tt(n, i) += a * st.g_tt(n, i);
            h.h_tx(n, i) += a * st.g_tx(n, i);
            h.h_xx(n, i) += a * st.g_xx(n, i);
            break;
          case BumpKind::Shear:
            h.h_tx(n, i) += a;
            break;
          case BumpKind::TimeTime:
            h.h_tt(n, i) += a;
            break;
        }
        h.support.set(n, i, true);
      }
  }
  if (st.geom.topology == Topology::Line)
    for (int n = 0; n < g.nt; ++n)
      if (h.support.at(n, 0) || h.support.at(n, g.nx - 1))
        throw std::invalid_argument("perturbation reaches pinned edge cells");
  return h;
}

Perturbation scale_perturbation(const Perturbation& h, double s) {
  Perturbation out = h;
  out.h_tt *= s;
  out.h_tx *= s;
  out.h_xx *= s;
  return out;
}

Spacetime perturb(const Spacetime& st, const Perturbation& h) {
  return make_spacetime(st.geom, RMat(st.g_tt + h.h_tt), RMat(st.g_tx + h.h_tx),
                        RMat(st.g_xx + h.h_xx));
}

} // namespace dynloc
