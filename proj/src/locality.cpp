#include "dynloc/locality.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dynloc {

namespace {

// Relative SVD threshold for the constraint kernels.  Exact members sit at
// rounding level, violators at the probe-amplitude scale, so the gap is
// many orders wide and the precise value is uncritical.
constexpr double kConstraintTol = 1e-9;

void require_massless(const LocalityContext& ctx, const char* what) {
  if (ctx.mass != 0.0)
    throw std::invalid_argument(std::string(what) + " needs the massless field");
}

} // namespace

void validate_context(const LocalityContext& ctx) {
  if (ctx.st == nullptr) throw std::invalid_argument("locality context has no spacetime");
  const auto& geom = ctx.geom();
  if (ctx.band_lo > ctx.band_hi)
    throw std::invalid_argument("probe band is empty");
  if (ctx.band_lo - 2 < 1 || ctx.band_hi + 2 > geom.nt - 2)
    throw std::invalid_argument("probe band leaves no room for evolution surfaces");
  if (ctx.band_lo > ctx.row - 2 || ctx.band_hi < ctx.row + 2)
    throw std::invalid_argument("probe band must straddle the data surface");
}

RMat kin_space(const LocalityContext& ctx, const Region& o) {
  validate_context(ctx);
  const auto& geom = ctx.geom();
  std::vector<std::pair<int, int>> cells;
  for (int n = 0; n < geom.nt; ++n)
    for (int i = 0; i < geom.nx; ++i) {
      if (!o.at(n, i)) continue;
      if (i < geom.active_lo() || i > geom.active_hi()) continue;
      if (n < 1 || n > geom.nt - 2)
        throw std::invalid_argument("kinematic span needs interior-row cells");
      cells.emplace_back(n, i);
    }
  if (cells.empty()) return RMat(phase_dim(geom), 0);
  RMat cols = batch_delta_propagator(*ctx.st, ctx.mass, cells, ctx.row, ctx.pol);
  return orth(cols);
}

RMat solution_map(const LocalityContext& ctx) {
  validate_context(ctx);
  const auto& st = *ctx.st;
  const auto& geom = st.geom;
  const int dim = phase_dim(geom);
  RMat out(geom.sites(), dim);
#pragma omp parallel for schedule(dynamic) if (ctx.pol == ExecPolicy::Parallel)
  for (int j = 0; j < dim; ++j) {
    RVec e = RVec::Zero(dim);
    e(j) = 1.0;
    const CauchyData data = unpack_data(geom, e);
    const RMat phi = solve_cauchy(st, ctx.mass, ctx.row, data);
    for (int n = 0; n < geom.nt; ++n)
      for (int i = 0; i < geom.nx; ++i) out(geom.site(n, i), j) = phi(n, i);
  }
  return out;
}

Region probe_region(const LocalityContext& ctx, const CompactBase& k) {
  validate_context(ctx);
  const auto& geom = ctx.geom();
  Region band = slab_region(geom, ctx.band_lo, ctx.band_hi);
  if (k.is_empty()) return band;
  // Spatial one-cell margin around the causal hull.  The hull already
  // widens by a cell per row, so a box dilation would overshoot by one
  // cell and leave invariant corner modes with no probe to catch them.
  Region guard = dilate_space(bowtie(geom, k, ctx.row), 1);
  return region_minus(band, guard);
}

Region constraint_region(const LocalityContext& ctx, const CompactBase& k) {
  return dilate_plus(probe_region(ctx, k));
}

RMat invariant_space(const LocalityContext& ctx, const RMat& solmap, const CompactBase& k) {
  const auto& geom = ctx.geom();
  const int dim = phase_dim(geom);
  const Region r = constraint_region(ctx, k);

  std::vector<std::pair<long, long>> edges;  // site pairs, second = -1 for a value pin
  const bool massless = ctx.mass == 0.0;
  for (int n = 0; n < geom.nt; ++n)
    for (int i = 0; i < geom.nx; ++i) {
      if (!r.at(n, i)) continue;
      const long s = geom.site(n, i);
      if (!massless) {
        edges.emplace_back(s, -1);
        continue;
      }
      // Massless constraints are edge differences inside the region; the
      // solution may sit at a different constant on each component.
      int j = i + 1;
      if (geom.topology == Topology::Circle) j = geom.wrap_x(j);
      if (j < geom.nx && r.at(n, j)) edges.emplace_back(s, geom.site(n, j));
      if (n + 1 < geom.nt && r.at(n + 1, i)) edges.emplace_back(s, geom.site(n + 1, i));
    }

  if (edges.empty()) return RMat::Identity(dim, dim);
  RMat c(static_cast<long>(edges.size()), dim);
  for (size_t e = 0; e < edges.size(); ++e) {
    if (edges[e].second < 0)
      c.row(static_cast<long>(e)) = solmap.row(edges[e].first);
    else
      c.row(static_cast<long>(e)) = solmap.row(edges[e].first) - solmap.row(edges[e].second);
  }
  return nullspace(c, kConstraintTol);
}

std::vector<Perturbation> sample_probes(const LocalityContext& ctx, const Region& region,
                                        Rng& rng) {
  validate_context(ctx);
  const auto& st = *ctx.st;
  const auto& geom = ctx.geom();
  std::vector<Perturbation> out;
  Region covered = empty_region(geom);

  auto fits = [&](int n, int i, int ht, int hx) {
    for (int dn = -(ht - 1); dn <= ht - 1; ++dn)
      for (int dd = -(hx - 1); dd <= hx - 1; ++dd) {
        const int m = n + dn;
        int j = i + dd;
        if (m < 0 || m >= geom.nt) return false;
        if (geom.topology == Topology::Circle) j = geom.wrap_x(j);
        else if (j < geom.active_lo() || j > geom.active_hi()) return false;
        if (!region.at(m, j)) return false;
      }
    return true;
  };
  auto mark = [&](int n, int i, int ht, int hx) {
    for (int dn = -(ht - 1); dn <= ht - 1; ++dn)
      for (int dd = -(hx - 1); dd <= hx - 1; ++dd) {
        int j = i + dd;
        if (geom.topology == Topology::Circle) j = geom.wrap_x(j);
        else if (j < 0 || j >= geom.nx) continue;
        covered.set(n + dn, j, true);
      }
  };
  // Validate against the full background check; halve the amplitude if a
  // probe lands on a spot where the metric is too close to its margins.
  auto add = [&](BumpKind kind, int n, int i, int ht, int hx, double amp) {
    MetricBump b{kind, amp, n, i, ht, hx};
    for (int attempt = 0; attempt < 4; ++attempt) {
      try {
        Perturbation h = make_perturbation(st, {b});
        perturb(st, h);
        out.push_back(std::move(h));
        return;
      } catch (const std::exception&) {
        b.amplitude *= 0.5;
      }
    }
    throw std::runtime_error("probe amplitude could not be fit to the background");
  };
  auto sign = [&]() { return rng.u01() < 0.5 ? -1.0 : 1.0; };

  // Coverage pass: every region cell must end up inside some probe that
  // couples to the field there.  Time-time bumps do at any mass, so they
  // carry coverage; each fat position gets two amplitudes of opposite
  // sign to rule out first-order flukes.
  int fat = 0;
  for (int n = 0; n < geom.nt; ++n)
    for (int i = 0; i < geom.nx; ++i) {
      if (!region.at(n, i) || covered.at(n, i)) continue;
      if (!fits(n, i, 2, 2)) continue;
      add(BumpKind::TimeTime, n, i, 2, 2, rng.uniform(0.08, 0.2));
      add(BumpKind::TimeTime, n, i, 2, 2, -rng.uniform(0.08, 0.2));
      // Cross-kind flavor: shear probes exercise the coupled solver path,
      // conformal ones the volume term.
      if (fat % 3 == 1) add(BumpKind::Shear, n, i, 2, 2, sign() * rng.uniform(0.05, 0.1));
      if (fat % 7 == 2) add(BumpKind::Conformal, n, i, 2, 2, sign() * rng.uniform(0.1, 0.2));
      ++fat;
      mark(n, i, 2, 2);
    }
  for (int n = 0; n < geom.nt; ++n)
    for (int i = 0; i < geom.nx; ++i) {
      if (!region.at(n, i) || covered.at(n, i)) continue;
      add(BumpKind::TimeTime, n, i, 1, 1, sign() * rng.uniform(0.08, 0.2));
      mark(n, i, 1, 1);
    }
  return out;
}

RMat invariant_space_sampled(const LocalityContext& ctx,
                             const std::vector<Perturbation>& probes) {
  validate_context(ctx);
  const int dim = phase_dim(ctx.geom());
  if (probes.empty()) return RMat::Identity(dim, dim);
  const RceRows rows = ctx.rce_rows();
  RMat stack(static_cast<long>(probes.size()) * dim, dim);
  for (size_t p = 0; p < probes.size(); ++p) {
    const RMat m = rce_matrix(*ctx.st, ctx.mass, probes[p], rows, ctx.pol);
    stack.middleRows(static_cast<long>(p) * dim, dim) = m - RMat::Identity(dim, dim);
  }
  return nullspace(stack, kConstraintTol);
}

double max_rce_deviation(const LocalityContext& ctx, const std::vector<Perturbation>& probes,
                         const RMat& basis) {
  validate_context(ctx);
  const RceRows rows = ctx.rce_rows();
  double worst = 0.0;
  for (const auto& h : probes)
    for (int j = 0; j < basis.cols(); ++j) {
      const RVec v = basis.col(j);
      const double n = v.norm();
      if (n == 0.0) continue;
      worst = std::max(worst, (rce_apply(*ctx.st, ctx.mass, h, rows, v) - v).norm() / n);
    }
  return worst;
}

DynResult dyn_space(const LocalityContext& ctx, const RMat& solmap, const Region& o,
                    int levels) {
  validate_context(ctx);
  DynResult res;
  res.bases = enumerate_compact_bases(ctx.geom(), o, ctx.row, levels);
  RMat acc(phase_dim(ctx.geom()), 0);
  for (const auto& k : res.bases) {
    const RMat b = invariant_space(ctx, solmap, k);
    res.member_dims.push_back(static_cast<int>(b.cols()));
    acc = span_union(acc, b);
  }
  res.space = std::move(acc);
  return res;
}

RMat locally_constant_space(const LocalityContext& ctx) {
  validate_context(ctx);
  const auto& geom = ctx.geom();
  if (geom.topology == Topology::Line) return RMat(phase_dim(geom), 0);
  CauchyData d{RVec::Ones(geom.nx), RVec::Zero(geom.nx)};
  RVec v = pack_data(geom, d);
  return orth(RMat(v / v.norm()));
}

const char* verdict_name(CompareVerdict v) {
  switch (v) {
    case CompareVerdict::Equal: return "equal";
    case CompareVerdict::FirstInsideSecond: return "first-inside-second";
    case CompareVerdict::SecondInsideFirst: return "second-inside-first";
    case CompareVerdict::Incomparable: return "incomparable";
  }
  return "unknown";
}

SpaceComparison compare_spaces(const RMat& first, const RMat& second, double tol) {
  SpaceComparison c;
  const RMat qf = orth(first), qs = orth(second);
  c.dim_first = static_cast<int>(qf.cols());
  c.dim_second = static_cast<int>(qs.cols());
  c.dim_intersection = static_cast<int>(span_intersect(qf, qs).cols());

  auto probe = [tol](const RMat& a, const RMat& b, RVec& witness) {
    double worst = 0.0;
    int at = -1;
    for (int j = 0; j < a.cols(); ++j) {
      const double r = residual_norm(b, a.col(j));
      if (r > worst) {
        worst = r;
        at = j;
      }
    }
    if (at >= 0 && worst > tol) witness = a.col(at);
    return worst;
  };
  c.defect_first_in_second = probe(qf, qs, c.witness_first_not_second);
  c.defect_second_in_first = probe(qs, qf, c.witness_second_not_first);

  const bool f_in_s = c.defect_first_in_second <= tol;
  const bool s_in_f = c.defect_second_in_first <= tol;
  c.verdict = f_in_s && s_in_f  ? CompareVerdict::Equal
              : f_in_s          ? CompareVerdict::FirstInsideSecond
              : s_in_f          ? CompareVerdict::SecondInsideFirst
                                : CompareVerdict::Incomparable;
  return c;
}

double subspace_distance(const RMat& a, const RMat& b) {
  return std::max(containment_defect(a, b), containment_defect(b, a));
}

double max_symplectic_pairing(const GridGeom& geom, const RMat& a, const RMat& b) {
  const RMat qa = orth(a), qb = orth(b);
  if (qa.cols() == 0 || qb.cols() == 0) return 0.0;
  const RMat s = sigma_matrix(geom);
  return (qa.transpose() * s * qb).cwiseAbs().maxCoeff();
}

RMat charge_zero_space(const LocalityContext& ctx) {
  validate_context(ctx);
  require_massless(ctx, "charge quotient");
  const RVec q = charge_functional(*ctx.st, ctx.mass, ctx.row);
  return nullspace(RMat(q.transpose()));
}

RVec current_class(const LocalityContext& ctx, const OneForm& w) {
  validate_context(ctx);
  require_massless(ctx, "current class");
  const RMat div = codifferential(*ctx.st, w);
  const RMat field = propagator_apply(*ctx.st, 0.0, div);
  return pack_data(ctx.geom(), read_data(*ctx.st, field, ctx.row));
}

RMat current_kin_space(const LocalityContext& ctx, const Region& o) {
  validate_context(ctx);
  require_massless(ctx, "current localization");
  const RMat q0 = charge_zero_space(ctx);
  RMat acc = locally_constant_space(ctx);
  for (const auto& comp : connected_components(o))
    acc = span_union(acc, span_intersect(kin_space(ctx, comp), q0));
  return acc;
}

RMat current_invariant_space(const LocalityContext& ctx, const RMat& solmap,
                             const CompactBase& k) {
  validate_context(ctx);
  require_massless(ctx, "current localization");
  const RMat q0 = charge_zero_space(ctx);
  return span_union(locally_constant_space(ctx),
                    span_intersect(invariant_space(ctx, solmap, k), q0));
}

DynResult current_dyn_space(const LocalityContext& ctx, const RMat& solmap, const Region& o,
                            int levels) {
  validate_context(ctx);
  require_massless(ctx, "current localization");
  const RMat q0 = charge_zero_space(ctx);
  DynResult res;
  res.bases = enumerate_compact_bases(ctx.geom(), o, ctx.row, levels);
  RMat acc = locally_constant_space(ctx);
  for (const auto& k : res.bases) {
    const RMat b = span_intersect(invariant_space(ctx, solmap, k), q0);
    res.member_dims.push_back(static_cast<int>(b.cols()));
    acc = span_union(acc, b);
  }
  res.space = std::move(acc);
  return res;
}

} // namespace dynloc
