#include "dynloc/solver.hpp"

#include <cmath>
#include <stdexcept>

// Scheme notes.  With densitized coefficients A = sqrt|g| g^tt,
// B = sqrt|g| g^tx, C = sqrt|g| g^xx, W = sqrt|g|, the wave operator is
//
//   (P phi)_{n,i} = (1/W) [ T1 + T2 + T3 + T4 ] + m^2 phi
//
//   T1 = (A_{n+1/2}(phi_{n+1} - phi_n) - A_{n-1/2}(phi_n - phi_{n-1})) / dt^2
//   T2 = (C_{i+1/2}(phi_{i+1} - phi_i) - C_{i-1/2}(phi_i - phi_{i-1})) / dx^2
//   T3 = (B_{n+1} Dx phi_{n+1} - B_{n-1} Dx phi_{n-1}) / (2 dt)
//   T4 = (B_{i+1} Dt phi_{i+1} - B_{i-1} Dt phi_{i-1}) / (2 dx)
//
// with half-level coefficients averaged from the two neighbor levels and
// Dx, Dt the centered differences.  The stencil is symmetric under time
// reflection, so stepping is exactly reversible, and it is formally
// self-adjoint against the plain lattice sum, which is what makes the
// Green identities and flux conservation below come out exact.  Solving
// for the new row couples neighbors only through B terms; those stay
// confined to the perturbation support, and everything outside is a
// diagonal update, so support spreads at exactly one cell per step.

namespace dynloc {

namespace {

void require_interior_row(const GridGeom& g, int row, const char* what) {
  if (row < 1 || row > g.nt - 2) throw std::invalid_argument(std::string(what) + " row not interior");
}

void require_data_shape(const GridGeom& g, const CauchyData& d) {
  if (d.phi.size() != g.nx || d.pi.size() != g.nx)
    throw std::invalid_argument("data length mismatch");
  if (g.topology == Topology::Line) {
    if (std::abs(d.phi(0)) > 1e-14 || std::abs(d.phi(g.nx - 1)) > 1e-14 ||
        std::abs(d.pi(0)) > 1e-14 || std::abs(d.pi(g.nx - 1)) > 1e-14)
      throw std::invalid_argument("data touches pinned edge cells");
  }
}

void require_zero_shift_near(const Spacetime& st, int row, const char* what) {
  for (int n = std::max(0, row - 1); n <= std::min(st.geom.nt - 1, row + 1); ++n)
    for (int i = 0; i < st.geom.nx; ++i)
      if (std::abs(st.cap_b(n, i)) > 1e-12)
        throw std::invalid_argument(std::string(what) + ": shift nonzero at a data surface");
}

inline int wc(const GridGeom& g, int i) {
  if (g.topology == Topology::Circle) return ((i % g.nx) + g.nx) % g.nx;
  return i;
}

// One implicit row update.  `n` is the row whose field equation is being
// enforced, `dir` = +1 solves for row n+1 from rows (n-1, n), dir = -1
// mirrors it.  Off-diagonal couplings vanish wherever B does, and the
// solve runs per coupled block so exact zeros propagate as exact zeros.
RVec step_row(const Spacetime& st, double mass, int n, int dir, const RVec& other,
              const RVec& cur, const double* src) {
  const GridGeom& g = st.geom;
  const int m = n + dir, o = n - dir;
  const double kap = g.dt / (4.0 * g.dx);
  const double r2 = (g.dt * g.dt) / (g.dx * g.dx);
  const double m2 = mass * mass;
  const int lo = g.active_lo(), hi = g.active_hi();

  RVec diag = RVec::Zero(g.nx), up = RVec::Zero(g.nx), low = RVec::Zero(g.nx),
       rhs = RVec::Zero(g.nx);
  for (int i = lo; i <= hi; ++i) {
    const int ip = wc(g, i + 1), im = wc(g, i - 1);
    const double a_t = 0.5 * (st.cap_a(n, i) + st.cap_a(m, i));
    const double a_o = 0.5 * (st.cap_a(n, i) + st.cap_a(o, i));
    const double c_p = 0.5 * (st.cap_c(n, i) + st.cap_c(n, ip));
    const double c_m = 0.5 * (st.cap_c(n, i) + st.cap_c(n, im));
    const double x2 = r2 * (c_p * (cur(ip) - cur(i)) - c_m * (cur(i) - cur(im)));
    diag(i) = a_t;
    up(i) = dir * kap * (st.cap_b(m, i) + st.cap_b(n, ip));
    low(i) = -dir * kap * (st.cap_b(m, i) + st.cap_b(n, im));
    rhs(i) = g.dt * g.dt * st.vol(n, i) * ((src ? src[i] : 0.0) - m2 * cur(i)) +
             (a_t + a_o) * cur(i) - a_o * other(i) - x2 +
             dir * kap * st.cap_b(o, i) * (other(ip) - other(im)) +
             dir * kap * (st.cap_b(n, ip) * other(ip) - st.cap_b(n, im) * other(im));
  }

  RVec out = RVec::Zero(g.nx);
  const bool wraps = g.topology == Topology::Circle &&
                     (up(hi) != 0.0 || low(lo) != 0.0);
  if (wraps) {
    // Coupling crosses the seam: fall back to one dense solve.
    const int aw = g.active_width();
    RMat sys = RMat::Zero(aw, aw);
    RVec b(aw);
    for (int k = 0; k < aw; ++k) {
      const int i = lo + k;
      sys(k, k) = diag(i);
      sys(k, (k + 1) % aw) += up(i);
      sys(k, (k + aw - 1) % aw) += low(i);
      b(k) = rhs(i);
    }
    RVec sol = sys.partialPivLu().solve(b);
    for (int k = 0; k < aw; ++k) out(lo + k) = sol(k);
    return out;
  }

  // Linear blocks: split where neither neighbor coupling reaches across.
  int start = lo;
  auto solve_block = [&](int a, int b) {
    const int len = b - a + 1;
    std::vector<double> cp(len), dp(len);
    double piv = diag(a);
    if (std::abs(piv) < 1e-12) throw std::runtime_error("singular step pivot");
    cp[0] = (a < b ? up(a) : 0.0) / piv;
    dp[0] = rhs(a) / piv;
    for (int i = a + 1; i <= b; ++i) {
      piv = diag(i) - low(i) * cp[i - a - 1];
      if (std::abs(piv) < 1e-12) throw std::runtime_error("singular step pivot");
      cp[i - a] = (i < b ? up(i) : 0.0) / piv;
      dp[i - a] = (rhs(i) - low(i) * dp[i - a - 1]) / piv;
    }
    out(b) = dp[len - 1];
    for (int i = b - 1; i >= a; --i) out(i) = dp[i - a] - cp[i - a] * out(i + 1);
  };
  for (int i = lo; i < hi; ++i) {
    const bool linked = up(i) != 0.0 || low(i + 1) != 0.0;
    if (!linked) {
      solve_block(start, i);
      start = i + 1;
    }
  }
  solve_block(start, hi);
  return out;
}

} // namespace

int phase_dim(const GridGeom& geom) { return 2 * geom.active_width(); }

RVec pack_data(const GridGeom& geom, const CauchyData& data) {
  const int aw = geom.active_width(), lo = geom.active_lo();
  RVec v(2 * aw);
  for (int k = 0; k < aw; ++k) {
    v(k) = data.phi(lo + k);
    v(aw + k) = data.pi(lo + k);
  }
  return v;
}

CauchyData unpack_data(const GridGeom& geom, const RVec& v) {
  const int aw = geom.active_width(), lo = geom.active_lo();
  if (v.size() != 2 * aw) throw std::invalid_argument("phase vector length mismatch");
  CauchyData d{RVec::Zero(geom.nx), RVec::Zero(geom.nx)};
  for (int k = 0; k < aw; ++k) {
    d.phi(lo + k) = v(k);
    d.pi(lo + k) = v(aw + k);
  }
  return d;
}

RMat sigma_matrix(const GridGeom& geom) {
  const int aw = geom.active_width();
  RMat s = RMat::Zero(2 * aw, 2 * aw);
  for (int k = 0; k < aw; ++k) {
    s(k, aw + k) = geom.dx;
    s(aw + k, k) = -geom.dx;
  }
  return s;
}

double sigma_pair_data(const GridGeom& geom, const CauchyData& u, const CauchyData& v) {
  double acc = 0;
  for (int i = geom.active_lo(); i <= geom.active_hi(); ++i)
    acc += u.phi(i) * v.pi(i) - u.pi(i) * v.phi(i);
  return geom.dx * acc;
}

RMat apply_wave_op(const Spacetime& st, double mass, const RMat& phi) {
  const GridGeom& g = st.geom;
  RMat out = RMat::Zero(g.nt, g.nx);
  const double m2 = mass * mass;
  for (int n = 1; n <= g.nt - 2; ++n)
    for (int i = g.active_lo(); i <= g.active_hi(); ++i) {
      const int ip = wc(g, i + 1), im = wc(g, i - 1);
      const double ap = 0.5 * (st.cap_a(n, i) + st.cap_a(n + 1, i));
      const double am = 0.5 * (st.cap_a(n, i) + st.cap_a(n - 1, i));
      const double cp = 0.5 * (st.cap_c(n, i) + st.cap_c(n, ip));
      const double cm = 0.5 * (st.cap_c(n, i) + st.cap_c(n, im));
      const double t1 = (ap * (phi(n + 1, i) - phi(n, i)) - am * (phi(n, i) - phi(n - 1, i))) /
                        (g.dt * g.dt);
      const double t2 = (cp * (phi(n, ip) - phi(n, i)) - cm * (phi(n, i) - phi(n, im))) /
                        (g.dx * g.dx);
      const double t3 = (st.cap_b(n + 1, i) * (phi(n + 1, ip) - phi(n + 1, im)) -
                         st.cap_b(n - 1, i) * (phi(n - 1, ip) - phi(n - 1, im))) /
                        (2.0 * g.dt * 2.0 * g.dx);
      const double t4 = (st.cap_b(n, ip) * (phi(n + 1, ip) - phi(n - 1, ip)) -
                         st.cap_b(n, im) * (phi(n + 1, im) - phi(n - 1, im))) /
                        (2.0 * g.dx * 2.0 * g.dt);
      out(n, i) = (t1 + t2 + t3 + t4) / st.vol(n, i) + m2 * phi(n, i);
    }
  return out;
}

std::pair<RVec, RVec> neighbor_rows_from_data(const Spacetime& st, double mass, int row,
                                              const CauchyData& data, const RMat* source) {
  const GridGeom& g = st.geom;
  require_interior_row(g, row, "data");
  require_data_shape(g, data);
  require_zero_shift_near(st, row, "data surface");
  const double m2 = mass * mass;
  RVec below = RVec::Zero(g.nx), above = RVec::Zero(g.nx);
  for (int i = g.active_lo(); i <= g.active_hi(); ++i) {
    const int ip = wc(g, i + 1), im = wc(g, i - 1);
    const double a = st.cap_a(row, i);
    const double ap = 0.5 * (st.cap_a(row, i) + st.cap_a(row + 1, i));
    const double am = 0.5 * (st.cap_a(row, i) + st.cap_a(row - 1, i));
    const double cp = 0.5 * (st.cap_c(row, i) + st.cap_c(row, ip));
    const double cm = 0.5 * (st.cap_c(row, i) + st.cap_c(row, im));
    const double dxphi = (data.phi(ip) - data.phi(im)) / (2.0 * g.dx);
    const double diff = (2.0 * g.dt / a) * (data.pi(i) - st.cap_b(row, i) * dxphi);
    const double t2 = (cp * (data.phi(ip) - data.phi(i)) - cm * (data.phi(i) - data.phi(im))) /
                      (g.dx * g.dx);
    const double s = source ? (*source)(row, i) : 0.0;
    const double sum = (ap + am) * data.phi(i) +
                       g.dt * g.dt * (st.vol(row, i) * (s - m2 * data.phi(i)) - t2);
    below(i) = (sum - ap * diff) / (ap + am);
    above(i) = below(i) + diff;
  }
  return {below, above};
}

RMat solve_cauchy(const Spacetime& st, double mass, int row, const CauchyData& data,
                  const RMat* source) {
  const GridGeom& g = st.geom;
  auto [below, above] = neighbor_rows_from_data(st, mass, row, data, source);
  RMat phi = RMat::Zero(g.nt, g.nx);
  phi.row(row) = data.phi.transpose();
  phi.row(row - 1) = below.transpose();
  phi.row(row + 1) = above.transpose();
  RVec cur, oth, srow;
  for (int n = row + 1; n <= g.nt - 2; ++n) {
    cur = phi.row(n).transpose();
    oth = phi.row(n - 1).transpose();
    // Eigen rows are not contiguous; copy the source row when present.
    const double* src = nullptr;
    if (source) {
      srow = source->row(n).transpose();
      src = srow.data();
    }
    phi.row(n + 1) = step_row(st, mass, n, +1, oth, cur, src).transpose();
  }
  for (int n = row - 1; n >= 1; --n) {
    cur = phi.row(n).transpose();
    oth = phi.row(n + 1).transpose();
    const double* src = nullptr;
    if (source) {
      srow = source->row(n).transpose();
      src = srow.data();
    }
    phi.row(n - 1) = step_row(st, mass, n, -1, oth, cur, src).transpose();
  }
  return phi;
}

CauchyData read_data(const Spacetime& st, const RMat& phi, int row) {
  const GridGeom& g = st.geom;
  require_interior_row(g, row, "read");
  CauchyData d{RVec::Zero(g.nx), RVec::Zero(g.nx)};
  for (int i = g.active_lo(); i <= g.active_hi(); ++i) {
    const int ip = wc(g, i + 1), im = wc(g, i - 1);
    d.phi(i) = phi(row, i);
    d.pi(i) = st.cap_a(row, i) * (phi(row + 1, i) - phi(row - 1, i)) / (2.0 * g.dt) +
              st.cap_b(row, i) * (phi(row, ip) - phi(row, im)) / (2.0 * g.dx);
  }
  return d;
}

namespace {

RMat directed_solve(const Spacetime& st, double mass, const RMat& source, bool forward) {
  const GridGeom& g = st.geom;
  if (source.rows() != g.nt || source.cols() != g.nx)
    throw std::invalid_argument("source shape mismatch");
  if (source.row(0).cwiseAbs().maxCoeff() > 0.0 ||
      source.row(g.nt - 1).cwiseAbs().maxCoeff() > 0.0)
    throw std::invalid_argument("source must vanish on boundary rows");
  RMat phi = RMat::Zero(g.nt, g.nx);
  if (forward) {
    for (int n = 1; n <= g.nt - 2; ++n) {
      RVec cur = phi.row(n).transpose();
      RVec oth = phi.row(n - 1).transpose();
      RVec srow = source.row(n).transpose();
      phi.row(n + 1) = step_row(st, mass, n, +1, oth, cur, srow.data()).transpose();
    }
  } else {
    for (int n = g.nt - 2; n >= 1; --n) {
      RVec cur = phi.row(n).transpose();
      RVec oth = phi.row(n + 1).transpose();
      RVec srow = source.row(n).transpose();
      phi.row(n - 1) = step_row(st, mass, n, -1, oth, cur, srow.data()).transpose();
    }
  }
  return phi;
}

} // namespace

RMat retarded_solve(const Spacetime& st, double mass, const RMat& source) {
  return directed_solve(st, mass, source, true);
}

RMat advanced_solve(const Spacetime& st, double mass, const RMat& source) {
  return directed_solve(st, mass, source, false);
}

RMat propagator_apply(const Spacetime& st, double mass, const RMat& source) {
  return advanced_solve(st, mass, source) - retarded_solve(st, mass, source);
}

RMat batch_delta_propagator(const Spacetime& st, double mass,
                            const std::vector<std::pair<int, int>>& cells, int read_row,
                            ExecPolicy pol) {
  const GridGeom& g = st.geom;
  require_interior_row(g, read_row, "read");
  const int nc = static_cast<int>(cells.size());
  RMat out(phase_dim(g), nc);
  auto one = [&](int k) {
    const auto [n, i] = cells[k];
    RMat source = RMat::Zero(g.nt, g.nx);
    source(n, i) = 1.0 / (g.dt * g.dx * st.vol(n, i));
    RMat sol = propagator_apply(st, mass, source);
    out.col(k) = pack_data(g, read_data(st, sol, read_row));
  };
  if (pol == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < nc; ++k) one(k);
  } else {
    for (int k = 0; k < nc; ++k) one(k);
  }
  return out;
}

namespace {

RVec rce_apply_pre(const Spacetime& st, const Spacetime& stp, double mass, RceRows rows,
                   const RVec& phase) {
  const GridGeom& g = st.geom;
  CauchyData d0 = unpack_data(g, phase);
  RMat sol = solve_cauchy(st, mass, rows.mid, d0);
  CauchyData d_plus = read_data(st, sol, rows.plus);
  RMat sol_back = solve_cauchy(stp, mass, rows.plus, d_plus);
  CauchyData d_minus = read_data(stp, sol_back, rows.minus);
  RMat sol_fwd = solve_cauchy(st, mass, rows.minus, d_minus);
  return pack_data(g, read_data(st, sol_fwd, rows.mid));
}

void check_rce_rows(const Spacetime& st, const Perturbation& h, RceRows rows) {
  require_interior_row(st.geom, rows.mid, "rce mid");
  require_interior_row(st.geom, rows.minus, "rce lower");
  require_interior_row(st.geom, rows.plus, "rce upper");
  for (int n = 0; n < st.geom.nt; ++n)
    for (int i = 0; i < st.geom.nx; ++i)
      if (h.support.at(n, i) && (n < rows.minus + 2 || n > rows.plus - 2))
        throw std::invalid_argument("perturbation not inside the evolution window");
}

} // namespace

RVec rce_apply(const Spacetime& st, double mass, const Perturbation& h, RceRows rows,
               const RVec& phase) {
  check_rce_rows(st, h, rows);
  return rce_apply_pre(st, perturb(st, h), mass, rows, phase);
}

RMat rce_matrix(const Spacetime& st, double mass, const Perturbation& h, RceRows rows,
                ExecPolicy pol) {
  check_rce_rows(st, h, rows);
  const Spacetime stp = perturb(st, h);
  const int pd = phase_dim(st.geom);
  RMat out(pd, pd);
  auto one = [&](int k) {
    RVec e = RVec::Zero(pd);
    e(k) = 1.0;
    out.col(k) = rce_apply_pre(st, stp, mass, rows, e);
  };
  if (pol == ExecPolicy::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < pd; ++k) one(k);
  } else {
    for (int k = 0; k < pd; ++k) one(k);
  }
  return out;
}

double flux_charge(const Spacetime& st, const RMat& phi, int n) {
  const GridGeom& g = st.geom;
  if (n < 0 || n + 1 > g.nt - 1) throw std::invalid_argument("flux row out of range");
  double acc = 0;
  for (int i = g.active_lo(); i <= g.active_hi(); ++i) {
    const int ip = wc(g, i + 1), im = wc(g, i - 1);
    const double ah = 0.5 * (st.cap_a(n, i) + st.cap_a(n + 1, i));
    const double dbar_hi = (phi(n + 1, ip) - phi(n + 1, im)) / (2.0 * g.dx);
    const double dbar_lo = (phi(n, ip) - phi(n, im)) / (2.0 * g.dx);
    acc += ah * (phi(n + 1, i) - phi(n, i)) / g.dt +
           0.5 * (st.cap_b(n + 1, i) * dbar_hi + st.cap_b(n, i) * dbar_lo);
  }
  return g.dx * acc;
}

double charge_of_data(const Spacetime& st, double mass, int row, const CauchyData& data) {
  const GridGeom& g = st.geom;
  auto [below, above] = neighbor_rows_from_data(st, mass, row, data, nullptr);
  (void)below;
  double acc = 0;
  for (int i = g.active_lo(); i <= g.active_hi(); ++i) {
    const int ip = wc(g, i + 1), im = wc(g, i - 1);
    const double ah = 0.5 * (st.cap_a(row, i) + st.cap_a(row + 1, i));
    const double dbar_hi = (above(ip) - above(im)) / (2.0 * g.dx);
    const double dbar_lo = (data.phi(ip) - data.phi(im)) / (2.0 * g.dx);
    acc += ah * (above(i) - data.phi(i)) / g.dt +
           0.5 * (st.cap_b(row + 1, i) * dbar_hi + st.cap_b(row, i) * dbar_lo);
  }
  return g.dx * acc;
}

RVec charge_functional(const Spacetime& st, double mass, int row) {
  const int pd = phase_dim(st.geom);
  RVec q(pd);
  for (int k = 0; k < pd; ++k) {
    RVec e = RVec::Zero(pd);
    e(k) = 1.0;
    q(k) = charge_of_data(st, mass, row, unpack_data(st.geom, e));
  }
  return q;
}

OneForm zero_oneform(const GridGeom& geom) {
  return {RMat::Zero(geom.nt - 1, geom.nx), RMat::Zero(geom.nt, geom.nx)};
}

OneForm exterior_d(const GridGeom& geom, const RMat& phi) {
  OneForm w = zero_oneform(geom);
  for (int n = 0; n < geom.nt - 1; ++n)
    for (int i = 0; i < geom.nx; ++i) w.wt(n, i) = (phi(n + 1, i) - phi(n, i)) / geom.dt;
  const int xedges = geom.topology == Topology::Circle ? geom.nx : geom.nx - 1;
  for (int n = 0; n < geom.nt; ++n)
    for (int i = 0; i < xedges; ++i)
      w.wx(n, i) = (phi(n, wc(geom, i + 1)) - phi(n, i)) / geom.dx;
  return w;
}

namespace {

// Raised fluxes on half-cells.  ft(n, i) lives at (n+1/2, i), fx(n, i) at
// (n, i+1/2); cross terms average the four surrounding edges.
void raised_fluxes(const Spacetime& st, const OneForm& w, RMat& ft, RMat& fx) {
  const GridGeom& g = st.geom;
  ft = RMat::Zero(g.nt - 1, g.nx);
  fx = RMat::Zero(g.nt, g.nx);
  const int xedges = g.topology == Topology::Circle ? g.nx : g.nx - 1;
  auto wx_at = [&](int n, int i) -> double {
    if (g.topology == Topology::Circle) return w.wx(n, wc(g, i));
    if (i < 0 || i >= xedges) return 0.0;
    return w.wx(n, i);
  };
  for (int n = 0; n < g.nt - 1; ++n)
    for (int i = 0; i < g.nx; ++i) {
      const double ah = 0.5 * (st.cap_a(n, i) + st.cap_a(n + 1, i));
      const double bh = 0.5 * (st.cap_b(n, i) + st.cap_b(n + 1, i));
      const double wxavg =
          0.25 * (wx_at(n, i - 1) + wx_at(n, i) + wx_at(n + 1, i - 1) + wx_at(n + 1, i));
      ft(n, i) = ah * w.wt(n, i) + bh * wxavg;
    }
  for (int n = 1; n <= g.nt - 2; ++n)
    for (int i = 0; i < xedges; ++i) {
      const int ip = wc(g, i + 1);
      const double ch = 0.5 * (st.cap_c(n, i) + st.cap_c(n, ip));
      const double bh = 0.5 * (st.cap_b(n, i) + st.cap_b(n, ip));
      const double wtavg =
          0.25 * (w.wt(n - 1, i) + w.wt(n, i) + w.wt(n - 1, ip) + w.wt(n, ip));
      fx(n, i) = ch * w.wx(n, i) + bh * wtavg;
    }
}

} // namespace

RMat codifferential(const Spacetime& st, const OneForm& w) {
  const GridGeom& g = st.geom;
  RMat ft, fx;
  raised_fluxes(st, w, ft, fx);
  RMat out = RMat::Zero(g.nt, g.nx);
  const int xedges = g.topology == Topology::Circle ? g.nx : g.nx - 1;
  auto fx_at = [&](int n, int i) -> double {
    if (g.topology == Topology::Circle) return fx(n, wc(g, i));
    if (i < 0 || i >= xedges) return 0.0;
    return fx(n, i);
  };
  for (int n = 1; n <= g.nt - 2; ++n)
    for (int i = g.active_lo(); i <= g.active_hi(); ++i)
      out(n, i) = -((ft(n, i) - ft(n - 1, i)) / g.dt +
                    (fx_at(n, i) - fx_at(n, i - 1)) / g.dx) /
                  st.vol(n, i);
  return out;
}

OneForm coexact_oneform(const Spacetime& st, const RMat& psi) {
  const GridGeom& g = st.geom;
  if (psi.rows() != g.nt - 1 || psi.cols() != g.nx)
    throw std::invalid_argument("stream function shape mismatch");
  if (st.cap_b.cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("coexact forms need a zero-shift background");
  OneForm w = zero_oneform(g);
  const int xedges = g.topology == Topology::Circle ? g.nx : g.nx - 1;
  auto psi_at = [&](int n, int i) -> double {
    if (g.topology == Topology::Circle) return psi(n, wc(g, i));
    if (i < 0 || i >= g.nx - 1) return 0.0;  // dual vertices off the line edge
    return psi(n, i);
  };
  for (int n = 0; n < g.nt - 1; ++n)
    for (int i = 0; i < g.nx; ++i) {
      const double ah = 0.5 * (st.cap_a(n, i) + st.cap_a(n + 1, i));
      w.wt(n, i) = (psi_at(n, i) - psi_at(n, i - 1)) / g.dx / ah;
    }
  for (int n = 1; n <= g.nt - 2; ++n)
    for (int i = 0; i < xedges; ++i) {
      const int ip = wc(g, i + 1);
      const double ch = 0.5 * (st.cap_c(n, i) + st.cap_c(n, ip));
      w.wx(n, i) = -(psi_at(n, i) - psi_at(n - 1, i)) / g.dt / ch;
    }
  return w;
}

OneForm restrict_oneform(const OneForm& w, const Region& r) {
  OneForm out = w;
  const int nt = r.nt, nx = r.nx;
  for (int n = 0; n < nt - 1; ++n)
    for (int i = 0; i < nx; ++i)
      if (!(r.at(n, i) && r.at(n + 1, i))) out.wt(n, i) = 0.0;
  for (int n = 0; n < nt; ++n)
    for (int i = 0; i < nx; ++i) {
      const int ip = r.topology == Topology::Circle ? (i + 1) % nx : i + 1;
      const bool ok = ip < nx && r.at(n, i) && r.at(n, ip);
      if (!ok) out.wx(n, i) = 0.0;
    }
  return out;
}

TestTensor raise_perturbation(const Spacetime& st, const Perturbation& h) {
  const GridGeom& g = st.geom;
  TestTensor f{RMat::Zero(g.nt, g.nx), RMat::Zero(g.nt, g.nx), RMat::Zero(g.nt, g.nx)};
  for (int n = 0; n < g.nt; ++n)
    for (int i = 0; i < g.nx; ++i) {
      const double w = st.vol(n, i);
      const double gtt = st.cap_a(n, i) / w, gtx = st.cap_b(n, i) / w,
                   gxx = st.cap_c(n, i) / w;
      const double htt = h.h_tt(n, i), htx = h.h_tx(n, i), hxx = h.h_xx(n, i);
      f.f_tt(n, i) = gtt * gtt * htt + 2 * gtt * gtx * htx + gtx * gtx * hxx;
      f.f_tx(n, i) = gtt * gtx * htt + (gtt * gxx + gtx * gtx) * htx + gtx * gxx * hxx;
      f.f_xx(n, i) = gtx * gtx * htt + 2 * gtx * gxx * htx + gxx * gxx * hxx;
    }
  return f;
}

namespace {

struct SiteDerivs {
  double dt_v, dx_v;
};

inline SiteDerivs central(const GridGeom& g, const RMat& v, int n, int i) {
  const int ip = wc(g, i + 1), im = wc(g, i - 1);
  double vx_p = (g.topology == Topology::Line && i + 1 >= g.nx) ? 0.0 : v(n, ip);
  double vx_m = (g.topology == Topology::Line && i - 1 < 0) ? 0.0 : v(n, im);
  return {(v(n + 1, i) - v(n - 1, i)) / (2.0 * g.dt), (vx_p - vx_m) / (2.0 * g.dx)};
}

} // namespace

RMat deformation_source(const Spacetime& st, const TestTensor& f, const RMat& phi) {
  const GridGeom& g = st.geom;
  RMat out = RMat::Zero(g.nt, g.nx);
  // Trace with the covariant metric, and densitized components for the
  // divergence part.
  RMat tr(g.nt, g.nx), wtt(g.nt, g.nx), wtx(g.nt, g.nx), wxx(g.nt, g.nx);
  for (int n = 0; n < g.nt; ++n)
    for (int i = 0; i < g.nx; ++i) {
      tr(n, i) = st.g_tt(n, i) * f.f_tt(n, i) + 2 * st.g_tx(n, i) * f.f_tx(n, i) +
                 st.g_xx(n, i) * f.f_xx(n, i);
      wtt(n, i) = st.vol(n, i) * f.f_tt(n, i);
      wtx(n, i) = st.vol(n, i) * f.f_tx(n, i);
      wxx(n, i) = st.vol(n, i) * f.f_xx(n, i);
    }
  for (int n = 1; n <= g.nt - 2; ++n)
    for (int i = g.active_lo(); i <= g.active_hi(); ++i) {
      if (f.f_tt(n, i) == 0 && f.f_tx(n, i) == 0 && f.f_xx(n, i) == 0) {
        auto [dtr_t, dtr_x] = central(g, tr, n, i);
        auto [dwt_t, _u1] = central(g, wtt, n, i);
        auto [dwtx_t, dwtx_x] = central(g, wtx, n, i);
        auto [_u2, dwx_x] = central(g, wxx, n, i);
        if (dtr_t == 0 && dtr_x == 0 && dwt_t == 0 && dwtx_t == 0 && dwtx_x == 0 &&
            dwx_x == 0)
          continue;  // fully outside the support, keep the exact zero
      }
      const double w = st.vol(n, i);
      const double gtt = st.cap_a(n, i) / w, gtx = st.cap_b(n, i) / w,
                   gxx = st.cap_c(n, i) / w;
      auto [dphi_t, dphi_x] = central(g, phi, n, i);
      auto [dtr_t, dtr_x] = central(g, tr, n, i);
      auto [dwtt_t, dwtt_x] = central(g, wtt, n, i);
      auto [dwtx_t, dwtx_x] = central(g, wtx, n, i);
      auto [dwxx_t, dwxx_x] = central(g, wxx, n, i);
      (void)dwtt_x;
      (void)dwxx_t;

      // Christoffels from centered metric differences.
      auto [dgtt_t, dgtt_x] = central(g, st.g_tt, n, i);
      auto [dgtx_t, dgtx_x] = central(g, st.g_tx, n, i);
      auto [dgxx_t, dgxx_x] = central(g, st.g_xx, n, i);
      const double gam_ttt = 0.5 * (gtt * dgtt_t + gtx * (2 * dgtx_t - dgtt_x));
      const double gam_ttx = 0.5 * (gtt * dgtt_x + gtx * dgxx_t);
      const double gam_txx = 0.5 * (gtt * (2 * dgtx_x - dgxx_t) + gtx * dgxx_x);
      const double gam_xtt = 0.5 * (gtx * dgtt_t + gxx * (2 * dgtx_t - dgtt_x));
      const double gam_xtx = 0.5 * (gtx * dgtt_x + gxx * dgxx_t);
      const double gam_xxx = 0.5 * (gtx * (2 * dgtx_x - dgxx_t) + gxx * dgxx_x);

      const double div_t = (dwtt_t + dwtx_x) / w + gam_ttt * f.f_tt(n, i) +
                           2 * gam_ttx * f.f_tx(n, i) + gam_txx * f.f_xx(n, i);
      const double div_x = (dwtx_t + dwxx_x) / w + gam_xtt * f.f_tt(n, i) +
                           2 * gam_xtx * f.f_tx(n, i) + gam_xxx * f.f_xx(n, i);

      // Second covariant derivatives of phi.
      const int ip = wc(g, i + 1), im = wc(g, i - 1);
      const double d2_tt = (phi(n + 1, i) - 2 * phi(n, i) + phi(n - 1, i)) / (g.dt * g.dt);
      const double d2_xx = (phi(n, ip) - 2 * phi(n, i) + phi(n, im)) / (g.dx * g.dx);
      const double d2_tx = (phi(n + 1, ip) - phi(n + 1, im) - phi(n - 1, ip) +
                            phi(n - 1, im)) /
                           (4.0 * g.dt * g.dx);
      const double hess_tt = d2_tt - gam_ttt * dphi_t - gam_xtt * dphi_x;
      const double hess_tx = d2_tx - gam_ttx * dphi_t - gam_xtx * dphi_x;
      const double hess_xx = d2_xx - gam_txx * dphi_t - gam_xxx * dphi_x;

      const double gradtr_t = gtt * dtr_t + gtx * dtr_x;
      const double gradtr_x = gtx * dtr_t + gxx * dtr_x;

      out(n, i) = 0.5 * (gradtr_t * dphi_t + gradtr_x * dphi_x) -
                  (div_t * dphi_t + div_x * dphi_x) -
                  (f.f_tt(n, i) * hess_tt + 2 * f.f_tx(n, i) * hess_tx +
                   f.f_xx(n, i) * hess_xx);
    }
  return out;
}

RMat deformation_flow(const Spacetime& st, double mass, const TestTensor& f,
                      const RMat& phi) {
  // First-order response of rce along this direction: minus the propagator
  // of the operator derivative applied to the solution.
  return -propagator_apply(st, mass, deformation_source(st, f, phi));
}

double stress_energy_pairing(const Spacetime& st, double mass, const TestTensor& f,
                             const RMat& phi, const RMat& psi) {
  const GridGeom& g = st.geom;
  const double m2 = mass * mass;
  double acc = 0;
  for (int n = 1; n <= g.nt - 2; ++n)
    for (int i = g.active_lo(); i <= g.active_hi(); ++i) {
      if (f.f_tt(n, i) == 0 && f.f_tx(n, i) == 0 && f.f_xx(n, i) == 0) continue;
      const double w = st.vol(n, i);
      const double gtt = st.cap_a(n, i) / w, gtx = st.cap_b(n, i) / w,
                   gxx = st.cap_c(n, i) / w;
      auto [dp_t, dp_x] = central(g, phi, n, i);
      auto [dq_t, dq_x] = central(g, psi, n, i);
      const double cross = gtt * dp_t * dq_t + gtx * (dp_t * dq_x + dp_x * dq_t) +
                           gxx * dp_x * dq_x;
      const double lag = 0.5 * (cross - m2 * phi(n, i) * psi(n, i));
      const double t_tt = dp_t * dq_t - st.g_tt(n, i) * lag;
      const double t_tx = 0.5 * (dp_t * dq_x + dp_x * dq_t) - st.g_tx(n, i) * lag;
      const double t_xx = dp_x * dq_x - st.g_xx(n, i) * lag;
      acc += w * (f.f_tt(n, i) * t_tt + 2 * f.f_tx(n, i) * t_tx + f.f_xx(n, i) * t_xx);
    }
  return acc * g.dt * g.dx;
}

RMat perturbation_operator(const Spacetime& st, double mass, const Perturbation& h,
                           const RMat& phi) {
  const Spacetime stp = perturb(st, h);
  return apply_wave_op(stp, mass, phi) - apply_wave_op(st, mass, phi);
}

RVec chi_weights(const GridGeom& geom, int row_lo, int row_hi) {
  if (!(row_lo < row_hi)) throw std::invalid_argument("cutoff rows out of order");
  RVec chi(geom.nt);
  for (int n = 0; n < geom.nt; ++n) {
    if (n <= row_lo) {
      chi(n) = 1.0;
    } else if (n >= row_hi) {
      chi(n) = 0.0;
    } else {
      const double u = static_cast<double>(n - row_lo) / (row_hi - row_lo);
      chi(n) = 1.0 - (10.0 * u * u * u - 15.0 * u * u * u * u + 6.0 * u * u * u * u * u);
    }
  }
  return chi;
}

} // namespace dynloc
