#include "dynloc/weyl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dynloc/linalg.hpp"

namespace dynloc {

namespace {

int lex_cmp(const RatVec& a, const RatVec& b) {
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  for (size_t i = 0; i < a.size(); ++i) {
    const int c = cmp(a[i], b[i]);
    if (c != 0) return c;
  }
  return 0;
}

bool term_less(const WeylTerm& x, const WeylTerm& y) {
  const int c = lex_cmp(x.label, y.label);
  if (c != 0) return c < 0;
  return x.theta < y.theta;
}

// Sort, merge equal (label, theta) pairs, drop vanished amplitudes.
void canonicalize(WeylElement& e) {
  std::sort(e.terms.begin(), e.terms.end(), term_less);
  std::vector<WeylTerm> out;
  out.reserve(e.terms.size());
  for (auto& t : e.terms) {
    if (!out.empty() && lex_cmp(out.back().label, t.label) == 0 && out.back().theta == t.theta)
      out.back().amp += t.amp;
    else
      out.push_back(std::move(t));
  }
  std::erase_if(out, [](const WeylTerm& t) { return scalar_is_zero(t.amp, 0.0); });
  e.terms = std::move(out);
}

RatVec mat_apply(const RatMat& m, const RatVec& v) {
  RatVec out(m.size(), mpq_class(0));
  for (size_t r = 0; r < m.size(); ++r) {
    if (m[r].size() != v.size()) throw std::invalid_argument("matrix row length mismatch");
    for (size_t c = 0; c < v.size(); ++c)
      if (m[r][c] != 0 && v[c] != 0) out[r] += m[r][c] * v[c];
  }
  return out;
}

// Reduced row echelon form in place; returns the pivot column of each
// surviving row, zero rows removed.
std::vector<int> rref(RatMat& rows) {
  std::vector<int> pivots;
  if (rows.empty()) return pivots;
  const size_t cols = rows[0].size();
  size_t r = 0;
  for (size_t c = 0; c < cols && r < rows.size(); ++c) {
    size_t p = r;
    while (p < rows.size() && rows[p][c] == 0) ++p;
    if (p == rows.size()) continue;
    std::swap(rows[r], rows[p]);
    const mpq_class lead = rows[r][c];
    for (size_t j = c; j < cols; ++j) rows[r][j] /= lead;
    for (size_t i = 0; i < rows.size(); ++i) {
      if (i == r || rows[i][c] == 0) continue;
      const mpq_class f = rows[i][c];
      for (size_t j = c; j < cols; ++j) rows[i][j] -= f * rows[r][j];
    }
    pivots.push_back(static_cast<int>(c));
    ++r;
  }
  rows.resize(r);
  return pivots;
}

bool reduces_to_zero(const RatMat& rr, const std::vector<int>& pivots, RatVec v) {
  for (size_t i = 0; i < pivots.size(); ++i) {
    const mpq_class f = v[pivots[i]];
    if (f == 0) continue;
    for (size_t j = 0; j < v.size(); ++j)
      if (rr[i][j] != 0) v[j] -= f * rr[i][j];
  }
  for (const auto& q : v)
    if (q != 0) return false;
  return true;
}

} // namespace

WeylElement weyl_zero(int dim) { return WeylElement{dim, {}}; }

WeylElement weyl_one(int dim) {
  WeylElement e{dim, {WeylTerm{RatVec(dim, mpq_class(0)), mpq_class(0), CmplxRat(1)}}};
  return e;
}

WeylElement weyl_generator(const RatVec& label) {
  WeylElement e{static_cast<int>(label.size()),
                {WeylTerm{label, mpq_class(0), CmplxRat(1)}}};
  return e;
}

WeylElement weyl_add(const WeylElement& a, const WeylElement& b) {
  if (a.dim != b.dim) throw std::invalid_argument("dim mismatch");
  WeylElement e = a;
  e.terms.insert(e.terms.end(), b.terms.begin(), b.terms.end());
  canonicalize(e);
  return e;
}

WeylElement weyl_scale(const WeylElement& a, const CmplxRat& amp, const mpq_class& theta) {
  WeylElement e = a;
  for (auto& t : e.terms) {
    t.amp = t.amp * amp;
    t.theta += theta;
  }
  canonicalize(e);
  return e;
}

bool weyl_equal(const WeylElement& a, const WeylElement& b) {
  if (a.dim != b.dim || a.terms.size() != b.terms.size()) return false;
  for (size_t i = 0; i < a.terms.size(); ++i) {
    const auto& x = a.terms[i];
    const auto& y = b.terms[i];
    if (lex_cmp(x.label, y.label) != 0 || x.theta != y.theta || !(x.amp == y.amp))
      return false;
  }
  return true;
}

mpq_class weyl_pairing(const RatMat& sigma, const RatVec& u, const RatVec& v) {
  if (sigma.size() != u.size() || u.size() != v.size())
    throw std::invalid_argument("pairing size mismatch");
  mpq_class acc(0);
  for (size_t a = 0; a < u.size(); ++a) {
    if (u[a] == 0) continue;
    for (size_t b = 0; b < v.size(); ++b)
      if (sigma[a][b] != 0 && v[b] != 0) acc += u[a] * sigma[a][b] * v[b];
  }
  return acc;
}

WeylElement weyl_mul(const WeylElement& a, const WeylElement& b, const RatMat& sigma) {
  if (a.dim != b.dim) throw std::invalid_argument("dim mismatch");
  if (static_cast<int>(sigma.size()) != a.dim) throw std::invalid_argument("bad form");
  WeylElement e{a.dim, {}};
  e.terms.reserve(a.terms.size() * b.terms.size());
  for (const auto& x : a.terms)
    for (const auto& y : b.terms) {
      WeylTerm t;
      t.label.resize(x.label.size());
      for (size_t i = 0; i < t.label.size(); ++i) t.label[i] = x.label[i] + y.label[i];
      t.theta = x.theta + y.theta - weyl_pairing(sigma, x.label, y.label) / 2;
      t.amp = x.amp * y.amp;
      e.terms.push_back(std::move(t));
    }
  canonicalize(e);
  return e;
}

WeylElement weyl_star(const WeylElement& a) {
  WeylElement e = a;
  for (auto& t : e.terms) {
    for (auto& q : t.label) q = -q;
    t.theta = -t.theta;
    t.amp = conj_scalar(t.amp);
  }
  canonicalize(e);
  return e;
}

cplx weyl_coeff_float(const WeylElement& a, const RatVec& label) {
  cplx acc = 0;
  for (const auto& t : a.terms)
    if (lex_cmp(t.label, label) == 0) {
      const double th = t.theta.get_d();
      acc += to_cplx(t.amp) * cplx(std::cos(th), std::sin(th));
    }
  return acc;
}

int rat_rank(RatMat rows) {
  rref(rows);
  return static_cast<int>(rows.size());
}

bool rat_span_contains(RatMat rows, const RatVec& v) {
  const auto pivots = rref(rows);
  return reduces_to_zero(rows, pivots, v);
}

bool rat_same_span(const RatMat& a, const RatMat& b) {
  RatMat ra = a;
  const auto pa = rref(ra);
  for (const auto& row : b)
    if (!reduces_to_zero(ra, pa, row)) return false;
  RatMat rb = b;
  const auto pb = rref(rb);
  for (const auto& row : a)
    if (!reduces_to_zero(rb, pb, row)) return false;
  return true;
}

RatMat rat_kernel(const RatMat& m) {
  if (m.empty()) return {};
  const size_t cols = m[0].size();
  RatMat rows = m;
  const auto pivots = rref(rows);
  std::vector<bool> is_pivot(cols, false);
  for (int p : pivots) is_pivot[p] = true;
  RatMat basis;
  for (size_t f = 0; f < cols; ++f) {
    if (is_pivot[f]) continue;
    RatVec u(cols, mpq_class(0));
    u[f] = 1;
    for (size_t i = 0; i < pivots.size(); ++i) u[pivots[i]] = -rows[i][f];
    basis.push_back(std::move(u));
  }
  return basis;
}

bool preserves_form(const RatMat& map, const RatMat& sigma) {
  const size_t d = sigma.size();
  if (map.size() != d) return false;
  // map^T sigma map == sigma, exactly.
  for (size_t a = 0; a < d; ++a)
    for (size_t b = 0; b < d; ++b) {
      mpq_class acc(0);
      for (size_t i = 0; i < d; ++i) {
        if (map[i][a] == 0) continue;
        for (size_t j = 0; j < d; ++j)
          if (sigma[i][j] != 0 && map[j][b] != 0) acc += map[i][a] * sigma[i][j] * map[j][b];
      }
      if (acc != sigma[a][b]) return false;
    }
  return true;
}

WeylElement weyl_map(const WeylElement& a, const RatMat& map) {
  WeylElement e{static_cast<int>(map.size()), {}};
  e.terms.reserve(a.terms.size());
  for (const auto& t : a.terms)
    e.terms.push_back(WeylTerm{mat_apply(map, t.label), t.theta, t.amp});
  canonicalize(e);
  return e;
}

std::vector<RatVec> label_orbit(const RatMat& map, const RatVec& u, int max_len) {
  std::vector<RatVec> orbit{u};
  RatVec cur = mat_apply(map, u);
  while (lex_cmp(cur, u) != 0) {
    if (static_cast<int>(orbit.size()) >= max_len) return {};
    orbit.push_back(cur);
    cur = mat_apply(map, cur);
  }
  return orbit;
}

WeylElement orbit_average(const std::vector<RatVec>& orbit) {
  if (orbit.empty()) throw std::invalid_argument("empty orbit");
  WeylElement e{static_cast<int>(orbit[0].size()), {}};
  CmplxRat w{mpq_class(1, static_cast<unsigned long>(orbit.size())), mpq_class(0)};
  for (const auto& u : orbit) e.terms.push_back(WeylTerm{u, mpq_class(0), w});
  canonicalize(e);
  return e;
}

RatMat family_fixed_labels(const std::vector<RatMat>& maps) {
  if (maps.empty()) throw std::invalid_argument("need at least one map");
  const size_t d = maps[0].size();
  RatMat stacked;
  stacked.reserve(maps.size() * d);
  for (const auto& m : maps) {
    if (m.size() != d) throw std::invalid_argument("map size mismatch");
    for (size_t r = 0; r < d; ++r) {
      RatVec row = m[r];
      row[r] -= 1;
      stacked.push_back(std::move(row));
    }
  }
  return rat_kernel(stacked);
}

RatMat weyl_form_of_grid(const GridGeom& geom) {
  const int aw = geom.active_width();
  const mpq_class dx = rationalize(geom.dx);
  RatMat sigma(2 * aw, RatVec(2 * aw, mpq_class(0)));
  for (int i = 0; i < aw; ++i) {
    sigma[i][aw + i] = dx;
    sigma[aw + i][i] = -dx;
  }
  return sigma;
}

RatMat interval_print_labels(const GridGeom& geom, int c, int d) {
  if (c > d) throw std::invalid_argument("empty interval");
  const int aw = geom.active_width();
  const int alo = geom.active_lo();
  if (d - c + 3 > aw) throw std::invalid_argument("prints wrap onto themselves");
  auto slot = [&](int i) {
    if (geom.topology == Topology::Circle) return geom.wrap_x(i);
    if (i < alo || i > geom.active_hi())
      throw std::invalid_argument("print leaves the active strip");
    return i - alo;
  };
  RatMat labels;
  for (int i = c; i <= d; ++i) {
    RatVec u(2 * aw, mpq_class(0));
    u[slot(i)] = 1;
    labels.push_back(std::move(u));
  }
  for (int i = c - 1; i <= d + 1; ++i) {
    RatVec u(2 * aw, mpq_class(0));
    u[aw + slot(i)] = 1;
    labels.push_back(std::move(u));
  }
  return labels;
}

RatVec constant_label(const GridGeom& geom) {
  if (geom.topology != Topology::Circle)
    throw std::invalid_argument("locally constant modes vanish on the line");
  const int aw = geom.active_width();
  RatVec u(2 * aw, mpq_class(0));
  for (int i = 0; i < aw; ++i) u[i] = 1;
  return u;
}

RatVec plateau_label(const GridGeom& geom, int a, int b, int c, int d) {
  if (geom.topology != Topology::Line)
    throw std::invalid_argument("plateau modes live on the line");
  if (!(geom.active_lo() <= a && a < b && b <= c && c < d && d <= geom.active_hi()))
    throw std::invalid_argument("plateau stations out of order");
  const int aw = geom.active_width();
  const int alo = geom.active_lo();
  RatVec u(2 * aw, mpq_class(0));
  for (int i = a; i <= d; ++i) {
    mpq_class v;
    if (i <= b)
      v = mpq_class(i - a, b - a);
    else if (i < c)
      v = 1;
    else
      v = mpq_class(d - i, d - c);
    v.canonicalize();
    u[i - alo] = v;
  }
  return u;
}

RVec label_to_float(const RatVec& v) {
  RVec out(static_cast<long>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out(static_cast<long>(i)) = v[i].get_d();
  return out;
}

WeylLocalityReport weyl_locality_check(const RatMat& kin_labels, const RatMat& dyn_labels) {
  WeylLocalityReport rep;
  rep.kin_rank = rat_rank(kin_labels);
  rep.dyn_rank = rat_rank(dyn_labels);

  RatMat kin_rr = kin_labels;
  const auto kin_p = rref(kin_rr);
  rep.dyn_inside_kin = true;
  for (const auto& row : dyn_labels)
    if (!reduces_to_zero(kin_rr, kin_p, row)) {
      rep.dyn_inside_kin = false;
      rep.witness = row;
      break;
    }

  RatMat dyn_rr = dyn_labels;
  const auto dyn_p = rref(dyn_rr);
  rep.kin_inside_dyn = true;
  for (const auto& row : kin_labels)
    if (!reduces_to_zero(dyn_rr, dyn_p, row)) {
      rep.kin_inside_dyn = false;
      break;
    }
  return rep;
}

namespace {

// Vectors share the term bookkeeping, so they share its canonical form.
void canonicalize_vector(WeylVector& f) {
  WeylElement shim{f.dim, std::move(f.entries)};
  canonicalize(shim);
  f.entries = std::move(shim.terms);
}

} // namespace

WeylVector vector_zero(int dim) { return WeylVector{dim, {}}; }

WeylVector vector_point(const RatVec& at, const CmplxRat& amp, const mpq_class& theta) {
  WeylVector f{static_cast<int>(at.size()), {WeylTerm{at, theta, amp}}};
  canonicalize_vector(f);
  return f;
}

WeylVector vector_add(const WeylVector& f, const WeylVector& g) {
  if (f.dim != g.dim) throw std::invalid_argument("dim mismatch");
  WeylVector h{f.dim, f.entries};
  h.entries.insert(h.entries.end(), g.entries.begin(), g.entries.end());
  canonicalize_vector(h);
  return h;
}

bool vector_equal(const WeylVector& f, const WeylVector& g) {
  const WeylElement x{f.dim, f.entries};
  const WeylElement y{g.dim, g.entries};
  return weyl_equal(x, y);
}

WeylVector ell2_action(const RatMat& sigma, const WeylElement& a, const WeylVector& f) {
  if (a.dim != f.dim) throw std::invalid_argument("dim mismatch");
  if (static_cast<int>(sigma.size()) != a.dim) throw std::invalid_argument("bad form");
  WeylVector out{f.dim, {}};
  out.entries.reserve(a.terms.size() * f.entries.size());
  for (const auto& t : a.terms)
    for (const auto& p : f.entries) {
      WeylTerm q;
      q.label.resize(p.label.size());
      for (size_t i = 0; i < q.label.size(); ++i) q.label[i] = p.label[i] - t.label[i];
      q.theta = t.theta + p.theta + weyl_pairing(sigma, t.label, p.label) / 2;
      q.amp = t.amp * p.amp;
      out.entries.push_back(std::move(q));
    }
  canonicalize_vector(out);
  return out;
}

PhaseSum ell2_inner(const WeylVector& f, const WeylVector& g) {
  if (f.dim != g.dim) throw std::invalid_argument("dim mismatch");
  PhaseSum s;
  // Both sides are canonical, so equal labels pair off in a single sweep.
  size_t i = 0, j = 0;
  while (i < f.entries.size() && j < g.entries.size()) {
    const int c = lex_cmp(f.entries[i].label, g.entries[j].label);
    if (c < 0) {
      ++i;
    } else if (c > 0) {
      ++j;
    } else {
      // Canonical form may split one label over several theta values; walk
      // the full blocks on both sides.
      size_t ie = i, je = j;
      while (ie < f.entries.size() && lex_cmp(f.entries[ie].label, f.entries[i].label) == 0) ++ie;
      while (je < g.entries.size() && lex_cmp(g.entries[je].label, g.entries[j].label) == 0) ++je;
      for (size_t u = i; u < ie; ++u)
        for (size_t v = j; v < je; ++v)
          s.parts.emplace_back(g.entries[v].theta - f.entries[u].theta,
                               conj_scalar(f.entries[u].amp) * g.entries[v].amp);
      i = ie;
      j = je;
    }
  }
  std::sort(s.parts.begin(), s.parts.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<mpq_class, CmplxRat>> merged;
  for (auto& p : s.parts) {
    if (!merged.empty() && merged.back().first == p.first)
      merged.back().second += p.second;
    else
      merged.push_back(std::move(p));
  }
  std::erase_if(merged, [](const auto& p) { return scalar_is_zero(p.second, 0.0); });
  s.parts = std::move(merged);
  return s;
}

bool phase_sum_equal(const PhaseSum& a, const PhaseSum& b) {
  if (a.parts.size() != b.parts.size()) return false;
  for (size_t i = 0; i < a.parts.size(); ++i)
    if (a.parts[i].first != b.parts[i].first || !(a.parts[i].second == b.parts[i].second))
      return false;
  return true;
}

std::vector<WeylElement> orbit_sum_basis(const RatMat& map, const std::vector<RatVec>& pool,
                                         int max_orbit) {
  std::vector<WeylElement> basis;
  std::vector<RatVec> seen;
  for (const auto& u : pool) {
    bool covered = false;
    for (const auto& s : seen)
      if (lex_cmp(s, u) == 0) {
        covered = true;
        break;
      }
    if (covered) continue;
    auto orbit = label_orbit(map, u, max_orbit);
    if (orbit.empty()) throw std::runtime_error("orbit budget exceeded");
    for (const auto& v : orbit) seen.push_back(v);
    basis.push_back(orbit_average(orbit));
  }
  return basis;
}

} // namespace dynloc
