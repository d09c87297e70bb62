#pragma once

// Discrete Klein-Gordon dynamics on a lattice spacetime: a time-symmetric
// three-level stencil for P = box + m^2, exact forward/backward stepping,
// retarded/advanced Green operators, the causal propagator, collocated
// Cauchy data with its symplectic form, relative Cauchy evolution through
// a metric perturbation, conserved charge flux, stress-energy pairings,
// and edge-based one-form calculus for the massless current observables.

#include <optional>
#include <utility>
#include <vector>

#include "dynloc/spacetime.hpp"

namespace dynloc {

enum class ExecPolicy { Serial, Parallel };

// Collocated data (phi, pi) on one grid row; pi is the densitized momentum
// sqrt|g| g^{ta} d_a phi.  Pinned line columns must stay zero.
struct CauchyData {
  RVec phi, pi;  // length nx
};

int phase_dim(const GridGeom& geom);  // 2 * active width
RVec pack_data(const GridGeom& geom, const CauchyData& data);
CauchyData unpack_data(const GridGeom& geom, const RVec& v);

// sigma(u, v) = dx * sum_i (phi_u pi_v - pi_u phi_v) as a matrix on packed
// phase vectors.
RMat sigma_matrix(const GridGeom& geom);
double sigma_pair_data(const GridGeom& geom, const CauchyData& u, const CauchyData& v);

// Wave operator on interior rows (boundary rows and pinned columns zero).
RMat apply_wave_op(const Spacetime& st, double mass, const RMat& phi);

// Rows row-1 and row+1 of the solution determined by data at `row` and the
// field equation there.  Needs the shift component to vanish on the three
// rows around the surface.
std::pair<RVec, RVec> neighbor_rows_from_data(const Spacetime& st, double mass, int row,
                                              const CauchyData& data,
                                              const RMat* source = nullptr);

// Full solution of P phi = source (default 0) with the given data.
RMat solve_cauchy(const Spacetime& st, double mass, int row, const CauchyData& data,
                  const RMat* source = nullptr);

CauchyData read_data(const Spacetime& st, const RMat& phi, int row);

// Green operators for interior-supported sources (rows 0 and nt-1 of the
// source must vanish).  retarded: support sweeps forward; advanced: back.
RMat retarded_solve(const Spacetime& st, double mass, const RMat& source);
RMat advanced_solve(const Spacetime& st, double mass, const RMat& source);
// Causal propagator advanced - retarded; solves the homogeneous equation.
RMat propagator_apply(const Spacetime& st, double mass, const RMat& source);

// Phase-space snapshot of E(delta at cell) for a batch of cells, one packed
// column per cell.  This is the hot kernel behind kinematic spans.
RMat batch_delta_propagator(const Spacetime& st, double mass,
                            const std::vector<std::pair<int, int>>& cells, int read_row,
                            ExecPolicy pol);

struct RceRows {
  int mid = 0;    // reference surface carrying the phase space
  int minus = 0;  // surface below the perturbation
  int plus = 0;   // surface above the perturbation
};

// Relative Cauchy evolution through h: out the top, back through the
// perturbed metric, forward again on the background.
RVec rce_apply(const Spacetime& st, double mass, const Perturbation& h, RceRows rows,
               const RVec& phase);
RMat rce_matrix(const Spacetime& st, double mass, const Perturbation& h, RceRows rows,
                ExecPolicy pol);

// Conserved flux between rows n and n+1; for a source-free massless
// solution this is independent of n to rounding.
double flux_charge(const Spacetime& st, const RMat& phi, int n);
double charge_of_data(const Spacetime& st, double mass, int row, const CauchyData& data);
// Same functional as a covector on packed phase vectors.
RVec charge_functional(const Spacetime& st, double mass, int row);

// One-forms on grid edges: wt(n, i) sits at (n+1/2, i), wx(n, i) at
// (n, i+1/2).  On the line the last wx column is unused.
struct OneForm {
  RMat wt;  // (nt-1) x nx
  RMat wx;  // nt x nx
};

OneForm zero_oneform(const GridGeom& geom);
OneForm exterior_d(const GridGeom& geom, const RMat& phi);
// Codifferential with index raising on half-cells; -delta(d phi) matches
// the wave operator exactly wherever the shift vanishes.
RMat codifferential(const Spacetime& st, const OneForm& w);
// Exactly divergence-free form from a stream function on dual vertices
// (psi(n, i) sits at (n+1/2, i+1/2)); background must have zero shift.
OneForm coexact_oneform(const Spacetime& st, const RMat& psi);
// Zero out edges not contained in the region (both endpoints inside).
OneForm restrict_oneform(const OneForm& w, const Region& r);

// Symmetric contravariant test tensor fields f^{ab} sampled at sites.
struct TestTensor {
  RMat f_tt, f_tx, f_xx;
};

// Raise the indices of a metric perturbation: f^{ab} = g^{ac} g^{bd} h_cd.
TestTensor raise_perturbation(const Spacetime& st, const Perturbation& h);

// Source term of the metric-derivative observable,
//   (1/2) grad^a(tr f) d_a phi - (div f)^b d_b phi,
// sampled on interior sites.  Christoffels come from central differences.
RMat deformation_source(const Spacetime& st, const TestTensor& f, const RMat& phi);
// E applied to it: derivative of rce along the perturbation direction.
RMat deformation_flow(const Spacetime& st, double mass, const TestTensor& f,
                      const RMat& phi);

// integral of f^{ab} T_ab[phi, psi] dvol with the polarized stress tensor.
double stress_energy_pairing(const Spacetime& st, double mass, const TestTensor& f,
                             const RMat& phi, const RMat& psi);

// Difference of wave operators through a perturbation (applied to phi).
RMat perturbation_operator(const Spacetime& st, double mass, const Perturbation& h,
                           const RMat& phi);

// Smooth time cutoff: 1 at and below row_lo, 0 at and above row_hi.
RVec chi_weights(const GridGeom& geom, int row_lo, int row_hi);

} // namespace dynloc
