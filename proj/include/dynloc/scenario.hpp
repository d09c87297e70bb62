#pragma once

// Named experiments over the locality machinery.  A scenario pins one
// question (background, mass, theory, region, quantization layer) to the
// verdict it is expected to produce, and running it yields a report of
// the realized verdict plus the side checks that certify it.  Reports
// serialize with a fixed key order and no timing data, so a repeated run
// with the same seed emits identical bytes.

#include <cstdint>
#include <string>
#include <vector>

#include "dynloc/locality.hpp"

namespace dynloc {

// shape "diamond": double cone over [lo, hi] anchored at the context row.
// shape "pair": union of two such cones over [lo, hi] and [lo2, hi2].
// shape "slab": all rows in [row_lo, row_hi] (active columns).
struct RegionSpec {
  std::string shape = "diamond";
  int lo = 0, hi = 0;
  int lo2 = 0, hi2 = 0;
  int row_lo = 0, row_hi = 0;
};

struct Scenario {
  std::string name;
  std::string claim;  // one-sentence statement under test
  Topology topology = Topology::Circle;
  int nt = 0, nx = 0;
  double dt = 0, dx = 0;
  double mass = 0;
  std::string theory = "scalar";      // "scalar" | "current"
  std::string quantization = "none";  // "none" | "poly" | "weyl"
  int row = -1;                       // reference row; -1 picks nt/2
  int band_lo = -1, band_hi = -1;     // probe band; -1 picks widest legal
  RegionSpec region;
  int levels = 2;  // base-enumeration subdivision depth
  std::uint64_t seed = 2026;
  double tol_compare = 1e-6;
  // "equal" | "kin-inside-dyn" | "dyn-inside-kin" | "" (no verdict claim)
  std::string expect = "equal";
  int expect_gap = -1;  // required dyn-minus-kin dimension gap; -1 skips
};

// One certified inequality; relation is "<=" or ">=".
struct CheckResult {
  std::string name;
  double value = 0;
  double bound = 0;
  std::string relation = "<=";
  bool pass = false;
};

struct ScenarioReport {
  Scenario scenario;
  std::string verdict;  // realized comparison verdict, or "none"
  int dim_kin = 0, dim_dyn = 0, dim_gap = 0;
  bool verdict_expected = false;
  bool checks_passed = false;
  bool expected = false;  // verdict_expected && checks_passed
  std::vector<CheckResult> checks;
};

// Parsing throws std::runtime_error with a field-level message on bad
// input.  Serialization is stable: fixed key order, default float repr.
Scenario scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const Scenario& s);
std::string report_to_json_text(const ScenarioReport& r);

Spacetime scenario_spacetime(const Scenario& s);
LocalityContext scenario_context(const Scenario& s, const Spacetime& st,
                                 ExecPolicy pol = ExecPolicy::Serial);
Region scenario_region(const Scenario& s, const GridGeom& geom, int row);

ScenarioReport run_scenario(const Scenario& s, ExecPolicy pol = ExecPolicy::Serial,
                            double tolerance_scale = 1.0);

// The verdict table end to end: massive scalar on both topologies and all
// three shapes, the massless circle gap, the oracle cross-check, the
// current theory connected and split, and the quantized layers on
// reduced grids.
std::vector<Scenario> builtin_scenarios();

// One row of refinement: grid halved in step per level, errors of the
// propagator identities and of the three stress-energy derivative routes.
struct ConvergenceLevel {
  int nt = 0, nx = 0;
  double dt = 0, dx = 0;
  double green_mode_defect = 0;   // sigma(Ef, u) vs integral, sampled mode u
  double green_value = 0;         // sigma(Ef, Eg) at this level
  double green_exact_defect = 0;  // in-level identity sigma(Ef, Eg) = E(f, g)
  double causality_defect = 0;    // |E(f, g)| for spacelike f, g (normalized)
  double q_fd = 0, q_flow = 0, q_stress = 0;  // derivative routes
};

struct ConvergenceStudy {
  std::vector<ConvergenceLevel> levels;
  double green_value_ref = 0;  // one level beyond the last
  // log2 error ratios per halving, averaged over the level pairs
  double green_mode_slope = 0;
  double green_value_slope = 0;
  double magic_fd_flow_slope = 0;
  double magic_flow_stress_slope = 0;
  double magic_fd_stress_slope = 0;
  // centered-difference remainder against the linear response, base level
  std::vector<double> remainder_s, remainder_val;
  double remainder_slope = 0;
};

struct ConvergeConfig {
  int base_nt = 256, base_nx = 128;
  double base_dt = 0.0125, base_dx = 0.025;
  int levels = 3;
  double mass = 0.5;
};

ConvergenceStudy run_convergence(const ConvergeConfig& cfg);

std::string convergence_to_json_text(const ConvergenceStudy& st);
std::string convergence_to_csv(const ConvergenceStudy& st);

// suite summary: one line per scenario.
std::string suite_to_csv(const std::vector<ScenarioReport>& reports);

// Write text to path through a temp file and rename, so readers never see
// a half-written report.
void write_file_atomic(const std::string& path, const std::string& text);

} // namespace dynloc
