#pragma once

#include <optional>
#include <string>
#include <vector>

#include "graphon/core.hpp"
#include "graphon/optimize.hpp"

namespace graphon {

struct TooFewPoints : GraphonError {
  using GraphonError::GraphonError;
};
struct BoundaryNotInWindow : GraphonError {
  using GraphonError::GraphonError;
};

/// Lower boundary tau_low(eps) of the feasible region, piecewise linear
/// between mesh knots. Exactly 0 for eps <= 1/2 (complete bipartite), with
/// cusp points (k/(k+1), k(k-1)/(k+1)^2) inserted exactly.
struct LowerBoundary {
  std::vector<std::pair<double, double>> knots;  // sorted by eps

  double operator()(double eps) const;
};

/// Numerical lower boundary on an eps mesh via extremal_tau(min); cusps are
/// inserted exactly.
LowerBoundary compute_lower_boundary(double eps_lo, double eps_hi, int mesh,
                                     const SolveConfig& cfg);

enum class Feasibility { Interior, Boundary, Infeasible };
std::string to_string(Feasibility f);

/// Interior iff tau_low(eps) + margin < tau < eps^(3/2) - margin.
Feasibility feasible(const ConstraintPoint& pt, const LowerBoundary& lower,
                     double margin = 1e-6);

/// One point of a line or grid scan.
struct ScanRecord {
  ConstraintPoint point;
  double tau_rescaled = 0.0;  // tau - eps(2eps - 1)
  double entropy = 0.0;
  PhaseLabel label;
  double beta = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
  MultipodalGraphon optimizer;
  double kkt = 0.0, el = 0.0;
};

struct ScanOptions {
  int threads = 0;  // 0: GRAPHON_LAB_THREADS or hardware
  /// When non-empty the scan is restricted to these families and each point
  /// keeps the best family solve.
  std::vector<std::pair<Family, int>> families;
  bool chain_warm_starts = true;
};

/// Solves along the vertical segment (eps, tau) for tau on a uniform grid
/// of `steps` points in [tau_lo, tau_hi]; records sorted by increasing tau.
/// Cold solves run in parallel; a descending warm-start chain follows and
/// the better result is kept per point.
std::vector<ScanRecord> scan_line(double eps, double tau_lo, double tau_hi,
                                  int steps, const SolveConfig& cfg,
                                  const ScanOptions& opt = {});

struct TransitionEvent {
  double low = 0.0, high = 0.0;  // scan-coordinate interval
  enum class Kind { SlopeJump, LabelChange, Both } kind = Kind::SlopeJump;
  double slope_before = 0.0, slope_after = 0.0;
  PhaseLabel label_before, label_after;
};

std::string to_string(TransitionEvent::Kind k);

/// Flags slope jumps of ds/dtau above slope_jump_tol and label changes on a
/// uniformly spaced scan; co-located events merge into Kind::Both.
std::vector<TransitionEvent> detect_transitions(
    const std::vector<ScanRecord>& records, double slope_jump_tol = 0.05);

struct GridScan {
  std::vector<double> eps_values, tau_values;
  std::vector<ScanRecord> records;  // row-major: eps index * ny + tau index
};

GridScan scan_grid(double eps_lo, double eps_hi, double tau_lo, double tau_hi,
                   int nx, int ny, const SolveConfig& cfg,
                   const LowerBoundary& lower, const ScanOptions& opt = {});

/// Continuity probe for the A(n,0) <-> B(n-1,1) transition: locates the
/// det H(S) = 0 root inside the window, runs the B(n-1,1)-restricted solver
/// across it (uniform grid plus points geometrically clustered at the root),
/// and reports the symmetry-breaking order parameter.
struct PitchforkReport {
  double boundary_tau = 0.0;
  std::vector<double> taus;          // sorted ascending
  std::vector<double> order_params;  // aligned with taus
  std::vector<double> entropies;
  bool b_side_below = true;  // which side of the root is the broken phase
  double nearest_order = 0.0;
  double max_slope_jump = 0.0;  // on the uniform sub-grid
  bool continuous = false;
};

struct PitchforkOptions {
  double order_tol = 0.002;      // verdict threshold is 10x this
  double slope_jump_tol = 0.05;
  int cluster_depth = 7;
};

PitchforkReport pitchfork_probe(int n, double eps, double tau_lo,
                                double tau_hi, int steps,
                                const SolveConfig& cfg,
                                const PitchforkOptions& opt = {});

/// Deviation of a graphon from exact A(n,0) symmetry: max block distance to
/// the (mean diagonal, mean off-diagonal) pattern.
double a_symmetry_deviation(const MultipodalGraphon& g);

/// Wrapper wiring extremal_tau(min) into families::nonuniqueness_pair.
std::pair<MultipodalGraphon, MultipodalGraphon> find_nonuniqueness_pair(
    const ConstraintPoint& pt, const SolveConfig& cfg);

}  // namespace graphon
