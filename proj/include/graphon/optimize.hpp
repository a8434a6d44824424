#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "graphon/core.hpp"
#include "graphon/densities.hpp"
#include "graphon/families.hpp"

namespace graphon {

struct NoCandidates : GraphonError {
  using GraphonError::GraphonError;
};
struct FamilyInfeasible : GraphonError {
  using GraphonError::GraphonError;
};

struct SolveConfig {
  int max_podes = 6;          // paper cap is 16; desk-scale default
  double window = 1e-4;       // sampling-stage constraint acceptance
  int samples = 20000;        // sampling budget
  double refine_tol = 1e-8;   // KKT / constraint residual target
  std::uint64_t seed = 1;

  int max_iterations = 400;   // per refinement
  int family_starts = 32;     // multi-start budget for solve_in_family
  double classify_tol = kDefaultClassifyTol;
  double merge_tol = kDefaultMergeTol;

  void check() const {
    if (!(window > 0.0) || !(refine_tol > 0.0) || max_podes < 1 ||
        max_podes > kMaxPodes)
      throw ParamRangeError("invalid SolveConfig");
  }
};

enum class SolveStatus { Converged, MaxIterations, Infeasible };
std::string to_string(SolveStatus s);

struct OptimizationResult {
  MultipodalGraphon graphon;  // canonicalized
  double entropy = 0.0;
  double alpha = 0.0;         // multiplier for the edge constraint
  double beta = 0.0;          // multiplier for the triangle constraint
  double kkt_residual = 0.0;
  double el_residual = 0.0;
  double constraint_violation = 0.0;
  bool el_boundary = false;      // some blocks pinned at 0/1
  bool el_one_sided_ok = true;   // one-sided EL conditions at pinned blocks
  PhaseLabel label;
  SolveStatus status = SolveStatus::Infeasible;

  int iterations = 0;
  double entropy_backslide = 0.0;  // max entropy decrease between accepted
                                   // near-feasible iterates
  Eigen::VectorXd family_params;   // set by solve_in_family
};

/// Random multipodal graphons repaired toward (eps, tau): sizes from a
/// symmetric Dirichlet, probabilities uniform, then an exact affine rescale
/// to the target edge density and a coarse bisection of the blend toward the
/// constant graphon to adjust tau. Returns up to 32 candidates within
/// cfg.window of the target, best entropy first. Throws NoCandidates.
std::vector<MultipodalGraphon> sample_stage(const ConstraintPoint& pt,
                                            const SolveConfig& cfg);

/// Local entropy maximization subject to both density constraints and box
/// bounds, from the given starting graphon (pode count preserved).
OptimizationResult refine(const MultipodalGraphon& candidate,
                          const ConstraintPoint& pt, const SolveConfig& cfg);

/// Warm starts derived from closed-form family constructions at pt.
std::vector<MultipodalGraphon> family_warm_starts(const ConstraintPoint& pt,
                                                  const SolveConfig& cfg);

/// Two-stage solve: sampling stage plus family warm starts, each refined;
/// returns the best admissible result (highest entropy, deterministic
/// tie-break by canonical graphon order). extra_warm supplies additional
/// starting graphons (e.g. a scan neighbor's optimizer).
OptimizationResult solve(const ConstraintPoint& pt, const SolveConfig& cfg,
                         const std::vector<MultipodalGraphon>& extra_warm = {});

/// Entropy maximization restricted to one family chart; multi-start.
/// extra_starts are additional chart-coordinate starting points.
/// Throws FamilyInfeasible when no start meets the constraints.
OptimizationResult solve_in_family(
    Family family, int m, const ConstraintPoint& pt, const SolveConfig& cfg,
    const std::vector<Eigen::VectorXd>& extra_starts = {});

enum class ExtremalDirection { Min, Max };

/// Optimizes tau (not entropy) at fixed edge density; the multiplier for
/// the edge constraint is reported in alpha.
OptimizationResult extremal_tau(double eps, ExtremalDirection direction,
                                const SolveConfig& cfg);

/// Deterministic order used for entropy ties: lexicographic comparison of
/// canonical sizes then upper-triangle probabilities.
bool canonical_less(const MultipodalGraphon& a, const MultipodalGraphon& b);

}  // namespace graphon
