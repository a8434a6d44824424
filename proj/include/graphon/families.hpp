#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "graphon/core.hpp"
#include "graphon/densities.hpp"

namespace graphon {

struct ParamRangeError : GraphonError {
  using GraphonError::GraphonError;
};
struct AboveERCurve : GraphonError {
  using GraphonError::GraphonError;
};
struct DegenerateAB : GraphonError {
  using GraphonError::GraphonError;
};
struct NotInterior : GraphonError {
  using GraphonError::GraphonError;
};

/// Closed-form member of one of the conjectured phase families.
///   A(n,0):  n equal podes, diagonal a, off-diagonal b        (params a,b)
///   B(m,1):  m podes of size c/m plus one of size 1-c;
///            a within-class diagonal, b within-class off-diagonal,
///            d cross, p singleton diagonal                    (a,b,d,p,c)
///   C(m,2):  interchangeable pair of size c/2 each plus m podes of size
///            (1-c)/m; a_plus between the pair, a_minus on its diagonal,
///            d cross, b class diagonal, p class off-diagonal
///            (a_plus,a_minus,b,d,p,c)
///   F(1,1):  bipodal with p11=a, p22=b, p12=d, first pode size c (a,b,d,c)
struct FamilySpec {
  Family family = Family::A;
  int m = 2;
  double a = 0, b = 0, d = 0, p = 0, c = 0.5;
  double a_plus = 0, a_minus = 0;
};

MultipodalGraphon build_family(const FamilySpec& spec);

/// Inverts the A(n,0) density map: a = eps - (n-1)r, b = eps + r with
/// r = cbrt((eps^3 - tau)/(n-1)). Throws AboveERCurve when tau > eps^3 and
/// ParamRangeError when the resulting a or b leaves [0,1].
FamilySpec solve_A(int n, const ConstraintPoint& pt);

/// Point (n/(n+1), n(n-1)/(n+1)^2) where the A(n,0) phase meets the lower
/// boundary; realized exactly by the complete multipartite graphon on n+1
/// equal podes.
ConstraintPoint cusp(int n);

/// Residual of the stationarity condition for the minimum of tau at fixed
/// eps on the bipodal d=1, b=0 stratum:
///   a^3 c^2 + a c^2 + 2 a^2 c + 2(1-c) - 4 a^2 c^2 - 4 c (1-c).
double min_tau_stationarity(double a, double c);

/// Blockwise Euler-Lagrange residuals r_ij = S0'(p_ij) - alpha
/// - 3 beta sum_k c_k p_ik p_jk. Blocks with p_ij within boundary_tol of
/// 0 or 1 satisfy one-sided conditions instead and are excluded from the
/// max; boundary_flag reports their presence.
struct ElResidual {
  Eigen::MatrixXd blocks;
  double max_abs = 0.0;
  bool boundary_flag = false;
};

ElResidual euler_lagrange_blocks(const MultipodalGraphon& g, double alpha,
                                 double beta, double boundary_tol = 1e-9);
double euler_lagrange_residual(const MultipodalGraphon& g, double alpha,
                               double beta, double boundary_tol = 1e-9);

/// Second variation of the constrained entropy at an A(n,0) point in the
/// B(n-1,1) coordinates (a, b, c), with d and p eliminated through the
/// density constraints.
struct HessianResult {
  Eigen::Matrix3d matrix;
  double determinant = 0.0;
  std::array<double, 3> eigenvalues{};  // ascending
  double X = 0.0;                       // arctanh(a) - arctanh(b)
};

HessianResult hessian_A(int n, double a, double b);

/// Determinant used for the local-stability boundary. For n = 2 the b
/// coordinate does not exist (the printed matrix has a zero row), so the
/// (a,c) minor is used instead of the full determinant.
double stability_determinant(int n, const HessianResult& h);

/// True when the constrained second variation is negative on every
/// direction that exists for this n.
bool negative_definite(int n, const HessianResult& h);

struct BoundaryPoint {
  double epsilon = 0.0;
  double tau = 0.0;
  HessianResult hessian;
};

struct BoundaryCurve {
  std::vector<BoundaryPoint> points;   // sorted by (epsilon, tau)
  std::vector<std::string> notes;      // columns without roots, etc.
};

/// Scans tau at fixed eps over `columns` values of eps in [eps_lo, eps_hi],
/// locating sign changes of the stability determinant along the
/// A(n,0)-representable range and refining each root to |dtau| < 1e-12.
BoundaryCurve stability_boundary(int n, double eps_lo, double eps_hi,
                                 int columns, int tau_samples = 200);

/// Range of tau for which solve_A(n, (eps, tau)) has parameters in [0,1]:
/// [max(0, eps^3 - (n-1)(1-eps)^3, eps^3 (1 - 1/(n-1)^2)), eps^3].
std::pair<double, double> representable_tau_range(int n, double eps);

/// Bipodal graphon with tau = eps^(3/2): value 1 on a clique block of
/// measure sqrt(eps). `cut` in (0,1) splits the clique pode so that the
/// block structure lands at a different interval arrangement; densities do
/// not depend on cut.
MultipodalGraphon rearranged_clique(double eps, double cut);

/// Affine move of all block probabilities that sets the edge density to
/// eps0 exactly: scaling toward 0 when the density must drop, toward 1
/// when it must rise.
MultipodalGraphon rescale_to_edge(const MultipodalGraphon& g, double eps0);

/// Step-function mixture t*g0 + (1-t)*g1 on the common refinement of the
/// two interval partitions.
MultipodalGraphon overlay_mixture(const MultipodalGraphon& g0,
                                  const MultipodalGraphon& g1, double t);

/// Two valid graphons matching pt in both densities (within 1e-9) with
/// different canonical pode signatures. tau_minimizer must be a graphon
/// attaining (close to) the minimal triangle density at pt.edge; it is
/// rescaled to match pt.edge exactly. Throws NotInterior when pt is not
/// strictly between the attained minimum and eps^(3/2).
std::pair<MultipodalGraphon, MultipodalGraphon> nonuniqueness_pair(
    const ConstraintPoint& pt, const MultipodalGraphon& tau_minimizer);

/// Affine chart theta -> n-podal graphon for one family; used by the
/// family-restricted optimizer and the Hessian oracle. The map into
/// ParamLayout coordinates is x = offset + M * theta.
class FamilyChart {
 public:
  FamilyChart(Family family, int m);

  Family family() const { return family_; }
  int m() const { return m_; }
  int pode_count() const { return podes_; }
  int dim() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& param_names() const { return names_; }

  Eigen::VectorXd pack(const FamilySpec& spec) const;
  FamilySpec unpack(const Eigen::VectorXd& theta) const;
  MultipodalGraphon build(const Eigen::VectorXd& theta) const;

  const Eigen::MatrixXd& jacobian() const { return M_; }
  const Eigen::VectorXd& offset() const { return offset_; }

  /// Box bounds for theta: probabilities in [p_floor, 1-p_floor] and the
  /// size coordinate in [c_floor, 1-c_floor].
  Eigen::VectorXd lower_bounds(double p_floor, double c_floor) const;
  Eigen::VectorXd upper_bounds(double p_floor, double c_floor) const;

  /// Index of the size coordinate c in theta, or -1 for family A.
  int c_param_index() const { return c_index_; }

 private:
  Family family_;
  int m_;
  int podes_;
  std::vector<std::string> names_;
  int c_index_ = -1;
  Eigen::MatrixXd M_;       // layout.dim() x dim()
  Eigen::VectorXd offset_;  // layout.dim()
};

}  // namespace graphon
