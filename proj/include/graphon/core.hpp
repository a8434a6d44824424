#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace graphon {

/// Hard cap on pode counts accepted anywhere in the library.
inline constexpr int kMaxPodes = 16;

/// Pode sizes below this carry no measure and are dropped by canonicalize.
inline constexpr double kDegeneratePodeSize = 1e-10;

/// Default tolerance for merging podes that represent the same step value.
inline constexpr double kDefaultMergeTol = 1e-7;

/// Default tolerance for deciding pode equivalence during classification.
inline constexpr double kDefaultClassifyTol = 1e-5;

struct GraphonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidGraphon : GraphonError {
  using GraphonError::GraphonError;
};

/// Step-function graphon: n podes with sizes c_i summing to 1 and a
/// symmetric block probability matrix p_ij. Equivalent to a stochastic
/// block model. Treated as an immutable value; all operations are pure.
struct MultipodalGraphon {
  std::vector<double> sizes;
  Eigen::MatrixXd probs;

  MultipodalGraphon() = default;
  MultipodalGraphon(std::vector<double> s, Eigen::MatrixXd p)
      : sizes(std::move(s)), probs(std::move(p)) {}

  int pode_count() const { return static_cast<int>(sizes.size()); }

  static MultipodalGraphon constant(double p) {
    Eigen::MatrixXd m(1, 1);
    m(0, 0) = p;
    return MultipodalGraphon({1.0}, m);
  }
};

/// Target densities (edge, triangle).
struct ConstraintPoint {
  double edge = 0.0;
  double triangle = 0.0;

  bool in_unit_box() const {
    return edge >= 0.0 && edge <= 1.0 && triangle >= 0.0 && triangle <= 1.0;
  }
};

struct Validation {
  enum class Code { Ok, PodeCount, SizeSum, Asymmetry, Range };
  Code code = Code::Ok;
  std::string detail;

  bool ok() const { return code == Code::Ok; }
  explicit operator bool() const { return ok(); }
};

Validation validate(const MultipodalGraphon& g, int max_podes = kMaxPodes);

/// Throws InvalidGraphon unless validate(g) passes.
void require_valid(const MultipodalGraphon& g, int max_podes = kMaxPodes);

/// Canonical representative of g under pode permutation and tolerance-level
/// merging of equal podes. Degenerate podes (size < kDegeneratePodeSize) are
/// dropped and the remaining sizes renormalized. Idempotent.
MultipodalGraphon canonicalize(const MultipodalGraphon& g,
                               double merge_tol = kDefaultMergeTol);

enum class Family { A, B, C, F, Unknown };

std::string family_name(Family f);

/// Structural label of a graphon: pode-equivalence signature plus the
/// conjectured family it matches (A(n,0), B(m,1), C(m,2), F(1,1)).
struct PhaseLabel {
  /// One entry per equivalence class: (number of podes in class, pode size),
  /// sorted by (count desc, size desc).
  std::vector<std::pair<int, double>> signature;
  Family family = Family::Unknown;
  int m = 0;
  int k = 0;
  /// Set only for the structural coincidences {B(1,1),F(1,1)} and
  /// {B(2,1),C(1,2)}.
  std::optional<std::pair<Family, std::pair<int, int>>> ambiguous_with;

  std::string to_string() const;

  bool same_phase(const PhaseLabel& other) const {
    return family == other.family && m == other.m && k == other.k;
  }
};

PhaseLabel parse_label(const std::string& text);

/// Groups podes of a valid, canonicalized graphon into equivalence classes
/// (equal size and swap-invariant probability pattern within tol) and names
/// the family. `context`, when given, disambiguates bipodal graphons:
/// above the Erdos-Renyi curve (tau > eps^3) they are labeled F(1,1).
PhaseLabel classify(const MultipodalGraphon& g,
                    double tol = kDefaultClassifyTol,
                    const std::optional<ConstraintPoint>& context = std::nullopt);

/// Pode partition used by classify; exposed for diagnostics and tests.
/// Returns class index per pode.
std::vector<int> equivalence_classes(const MultipodalGraphon& g, double tol);

/// True when the two signatures agree entrywise within size_tol.
bool same_signature(const std::vector<std::pair<int, double>>& a,
                    const std::vector<std::pair<int, double>>& b,
                    double size_tol = 1e-6);

}  // namespace graphon
