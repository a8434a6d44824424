#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "graphon/io.hpp"
#include "graphon/optimize.hpp"

using namespace graphon;

namespace {

SolveConfig quick_config() {
  SolveConfig cfg;
  cfg.samples = 3000;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("refine from the constant graphon at an ER point is immediate") {
  SolveConfig cfg = quick_config();
  const ConstraintPoint pt{0.6, 0.216};
  auto r = refine(MultipodalGraphon::constant(0.6), pt, cfg);
  CHECK(r.status == SolveStatus::Converged);
  CHECK(r.iterations <= 2);
  CHECK(r.alpha ==
        doctest::Approx(binary_entropy_prime(0.6)).epsilon(1e-6));
  CHECK(std::abs(r.beta) < 1e-6);
  CHECK(r.entropy == doctest::Approx(binary_entropy(0.6)).epsilon(1e-12));
}

TEST_CASE("refine reaches the Mantel corner from a nearby candidate") {
  SolveConfig cfg = quick_config();
  const ConstraintPoint pt{0.5, 0.0};
  Eigen::MatrixXd probs(2, 2);
  probs << 0.05, 0.9, 0.9, 0.02;
  MultipodalGraphon near_bipartite{{0.45, 0.55}, probs};
  auto r = refine(near_bipartite, pt, cfg);
  CHECK(r.constraint_violation <= 10 * cfg.refine_tol);
  const auto& g = r.graphon;
  REQUIRE(g.pode_count() == 2);
  CHECK(g.sizes[0] == doctest::Approx(0.5).epsilon(2e-4));
  CHECK(g.probs(0, 1) > 1.0 - 1e-5);
  CHECK(g.probs(0, 0) < 1e-5);
  CHECK(g.probs(1, 1) < 1e-5);
  CHECK(r.el_one_sided_ok);
}

TEST_CASE("sample_stage determinism and windows") {
  SolveConfig cfg = quick_config();
  cfg.samples = 500;
  const ConstraintPoint pt{0.5, 0.1};
  auto c1 = sample_stage(pt, cfg);
  auto c2 = sample_stage(pt, cfg);
  REQUIRE(c1.size() == c2.size());
  for (size_t i = 0; i < c1.size(); ++i) {
    CHECK(c1[i].sizes == c2[i].sizes);
    CHECK(c1[i].probs == c2[i].probs);
  }
  for (const auto& g : c1) {
    CHECK(std::abs(edge_density(g) - pt.edge) <= cfg.window);
    CHECK(std::abs(triangle_density(g) - pt.triangle) <= cfg.window);
  }

  SolveConfig tight = cfg;
  tight.window = 1e-12;
  tight.samples = 10;
  CHECK_THROWS_AS(sample_stage(pt, tight), NoCandidates);
}

TEST_CASE("sample_stage at an ER point never beats the constant entropy") {
  SolveConfig cfg = quick_config();
  cfg.samples = 2000;
  auto candidates = sample_stage({0.6, 0.216}, cfg);
  REQUIRE(!candidates.empty());
  CHECK(entropy(candidates.front()) <= binary_entropy(0.6) + 1e-9);
}

TEST_CASE("solve at ER points returns the constant graphon") {
  SolveConfig cfg = quick_config();
  for (auto [e, t] : {std::pair{0.5, 0.125}, std::pair{0.6, 0.216}}) {
    auto r = solve({e, t}, cfg);
    CHECK(r.status == SolveStatus::Converged);
    REQUIRE(r.graphon.pode_count() == 1);
    CHECK(std::abs(r.graphon.probs(0, 0) - e) < 1e-5);
    CHECK(r.entropy == doctest::Approx(binary_entropy(e)).epsilon(1e-9));
    CHECK(r.label.family == Family::A);
    CHECK(r.label.m == 1);
    CHECK(std::abs(r.beta) < 1e-5);
  }
}

TEST_CASE("solve beats the closed-form A(2,0) warm start at (0.5, 0.1)") {
  SolveConfig cfg = quick_config();
  const ConstraintPoint pt{0.5, 0.1};
  auto r = solve(pt, cfg);
  CHECK(r.status == SolveStatus::Converged);
  const double a2_entropy = entropy(build_family(solve_A(2, pt)));
  CHECK(r.entropy >= a2_entropy - 1e-9);
  CHECK(r.constraint_violation <= 10 * cfg.refine_tol);
  // interior optimum below the ER curve: positive triangle multiplier
  bool interior = true;
  const auto& g = r.graphon;
  for (int i = 0; i < g.pode_count(); ++i)
    for (int j = i; j < g.pode_count(); ++j)
      if (g.probs(i, j) < 0.01 || g.probs(i, j) > 0.99) interior = false;
  if (interior) {
    CHECK(r.beta > 0.0);
    CHECK(r.el_residual < 1e-5);
  }
}

TEST_CASE("solve is reproducible bit-for-bit") {
  SolveConfig cfg = quick_config();
  cfg.samples = 1000;
  const ConstraintPoint pt{0.55, 0.13};
  auto r1 = solve(pt, cfg);
  auto r2 = solve(pt, cfg);
  CHECK(r1.entropy == r2.entropy);
  CHECK(r1.alpha == r2.alpha);
  CHECK(r1.beta == r2.beta);
  CHECK(r1.graphon.sizes == r2.graphon.sizes);
  CHECK(r1.graphon.probs == r2.graphon.probs);
  CHECK(graphon_to_json(r1.graphon) == graphon_to_json(r2.graphon));
}

TEST_CASE("solve flags infeasible targets") {
  SolveConfig cfg = quick_config();
  auto r = solve({0.5, 0.36}, cfg);
  CHECK(r.status == SolveStatus::Infeasible);
}

TEST_CASE("monotone improvement within refine") {
  SolveConfig cfg = quick_config();
  const ConstraintPoint pt{0.6, 0.2};
  auto candidates = sample_stage(pt, cfg);
  REQUIRE(!candidates.empty());
  for (size_t i = 0; i < std::min<size_t>(5, candidates.size()); ++i) {
    auto r = refine(candidates[i], pt, cfg);
    CHECK(r.entropy_backslide <= 10 * cfg.refine_tol);
  }
}

TEST_CASE("solve_in_family A matches the closed form") {
  SolveConfig cfg = quick_config();
  const ConstraintPoint pt{0.5, 0.1};
  auto r = solve_in_family(Family::A, 2, pt, cfg);
  CHECK(r.status == SolveStatus::Converged);
  FamilySpec s = solve_A(2, pt);
  FamilyChart chart(Family::A, 2);
  REQUIRE(r.family_params.size() == 2);
  CHECK(r.family_params[0] == doctest::Approx(s.a).epsilon(1e-9));
  CHECK(r.family_params[1] == doctest::Approx(s.b).epsilon(1e-9));
  CHECK(r.entropy ==
        doctest::Approx(entropy(build_family(s))).epsilon(1e-9));
}

TEST_CASE("solve_in_family F is feasible above the ER curve") {
  SolveConfig cfg = quick_config();
  auto r = solve_in_family(Family::F, 1, {0.5, 0.13}, cfg);
  CHECK(r.status == SolveStatus::Converged);
  CHECK(r.constraint_violation <= 10 * cfg.refine_tol);
  CHECK(r.graphon.pode_count() <= 2);
}

TEST_CASE("family nesting and the bipodal natural boundary at eps=0.735") {
  SolveConfig cfg = quick_config();
  cfg.family_starts = 24;
  const double eps = 0.735;
  // Above the B(1,1)/B(2,1) transition (~0.3737) the tripodal family
  // degenerates onto the bipodal optimum.
  auto above_b1 = solve_in_family(Family::B, 1, {eps, 0.380}, cfg);
  auto above_b2 = solve_in_family(Family::B, 2, {eps, 0.380}, cfg);
  CHECK(above_b2.entropy >= above_b1.entropy - 1e-9);
  CHECK(above_b2.entropy - above_b1.entropy < 5e-5);

  // Bipodal graphons cannot reach far below the transition: the natural
  // boundary of B(1,1) lies inside the tripodal phase.
  CHECK_THROWS_AS(solve_in_family(Family::B, 1, {eps, 0.370}, cfg),
                  FamilyInfeasible);

  // Below the B(2,1)/C(2,2) transition (~0.3574) only the C family
  // survives; in the B(2,1) band the two curves agree (the pair merges).
  CHECK_THROWS_AS(solve_in_family(Family::B, 2, {eps, 0.352}, cfg),
                  FamilyInfeasible);
  auto low_c2 = solve_in_family(Family::C, 2, {eps, 0.352}, cfg);
  CHECK(low_c2.status == SolveStatus::Converged);
  CHECK(low_c2.entropy > 0.01);
  auto mid_b2 = solve_in_family(Family::B, 2, {eps, 0.360}, cfg);
  auto mid_c2 = solve_in_family(Family::C, 2, {eps, 0.360}, cfg);
  CHECK(mid_c2.entropy >= mid_b2.entropy - 1e-9);
  CHECK(mid_c2.entropy - mid_b2.entropy < 5e-5);
}

TEST_CASE("extremal_tau max reaches eps^1.5 and min finds Mantel and cusp") {
  SolveConfig cfg = quick_config();
  auto rmax = extremal_tau(0.25, ExtremalDirection::Max, cfg);
  CHECK(triangle_density(rmax.graphon) ==
        doctest::Approx(0.125).epsilon(1e-6));

  auto rmin_half = extremal_tau(0.5, ExtremalDirection::Min, cfg);
  CHECK(triangle_density(rmin_half.graphon) < 1e-6);

  auto rmin_cusp = extremal_tau(2.0 / 3, ExtremalDirection::Min, cfg);
  CHECK(triangle_density(rmin_cusp.graphon) ==
        doctest::Approx(2.0 / 9).epsilon(5e-4));
}

TEST_CASE("KKT and EL residuals hold at converged interior optima") {
  SolveConfig cfg = quick_config();
  cfg.samples = 1500;
  for (auto [e, t] : {std::pair{0.55, 0.14}, std::pair{0.6, 0.19},
                      std::pair{0.5, 0.09}}) {
    auto r = solve({e, t}, cfg);
    REQUIRE(r.status == SolveStatus::Converged);
    CHECK(r.kkt_residual <= cfg.refine_tol);
    CHECK(r.constraint_violation <= 10 * cfg.refine_tol);
    bool interior = true;
    const auto& g = r.graphon;
    for (int i = 0; i < g.pode_count(); ++i)
      for (int j = i; j < g.pode_count(); ++j)
        if (g.probs(i, j) < 0.01 || g.probs(i, j) > 0.99) interior = false;
    if (interior) {
      CHECK(r.el_residual < 1e-5);
      if (t < e * e * e) CHECK(r.beta > 0.0);
    }
  }
}
