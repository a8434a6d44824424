#include "graphon/optimize.hpp"
#include <cstdio>
#include <cstdlib>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "graphon/util.hpp"

namespace graphon {

namespace {

constexpr double kProbFloor = 1e-9;
constexpr double kSizeFloor = 1e-12;
constexpr double kActiveBand = 1e-7;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct SpaceValues {
  double S = 0, eps = 0, tau = 0;
};

struct SpaceEval : SpaceValues {
  Eigen::VectorXd gS, geps, gtau;
  Eigen::MatrixXd hS, heps, htau;
};

struct SqpSpace {
  int dim = 0;
  Eigen::VectorXd lb, ub;
  std::vector<int> size_indices;  // coords whose sum is capped
  double size_cap = 1.0;
  std::function<SpaceValues(const Eigen::VectorXd&)> values;
  std::function<SpaceEval(const Eigen::VectorXd&)> full;
  std::function<MultipodalGraphon(const Eigen::VectorXd&)> graphon;
};

SpaceValues values_of(const MultipodalGraphon& g) {
  return {entropy(g), edge_density(g), triangle_density(g)};
}

SpaceEval eval_of(const MultipodalGraphon& g, const Eigen::MatrixXd* chain) {
  SpaceEval e;
  static_cast<SpaceValues&>(e) = values_of(g);
  DensityGradients grads = density_gradients(g);
  DensityHessians hess = density_hessians(g);
  if (chain) {
    const Eigen::MatrixXd& M = *chain;
    e.gS = M.transpose() * grads.d_entropy;
    e.geps = M.transpose() * grads.d_edge;
    e.gtau = M.transpose() * grads.d_triangle;
    e.hS = M.transpose() * hess.h_entropy * M;
    e.heps = M.transpose() * hess.h_edge * M;
    e.htau = M.transpose() * hess.h_triangle * M;
  } else {
    e.gS = std::move(grads.d_entropy);
    e.geps = std::move(grads.d_edge);
    e.gtau = std::move(grads.d_triangle);
    e.hS = std::move(hess.h_entropy);
    e.heps = std::move(hess.h_edge);
    e.htau = std::move(hess.h_triangle);
  }
  return e;
}

SqpSpace graphon_space(int n) {
  SqpSpace s;
  ParamLayout lay(n);
  s.dim = lay.dim();
  s.lb.setConstant(s.dim, kProbFloor);
  s.ub.setConstant(s.dim, 1.0 - kProbFloor);
  for (int i = 0; i + 1 < n; ++i) {
    s.lb[lay.c_index(i)] = kSizeFloor;
    s.ub[lay.c_index(i)] = 1.0 - kSizeFloor;
    s.size_indices.push_back(lay.c_index(i));
  }
  s.size_cap = 1.0 - kSizeFloor;
  s.graphon = [lay](const Eigen::VectorXd& x) { return lay.unpack(x); };
  s.values = [lay](const Eigen::VectorXd& x) {
    return values_of(lay.unpack(x));
  };
  s.full = [lay](const Eigen::VectorXd& x) {
    return eval_of(lay.unpack(x), nullptr);
  };
  return s;
}

SqpSpace family_space(const FamilyChart& chart) {
  SqpSpace s;
  s.dim = chart.dim();
  s.lb = chart.lower_bounds(kProbFloor, 1e-6);
  s.ub = chart.upper_bounds(kProbFloor, 1e-6);
  s.graphon = [chart](const Eigen::VectorXd& x) { return chart.build(x); };
  s.values = [chart](const Eigen::VectorXd& x) {
    return values_of(chart.build(x));
  };
  Eigen::MatrixXd M = chart.jacobian();
  s.full = [chart, M](const Eigen::VectorXd& x) {
    return eval_of(chart.build(x), &M);
  };
  return s;
}

void project_onto(const SqpSpace& s, Eigen::VectorXd& x) {
  for (int i = 0; i < s.dim; ++i) x[i] = std::clamp(x[i], s.lb[i], s.ub[i]);
  if (s.size_indices.empty()) return;
  double sum = 0.0;
  for (int i : s.size_indices) sum += x[i];
  if (sum <= s.size_cap) return;
  // Uniform shift clipped at the floors: sum(max(lb, x - th)) = cap.
  double lo = 0.0, hi = 0.0;
  for (int i : s.size_indices) hi = std::max(hi, x[i]);
  for (int it = 0; it < 80; ++it) {
    const double th = 0.5 * (lo + hi);
    double acc = 0.0;
    for (int i : s.size_indices) acc += std::max(s.lb[i], x[i] - th);
    (acc > s.size_cap ? lo : hi) = th;
  }
  for (int i : s.size_indices) x[i] = std::max(s.lb[i], x[i] - hi);
}

enum class SqpObjective { MaxEntropy, MinTau, MaxTau };

struct SqpSettings {
  double tol = 1e-8;
  int max_iter = 400;
  bool constrain_tau = true;
};

struct SqpOutcome {
  Eigen::VectorXd x;
  SpaceValues vals;
  double alpha = 0, beta = 0;
  double kkt = kInf, cviol = kInf;
  int iters = 0;
  bool converged = false;
  double objective_backslide = 0.0;
};

struct ObjectiveView {
  double f;
  Eigen::VectorXd g;
  Eigen::MatrixXd W0;
};

ObjectiveView objective_view(SqpObjective obj, const SpaceEval& e) {
  switch (obj) {
    case SqpObjective::MaxEntropy: return {-e.S, -e.gS, -e.hS};
    case SqpObjective::MinTau: return {e.tau, e.gtau, e.htau};
    default: return {-e.tau, -e.gtau, -e.htau};
  }
}

double objective_value(SqpObjective obj, const SpaceValues& v) {
  switch (obj) {
    case SqpObjective::MaxEntropy: return -v.S;
    case SqpObjective::MinTau: return v.tau;
    default: return -v.tau;
  }
}

// Damped equality-SQP with box bounds: restoration step in the constraint
// range space plus a modified-Newton step in the null space, accepted
// through an l1 merit function whose penalty doubles on failure.
SqpOutcome sqp_solve(const SqpSpace& space, SqpObjective obj, double eps0,
                     double tau0, Eigen::VectorXd x0, const SqpSettings& st) {
  const int m = st.constrain_tau ? 2 : 1;
  Eigen::VectorXd x = std::move(x0);
  project_onto(space, x);

  SqpOutcome out;
  double rho = 1.0;
  int stall = 0;
  bool have_prev_feasible = false;
  double prev_feasible_f = 0.0;

  auto constraint = [&](const SpaceValues& v) {
    Eigen::VectorXd h(m);
    h[0] = v.eps - eps0;
    if (m == 2) h[1] = v.tau - tau0;
    return h;
  };

  const bool trace = std::getenv("GRAPHON_SQP_TRACE") != nullptr;
  std::vector<std::pair<double, double>> history;  // (kkt, cviol) per iter
  SpaceEval E;
  for (out.iters = 0; out.iters < st.max_iter; ++out.iters) {
    E = space.full(x);
    ObjectiveView ov = objective_view(obj, E);
    Eigen::VectorXd h = constraint(E);
    Eigen::MatrixXd J(m, space.dim);
    J.row(0) = E.geps.transpose();
    if (m == 2) J.row(1) = E.gtau.transpose();

    auto lstsq_mu = [&](const std::vector<int>& F) {
      Eigen::Vector2d mu = Eigen::Vector2d::Zero();
      if (F.empty()) return mu;
      Eigen::MatrixXd Jf(m, F.size());
      Eigen::VectorXd gf(F.size());
      for (size_t k = 0; k < F.size(); ++k) {
        Jf.col(k) = J.col(F[k]);
        gf[k] = ov.g[F[k]];
      }
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(
          Jf.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto& sv = svd.singularValues();
      if (sv[0] <= 1e-14) return mu;
      if (m == 2 && (sv.size() < 2 || sv[1] <= 1e-8 * sv[0])) {
        // Constraint gradients (near-)collinear: pin the triangle
        // multiplier to zero and fit alpha alone.
        const double denom = Jf.row(0).squaredNorm();
        if (denom > 0.0) mu[0] = -Jf.row(0).dot(gf) / denom;
        return mu;
      }
      Eigen::VectorXd sol = svd.solve(-gf);
      for (int k = 0; k < m; ++k) mu[k] = sol[k];
      return mu;
    };

    std::vector<int> band_free;
    for (int i = 0; i < space.dim; ++i)
      if (x[i] > space.lb[i] + kActiveBand && x[i] < space.ub[i] - kActiveBand)
        band_free.push_back(i);
    Eigen::Vector2d mu = lstsq_mu(band_free);
    Eigen::VectorXd gradL = ov.g + J.transpose() * mu.head(m);

    std::vector<int> F;
    for (int i = 0; i < space.dim; ++i) {
      const bool at_lb = x[i] <= space.lb[i] + kActiveBand;
      const bool at_ub = x[i] >= space.ub[i] - kActiveBand;
      const bool pinned = (at_lb && gradL[i] >= 0.0) || (at_ub && gradL[i] <= 0.0);
      if (!pinned) F.push_back(i);
    }
    mu = lstsq_mu(F);
    gradL = ov.g + J.transpose() * mu.head(m);

    out.alpha = mu[0];
    out.beta = (m == 2) ? mu[1] : 0.0;
    out.kkt = 0.0;
    for (int i : F) out.kkt = std::max(out.kkt, std::abs(gradL[i]));
    out.cviol = h.lpNorm<Eigen::Infinity>();
    out.x = x;
    out.vals = E;
    if (trace) {
      std::fprintf(stderr, "it=%3d f=%+.10f kkt=%.3e cv=%.3e |F|=%zu x=[",
                   out.iters, E.S, out.kkt, out.cviol, F.size());
      for (int i = 0; i < std::min<int>(8, space.dim); ++i)
        std::fprintf(stderr, " %.6g", x[i]);
      std::fprintf(stderr, " ]\n");
    }
    if (out.kkt <= st.tol && out.cviol <= st.tol) {
      out.converged = true;
      break;
    }

    // Give up on candidates that make no headway (e.g. a restoration
    // blocked by the box: the constraint is unreachable from this basin).
    history.emplace_back(out.kkt, out.cviol);
    if (out.iters >= 40) {
      const auto& [old_kkt, old_cviol] = history[out.iters - 40];
      if (out.kkt > 0.5 * old_kkt && out.cviol > 0.5 * old_cviol) break;
    }

    if (F.empty()) break;  // fully pinned; nothing to move

    Eigen::MatrixXd Jf(m, F.size());
    Eigen::VectorXd gLf(F.size());
    for (size_t k = 0; k < F.size(); ++k) {
      Jf.col(k) = J.col(F[k]);
      gLf[k] = gradL[F[k]];
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        Jf, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int k = 0; k < sv.size(); ++k)
      if (sv[k] > 1e-12 * std::max(1.0, sv[0])) ++rank;

    // Range-space restoration. The min-norm direction can point through a
    // box face (it loads the largest-gradient blocks, which often sit at a
    // bound); coordinates whose correction is blocked are dropped and the
    // system re-solved on the rest.
    Eigen::VectorXd dR = Eigen::VectorXd::Zero(F.size());
    {
      std::vector<bool> usable(F.size(), true);
      for (int round = 0; round < 3; ++round) {
        std::vector<int> keep;
        for (size_t k = 0; k < F.size(); ++k)
          if (usable[k]) keep.push_back(static_cast<int>(k));
        if (keep.empty()) break;
        Eigen::MatrixXd Jr(m, keep.size());
        for (size_t k = 0; k < keep.size(); ++k) Jr.col(k) = Jf.col(keep[k]);
        Eigen::JacobiSVD<Eigen::MatrixXd> rs(
            Jr, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& rsv = rs.singularValues();
        int rrank = 0;
        for (int k = 0; k < rsv.size(); ++k)
          if (rsv[k] > 1e-10 * std::max(1.0, rsv[0])) ++rrank;
        if (rrank == 0) break;
        Eigen::VectorXd uh = rs.matrixU().leftCols(rrank).transpose() * (-h);
        for (int k = 0; k < rrank; ++k) uh[k] /= rsv[k];
        Eigen::VectorXd step = rs.matrixV().leftCols(rrank) * uh;
        dR.setZero();
        for (size_t k = 0; k < keep.size(); ++k) dR[keep[k]] = step[k];
        bool blocked = false;
        for (size_t k = 0; k < keep.size(); ++k) {
          const int i = F[keep[k]];
          const double target = x[i] + step[k];
          const double gap_lo = x[i] - space.lb[i];
          const double gap_hi = space.ub[i] - x[i];
          // blocked: correction wants far beyond the remaining gap
          if ((target < space.lb[i] && std::abs(step[k]) > 4.0 * gap_lo) ||
              (target > space.ub[i] && std::abs(step[k]) > 4.0 * gap_hi)) {
            usable[keep[k]] = false;
            blocked = true;
          }
        }
        if (!blocked) break;
      }
      const double nr = dR.lpNorm<Eigen::Infinity>();
      if (nr > 0.5) dR *= 0.5 / nr;
    }

    // Null-space modified-Newton step
    Eigen::VectorXd dT = Eigen::VectorXd::Zero(F.size());
    const int nz = static_cast<int>(F.size()) - rank;
    if (nz > 0) {
      Eigen::MatrixXd Z = svd.matrixV().rightCols(nz);
      Eigen::MatrixXd W = ov.W0 + mu[0] * E.heps;
      if (m == 2) W += mu[1] * E.htau;
      Eigen::MatrixXd Wf(F.size(), F.size());
      for (size_t a = 0; a < F.size(); ++a)
        for (size_t b = 0; b < F.size(); ++b) Wf(a, b) = W(F[a], F[b]);
      Eigen::MatrixXd Hz = Z.transpose() * Wf * Z;
      Hz = 0.5 * (Hz + Hz.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hz);
      Eigen::VectorXd lam = es.eigenvalues();
      const double floor_val = 1e-8 * std::max(1.0, lam.cwiseAbs().maxCoeff());
      Eigen::VectorXd gz = Z.transpose() * gLf;
      Eigen::VectorXd coef = es.eigenvectors().transpose() * gz;
      for (int k = 0; k < lam.size(); ++k)
        coef[k] /= std::max(std::abs(lam[k]), floor_val);
      dT = -Z * (es.eigenvectors() * coef);
      const double nt = dT.lpNorm<Eigen::Infinity>();
      if (nt > 0.2) dT *= 0.2 / nt;
    }

    Eigen::VectorXd d = Eigen::VectorXd::Zero(space.dim);
    for (size_t k = 0; k < F.size(); ++k) d[F[k]] = dR[k] + dT[k];

    rho = std::max({rho, 2.0 * (std::abs(mu[0]) + std::abs(mu[1])), 1.0});
    const double h1 = h.lpNorm<1>();
    const double phi0 = ov.f + rho * h1;
    const double dirD = ov.g.dot(d) - rho * h1;

    // Fraction-to-boundary: a single step may close at most 99.5% of the
    // gap to a bound. The entropy curvature explodes like 1/(u(1-u)), so
    // slamming onto a bound buries the iterate in a stiff layer that takes
    // hundreds of Newton steps to escape.
    auto bound_limited = [&](const Eigen::VectorXd& base, Eigen::VectorXd xt) {
      for (int i = 0; i < space.dim; ++i) {
        const double lo = space.lb[i] + 0.005 * (base[i] - space.lb[i]);
        const double hi = space.ub[i] - 0.005 * (space.ub[i] - base[i]);
        xt[i] = std::clamp(xt[i], std::min(lo, base[i]), std::max(hi, base[i]));
      }
      project_onto(space, xt);
      return xt;
    };

    bool accepted = false;
    // Composite step first; if every backtracked step fails, retry with the
    // restoration component alone (the tangent part can fight the bounds).
    for (int phase = 0; phase < 2 && !accepted; ++phase) {
      Eigen::VectorXd dir = d;
      if (phase == 1) {
        dir.setZero();
        for (size_t k = 0; k < F.size(); ++k) dir[F[k]] = dR[k];
        if (dir.lpNorm<Eigen::Infinity>() < 1e-16) break;
      }
      double t = 1.0;
      for (int ls = 0; ls < 32; ++ls, t *= 0.5) {
        Eigen::VectorXd xt = bound_limited(x, x + t * dir);
        SpaceValues vt = space.values(xt);
        Eigen::VectorXd ht = constraint(vt);
        const double ft = objective_value(obj, vt);
        const double phit = ft + rho * ht.lpNorm<1>();
        const bool armijo =
            phase == 0 && dirD < 0.0 && phit <= phi0 + 1e-4 * t * dirD;
        const bool plain = phit <= phi0 - 1e-14 * (1.0 + std::abs(phi0));
        if (armijo || plain) {
          const double cv_new = ht.lpNorm<Eigen::Infinity>();
          if (have_prev_feasible && cv_new <= 10.0 * st.tol)
            out.objective_backslide =
                std::max(out.objective_backslide, ft - prev_feasible_f);
          if (cv_new <= 10.0 * st.tol) {
            have_prev_feasible = true;
            prev_feasible_f = ft;
          }
          x = std::move(xt);
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      rho *= 2.0;
      if (++stall >= 4 || rho > 1e12) break;
    } else {
      stall = 0;
    }
  }

  // Restoration polish: push the constraint residual toward round-off.
  for (int k = 0; k < 8 && out.cviol > 0.01 * st.tol; ++k) {
    SpaceEval Ep = space.full(x);
    Eigen::VectorXd h = constraint(Ep);
    if (h.lpNorm<Eigen::Infinity>() < 1e-14) break;
    Eigen::MatrixXd J(m, space.dim);
    J.row(0) = Ep.geps.transpose();
    if (m == 2) J.row(1) = Ep.gtau.transpose();
    std::vector<int> F;
    for (int i = 0; i < space.dim; ++i)
      if (x[i] > space.lb[i] + 1e-12 && x[i] < space.ub[i] - 1e-12)
        F.push_back(i);
    if (F.empty()) break;
    Eigen::MatrixXd Jf(m, F.size());
    for (size_t kk = 0; kk < F.size(); ++kk) Jf.col(kk) = J.col(F[kk]);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        Jf, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int kk = 0; kk < sv.size(); ++kk)
      if (sv[kk] > 1e-12 * std::max(1.0, sv[0])) ++rank;
    if (rank == 0) break;
    Eigen::VectorXd uh = svd.matrixU().leftCols(rank).transpose() * (-h);
    for (int kk = 0; kk < rank; ++kk) uh[kk] /= sv[kk];
    Eigen::VectorXd dR = svd.matrixV().leftCols(rank) * uh;
    Eigen::VectorXd xn = x;
    for (size_t kk = 0; kk < F.size(); ++kk) xn[F[kk]] += dR[kk];
    project_onto(space, xn);
    SpaceValues vn = space.values(xn);
    Eigen::VectorXd hn = constraint(vn);
    if (hn.lpNorm<Eigen::Infinity>() >= h.lpNorm<Eigen::Infinity>()) break;
    x = std::move(xn);
    out.x = x;
    out.vals = vn;
    out.cviol = hn.lpNorm<Eigen::Infinity>();
  }

  if (out.kkt <= st.tol && out.cviol <= st.tol) out.converged = true;
  return out;
}

OptimizationResult package_result(const SqpSpace& space, const SqpOutcome& out,
                                  const ConstraintPoint& pt,
                                  const SolveConfig& cfg, bool has_tau) {
  OptimizationResult r;
  MultipodalGraphon raw = space.graphon(out.x);
  r.graphon = canonicalize(raw, cfg.merge_tol);
  r.entropy = entropy(r.graphon);
  r.alpha = out.alpha;
  r.beta = out.beta;
  r.kkt_residual = out.kkt;
  r.constraint_violation = out.cviol;
  r.iterations = out.iters;
  r.entropy_backslide = std::max(0.0, out.objective_backslide);
  r.status = out.converged
                 ? SolveStatus::Converged
                 : (out.cviol <= 1e-3 ? SolveStatus::MaxIterations
                                      : SolveStatus::Infeasible);

  ElResidual el = euler_lagrange_blocks(r.graphon, r.alpha, r.beta, kActiveBand);
  r.el_residual = has_tau ? el.max_abs : 0.0;
  r.el_boundary = el.boundary_flag;
  if (el.boundary_flag) {
    const int n = r.graphon.pode_count();
    for (int i = 0; i < n && r.el_one_sided_ok; ++i)
      for (int j = i; j < n && r.el_one_sided_ok; ++j) {
        const double p = r.graphon.probs(i, j);
        if (p <= kActiveBand && el.blocks(i, j) < -1e-3)
          r.el_one_sided_ok = false;
        if (p >= 1.0 - kActiveBand && el.blocks(i, j) > 1e-3)
          r.el_one_sided_ok = false;
      }
  }
  r.label = classify(r.graphon, cfg.classify_tol, pt);
  return r;
}

MultipodalGraphon blend_toward_constant(const MultipodalGraphon& g, double p0,
                                        double u) {
  MultipodalGraphon out = g;
  const int n = g.pode_count();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.probs(i, j) = (1.0 - u) * g.probs(i, j) + u * p0;
  return out;
}

// Fixed-step bisection for the blend parameter: cheap and intentionally
// coarse (the refinement stage owns accuracy).
bool repair_triangle(MultipodalGraphon& g, double eps0, double tau0,
                     double window) {
  const double t0 = triangle_density(g);
  if (std::abs(t0 - tau0) <= 0.5 * window) return true;
  const double t1 = eps0 * eps0 * eps0;
  double flo = t0 - tau0;
  double fhi = t1 - tau0;
  if ((flo > 0.0) == (fhi > 0.0)) return false;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 20; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm =
        triangle_density(blend_toward_constant(g, eps0, mid)) - tau0;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  g = blend_toward_constant(g, eps0, 0.5 * (lo + hi));
  return true;
}

MultipodalGraphon clique_bipodal(double eps) {
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(2, 2);
  probs(0, 0) = 1.0;
  const double s = std::sqrt(eps);
  return {{s, 1.0 - s}, std::move(probs)};
}

MultipodalGraphon multipartite(int parts) {
  Eigen::MatrixXd probs = Eigen::MatrixXd::Constant(parts, parts, 1.0);
  for (int i = 0; i < parts; ++i) probs(i, i) = 0.0;
  return {std::vector<double>(parts, 1.0 / parts), std::move(probs)};
}

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "Converged";
    case SolveStatus::MaxIterations: return "MaxIterations";
    default: return "Infeasible";
  }
}

std::vector<MultipodalGraphon> sample_stage(const ConstraintPoint& pt,
                                            const SolveConfig& cfg) {
  cfg.check();
  if (!pt.in_unit_box()) throw NoCandidates("target outside unit box");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<std::pair<double, MultipodalGraphon>> kept;
  for (int s = 0; s < cfg.samples; ++s) {
    const int n = 1 + (s % cfg.max_podes);
    std::vector<double> sizes(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      sizes[i] = -std::log(std::max(unif(rng), 1e-300));
      total += sizes[i];
    }
    for (int i = 0; i < n; ++i) sizes[i] /= total;
    // Cycle block-value distributions: plain uniform, corner-biased, and
    // multipartite-leaning draws widen the structural coverage.
    const int kind = (s / cfg.max_podes) % 4;
    Eigen::MatrixXd probs(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double u = unif(rng);
        double v = u;
        switch (kind) {
          case 1:
            v = (u < 0.5) ? 2.0 * u * u : 1.0 - 2.0 * (1.0 - u) * (1.0 - u);
            break;
          case 2:
            v = (i == j) ? 0.2 * u : 1.0 - 0.2 * u;
            break;
          case 3: {
            const double w = 2.0 * u - 1.0;
            v = 0.5 + 0.5 * w * w * w;
            break;
          }
          default:
            break;
        }
        probs(i, j) = probs(j, i) = v;
      }

    MultipodalGraphon g{std::move(sizes), std::move(probs)};
    bool degenerate = false;
    for (double c : g.sizes)
      if (c < kDegeneratePodeSize) degenerate = true;
    if (degenerate) continue;

    g = rescale_to_edge(g, pt.edge);
    if (!repair_triangle(g, pt.edge, pt.triangle, cfg.window)) continue;
    if (std::abs(edge_density(g) - pt.edge) > cfg.window) continue;
    if (std::abs(triangle_density(g) - pt.triangle) > cfg.window) continue;
    kept.emplace_back(entropy(g), std::move(g));
  }
  if (kept.empty())
    throw NoCandidates("no sample met the constraint window");

  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  if (kept.size() > 32) kept.resize(32);
  std::vector<MultipodalGraphon> out;
  out.reserve(kept.size());
  for (auto& [e, g] : kept) out.push_back(std::move(g));
  return out;
}

namespace {

// Drops podes below `threshold` and renormalizes; returns false when
// nothing was dropped.
bool drop_small_podes(MultipodalGraphon& g, double threshold) {
  const int n = g.pode_count();
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (g.sizes[i] >= threshold) keep.push_back(i);
  if (static_cast<int>(keep.size()) == n || keep.empty()) return false;
  std::vector<double> sizes;
  Eigen::MatrixXd probs(keep.size(), keep.size());
  double total = 0.0;
  for (int i : keep) total += g.sizes[i];
  for (size_t a = 0; a < keep.size(); ++a) {
    sizes.push_back(g.sizes[keep[a]] / total);
    for (size_t b = 0; b < keep.size(); ++b)
      probs(a, b) = g.probs(keep[a], keep[b]);
  }
  g = MultipodalGraphon{std::move(sizes), std::move(probs)};
  return true;
}

}  // namespace

OptimizationResult refine(const MultipodalGraphon& candidate,
                          const ConstraintPoint& pt, const SolveConfig& cfg) {
  cfg.check();
  require_valid(candidate);
  SqpSettings st;
  st.tol = cfg.refine_tol;
  st.max_iter = cfg.max_iterations;
  st.constrain_tau = true;

  MultipodalGraphon current = candidate;
  SqpSpace space;
  SqpOutcome out;
  bool have = false;
  // Micro-podes can park above the degeneracy threshold with vanishing
  // gradients; collapse them and re-refine while that does not cost
  // entropy or feasibility.
  for (int round = 0; round < 3; ++round) {
    SqpSpace sp = graphon_space(current.pode_count());
    ParamLayout lay(current.pode_count());
    SqpOutcome o = sqp_solve(sp, SqpObjective::MaxEntropy, pt.edge,
                             pt.triangle, lay.pack(current), st);
    if (have) {
      const bool acceptable = o.converged &&
                              o.cviol <= 10.0 * cfg.refine_tol &&
                              o.vals.S >= out.vals.S - 1e-7;
      if (!acceptable) break;
    }
    space = sp;
    out = o;
    have = true;
    MultipodalGraphon raw = space.graphon(out.x);
    if (!drop_small_podes(raw, 1e-6)) break;
    current = std::move(raw);
  }
  return package_result(space, out, pt, cfg, true);
}

std::vector<MultipodalGraphon> family_warm_starts(const ConstraintPoint& pt,
                                                  const SolveConfig& cfg) {
  std::vector<MultipodalGraphon> out;
  const double eps0 = pt.edge;
  const double tau0 = pt.triangle;
  if (!(eps0 > 0.0 && eps0 < 1.0)) return out;
  out.push_back(MultipodalGraphon::constant(std::clamp(eps0, 1e-6, 1.0 - 1e-6)));

  const double e3 = eps0 * eps0 * eps0;
  const double delta = 0.04;
  if (tau0 <= e3) {
    for (int n = 2; n <= cfg.max_podes; ++n) {
      FamilySpec specA;
      try {
        specA = solve_A(n, pt);
        out.push_back(build_family(specA));
      } catch (const GraphonError&) {
        // fall back to the nearest representable tau on this chart
        auto [lo, hi] = representable_tau_range(n, eps0);
        const double tau_c = std::clamp(tau0, lo + 1e-9, hi - 1e-9);
        if (!(tau_c > lo && tau_c < hi)) continue;
        try {
          specA = solve_A(n, {eps0, tau_c});
        } catch (const GraphonError&) {
          continue;
        }
      }
      for (double sgn : {1.0, -1.0}) {
        FamilySpec b;
        b.family = Family::B;
        b.m = n - 1;
        b.a = specA.a;
        b.b = specA.b;
        b.d = std::clamp(specA.b + sgn * delta, 0.0, 1.0);
        b.p = std::clamp(specA.a - sgn * delta / 2.0, 0.0, 1.0);
        b.c = (n - 1.0) / n;
        try {
          out.push_back(build_family(b));
        } catch (const GraphonError&) {
        }
        if (n >= 3) {
          FamilySpec c;
          c.family = Family::C;
          c.m = n - 2;
          c.a_plus = std::clamp(specA.b + sgn * delta, 0.0, 1.0);
          c.a_minus = specA.a;
          c.b = specA.a;
          c.d = specA.b;
          c.p = specA.b;
          c.c = 2.0 / n;
          try {
            out.push_back(build_family(c));
          } catch (const GraphonError&) {
          }
        }
      }
    }
    for (int parts = 2; parts <= cfg.max_podes; ++parts)
      out.push_back(multipartite(parts));
    // Turan-deformed shapes: near-multipartite blocks with one opened
    // diagonal. Optima hugging the lower boundary look like these.
    for (int m = 1; m + 1 <= cfg.max_podes; ++m)
      for (double p0 : {0.3, 0.6}) {
        FamilySpec b;
        b.family = Family::B;
        b.m = m;
        b.a = 0.02;
        b.b = 0.98;
        b.d = 0.98;
        b.p = p0;
        b.c = 0.6;
        try {
          out.push_back(build_family(b));
        } catch (const GraphonError&) {
        }
      }
    for (int m = 1; m + 2 <= cfg.max_podes; ++m) {
      FamilySpec c;
      c.family = Family::C;
      c.m = m;
      c.a_plus = 0.9;
      c.a_minus = 0.05;
      c.b = 0.05;
      c.d = 0.95;
      c.p = 0.95;
      c.c = 2.0 / (m + 2.0);
      try {
        out.push_back(build_family(c));
      } catch (const GraphonError&) {
      }
    }
  } else {
    out.push_back(clique_bipodal(eps0));
    // Constant-clique blend hits (eps0, tau0) exactly for tau0 in
    // (eps0^3, eps0^(3/2)).
    const double s = std::sqrt(eps0);
    auto blend = [&](double u) {
      Eigen::MatrixXd probs(2, 2);
      probs(0, 0) = u * eps0 + (1.0 - u);
      probs(0, 1) = probs(1, 0) = u * eps0;
      probs(1, 1) = u * eps0;
      return MultipodalGraphon{{s, 1.0 - s}, std::move(probs)};
    };
    const double t_hi = std::pow(eps0, 1.5);
    if (tau0 < t_hi) {
      try {
        const double u = brent_root(
            [&](double uu) { return triangle_density(blend(uu)) - tau0; },
            0.0, 1.0, 1e-12);
        out.push_back(blend(u));
      } catch (const std::exception&) {
      }
    }
  }
  return out;
}

bool canonical_less(const MultipodalGraphon& a, const MultipodalGraphon& b) {
  if (a.pode_count() != b.pode_count())
    return a.pode_count() < b.pode_count();
  const int n = a.pode_count();
  for (int i = 0; i < n; ++i) {
    if (a.sizes[i] != b.sizes[i]) return a.sizes[i] < b.sizes[i];
  }
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      if (a.probs(i, j) != b.probs(i, j)) return a.probs(i, j) < b.probs(i, j);
  return false;
}

namespace {

// Deterministic argmax: higher entropy wins; near-ties prefer the cleaner
// stationary point (candidates that canonicalize onto the same optimizer
// can carry ill-conditioned multipliers), then canonical graphon order.
const OptimizationResult* better_of(const OptimizationResult* best,
                                    const OptimizationResult* cand) {
  if (!cand) return best;
  if (!best) return cand;
  if (cand->entropy > best->entropy + 1e-12) return cand;
  if (best->entropy > cand->entropy + 1e-12) return best;
  if (cand->kkt_residual < best->kkt_residual - 1e-13) return cand;
  if (best->kkt_residual < cand->kkt_residual - 1e-13) return best;
  return canonical_less(cand->graphon, best->graphon) ? cand : best;
}

}  // namespace

OptimizationResult solve(const ConstraintPoint& pt, const SolveConfig& cfg,
                         const std::vector<MultipodalGraphon>& extra_warm) {
  cfg.check();
  OptimizationResult infeasible;
  infeasible.status = SolveStatus::Infeasible;
  infeasible.label.family = Family::Unknown;
  if (!pt.in_unit_box() || !(pt.edge > 0.0 && pt.edge < 1.0)) return infeasible;
  if (pt.triangle > std::pow(pt.edge, 1.5) + 1e-9) return infeasible;

  std::vector<MultipodalGraphon> candidates;
  try {
    candidates = sample_stage(pt, cfg);
  } catch (const NoCandidates&) {
  }
  for (auto& g : family_warm_starts(pt, cfg)) candidates.push_back(std::move(g));
  for (const auto& g : extra_warm) {
    if (validate(g).ok()) candidates.push_back(g);
  }
  if (candidates.empty()) return infeasible;

  std::vector<OptimizationResult> results;
  results.reserve(candidates.size());
  for (const auto& c : candidates) results.push_back(refine(c, pt, cfg));

  const double cap = 10.0 * cfg.refine_tol;
  const OptimizationResult* best = nullptr;
  for (const auto& r : results)
    if (r.status == SolveStatus::Converged && r.constraint_violation <= cap)
      best = better_of(best, &r);
  if (!best) {
    for (const auto& r : results)
      if (r.constraint_violation <= cap) best = better_of(best, &r);
  }
  if (!best) {
    // Nothing met the constraints: report the closest attempt.
    const OptimizationResult* closest = &results.front();
    for (const auto& r : results)
      if (r.constraint_violation < closest->constraint_violation) closest = &r;
    OptimizationResult r = *closest;
    r.status = SolveStatus::Infeasible;
    return r;
  }
  return *best;
}

namespace {

std::vector<Eigen::VectorXd> family_structured_starts(
    const FamilyChart& chart, const ConstraintPoint& pt) {
  std::vector<Eigen::VectorXd> starts;
  const double eps0 = pt.edge;
  const int n = chart.pode_count();

  FamilySpec specA;
  bool haveA = false;
  if (pt.triangle <= eps0 * eps0 * eps0) {
    try {
      specA = solve_A(n, pt);
      haveA = true;
    } catch (const GraphonError&) {
      auto [lo, hi] = representable_tau_range(n, eps0);
      if (hi - lo > 2e-9) {
        try {
          specA = solve_A(n, {eps0, std::clamp(pt.triangle, lo + 1e-9, hi - 1e-9)});
          haveA = true;
        } catch (const GraphonError&) {
        }
      }
    }
  }

  auto push_spec = [&](const FamilySpec& s) {
    Eigen::VectorXd th = chart.pack(s);
    starts.push_back(th);
  };

  switch (chart.family()) {
    case Family::A: {
      if (haveA) push_spec(specA);
      break;
    }
    case Family::B: {
      const int m = chart.m();
      if (haveA) {
        for (double da : {0.0, 0.04, -0.04, 0.12, -0.12}) {
          FamilySpec s;
          s.family = Family::B;
          s.m = m;
          s.a = specA.a;
          s.b = specA.b;
          s.d = std::clamp(specA.b + da, 1e-6, 1.0 - 1e-6);
          s.p = std::clamp(specA.a - da / 2.0, 1e-6, 1.0 - 1e-6);
          s.c = m / (m + 1.0);
          push_spec(s);
        }
      }
      {
        // Mantel-like corner and a constant-like interior point.
        FamilySpec s;
        s.family = Family::B;
        s.m = m;
        s.a = 1e-4;
        s.b = 1e-4;
        s.d = 1.0 - 1e-4;
        s.p = 1e-4;
        s.c = 0.5;
        push_spec(s);
        s.a = s.b = s.d = s.p = std::clamp(eps0, 1e-4, 1.0 - 1e-4);
        s.c = 0.4;
        push_spec(s);
        // Turan-deformed corner: near-multipartite class with one opened
        // diagonal.
        for (double p0 : {0.3, 0.6})
          for (double c0 : {0.5, 0.65}) {
            s.a = 0.02;
            s.b = 0.98;
            s.d = 0.98;
            s.p = p0;
            s.c = c0;
            push_spec(s);
          }
      }
      break;
    }
    case Family::C: {
      const int m = chart.m();
      if (haveA) {
        for (double da : {0.0, 0.04, -0.04, 0.12, -0.12}) {
          FamilySpec s;
          s.family = Family::C;
          s.m = m;
          s.a_plus = std::clamp(specA.b + da, 1e-6, 1.0 - 1e-6);
          s.a_minus = specA.a;
          s.b = specA.a;
          s.d = specA.b;
          s.p = specA.b;
          s.c = 2.0 / (m + 2.0);
          push_spec(s);
        }
      }
      {
        // Split-pair multipartite corner and its mild deformations.
        FamilySpec s;
        s.family = Family::C;
        s.m = m;
        for (double split : {0.9, 0.7}) {
          s.a_plus = split;
          s.a_minus = 0.05;
          s.b = 0.05;
          s.d = 0.95;
          s.p = 0.95;
          s.c = 0.5;
          push_spec(s);
          s.c = 2.0 / (m + 2.0);
          push_spec(s);
        }
      }
      break;
    }
    case Family::F: {
      FamilySpec s;
      s.family = Family::F;
      s.m = 1;
      s.a = s.b = s.d = std::clamp(eps0, 1e-4, 1.0 - 1e-4);
      s.c = 0.5;
      push_spec(s);
      s.a = 1.0 - 1e-4;
      s.b = 1e-4;
      s.d = 1e-4;
      s.c = std::sqrt(eps0);
      push_spec(s);
      break;
    }
    default:
      break;
  }
  return starts;
}

}  // namespace

OptimizationResult solve_in_family(
    Family family, int m, const ConstraintPoint& pt, const SolveConfig& cfg,
    const std::vector<Eigen::VectorXd>& extra_starts) {
  cfg.check();
  FamilyChart chart(family, m);
  SqpSpace space = family_space(chart);

  std::vector<Eigen::VectorXd> starts;
  for (const auto& th : extra_starts)
    if (th.size() == chart.dim()) starts.push_back(th);
  for (auto& th : family_structured_starts(chart, pt))
    starts.push_back(std::move(th));

  std::mt19937_64 rng(cfg.seed * 6364136223846793005ULL +
                      static_cast<std::uint64_t>(family) * 97 + m);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // Corner-biased draws: family optima near the lower boundary pin several
  // blocks at 0 or 1.
  auto draw = [&]() {
    const double u = unif(rng);
    const double kind = unif(rng);
    if (kind < 1.0 / 3) return 0.02 + 0.96 * u;
    if (kind < 2.0 / 3) return 1e-4 + 0.08 * u;
    return 1.0 - 1e-4 - 0.08 * u;
  };
  while (static_cast<int>(starts.size()) < cfg.family_starts) {
    Eigen::VectorXd th(chart.dim());
    for (int i = 0; i < chart.dim(); ++i) th[i] = draw();
    if (chart.c_param_index() >= 0)
      th[chart.c_param_index()] = 0.15 + 0.7 * unif(rng);
    starts.push_back(std::move(th));
  }

  SqpSettings st;
  st.tol = cfg.refine_tol;
  st.max_iter = cfg.max_iterations;
  st.constrain_tau = true;

  const double cap = 10.0 * cfg.refine_tol;
  bool any_admissible = false;
  SqpOutcome best;
  MultipodalGraphon best_g;
  for (auto& th : starts) {
    Eigen::VectorXd x0 = th;
    SqpOutcome out =
        sqp_solve(space, SqpObjective::MaxEntropy, pt.edge, pt.triangle,
                  std::move(x0), st);
    if (!(out.converged && out.cviol <= cap)) continue;
    MultipodalGraphon g = space.graphon(out.x);
    if (!any_admissible || out.vals.S > best.vals.S + 1e-12 ||
        (std::abs(out.vals.S - best.vals.S) <= 1e-12 &&
         canonical_less(canonicalize(g, cfg.merge_tol),
                        canonicalize(best_g, cfg.merge_tol)))) {
      best = out;
      best_g = g;
    }
    any_admissible = true;
  }
  if (!any_admissible)
    throw FamilyInfeasible("no family parameters meet the constraints");

  OptimizationResult r = package_result(space, best, pt, cfg, true);
  r.family_params = best.x;
  return r;
}

OptimizationResult extremal_tau(double eps, ExtremalDirection direction,
                                const SolveConfig& cfg) {
  cfg.check();
  if (!(eps > 0.0 && eps < 1.0))
    throw ParamRangeError("extremal_tau needs eps in (0,1)");

  std::vector<MultipodalGraphon> starts;
  starts.push_back(MultipodalGraphon::constant(eps));
  if (direction == ExtremalDirection::Min) {
    for (int parts = 2; parts <= std::max(2, cfg.max_podes); ++parts)
      starts.push_back(rescale_to_edge(multipartite(parts), eps));
    for (double c : {0.25, 0.5}) {
      Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(2, 2);
      probs(0, 1) = probs(1, 0) = 1.0;
      starts.push_back(
          rescale_to_edge(MultipodalGraphon{{c, 1.0 - c}, std::move(probs)}, eps));
    }
  } else {
    starts.push_back(clique_bipodal(eps));
  }
  std::mt19937_64 rng(cfg.seed + 17);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int k = 0; k < 6; ++k) {
    const int n = 2 + (k % std::max(1, cfg.max_podes - 1));
    std::vector<double> sizes(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      sizes[i] = -std::log(std::max(unif(rng), 1e-300));
      total += sizes[i];
    }
    for (int i = 0; i < n; ++i) sizes[i] /= total;
    Eigen::MatrixXd probs(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) probs(i, j) = probs(j, i) = unif(rng);
    MultipodalGraphon g{std::move(sizes), std::move(probs)};
    bool ok = true;
    for (double c : g.sizes)
      if (c < kDegeneratePodeSize) ok = false;
    if (ok) starts.push_back(rescale_to_edge(g, eps));
  }

  SqpSettings st;
  st.tol = cfg.refine_tol;
  st.max_iter = cfg.max_iterations;
  st.constrain_tau = false;
  const SqpObjective obj = (direction == ExtremalDirection::Min)
                               ? SqpObjective::MinTau
                               : SqpObjective::MaxTau;

  const double cap = 10.0 * cfg.refine_tol;
  bool have = false;
  SqpOutcome best;
  SqpSpace best_space;
  for (const auto& g : starts) {
    SqpSpace space = graphon_space(g.pode_count());
    ParamLayout lay(g.pode_count());
    SqpOutcome out = sqp_solve(space, obj, eps, 0.0, lay.pack(g), st);
    if (out.cviol > cap) continue;
    const bool better =
        !have || (direction == ExtremalDirection::Min
                      ? out.vals.tau < best.vals.tau - 1e-14
                      : out.vals.tau > best.vals.tau + 1e-14);
    if (better) {
      best = out;
      best_space = space;
      have = true;
    }
  }
  if (!have) {
    OptimizationResult r;
    r.status = SolveStatus::Infeasible;
    return r;
  }

  ConstraintPoint achieved{best.vals.eps, best.vals.tau};
  OptimizationResult r = package_result(best_space, best, achieved, cfg, false);
  r.status = best.converged ? SolveStatus::Converged : SolveStatus::MaxIterations;
  return r;
}

}  // namespace graphon
