#include "graphon/families.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "graphon/util.hpp"

namespace graphon {

namespace {

void check_prob(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream os;
    os << "parameter " << name << " = " << v << " outside [0,1]";
    throw ParamRangeError(os.str());
  }
}

MultipodalGraphon finish(std::vector<double> sizes, Eigen::MatrixXd probs) {
  // Zero-size podes appear in limits such as B(m,1) with c = 1; drop them.
  const int n = static_cast<int>(sizes.size());
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (sizes[i] >= kDegeneratePodeSize) keep.push_back(i);
  if (static_cast<int>(keep.size()) != n) {
    std::vector<double> s2;
    Eigen::MatrixXd p2(keep.size(), keep.size());
    double total = 0.0;
    for (int i : keep) total += sizes[i];
    for (size_t a = 0; a < keep.size(); ++a) {
      s2.push_back(sizes[keep[a]] / total);
      for (size_t b = 0; b < keep.size(); ++b)
        p2(a, b) = probs(keep[a], keep[b]);
    }
    sizes = std::move(s2);
    probs = std::move(p2);
  }
  MultipodalGraphon g{std::move(sizes), std::move(probs)};
  require_valid(g);
  return g;
}

}  // namespace

MultipodalGraphon build_family(const FamilySpec& spec) {
  switch (spec.family) {
    case Family::A: {
      const int n = spec.m;
      if (n < 1 || n > kMaxPodes) throw ParamRangeError("A(n,0): bad n");
      check_prob(spec.a, "a");
      if (n > 1) check_prob(spec.b, "b");
      std::vector<double> sizes(n, 1.0 / n);
      Eigen::MatrixXd probs = Eigen::MatrixXd::Constant(n, n, spec.b);
      for (int i = 0; i < n; ++i) probs(i, i) = spec.a;
      return finish(std::move(sizes), std::move(probs));
    }
    case Family::B: {
      const int m = spec.m;
      if (m < 1 || m + 1 > kMaxPodes) throw ParamRangeError("B(m,1): bad m");
      check_prob(spec.a, "a");
      if (m > 1) check_prob(spec.b, "b");
      check_prob(spec.d, "d");
      check_prob(spec.p, "p");
      if (!(spec.c > 0.0 && spec.c <= 1.0))
        throw ParamRangeError("B(m,1): c outside (0,1]");
      const int n = m + 1;
      std::vector<double> sizes(n, spec.c / m);
      sizes[n - 1] = 1.0 - spec.c;
      Eigen::MatrixXd probs(n, n);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) probs(i, j) = (i == j) ? spec.a : spec.b;
      for (int i = 0; i < m; ++i) probs(i, n - 1) = probs(n - 1, i) = spec.d;
      probs(n - 1, n - 1) = spec.p;
      return finish(std::move(sizes), std::move(probs));
    }
    case Family::C: {
      const int m = spec.m;
      if (m < 1 || m + 2 > kMaxPodes) throw ParamRangeError("C(m,2): bad m");
      check_prob(spec.a_plus, "a_plus");
      check_prob(spec.a_minus, "a_minus");
      check_prob(spec.b, "b");
      check_prob(spec.d, "d");
      if (m > 1) check_prob(spec.p, "p");
      if (!(spec.c > 0.0 && spec.c <= 1.0))
        throw ParamRangeError("C(m,2): c outside (0,1]");
      const int n = m + 2;
      std::vector<double> sizes(n, (1.0 - spec.c) / m);
      sizes[0] = sizes[1] = spec.c / 2.0;
      Eigen::MatrixXd probs(n, n);
      probs(0, 0) = probs(1, 1) = spec.a_minus;
      probs(0, 1) = probs(1, 0) = spec.a_plus;
      for (int j = 2; j < n; ++j) {
        probs(0, j) = probs(j, 0) = spec.d;
        probs(1, j) = probs(j, 1) = spec.d;
        for (int k = 2; k < n; ++k) probs(j, k) = (j == k) ? spec.b : spec.p;
      }
      return finish(std::move(sizes), std::move(probs));
    }
    case Family::F: {
      if (spec.m != 1) throw ParamRangeError("F(1,1): m must be 1");
      check_prob(spec.a, "a");
      check_prob(spec.b, "b");
      check_prob(spec.d, "d");
      if (!(spec.c > 0.0 && spec.c < 1.0))
        throw ParamRangeError("F(1,1): c outside (0,1)");
      Eigen::MatrixXd probs(2, 2);
      probs(0, 0) = spec.a;
      probs(1, 1) = spec.b;
      probs(0, 1) = probs(1, 0) = spec.d;
      return finish({spec.c, 1.0 - spec.c}, std::move(probs));
    }
    default:
      throw ParamRangeError("cannot build UNKNOWN family");
  }
}

FamilySpec solve_A(int n, const ConstraintPoint& pt) {
  if (n < 2) throw ParamRangeError("solve_A needs n >= 2");
  const double e = pt.edge;
  const double e3 = e * e * e;
  if (pt.triangle > e3)
    throw AboveERCurve("tau > eps^3: A(n,0) parameters are complex");
  const double r = std::cbrt((e3 - pt.triangle) / (n - 1));
  double a = e - (n - 1) * r;
  double b = e + r;
  if (a < -1e-14 || b > 1.0 + 1e-14) {
    std::ostringstream os;
    os << "A(" << n << ",0) at (" << e << "," << pt.triangle
       << ") leaves [0,1]: a=" << a << " b=" << b;
    throw ParamRangeError(os.str());
  }
  FamilySpec spec;
  spec.family = Family::A;
  spec.m = n;
  spec.a = std::clamp(a, 0.0, 1.0);
  spec.b = std::clamp(b, 0.0, 1.0);
  return spec;
}

ConstraintPoint cusp(int n) {
  if (n < 1) throw ParamRangeError("cusp needs n >= 1");
  const double np1 = n + 1.0;
  return {n / np1, n * (n - 1.0) / (np1 * np1)};
}

double min_tau_stationarity(double a, double c) {
  return a * a * a * c * c + a * c * c + 2.0 * a * a * c + 2.0 * (1.0 - c) -
         4.0 * a * a * c * c - 4.0 * c * (1.0 - c);
}

ElResidual euler_lagrange_blocks(const MultipodalGraphon& g, double alpha,
                                 double beta, double boundary_tol) {
  require_valid(g);
  const int n = g.pode_count();
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) c[i] = g.sizes[i];
  const Eigen::MatrixXd T = g.probs * c.asDiagonal() * g.probs;

  ElResidual out;
  out.blocks.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double p = g.probs(i, j);
      out.blocks(i, j) =
          binary_entropy_prime(p) - alpha - 3.0 * beta * T(i, j);
      if (i > j) continue;
      if (p <= boundary_tol || p >= 1.0 - boundary_tol)
        out.boundary_flag = true;
      else
        out.max_abs = std::max(out.max_abs, std::abs(out.blocks(i, j)));
    }
  return out;
}

double euler_lagrange_residual(const MultipodalGraphon& g, double alpha,
                               double beta, double boundary_tol) {
  return euler_lagrange_blocks(g, alpha, beta, boundary_tol).max_abs;
}

HessianResult hessian_A(int n, double a, double b) {
  if (n < 2) throw ParamRangeError("hessian_A needs n >= 2");
  if (!(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0))
    throw ParamRangeError("hessian_A needs a, b in (0,1)");
  if (std::abs(a - b) < 1e-8)
    throw DegenerateAB("a and b coincide (Erdos-Renyi curve)");

  HessianResult res;
  // X = arctanh applied to the (1-2p) transform of the block values,
  // equivalently (S0'(a) - S0'(b))/2; validated entrywise against the
  // constrained finite-difference Hessian.
  const double X =
      0.5 * (std::log((1.0 - a) / a) - std::log((1.0 - b) / b));
  res.X = X;
  const double ab = a - b;
  const double ab2 = ab * ab;
  const double nn = n;

  Eigen::Matrix3d H;
  H(0, 0) = (nn - 1.0) * (ab2 - 4.0 * (a - 1.0) * a * a * X) /
            ((a - 1.0) * a * ab2 * nn);
  H(0, 1) = -2.0 * b * (nn - 2.0) * (nn - 1.0) * X / (ab2 * nn);
  H(0, 2) = -2.0 * (a + b) * X / ab;
  H(1, 1) = (nn - 2.0) * (nn - 1.0) *
            (ab2 - 2.0 * (b - 1.0) * b * (2.0 * a + b * (nn - 4.0)) * X) /
            (2.0 * ab2 * (b - 1.0) * b * nn);
  H(1, 2) = -2.0 * b * (nn - 2.0) * X / ab;
  H(2, 2) = 2.0 * nn * (std::log1p(-b) - std::log1p(-a)) / (nn - 1.0);
  H(1, 0) = H(0, 1);
  H(2, 0) = H(0, 2);
  H(2, 1) = H(1, 2);

  res.matrix = H;
  res.determinant = H.determinant();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(H);
  for (int i = 0; i < 3; ++i) res.eigenvalues[i] = es.eigenvalues()[i];
  return res;
}

double stability_determinant(int n, const HessianResult& h) {
  if (n == 2)
    return h.matrix(0, 0) * h.matrix(2, 2) - h.matrix(0, 2) * h.matrix(0, 2);
  return h.determinant;
}

bool negative_definite(int n, const HessianResult& h) {
  if (n == 2)
    return h.matrix(0, 0) < 0.0 && stability_determinant(2, h) > 0.0;
  return h.eigenvalues[2] < 0.0;
}

std::pair<double, double> representable_tau_range(int n, double eps) {
  const double e3 = eps * eps * eps;
  double lo = 0.0;
  lo = std::max(lo, e3 - (n - 1.0) * std::pow(1.0 - eps, 3));
  if (n > 2) lo = std::max(lo, e3 * (1.0 - 1.0 / ((n - 1.0) * (n - 1.0))));
  return {lo, e3};
}

BoundaryCurve stability_boundary(int n, double eps_lo, double eps_hi,
                                 int columns, int tau_samples) {
  if (columns < 1 || tau_samples < 4)
    throw ParamRangeError("stability_boundary: bad resolution");
  BoundaryCurve curve;
  for (int col = 0; col < columns; ++col) {
    const double eps =
        (columns == 1)
            ? eps_lo
            : eps_lo + (eps_hi - eps_lo) * col / (columns - 1.0);
    auto [tlo, thi] = representable_tau_range(n, eps);
    tlo += 1e-9;
    thi -= 1e-9;
    if (!(thi > tlo)) {
      curve.notes.push_back("eps=" + fmt15(eps) + ": empty A range");
      continue;
    }
    auto det_at = [&](double tau) {
      FamilySpec s = solve_A(n, {eps, tau});
      return stability_determinant(n, hessian_A(n, s.a, s.b));
    };
    double prev_tau = tlo;
    double prev_det;
    bool have_prev = true;
    try {
      prev_det = det_at(prev_tau);
    } catch (const GraphonError&) {
      have_prev = false;
      prev_det = 0.0;
    }
    bool found = false;
    for (int s = 1; s < tau_samples; ++s) {
      const double tau = tlo + (thi - tlo) * s / (tau_samples - 1.0);
      double det;
      try {
        det = det_at(tau);
      } catch (const GraphonError&) {
        have_prev = false;
        continue;
      }
      if (have_prev && ((prev_det < 0.0) != (det < 0.0))) {
        const double root = brent_root(
            [&](double t) { return det_at(t); }, prev_tau, tau, 1e-15);
        FamilySpec spec = solve_A(n, {eps, root});
        curve.points.push_back({eps, root, hessian_A(n, spec.a, spec.b)});
        found = true;
      }
      prev_tau = tau;
      prev_det = det;
      have_prev = true;
    }
    if (!found)
      curve.notes.push_back("eps=" + fmt15(eps) + ": no sign change");
  }
  std::sort(curve.points.begin(), curve.points.end(),
            [](const BoundaryPoint& x, const BoundaryPoint& y) {
              if (x.epsilon != y.epsilon) return x.epsilon < y.epsilon;
              return x.tau < y.tau;
            });
  return curve;
}

MultipodalGraphon rearranged_clique(double eps, double cut) {
  if (!(eps > 0.0 && eps < 1.0))
    throw ParamRangeError("rearranged_clique: eps outside (0,1)");
  if (!(cut > 0.0 && cut < 1.0))
    throw ParamRangeError("rearranged_clique: cut outside (0,1)");
  const double s = std::sqrt(eps);
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(3, 3);
  probs(0, 0) = probs(2, 2) = probs(0, 2) = probs(2, 0) = 1.0;
  return {{cut * s, 1.0 - s, (1.0 - cut) * s}, std::move(probs)};
}

MultipodalGraphon overlay_mixture(const MultipodalGraphon& g0,
                                  const MultipodalGraphon& g1, double t) {
  require_valid(g0);
  require_valid(g1);
  auto cuts_of = [](const MultipodalGraphon& g) {
    std::vector<double> cum;
    double acc = 0.0;
    for (int i = 0; i + 1 < g.pode_count(); ++i) {
      acc += g.sizes[i];
      cum.push_back(acc);
    }
    return cum;
  };
  std::vector<double> cuts = cuts_of(g0);
  for (double c : cuts_of(g1)) cuts.push_back(c);
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> merged;
  for (double c : cuts) {
    if (c <= 1e-14 || c >= 1.0 - 1e-14) continue;
    if (!merged.empty() && c - merged.back() < 1e-14) continue;
    merged.push_back(c);
  }
  const int n = static_cast<int>(merged.size()) + 1;

  auto pode_of = [](double x, const MultipodalGraphon& g) {
    double acc = 0.0;
    for (int i = 0; i + 1 < g.pode_count(); ++i) {
      acc += g.sizes[i];
      if (x < acc) return i;
    }
    return g.pode_count() - 1;
  };

  std::vector<double> sizes(n);
  std::vector<int> idx0(n), idx1(n);
  double lo = 0.0;
  for (int i = 0; i < n; ++i) {
    const double hi = (i + 1 < n) ? merged[i] : 1.0;
    sizes[i] = hi - lo;
    const double mid = 0.5 * (lo + hi);
    idx0[i] = pode_of(mid, g0);
    idx1[i] = pode_of(mid, g1);
    lo = hi;
  }
  Eigen::MatrixXd probs(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      probs(i, j) = t * g0.probs(idx0[i], idx0[j]) +
                    (1.0 - t) * g1.probs(idx1[i], idx1[j]);
  return {std::move(sizes), std::move(probs)};
}

MultipodalGraphon rescale_to_edge(const MultipodalGraphon& g, double eps0) {
  const double e = edge_density(g);
  if (e == eps0) return g;
  MultipodalGraphon out = g;
  const int n = g.pode_count();
  if (e > eps0) {
    const double s = eps0 / e;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        out.probs(i, j) = std::clamp(g.probs(i, j) * s, 0.0, 1.0);
  } else {
    const double s = (1.0 - eps0) / (1.0 - e);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        out.probs(i, j) = std::clamp(1.0 - s * (1.0 - g.probs(i, j)), 0.0, 1.0);
  }
  return out;
}

std::pair<MultipodalGraphon, MultipodalGraphon> nonuniqueness_pair(
    const ConstraintPoint& pt, const MultipodalGraphon& tau_minimizer) {
  if (!(pt.edge > 0.0 && pt.edge < 1.0))
    throw NotInterior("edge density not strictly inside (0,1)");
  MultipodalGraphon g0 = rescale_to_edge(tau_minimizer, pt.edge);
  const double tau_lo = triangle_density(g0);
  const double tau_hi = std::pow(pt.edge, 1.5);
  const double margin = 1e-9;
  if (!(pt.triangle > tau_lo + margin && pt.triangle < tau_hi - margin))
    throw NotInterior("constraint point not strictly interior");

  const double cuts[] = {0.35, 0.55, 0.45, 0.62, 0.28};
  std::vector<MultipodalGraphon> mixes;
  std::vector<std::vector<std::pair<int, double>>> sigs;
  for (double cut : cuts) {
    MultipodalGraphon g1 = rearranged_clique(pt.edge, cut);
    auto tau_of = [&](double t) {
      return triangle_density(overlay_mixture(g0, g1, t)) - pt.triangle;
    };
    const double t = brent_root(tau_of, 0.0, 1.0, 1e-15);
    MultipodalGraphon mix = canonicalize(overlay_mixture(g0, g1, t));
    auto sig = classify(mix).signature;
    for (size_t i = 0; i < mixes.size(); ++i)
      if (!same_signature(sigs[i], sig))
        return {mixes[i], mix};
    mixes.push_back(std::move(mix));
    sigs.push_back(std::move(sig));
  }
  throw GraphonError(
      "nonuniqueness_pair: could not realize distinct podal structures");
}

FamilyChart::FamilyChart(Family family, int m) : family_(family), m_(m) {
  switch (family) {
    case Family::A:
      if (m < 1 || m > kMaxPodes) throw ParamRangeError("FamilyChart A: bad n");
      podes_ = m;
      names_ = (m > 1) ? std::vector<std::string>{"a", "b"}
                       : std::vector<std::string>{"a"};
      break;
    case Family::B:
      if (m < 1 || m + 1 > kMaxPodes)
        throw ParamRangeError("FamilyChart B: bad m");
      podes_ = m + 1;
      names_ = (m > 1) ? std::vector<std::string>{"a", "b", "d", "p", "c"}
                       : std::vector<std::string>{"a", "d", "p", "c"};
      break;
    case Family::C:
      if (m < 1 || m + 2 > kMaxPodes)
        throw ParamRangeError("FamilyChart C: bad m");
      podes_ = m + 2;
      names_ = (m > 1)
                   ? std::vector<std::string>{"a_plus", "a_minus", "b",
                                              "d",      "p",       "c"}
                   : std::vector<std::string>{"a_plus", "a_minus", "b", "d",
                                              "c"};
      break;
    case Family::F:
      if (m != 1) throw ParamRangeError("FamilyChart F: m must be 1");
      podes_ = 2;
      names_ = {"a", "b", "d", "c"};
      break;
    default:
      throw ParamRangeError("FamilyChart: unknown family");
  }
  for (size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == "c") c_index_ = static_cast<int>(i);

  ParamLayout lay(podes_);
  M_.setZero(lay.dim(), dim());
  offset_.setZero(lay.dim());
  auto col = [&](const std::string& name) {
    for (size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int n = podes_;
  switch (family) {
    case Family::A: {
      for (int i = 0; i < n; ++i) M_(lay.p_index(i, i), col("a")) = 1.0;
      if (n > 1)
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) M_(lay.p_index(i, j), col("b")) = 1.0;
      for (int i = 0; i + 1 < n; ++i) offset_[lay.c_index(i)] = 1.0 / n;
      break;
    }
    case Family::B: {
      for (int i = 0; i < m; ++i) M_(lay.p_index(i, i), col("a")) = 1.0;
      if (m > 1)
        for (int i = 0; i < m; ++i)
          for (int j = i + 1; j < m; ++j) M_(lay.p_index(i, j), col("b")) = 1.0;
      for (int i = 0; i < m; ++i) M_(lay.p_index(i, n - 1), col("d")) = 1.0;
      M_(lay.p_index(n - 1, n - 1), col("p")) = 1.0;
      for (int i = 0; i + 1 < n; ++i) M_(lay.c_index(i), col("c")) = 1.0 / m;
      break;
    }
    case Family::C: {
      M_(lay.p_index(0, 1), col("a_plus")) = 1.0;
      M_(lay.p_index(0, 0), col("a_minus")) = 1.0;
      M_(lay.p_index(1, 1), col("a_minus")) = 1.0;
      for (int j = 2; j < n; ++j) {
        M_(lay.p_index(0, j), col("d")) = 1.0;
        M_(lay.p_index(1, j), col("d")) = 1.0;
        M_(lay.p_index(j, j), col("b")) = 1.0;
        for (int k = j + 1; k < n; ++k) M_(lay.p_index(j, k), col("p")) = 1.0;
      }
      M_(lay.c_index(0), col("c")) = 0.5;
      M_(lay.c_index(1), col("c")) = 0.5;
      for (int i = 2; i + 1 < n; ++i) {
        M_(lay.c_index(i), col("c")) = -1.0 / m;
        offset_[lay.c_index(i)] = 1.0 / m;
      }
      break;
    }
    case Family::F: {
      M_(lay.p_index(0, 0), col("a")) = 1.0;
      M_(lay.p_index(1, 1), col("b")) = 1.0;
      M_(lay.p_index(0, 1), col("d")) = 1.0;
      M_(lay.c_index(0), col("c")) = 1.0;
      break;
    }
    default:
      break;
  }
}

Eigen::VectorXd FamilyChart::pack(const FamilySpec& spec) const {
  if (spec.family != family_ || spec.m != m_)
    throw ParamRangeError("FamilyChart::pack: spec mismatch");
  Eigen::VectorXd theta(dim());
  for (int i = 0; i < dim(); ++i) {
    const std::string& nm = names_[i];
    if (nm == "a") theta[i] = spec.a;
    else if (nm == "b") theta[i] = spec.b;
    else if (nm == "d") theta[i] = spec.d;
    else if (nm == "p") theta[i] = spec.p;
    else if (nm == "c") theta[i] = spec.c;
    else if (nm == "a_plus") theta[i] = spec.a_plus;
    else if (nm == "a_minus") theta[i] = spec.a_minus;
  }
  return theta;
}

FamilySpec FamilyChart::unpack(const Eigen::VectorXd& theta) const {
  FamilySpec spec;
  spec.family = family_;
  spec.m = m_;
  for (int i = 0; i < dim(); ++i) {
    const std::string& nm = names_[i];
    if (nm == "a") spec.a = theta[i];
    else if (nm == "b") spec.b = theta[i];
    else if (nm == "d") spec.d = theta[i];
    else if (nm == "p") spec.p = theta[i];
    else if (nm == "c") spec.c = theta[i];
    else if (nm == "a_plus") spec.a_plus = theta[i];
    else if (nm == "a_minus") spec.a_minus = theta[i];
  }
  return spec;
}

MultipodalGraphon FamilyChart::build(const Eigen::VectorXd& theta) const {
  ParamLayout lay(podes_);
  return lay.unpack(offset_ + M_ * theta);
}

Eigen::VectorXd FamilyChart::lower_bounds(double p_floor,
                                          double c_floor) const {
  Eigen::VectorXd lb = Eigen::VectorXd::Constant(dim(), p_floor);
  if (c_index_ >= 0) lb[c_index_] = c_floor;
  return lb;
}

Eigen::VectorXd FamilyChart::upper_bounds(double p_floor,
                                          double c_floor) const {
  Eigen::VectorXd ub = Eigen::VectorXd::Constant(dim(), 1.0 - p_floor);
  if (c_index_ >= 0) ub[c_index_] = 1.0 - c_floor;
  return ub;
}

}  // namespace graphon
