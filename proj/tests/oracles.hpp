#pragma once

// Test-only oracles, kept independent of the implementation paths they
// check.

#include <cmath>
#include <functional>
#include <stdexcept>

#include "graphon/densities.hpp"
#include "graphon/families.hpp"

namespace graphon::testing {

/// Entropy of the B(n-1,1) graphon at (a, b, c) with (d, p) eliminated by
/// the density constraints; Newton on the 2x2 system with a finite-
/// difference Jacobian (independent of the analytic gradient code).
class ConstrainedEntropy {
 public:
  ConstrainedEntropy(int n, double eps0, double tau0)
      : n_(n), eps0_(eps0), tau0_(tau0) {}

  double operator()(double a, double b, double c) const {
    FamilySpec s;
    s.family = Family::B;
    s.m = n_ - 1;
    s.a = a;
    s.b = (n_ > 2) ? b : 0.0;
    s.c = c;
    double d = (n_ > 2) ? b : b;  // cross block starts at the A-point value
    double p = a;

    auto residual = [&](double dd, double pp, double* re, double* rt) {
      s.d = dd;
      s.p = pp;
      MultipodalGraphon g = build_family(s);
      *re = edge_density(g) - eps0_;
      *rt = triangle_density(g) - tau0_;
    };

    for (int iter = 0; iter < 80; ++iter) {
      double re, rt;
      residual(d, p, &re, &rt);
      if (std::abs(re) < 1e-13 && std::abs(rt) < 1e-13) break;
      const double h = 1e-7;
      double re1, rt1, re2, rt2, re3, rt3, re4, rt4;
      residual(d + h, p, &re1, &rt1);
      residual(d - h, p, &re2, &rt2);
      residual(d, p + h, &re3, &rt3);
      residual(d, p - h, &re4, &rt4);
      const double j11 = (re1 - re2) / (2 * h), j12 = (re3 - re4) / (2 * h);
      const double j21 = (rt1 - rt2) / (2 * h), j22 = (rt3 - rt4) / (2 * h);
      const double det = j11 * j22 - j12 * j21;
      if (std::abs(det) < 1e-18)
        throw std::runtime_error("oracle: singular constraint Jacobian");
      double step_d = (-re * j22 + rt * j12) / det;
      double step_p = (-rt * j11 + re * j21) / det;
      // damped full step keeps (d, p) inside the open box
      double scale = 1.0;
      while (scale > 1e-6 &&
             (d + scale * step_d <= 0.0 || d + scale * step_d >= 1.0 ||
              p + scale * step_p <= 0.0 || p + scale * step_p >= 1.0))
        scale *= 0.5;
      d += scale * step_d;
      p += scale * step_p;
      if (iter == 79) throw std::runtime_error("oracle: Newton stalled");
    }
    s.d = d;
    s.p = p;
    return entropy(build_family(s));
  }

 private:
  int n_;
  double eps0_, tau0_;
};

/// Central-difference Hessian of the constrained entropy in (a, b, c) at
/// the A(n,0) point of (eps0, tau0). For n = 2 the b row/column is zero
/// (the coordinate does not exist).
inline Eigen::Matrix3d fd_constrained_hessian(int n, double eps0, double tau0,
                                              double step = 1e-4) {
  FamilySpec specA = solve_A(n, {eps0, tau0});
  const double a0 = specA.a, b0 = specA.b, c0 = (n - 1.0) / n;
  ConstrainedEntropy S(n, eps0, tau0);

  auto at = [&](double da, double db, double dc) {
    return S(a0 + da, b0 + db, c0 + dc);
  };

  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  const bool has_b = n > 2;
  const double f0 = at(0, 0, 0);
  auto delta = [&](int axis, double h) {
    double v[3] = {0, 0, 0};
    v[axis] = h;
    return at(v[0], v[1], v[2]);
  };
  for (int i = 0; i < 3; ++i) {
    if (i == 1 && !has_b) continue;
    H(i, i) = (delta(i, step) - 2 * f0 + delta(i, -step)) / (step * step);
    for (int j = i + 1; j < 3; ++j) {
      if (j == 1 && !has_b) continue;
      auto at2 = [&](double hi, double hj) {
        double v[3] = {0, 0, 0};
        v[i] = hi;
        v[j] = hj;
        return at(v[0], v[1], v[2]);
      };
      H(i, j) = H(j, i) = (at2(step, step) - at2(step, -step) -
                           at2(-step, step) + at2(-step, -step)) /
                          (4 * step * step);
    }
  }
  return H;
}

}  // namespace graphon::testing
