#include "graphon/diagram.hpp"

#include <algorithm>
#include <cmath>

#include "graphon/util.hpp"

namespace graphon {

double LowerBoundary::operator()(double eps) const {
  if (eps <= 0.5) return 0.0;
  if (knots.empty()) return 0.0;
  if (eps <= knots.front().first) {
    // interpolate from the exact Mantel end (0.5, 0)
    const auto& [e1, t1] = knots.front();
    if (e1 <= 0.5) return t1;
    return t1 * (eps - 0.5) / (e1 - 0.5);
  }
  if (eps >= knots.back().first) return knots.back().second;
  auto it = std::upper_bound(
      knots.begin(), knots.end(), eps,
      [](double v, const std::pair<double, double>& k) { return v < k.first; });
  const auto& [e1, t1] = *(it - 1);
  const auto& [e2, t2] = *it;
  const double w = (eps - e1) / (e2 - e1);
  return t1 + w * (t2 - t1);
}

LowerBoundary compute_lower_boundary(double eps_lo, double eps_hi, int mesh,
                                     const SolveConfig& cfg) {
  LowerBoundary lb;
  if (mesh < 2) throw ParamRangeError("lower boundary mesh too small");
  for (int i = 0; i < mesh; ++i) {
    const double eps = eps_lo + (eps_hi - eps_lo) * i / (mesh - 1.0);
    if (eps <= 0.5) {
      lb.knots.emplace_back(eps, 0.0);
      continue;
    }
    OptimizationResult r = extremal_tau(eps, ExtremalDirection::Min, cfg);
    if (r.status == SolveStatus::Infeasible) continue;
    lb.knots.emplace_back(eps, std::max(0.0, triangle_density(r.graphon)));
  }
  // Insert cusps exactly; they are the non-smooth points of the scallops.
  for (int k = 1; k <= kMaxPodes; ++k) {
    ConstraintPoint c = cusp(k);
    if (c.edge < eps_lo - 1e-12 || c.edge > eps_hi + 1e-12) continue;
    bool replaced = false;
    for (auto& [e, t] : lb.knots)
      if (std::abs(e - c.edge) < 1e-9) {
        e = c.edge;
        t = c.triangle;
        replaced = true;
      }
    if (!replaced) lb.knots.emplace_back(c.edge, c.triangle);
  }
  std::sort(lb.knots.begin(), lb.knots.end());
  return lb;
}

std::string to_string(Feasibility f) {
  switch (f) {
    case Feasibility::Interior: return "Interior";
    case Feasibility::Boundary: return "Boundary";
    default: return "Infeasible";
  }
}

Feasibility feasible(const ConstraintPoint& pt, const LowerBoundary& lower,
                     double margin) {
  if (!pt.in_unit_box()) return Feasibility::Infeasible;
  if (!(pt.edge >= 0.0 && pt.edge <= 1.0)) return Feasibility::Infeasible;
  const double hi = std::pow(pt.edge, 1.5);
  const double lo = lower(pt.edge);
  if (pt.triangle > lo + margin && pt.triangle < hi - margin)
    return Feasibility::Interior;
  if (pt.triangle >= lo - margin && pt.triangle <= hi + margin)
    return Feasibility::Boundary;
  return Feasibility::Infeasible;
}

namespace {

ScanRecord record_from(const ConstraintPoint& pt,
                       const OptimizationResult& r) {
  ScanRecord rec;
  rec.point = pt;
  rec.tau_rescaled = pt.triangle - pt.edge * (2.0 * pt.edge - 1.0);
  rec.entropy = r.entropy;
  rec.label = r.label;
  rec.beta = r.beta;
  rec.status = r.status;
  rec.optimizer = r.graphon;
  rec.kkt = r.kkt_residual;
  rec.el = r.el_residual;
  return rec;
}

OptimizationResult solve_point(const ConstraintPoint& pt,
                               const SolveConfig& cfg, const ScanOptions& opt,
                               const std::vector<MultipodalGraphon>& warm) {
  if (opt.families.empty()) return solve(pt, cfg, warm);
  // Family-restricted scan: best over the requested family charts.
  bool have = false;
  OptimizationResult best;
  for (auto [fam, m] : opt.families) {
    try {
      OptimizationResult r = solve_in_family(fam, m, pt, cfg);
      if (!have || r.entropy > best.entropy) {
        best = r;
        have = true;
      }
    } catch (const GraphonError&) {
    }
  }
  if (!have) {
    best.status = SolveStatus::Infeasible;
  }
  return best;
}

bool better_record(const ScanRecord& a, const ScanRecord& b) {
  // Converged beats non-converged, then entropy decides.
  const bool ac = a.status == SolveStatus::Converged;
  const bool bc = b.status == SolveStatus::Converged;
  if (ac != bc) return ac;
  return a.entropy > b.entropy;
}

}  // namespace

std::vector<ScanRecord> scan_line(double eps, double tau_lo, double tau_hi,
                                  int steps, const SolveConfig& cfg,
                                  const ScanOptions& opt) {
  if (steps < 1) throw ParamRangeError("scan_line: steps < 1");
  std::vector<double> taus(steps);
  for (int i = 0; i < steps; ++i)
    taus[i] = (steps == 1)
                  ? tau_lo
                  : tau_lo + (tau_hi - tau_lo) * i / (steps - 1.0);

  std::vector<ScanRecord> records(steps);
  const int threads = resolve_threads(opt.threads);
  parallel_for(steps, threads, [&](int i) {
    records[i] = record_from({eps, taus[i]},
                             solve_point({eps, taus[i]}, cfg, opt, {}));
  });

  if (opt.chain_warm_starts && steps > 1 && opt.families.empty()) {
    // Descending sweep; chained starts catch branches the cold solve misses.
    for (int i = steps - 2; i >= 0; --i) {
      const ConstraintPoint pt{eps, taus[i]};
      std::vector<MultipodalGraphon> warm;
      warm.push_back(records[i + 1].optimizer);
      ScanRecord chained = record_from(pt, solve(pt, cfg, warm));
      if (better_record(chained, records[i])) records[i] = chained;
    }
    // Ascending sweep for hysteresis in the other direction.
    for (int i = 1; i < steps; ++i) {
      const ConstraintPoint pt{eps, taus[i]};
      std::vector<MultipodalGraphon> warm;
      warm.push_back(records[i - 1].optimizer);
      ScanRecord chained = record_from(pt, solve(pt, cfg, warm));
      if (better_record(chained, records[i])) records[i] = chained;
    }
  }
  return records;
}

std::string to_string(TransitionEvent::Kind k) {
  switch (k) {
    case TransitionEvent::Kind::SlopeJump: return "SlopeJump";
    case TransitionEvent::Kind::LabelChange: return "LabelChange";
    default: return "Both";
  }
}

std::vector<TransitionEvent> detect_transitions(
    const std::vector<ScanRecord>& records, double slope_jump_tol) {
  const int n = static_cast<int>(records.size());
  if (n < 4) throw TooFewPoints("detect_transitions needs >= 4 records");

  std::vector<TransitionEvent> events;
  std::vector<double> slope(n - 1);
  for (int i = 0; i + 1 < n; ++i) {
    const double dt = records[i + 1].point.triangle - records[i].point.triangle;
    slope[i] = (records[i + 1].entropy - records[i].entropy) / dt;
  }
  for (int i = 1; i + 1 < n; ++i) {
    const bool jump = std::abs(slope[i] - slope[i - 1]) > slope_jump_tol;
    const bool relabel = !records[i].label.same_phase(records[i + 1].label);
    // Label comparison for the interval [i, i+1]; slope comparison centers
    // at record i.
    if (jump) {
      TransitionEvent ev;
      ev.low = records[i - 1].point.triangle;
      ev.high = records[i + 1].point.triangle;
      ev.kind = TransitionEvent::Kind::SlopeJump;
      ev.slope_before = slope[i - 1];
      ev.slope_after = slope[i];
      ev.label_before = records[i - 1].label;
      ev.label_after = records[i + 1].label;
      events.push_back(ev);
    }
    if (relabel) {
      TransitionEvent ev;
      ev.low = records[i].point.triangle;
      ev.high = records[i + 1].point.triangle;
      ev.kind = TransitionEvent::Kind::LabelChange;
      ev.slope_before = slope[i - 1];
      ev.slope_after = (i + 2 < n) ? slope[i + 1] : slope[i];
      ev.label_before = records[i].label;
      ev.label_after = records[i + 1].label;
      events.push_back(ev);
    }
  }
  // Handle a label change in the first interval (loop starts at i=1).
  if (!records[0].label.same_phase(records[1].label)) {
    TransitionEvent ev;
    ev.low = records[0].point.triangle;
    ev.high = records[1].point.triangle;
    ev.kind = TransitionEvent::Kind::LabelChange;
    ev.slope_before = slope[0];
    ev.slope_after = slope[0];
    ev.label_before = records[0].label;
    ev.label_after = records[1].label;
    events.insert(events.begin(), ev);
  }

  // Merge overlapping events into Kind::Both.
  std::sort(events.begin(), events.end(),
            [](const TransitionEvent& a, const TransitionEvent& b) {
              return a.low < b.low;
            });
  std::vector<TransitionEvent> merged;
  for (const auto& ev : events) {
    if (!merged.empty() && ev.low <= merged.back().high + 1e-15) {
      TransitionEvent& last = merged.back();
      if (last.kind != ev.kind) last.kind = TransitionEvent::Kind::Both;
      last.high = std::max(last.high, ev.high);
      last.low = std::min(last.low, ev.low);
      last.slope_after = ev.slope_after;
      last.label_after = ev.label_after;
    } else {
      merged.push_back(ev);
    }
  }
  return merged;
}

GridScan scan_grid(double eps_lo, double eps_hi, double tau_lo, double tau_hi,
                   int nx, int ny, const SolveConfig& cfg,
                   const LowerBoundary& lower, const ScanOptions& opt) {
  if (nx < 1 || ny < 1 || nx * ny > 200 * 200)
    throw ParamRangeError("scan_grid: resolution out of range");
  GridScan grid;
  grid.eps_values.resize(nx);
  grid.tau_values.resize(ny);
  for (int i = 0; i < nx; ++i)
    grid.eps_values[i] =
        (nx == 1) ? eps_lo : eps_lo + (eps_hi - eps_lo) * i / (nx - 1.0);
  for (int j = 0; j < ny; ++j)
    grid.tau_values[j] =
        (ny == 1) ? tau_lo : tau_lo + (tau_hi - tau_lo) * j / (ny - 1.0);

  grid.records.resize(static_cast<size_t>(nx) * ny);
  const int threads = resolve_threads(opt.threads);
  parallel_for(nx * ny, threads, [&](int idx) {
    const int i = idx / ny, j = idx % ny;
    const ConstraintPoint pt{grid.eps_values[i], grid.tau_values[j]};
    ScanRecord& rec = grid.records[idx];
    if (feasible(pt, lower) == Feasibility::Infeasible) {
      rec.point = pt;
      rec.tau_rescaled = pt.triangle - pt.edge * (2.0 * pt.edge - 1.0);
      rec.status = SolveStatus::Infeasible;
      return;
    }
    rec = record_from(pt, solve_point(pt, cfg, opt, {}));
  });
  return grid;
}

double a_symmetry_deviation(const MultipodalGraphon& g) {
  const int n = g.pode_count();
  if (n < 2) return 0.0;
  double diag = 0.0, off = 0.0;
  for (int i = 0; i < n; ++i) diag += g.probs(i, i);
  diag /= n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) off += g.probs(i, j);
  off /= n * (n - 1) / 2.0;
  double dev = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      dev = std::max(dev,
                     std::abs(g.probs(i, j) - ((i == j) ? diag : off)));
  // Pode sizes of an A(n,0) graphon are all 1/n.
  for (int i = 0; i < n; ++i)
    dev = std::max(dev, std::abs(g.sizes[i] - 1.0 / n));
  return dev;
}

PitchforkReport pitchfork_probe(int n, double eps, double tau_lo,
                                double tau_hi, int steps,
                                const SolveConfig& cfg,
                                const PitchforkOptions& opt) {
  if (steps < 4) throw ParamRangeError("pitchfork_probe: steps < 4");
  BoundaryCurve bc = stability_boundary(n, eps, eps, 1, 400);
  double root = 0.0;
  bool found = false;
  for (const auto& p : bc.points) {
    if (p.tau > tau_lo && p.tau < tau_hi &&
        (!found || std::abs(p.tau - 0.5 * (tau_lo + tau_hi)) <
                       std::abs(root - 0.5 * (tau_lo + tau_hi)))) {
      root = p.tau;
      found = true;
    }
  }
  if (!found)
    throw BoundaryNotInWindow("no det H(S) = 0 root inside the window");

  PitchforkReport rep;
  rep.boundary_tau = root;

  std::vector<double> taus;
  for (int i = 0; i < steps; ++i)
    taus.push_back(tau_lo + (tau_hi - tau_lo) * i / (steps - 1.0));
  const double span = tau_hi - tau_lo;
  for (int j = 1; j <= opt.cluster_depth; ++j) {
    const double off = span * std::pow(0.25, j);
    if (root - off > tau_lo) taus.push_back(root - off);
    if (root + off < tau_hi) taus.push_back(root + off);
  }
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());

  std::vector<Eigen::VectorXd> chain;
  std::vector<double> orders(taus.size()), entropies(taus.size());
  for (size_t i = 0; i < taus.size(); ++i) {
    OptimizationResult r;
    try {
      r = solve_in_family(Family::B, n - 1, {eps, taus[i]}, cfg, chain);
    } catch (const FamilyInfeasible&) {
      orders[i] = std::nan("");
      entropies[i] = std::nan("");
      continue;
    }
    chain.clear();
    chain.push_back(r.family_params);
    orders[i] = a_symmetry_deviation(FamilyChart(Family::B, n - 1)
                                         .build(r.family_params));
    entropies[i] = r.entropy;
  }
  rep.taus = taus;
  rep.order_params = orders;
  rep.entropies = entropies;

  // Which side carries the broken symmetry?
  double below = 0.0, above = 0.0;
  int nb = 0, na = 0;
  for (size_t i = 0; i < taus.size(); ++i) {
    if (std::isnan(orders[i])) continue;
    if (taus[i] < root) {
      below += orders[i];
      ++nb;
    } else {
      above += orders[i];
      ++na;
    }
  }
  if (nb > 0) below /= nb;
  if (na > 0) above /= na;
  rep.b_side_below = below > above;

  // Order parameter at the sample nearest the boundary on the B side.
  double best_dist = 1e300;
  for (size_t i = 0; i < taus.size(); ++i) {
    if (std::isnan(orders[i])) continue;
    const bool on_b_side = rep.b_side_below ? taus[i] < root : taus[i] > root;
    if (!on_b_side) continue;
    const double dist = std::abs(taus[i] - root);
    if (dist < best_dist) {
      best_dist = dist;
      rep.nearest_order = orders[i];
    }
  }

  // Slope jumps on the uniform sub-grid only.
  std::vector<std::pair<double, double>> uni;
  for (int i = 0; i < steps; ++i) {
    const double t = tau_lo + (tau_hi - tau_lo) * i / (steps - 1.0);
    auto it = std::lower_bound(taus.begin(), taus.end(), t - 1e-15);
    const size_t idx = static_cast<size_t>(it - taus.begin());
    if (idx < taus.size() && !std::isnan(entropies[idx]))
      uni.emplace_back(taus[idx], entropies[idx]);
  }
  for (size_t i = 1; i + 1 < uni.size(); ++i) {
    const double s1 = (uni[i].second - uni[i - 1].second) /
                      (uni[i].first - uni[i - 1].first);
    const double s2 = (uni[i + 1].second - uni[i].second) /
                      (uni[i + 1].first - uni[i].first);
    rep.max_slope_jump = std::max(rep.max_slope_jump, std::abs(s2 - s1));
  }

  rep.continuous = rep.nearest_order < 10.0 * opt.order_tol &&
                   rep.max_slope_jump < opt.slope_jump_tol;
  return rep;
}

std::pair<MultipodalGraphon, MultipodalGraphon> find_nonuniqueness_pair(
    const ConstraintPoint& pt, const SolveConfig& cfg) {
  OptimizationResult g0 = extremal_tau(pt.edge, ExtremalDirection::Min, cfg);
  if (g0.status == SolveStatus::Infeasible)
    throw NotInterior("could not establish the minimal triangle density");
  return nonuniqueness_pair(pt, g0.graphon);
}

}  // namespace graphon
