#include "graphon/io.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "graphon/util.hpp"

namespace graphon {

using nlohmann::json;

std::string graphon_to_json(const MultipodalGraphon& g) {
  json j;
  j["sizes"] = g.sizes;
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < g.pode_count(); ++i) {
    std::vector<double> row;
    for (int k = 0; k < g.pode_count(); ++k) row.push_back(g.probs(i, k));
    rows.push_back(std::move(row));
  }
  j["probs"] = rows;
  return j.dump();
}

MultipodalGraphon graphon_from_json(const std::string& text) {
  json j = json::parse(text);
  MultipodalGraphon g;
  g.sizes = j.at("sizes").get<std::vector<double>>();
  const auto rows = j.at("probs").get<std::vector<std::vector<double>>>();
  const int n = static_cast<int>(g.sizes.size());
  if (static_cast<int>(rows.size()) != n)
    throw InvalidGraphon("probs row count does not match sizes");
  g.probs.resize(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw InvalidGraphon("probs is not square");
    for (int k = 0; k < n; ++k) g.probs(i, k) = rows[i][k];
  }
  require_valid(g);
  return g;
}

MultipodalGraphon load_graphon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GraphonError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return graphon_from_json(ss.str());
}

void save_graphon(const MultipodalGraphon& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw GraphonError("cannot write " + path);
  out << graphon_to_json(g) << "\n";
}

std::string result_to_json(const OptimizationResult& r,
                           const std::string& meta) {
  json j;
  j["graphon"] = json::parse(graphon_to_json(r.graphon));
  j["entropy"] = r.entropy;
  j["alpha"] = r.alpha;
  j["beta"] = r.beta;
  j["label"] = r.label.to_string();
  if (r.label.ambiguous_with) {
    const auto& [fam, mk] = *r.label.ambiguous_with;
    j["ambiguous_with"] = family_name(fam) + "(" + std::to_string(mk.first) +
                          "," + std::to_string(mk.second) + ")";
  }
  j["status"] = to_string(r.status);
  j["residuals"] = {{"kkt", r.kkt_residual},
                    {"el", r.el_residual},
                    {"constraint", r.constraint_violation}};
  j["el_boundary"] = r.el_boundary;
  if (!meta.empty()) j["meta"] = json::parse(meta);
  return j.dump(2);
}

std::string metadata_line(const SolveConfig& cfg, const std::string& extra) {
  std::ostringstream os;
  os << "# seed=" << cfg.seed << " config=max_podes:" << cfg.max_podes
     << ",window:" << fmt15(cfg.window) << ",samples:" << cfg.samples
     << ",refine_tol:" << fmt15(cfg.refine_tol);
  if (!extra.empty()) os << " " << extra;
  return os.str();
}

void write_scan_csv(std::ostream& os, const std::vector<ScanRecord>& records,
                    const std::string& meta) {
  if (!meta.empty()) os << meta << "\n";
  os << "epsilon,tau,tau_rescaled,entropy,beta,label,status,params\n";
  for (const auto& rec : records) {
    os << fmt15(rec.point.edge) << "," << fmt15(rec.point.triangle) << ","
       << fmt15(rec.tau_rescaled) << "," << fmt15(rec.entropy) << ","
       << fmt15(rec.beta) << "," << rec.label.to_string() << ","
       << to_string(rec.status);
    const auto& g = rec.optimizer;
    os << "," << g.pode_count();
    for (double c : g.sizes) os << "," << fmt15(c);
    for (int i = 0; i < g.pode_count(); ++i)
      for (int j = i; j < g.pode_count(); ++j) os << "," << fmt15(g.probs(i, j));
    os << "\n";
  }
}

void write_transitions_csv(std::ostream& os,
                           const std::vector<TransitionEvent>& events,
                           const std::string& meta) {
  if (!meta.empty()) os << meta << "\n";
  os << "coord_low,coord_high,kind,slope_before,slope_after,label_before,"
        "label_after\n";
  for (const auto& ev : events) {
    os << fmt15(ev.low) << "," << fmt15(ev.high) << "," << to_string(ev.kind)
       << "," << fmt15(ev.slope_before) << "," << fmt15(ev.slope_after) << ","
       << ev.label_before.to_string() << "," << ev.label_after.to_string()
       << "\n";
  }
}

void write_stability_csv(std::ostream& os, const BoundaryCurve& curve,
                         const std::string& meta) {
  if (!meta.empty()) os << meta << "\n";
  os << "epsilon,tau,det,ev1,ev2,ev3\n";
  for (const auto& p : curve.points) {
    os << fmt15(p.epsilon) << "," << fmt15(p.tau) << ","
       << fmt15(p.hessian.determinant) << "," << fmt15(p.hessian.eigenvalues[0])
       << "," << fmt15(p.hessian.eigenvalues[1]) << ","
       << fmt15(p.hessian.eigenvalues[2]) << "\n";
  }
}

void write_boundary_csv(std::ostream& os, const LowerBoundary& lb,
                        const std::string& meta) {
  if (!meta.empty()) os << meta << "\n";
  os << "epsilon,tau_low\n";
  for (const auto& [e, t] : lb.knots)
    os << fmt15(e) << "," << fmt15(t) << "\n";
}

LowerBoundary read_boundary_csv(std::istream& is) {
  LowerBoundary lb;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("epsilon", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    lb.knots.emplace_back(std::stod(line.substr(0, comma)),
                          std::stod(line.substr(comma + 1)));
  }
  std::sort(lb.knots.begin(), lb.knots.end());
  return lb;
}

namespace {

std::string label_color(const PhaseLabel& label) {
  switch (label.family) {
    case Family::A:
      switch (label.m % 4) {
        case 0: return "#1b6f8c";
        case 1: return "#2470b0";
        case 2: return "#3b89c9";
        default: return "#62a6d9";
      }
    case Family::B:
      switch (label.m % 4) {
        case 1: return "#c23728";
        case 2: return "#e1632f";
        default: return "#ef8a47";
      }
    case Family::C: return "#2e933c";
    case Family::F: return "#7d4ea3";
    default: return "#9aa0a6";
  }
}

}  // namespace

std::string grid_to_svg(const GridScan& grid,
                        const std::vector<BoundaryCurve>& overlays) {
  const int nx = static_cast<int>(grid.eps_values.size());
  const int ny = static_cast<int>(grid.tau_values.size());
  const double W = 720, H = 540, pad = 40;
  const double e0 = grid.eps_values.front(), e1 = grid.eps_values.back();
  const double t0 = grid.tau_values.front(), t1 = grid.tau_values.back();
  auto xm = [&](double e) {
    return pad + (e - e0) / std::max(1e-12, e1 - e0) * (W - 2 * pad);
  };
  auto ym = [&](double t) {
    return H - pad - (t - t0) / std::max(1e-12, t1 - t0) * (H - 2 * pad);
  };

  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='"
     << H << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  const double cw = (W - 2 * pad) / std::max(1, nx - 1);
  const double ch = (H - 2 * pad) / std::max(1, ny - 1);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      const ScanRecord& rec = grid.records[static_cast<size_t>(i) * ny + j];
      if (rec.status == SolveStatus::Infeasible) continue;
      os << "<rect x='" << xm(rec.point.edge) - cw / 2 << "' y='"
         << ym(rec.point.triangle) - ch / 2 << "' width='" << cw
         << "' height='" << ch << "' fill='" << label_color(rec.label)
         << "'/>\n";
    }
  for (const auto& curve : overlays) {
    os << "<polyline fill='none' stroke='black' stroke-width='1.5' points='";
    for (const auto& p : curve.points)
      os << xm(p.epsilon) << "," << ym(p.tau) << " ";
    os << "'/>\n";
  }
  os << "<text x='" << W / 2 << "' y='" << H - 8
     << "' font-size='13' text-anchor='middle'>edge density</text>\n";
  os << "<text x='14' y='" << H / 2
     << "' font-size='13' transform='rotate(-90 14 " << H / 2
     << ")' text-anchor='middle'>triangle density</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace graphon
