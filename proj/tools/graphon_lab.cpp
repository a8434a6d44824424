#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "graphon/diagram.hpp"
#include "graphon/io.hpp"
#include "graphon/util.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitNoConvergence = 3;

struct Range {
  double lo = 0.0, hi = 0.0;
};

Range parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw CLI::ValidationError("range", "expected lo:hi, got " + text);
  Range r;
  r.lo = std::stod(text.substr(0, colon));
  r.hi = std::stod(text.substr(colon + 1));
  return r;
}

std::ostream& open_out(std::ofstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw graphon::GraphonError("cannot write " + path);
  return file;
}

graphon::LowerBoundary boundary_for(const std::string& cache_path,
                                    double eps_hi,
                                    const graphon::SolveConfig& cfg) {
  if (!cache_path.empty()) {
    std::ifstream in(cache_path);
    if (in) return graphon::read_boundary_csv(in);
  }
  graphon::SolveConfig quick = cfg;
  quick.samples = 0;
  graphon::LowerBoundary lb = graphon::compute_lower_boundary(
      0.5, std::max(0.86, eps_hi + 0.02), 37, quick);
  if (!cache_path.empty()) {
    std::ofstream out(cache_path);
    if (out) graphon::write_boundary_csv(out, lb, graphon::metadata_line(quick));
  }
  return lb;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edge/triangle constrained-entropy graphon laboratory"};
  app.require_subcommand(1);

  graphon::SolveConfig cfg;
  int threads = 0;
  app.add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
  app.add_option("--threads", threads,
                 "worker threads (0: GRAPHON_LAB_THREADS or hardware)");
  app.add_option("--max-podes", cfg.max_podes, "pode-count cap")
      ->capture_default_str();
  app.add_option("--samples", cfg.samples, "sampling-stage budget")
      ->capture_default_str();
  app.add_option("--window", cfg.window, "sampling acceptance window")
      ->capture_default_str();
  app.add_option("--refine-tol", cfg.refine_tol, "KKT/constraint tolerance")
      ->capture_default_str();

  // solve
  auto* cmd_solve = app.add_subcommand("solve", "maximize entropy at (eps,tau)");
  double s_eps = 0.5, s_tau = 0.125;
  std::string s_family, s_out;
  int s_m = 0;
  cmd_solve->add_option("--eps", s_eps, "edge density")->required();
  cmd_solve->add_option("--tau", s_tau, "triangle density")->required();
  cmd_solve->add_option("--family", s_family, "restrict to family A|B|C|F");
  cmd_solve->add_option("--m", s_m, "family parameter m");
  cmd_solve->add_option("--out,-o", s_out, "output path (default stdout)");

  // scan
  auto* cmd_scan = app.add_subcommand("scan", "line or grid scan");
  bool scan_line_mode = false, scan_grid_mode = false;
  double scan_eps = 0.735;
  std::string scan_tau = "0.3504:0.3971", scan_eps_range, scan_out,
              scan_transitions_out, scan_svg_out, scan_families,
              scan_boundary_cache;
  int scan_steps = 100, scan_nx = 40, scan_ny = 40;
  double slope_jump_tol = 0.05;
  cmd_scan->add_flag("--line", scan_line_mode, "vertical line scan");
  cmd_scan->add_flag("--grid", scan_grid_mode, "grid scan");
  cmd_scan->add_option("--eps", scan_eps, "edge density (line)");
  cmd_scan->add_option("--eps-range", scan_eps_range, "lo:hi (grid)");
  cmd_scan->add_option("--tau", scan_tau, "tau range lo:hi");
  cmd_scan->add_option("--steps", scan_steps, "line steps")
      ->capture_default_str();
  cmd_scan->add_option("--res", scan_nx, "grid columns")->capture_default_str();
  cmd_scan->add_option("--res-tau", scan_ny, "grid rows")
      ->capture_default_str();
  cmd_scan->add_option("--families", scan_families,
                       "comma list like B1,B2,A3,C2 to restrict charts");
  cmd_scan->add_option("--slope-jump-tol", slope_jump_tol,
                       "transition slope threshold")
      ->capture_default_str();
  cmd_scan->add_option("--out,-o", scan_out, "scan CSV path");
  cmd_scan->add_option("--transitions-out", scan_transitions_out,
                       "transitions CSV path");
  cmd_scan->add_option("--svg-out", scan_svg_out, "grid SVG path");
  cmd_scan->add_option("--boundary-cache", scan_boundary_cache,
                       "tau_low cache CSV (grid)");

  // stability
  auto* cmd_stab = app.add_subcommand("stability", "det H(S) = 0 boundary");
  int stab_n = 3, stab_cols = 60, stab_samples = 200;
  std::string stab_eps = "0.6:0.8", stab_out;
  cmd_stab->add_option("--n", stab_n, "A(n,0) index")->required();
  cmd_stab->add_option("--eps", stab_eps, "eps range lo:hi")
      ->capture_default_str();
  cmd_stab->add_option("--columns", stab_cols, "eps resolution")
      ->capture_default_str();
  cmd_stab->add_option("--tau-samples", stab_samples, "tau scan resolution")
      ->capture_default_str();
  cmd_stab->add_option("--out,-o", stab_out, "output CSV path");

  // classify
  auto* cmd_classify = app.add_subcommand("classify", "label a graphon JSON");
  std::string cls_path;
  double cls_eps = -1, cls_tau = -1;
  cmd_classify->add_option("file", cls_path, "graphon JSON path")->required();
  cmd_classify->add_option("--eps", cls_eps, "context edge density");
  cmd_classify->add_option("--tau", cls_tau, "context triangle density");

  // sample
  auto* cmd_sample = app.add_subcommand("sample", "sample a graph, edge list");
  std::string smp_path, smp_out;
  int smp_nodes = 100;
  std::uint64_t smp_seed = 1;
  cmd_sample->add_option("file", smp_path, "graphon JSON path")->required();
  cmd_sample->add_option("--nodes", smp_nodes, "node count")->required();
  cmd_sample->add_option("--sample-seed", smp_seed, "sampling seed")
      ->capture_default_str();
  cmd_sample->add_option("--out,-o", smp_out, "output path");

  // boundary
  auto* cmd_boundary = app.add_subcommand("boundary", "tau_low cache");
  std::string bnd_eps = "0.5:0.85", bnd_out;
  int bnd_mesh = 36;
  cmd_boundary->add_option("--eps", bnd_eps, "eps range lo:hi")
      ->capture_default_str();
  cmd_boundary->add_option("--mesh", bnd_mesh, "mesh points")
      ->capture_default_str();
  cmd_boundary->add_option("--out,-o", bnd_out, "output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (cmd_solve->parsed()) {
      graphon::ConstraintPoint pt{s_eps, s_tau};
      graphon::OptimizationResult result;
      if (!s_family.empty()) {
        graphon::Family fam;
        switch (std::toupper(s_family[0])) {
          case 'A': fam = graphon::Family::A; break;
          case 'B': fam = graphon::Family::B; break;
          case 'C': fam = graphon::Family::C; break;
          case 'F': fam = graphon::Family::F; break;
          default: throw CLI::ValidationError("--family", "expected A|B|C|F");
        }
        const int m = s_m > 0 ? s_m : 1;
        try {
          result = graphon::solve_in_family(fam, m, pt, cfg);
        } catch (const graphon::FamilyInfeasible& e) {
          std::cerr << "infeasible: " << e.what() << "\n";
          return kExitInfeasible;
        }
      } else {
        result = graphon::solve(pt, cfg);
      }
      if (result.status == graphon::SolveStatus::Infeasible) {
        std::cerr << "infeasible: no admissible graphon at (" << s_eps << ","
                  << s_tau << ")\n";
        return kExitInfeasible;
      }
      std::ostringstream meta;
      meta << "{\"seed\":" << cfg.seed << ",\"max_podes\":" << cfg.max_podes
           << ",\"samples\":" << cfg.samples << ",\"window\":" << cfg.window
           << ",\"refine_tol\":" << cfg.refine_tol << ",\"eps\":" << s_eps
           << ",\"tau\":" << s_tau << "}";
      std::ofstream file;
      open_out(file, s_out) << graphon::result_to_json(result, meta.str())
                            << "\n";
      return result.status == graphon::SolveStatus::Converged
                 ? kExitOk
                 : kExitNoConvergence;
    }

    if (cmd_scan->parsed()) {
      graphon::ScanOptions opt;
      opt.threads = threads;
      if (!scan_families.empty()) {
        std::stringstream ss(scan_families);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
          if (tok.size() < 2) throw CLI::ValidationError("--families", tok);
          graphon::Family fam;
          switch (std::toupper(tok[0])) {
            case 'A': fam = graphon::Family::A; break;
            case 'B': fam = graphon::Family::B; break;
            case 'C': fam = graphon::Family::C; break;
            case 'F': fam = graphon::Family::F; break;
            default: throw CLI::ValidationError("--families", tok);
          }
          opt.families.emplace_back(fam, std::stoi(tok.substr(1)));
        }
      }
      const Range tr = parse_range(scan_tau);
      if (scan_line_mode == scan_grid_mode)
        throw CLI::ValidationError("scan", "pass exactly one of --line/--grid");
      if (scan_line_mode) {
        auto records =
            graphon::scan_line(scan_eps, tr.lo, tr.hi, scan_steps, cfg, opt);
        std::ostringstream extra;
        extra << "eps=" << graphon::fmt15(scan_eps) << " steps=" << scan_steps;
        std::ofstream file;
        graphon::write_scan_csv(open_out(file, scan_out), records,
                                graphon::metadata_line(cfg, extra.str()));
        if (!scan_transitions_out.empty()) {
          auto events = graphon::detect_transitions(records, slope_jump_tol);
          std::ofstream tf;
          graphon::write_transitions_csv(
              open_out(tf, scan_transitions_out), events,
              graphon::metadata_line(cfg, extra.str()));
        }
      } else {
        const Range er = parse_range(scan_eps_range.empty() ? "0.55:0.75"
                                                            : scan_eps_range);
        graphon::LowerBoundary lb = boundary_for(scan_boundary_cache, er.hi, cfg);
        auto grid = graphon::scan_grid(er.lo, er.hi, tr.lo, tr.hi, scan_nx,
                                       scan_ny, cfg, lb, opt);
        std::ofstream file;
        graphon::write_scan_csv(open_out(file, scan_out), grid.records,
                                graphon::metadata_line(cfg));
        if (!scan_svg_out.empty()) {
          std::ofstream svg(scan_svg_out);
          svg << graphon::grid_to_svg(grid);
        }
      }
      return kExitOk;
    }

    if (cmd_stab->parsed()) {
      const Range er = parse_range(stab_eps);
      auto curve = graphon::stability_boundary(stab_n, er.lo, er.hi, stab_cols,
                                               stab_samples);
      std::ostringstream extra;
      extra << "n=" << stab_n;
      std::ofstream file;
      graphon::write_stability_csv(open_out(file, stab_out), curve,
                                   graphon::metadata_line(cfg, extra.str()));
      return kExitOk;
    }

    if (cmd_classify->parsed()) {
      graphon::MultipodalGraphon g = graphon::load_graphon(cls_path);
      std::optional<graphon::ConstraintPoint> context;
      if (cls_eps >= 0 && cls_tau >= 0)
        context = graphon::ConstraintPoint{cls_eps, cls_tau};
      auto label = graphon::classify(graphon::canonicalize(g, cfg.merge_tol),
                                     cfg.classify_tol, context);
      std::cout << label.to_string();
      if (label.ambiguous_with) {
        const auto& [fam, mk] = *label.ambiguous_with;
        std::cout << " ambiguous_with " << graphon::family_name(fam) << "("
                  << mk.first << "," << mk.second << ")";
      }
      std::cout << "\n";
      return kExitOk;
    }

    if (cmd_sample->parsed()) {
      graphon::MultipodalGraphon g = graphon::load_graphon(smp_path);
      auto graph = graphon::sample_graph(g, smp_nodes, smp_seed);
      std::ofstream file;
      std::ostream& os = open_out(file, smp_out);
      os << "# seed=" << smp_seed << " nodes=" << smp_nodes << "\n";
      for (auto [u, v] : graph.edge_list()) os << u << " " << v << "\n";
      return kExitOk;
    }

    if (cmd_boundary->parsed()) {
      const Range er = parse_range(bnd_eps);
      graphon::LowerBoundary lb =
          graphon::compute_lower_boundary(er.lo, er.hi, bnd_mesh, cfg);
      std::ofstream file;
      graphon::write_boundary_csv(open_out(file, bnd_out), lb,
                                  graphon::metadata_line(cfg));
      return kExitOk;
    }
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const graphon::GraphonError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
