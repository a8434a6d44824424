#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "graphon/core.hpp"
#include "graphon/diagram.hpp"
#include "graphon/families.hpp"
#include "graphon/optimize.hpp"

namespace graphon {

/// {"sizes":[...],"probs":[[...],...]}; numbers carry full precision.
std::string graphon_to_json(const MultipodalGraphon& g);
MultipodalGraphon graphon_from_json(const std::string& text);  // validates
MultipodalGraphon load_graphon(const std::string& path);
void save_graphon(const MultipodalGraphon& g, const std::string& path);

std::string result_to_json(const OptimizationResult& r,
                           const std::string& meta = "");

/// One "# key=value ..." metadata line embedded at the top of every output.
std::string metadata_line(const SolveConfig& cfg,
                          const std::string& extra = "");

void write_scan_csv(std::ostream& os, const std::vector<ScanRecord>& records,
                    const std::string& meta);
void write_transitions_csv(std::ostream& os,
                           const std::vector<TransitionEvent>& events,
                           const std::string& meta);
void write_stability_csv(std::ostream& os, const BoundaryCurve& curve,
                         const std::string& meta);
void write_boundary_csv(std::ostream& os, const LowerBoundary& lb,
                        const std::string& meta);
LowerBoundary read_boundary_csv(std::istream& is);

/// Static SVG of a grid scan colored by label, with optional overlay curves.
std::string grid_to_svg(const GridScan& grid,
                        const std::vector<BoundaryCurve>& overlays = {});

}  // namespace graphon
