#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "graphon/core.hpp"

namespace graphon {

struct PatternTooLarge : GraphonError {
  using GraphonError::GraphonError;
};

/// Simple graph H used as a density pattern, vertices labeled 0..k-1.
struct SubgraphPattern {
  int vertex_count = 0;
  std::vector<std::pair<int, int>> edges;

  static SubgraphPattern edge() { return {2, {{0, 1}}}; }
  static SubgraphPattern triangle() { return {3, {{0, 1}, {1, 2}, {0, 2}}}; }
  static SubgraphPattern cycle(int k);

  /// Parses "k; u-v,u-v,..." (e.g. "3; 0-1,1-2,0-2").
  static SubgraphPattern parse(const std::string& text);
  std::string to_string() const;

  void check() const;  // throws InvalidGraphon on loops/dups/bad labels
};

/// S0(u) = -u ln u - (1-u) ln(1-u), with S0(0) = S0(1) = 0.
double binary_entropy(double u);
/// S0'(u) = ln((1-u)/u); returns +/-inf at the endpoints.
double binary_entropy_prime(double u);
/// S0''(u) = -1/(u(1-u)).
double binary_entropy_second(double u);

double edge_density(const MultipodalGraphon& g);
double triangle_density(const MultipodalGraphon& g);
double entropy(const MultipodalGraphon& g);

/// t_H(g) summed over all pode assignments; H must have at most 8 vertices.
double subgraph_density(const MultipodalGraphon& g, const SubgraphPattern& h);

/// Flattened free-parameter layout for an n-podal graphon: the upper
/// triangle of probs (row-major, i<=j) followed by sizes c_1..c_{n-1};
/// c_n is eliminated through sum(c)=1.
struct ParamLayout {
  int n = 0;

  explicit ParamLayout(int podes) : n(podes) {}
  int p_count() const { return n * (n + 1) / 2; }
  int c_count() const { return n - 1; }
  int dim() const { return p_count() + c_count(); }
  int p_index(int i, int j) const {  // i <= j
    return i * n - i * (i - 1) / 2 + (j - i);
  }
  int c_index(int i) const { return p_count() + i; }

  Eigen::VectorXd pack(const MultipodalGraphon& g) const;
  MultipodalGraphon unpack(const Eigen::VectorXd& x) const;
};

/// Exact analytic gradients of (edge, triangle, entropy) in the ParamLayout
/// coordinates. Entries of d_entropy are +/-inf where p_ij is 0 or 1.
struct DensityGradients {
  Eigen::VectorXd d_edge, d_triangle, d_entropy;
};

DensityGradients density_gradients(const MultipodalGraphon& g);

/// Exact analytic Hessians in the same coordinates (entropy entries are
/// +/-inf on boundary blocks).
struct DensityHessians {
  Eigen::MatrixXd h_edge, h_triangle, h_entropy;
};

DensityHessians density_hessians(const MultipodalGraphon& g);

/// Graph sampled from a graphon; flat adjacency matrix.
struct SampledGraph {
  int node_count = 0;
  std::vector<std::uint8_t> adj;

  bool has_edge(int u, int v) const {
    return adj[static_cast<size_t>(u) * node_count + v] != 0;
  }
  std::vector<std::pair<int, int>> edge_list() const;
  long long edge_count() const;
};

/// W-random graph: node positions uniform, edges independent with the block
/// probability. Deterministic for fixed (g, node_count, seed).
SampledGraph sample_graph(const MultipodalGraphon& g, int node_count,
                          std::uint64_t seed);

/// Injective homomorphism density of H (at most 5 vertices) over tuples of
/// distinct nodes, normalized by the falling factorial.
double empirical_density(const SampledGraph& graph, const SubgraphPattern& h);

}  // namespace graphon
