#include "graphon/densities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace graphon {

SubgraphPattern SubgraphPattern::cycle(int k) {
  SubgraphPattern p;
  p.vertex_count = k;
  for (int i = 0; i < k; ++i) p.edges.emplace_back(i, (i + 1) % k);
  return p;
}

SubgraphPattern SubgraphPattern::parse(const std::string& text) {
  const auto semi = text.find(';');
  if (semi == std::string::npos)
    throw InvalidGraphon("pattern missing ';': " + text);
  SubgraphPattern p;
  p.vertex_count = std::stoi(text.substr(0, semi));
  std::string rest = text.substr(semi + 1);
  std::stringstream ss(rest);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto dash = tok.find('-');
    if (dash == std::string::npos) {
      // allow trailing whitespace-only tokens
      if (tok.find_first_not_of(" \t") == std::string::npos) continue;
      throw InvalidGraphon("bad edge token: " + tok);
    }
    p.edges.emplace_back(std::stoi(tok.substr(0, dash)),
                         std::stoi(tok.substr(dash + 1)));
  }
  p.check();
  return p;
}

std::string SubgraphPattern::to_string() const {
  std::string s = std::to_string(vertex_count) + ";";
  for (size_t i = 0; i < edges.size(); ++i) {
    s += (i ? "," : " ");
    s += std::to_string(edges[i].first) + "-" + std::to_string(edges[i].second);
  }
  return s;
}

void SubgraphPattern::check() const {
  if (vertex_count < 1) throw InvalidGraphon("pattern needs >= 1 vertex");
  std::vector<std::pair<int, int>> seen;
  for (auto [u, v] : edges) {
    if (u == v) throw InvalidGraphon("pattern has a loop");
    if (u < 0 || v < 0 || u >= vertex_count || v >= vertex_count)
      throw InvalidGraphon("pattern edge label out of range");
    auto key = std::minmax(u, v);
    std::pair<int, int> e{key.first, key.second};
    if (std::find(seen.begin(), seen.end(), e) != seen.end())
      throw InvalidGraphon("pattern has a duplicate edge");
    seen.push_back(e);
  }
}

double binary_entropy(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return -u * std::log(u) - (1.0 - u) * std::log(1.0 - u);
}

double binary_entropy_prime(double u) {
  if (u <= 0.0) return std::numeric_limits<double>::infinity();
  if (u >= 1.0) return -std::numeric_limits<double>::infinity();
  return std::log((1.0 - u) / u);
}

double binary_entropy_second(double u) {
  return -1.0 / (u * (1.0 - u));
}

double edge_density(const MultipodalGraphon& g) {
  require_valid(g);
  const int n = g.pode_count();
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      acc += g.sizes[i] * g.sizes[j] * g.probs(i, j);
  return acc;
}

double triangle_density(const MultipodalGraphon& g) {
  require_valid(g);
  const int n = g.pode_count();
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double cc = g.sizes[i] * g.sizes[j] * g.probs(i, j);
      if (cc == 0.0) continue;
      double inner = 0.0;
      for (int k = 0; k < n; ++k)
        inner += g.sizes[k] * g.probs(j, k) * g.probs(k, i);
      acc += cc * inner;
    }
  return acc;
}

double entropy(const MultipodalGraphon& g) {
  require_valid(g);
  const int n = g.pode_count();
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      acc += g.sizes[i] * g.sizes[j] * binary_entropy(g.probs(i, j));
  return acc;
}

double subgraph_density(const MultipodalGraphon& g, const SubgraphPattern& h) {
  require_valid(g);
  h.check();
  const int k = h.vertex_count;
  if (k > 8) throw PatternTooLarge("pattern has more than 8 vertices");
  const int n = g.pode_count();

  std::vector<int> phi(k, 0);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (int v = 0; v < k && w != 0.0; ++v) w *= g.sizes[phi[v]];
    if (w != 0.0)
      for (auto [u, v] : h.edges) {
        w *= g.probs(phi[u], phi[v]);
        if (w == 0.0) break;
      }
    total += w;
    int pos = k - 1;
    while (pos >= 0 && phi[pos] == n - 1) phi[pos--] = 0;
    if (pos < 0) break;
    ++phi[pos];
  }
  return total;
}

Eigen::VectorXd ParamLayout::pack(const MultipodalGraphon& g) const {
  Eigen::VectorXd x(dim());
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) x[p_index(i, j)] = g.probs(i, j);
  for (int i = 0; i + 1 < n; ++i) x[c_index(i)] = g.sizes[i];
  return x;
}

MultipodalGraphon ParamLayout::unpack(const Eigen::VectorXd& x) const {
  std::vector<double> sizes(n);
  double sum = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    sizes[i] = x[c_index(i)];
    sum += sizes[i];
  }
  sizes[n - 1] = 1.0 - sum;
  Eigen::MatrixXd probs(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) probs(i, j) = probs(j, i) = x[p_index(i, j)];
  return {std::move(sizes), std::move(probs)};
}

namespace {

// Raw partials with respect to all of (p_ij, c_1..c_n); the public functions
// below fold in the chain rule from c_n = 1 - sum_{i<n} c_i.
struct RawDerivatives {
  int n;
  Eigen::MatrixXd T;       // T_ij = sum_k c_k p_ik p_jk
  Eigen::VectorXd u;       // u_a  = sum_{v,w} c_v c_w p_av p_vw p_wa
  Eigen::VectorXd Pc;      // (P c)_a
  Eigen::VectorXd Qc;      // (S0(P) c)_a
  Eigen::MatrixXd S0P;     // S0(p_ij)
};

RawDerivatives raw_derivatives(const MultipodalGraphon& g) {
  const int n = g.pode_count();
  RawDerivatives r;
  r.n = n;
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) c[i] = g.sizes[i];
  const Eigen::MatrixXd& P = g.probs;
  r.T = P * c.asDiagonal() * P;
  r.Pc = P * c;
  r.S0P.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r.S0P(i, j) = binary_entropy(P(i, j));
  r.Qc = r.S0P * c;
  r.u.resize(n);
  for (int a = 0; a < n; ++a) {
    double acc = 0.0;
    for (int v = 0; v < n; ++v) acc += c[v] * P(a, v) * r.T(v, a);
    r.u[a] = acc;
  }
  return r;
}

}  // namespace

DensityGradients density_gradients(const MultipodalGraphon& g) {
  require_valid(g);
  const int n = g.pode_count();
  ParamLayout lay(n);
  RawDerivatives r = raw_derivatives(g);
  const auto& c = g.sizes;

  DensityGradients out;
  out.d_edge.setZero(lay.dim());
  out.d_triangle.setZero(lay.dim());
  out.d_entropy.setZero(lay.dim());

  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double mult = (i == j) ? 1.0 : 2.0;
      const int idx = lay.p_index(i, j);
      out.d_edge[idx] = mult * c[i] * c[j];
      out.d_triangle[idx] = 3.0 * mult * c[i] * c[j] * r.T(i, j);
      out.d_entropy[idx] =
          mult * c[i] * c[j] * binary_entropy_prime(g.probs(i, j));
    }

  for (int m = 0; m + 1 < n; ++m) {
    const int idx = lay.c_index(m);
    out.d_edge[idx] = 2.0 * (r.Pc[m] - r.Pc[n - 1]);
    out.d_triangle[idx] = 3.0 * (r.u[m] - r.u[n - 1]);
    out.d_entropy[idx] = 2.0 * (r.Qc[m] - r.Qc[n - 1]);
  }
  return out;
}

DensityHessians density_hessians(const MultipodalGraphon& g) {
  require_valid(g);
  const int n = g.pode_count();
  ParamLayout lay(n);
  const int d = lay.dim();
  RawDerivatives r = raw_derivatives(g);
  const auto& c = g.sizes;
  const Eigen::MatrixXd& P = g.probs;

  DensityHessians out;
  out.h_edge.setZero(d, d);
  out.h_triangle.setZero(d, d);
  out.h_entropy.setZero(d, d);

  auto dT = [&](int i, int j, int k, int l) {
    // d T_ij / d x_kl for the symmetric variable x_kl (k <= l)
    double acc = 0.0;
    if (k == l) {
      if (i == k) acc += c[k] * P(j, k);
      if (j == k) acc += c[k] * P(i, k);
    } else {
      if (i == k) acc += c[l] * P(j, l);
      if (i == l) acc += c[k] * P(j, k);
      if (j == k) acc += c[l] * P(i, l);
      if (j == l) acc += c[k] * P(i, k);
    }
    return acc;
  };

  // p-p blocks
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const int a = lay.p_index(i, j);
      const double mult_ij = (i == j) ? 1.0 : 2.0;
      out.h_entropy(a, a) =
          mult_ij * c[i] * c[j] * binary_entropy_second(P(i, j));
      for (int k = 0; k < n; ++k)
        for (int l = k; l < n; ++l) {
          const int b = lay.p_index(k, l);
          if (b < a) continue;
          const double v = 3.0 * mult_ij * c[i] * c[j] * dT(i, j, k, l);
          out.h_triangle(a, b) = v;
          out.h_triangle(b, a) = v;
        }
    }
  // Symmetrize the triangle p-p block: the loop above fills (a,b) from the
  // row-a formula; average with the row-b formula for exact symmetry.
  for (int a = 0; a < lay.p_count(); ++a)
    for (int b = a + 1; b < lay.p_count(); ++b) {
      double v = 0.5 * (out.h_triangle(a, b) + out.h_triangle(b, a));
      out.h_triangle(a, b) = out.h_triangle(b, a) = v;
    }

  // p-c blocks (chain rule for c_n already folded in via Dm c_k = d_km - d_kn)
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const int a = lay.p_index(i, j);
      const double mult = (i == j) ? 1.0 : 2.0;
      for (int m = 0; m + 1 < n; ++m) {
        const int b = lay.c_index(m);
        auto dm = [&](int k) { return (k == m ? 1.0 : 0.0) - (k == n - 1 ? 1.0 : 0.0); };
        const double dcc = dm(i) * c[j] + c[i] * dm(j);
        out.h_edge(a, b) = out.h_edge(b, a) = mult * dcc;
        const double dT_dc = P(i, m) * P(j, m) - P(i, n - 1) * P(j, n - 1);
        const double v =
            3.0 * mult * (dcc * r.T(i, j) + c[i] * c[j] * dT_dc);
        out.h_triangle(a, b) = out.h_triangle(b, a) = v;
        const double ve = mult * dcc * binary_entropy_prime(P(i, j));
        out.h_entropy(a, b) = out.h_entropy(b, a) = ve;
      }
    }

  // c-c blocks
  for (int m = 0; m + 1 < n; ++m)
    for (int l = m; l + 1 < n; ++l) {
      const int a = lay.c_index(m);
      const int b = lay.c_index(l);
      auto corner = [&](const Eigen::MatrixXd& M) {
        return M(m, l) - M(m, n - 1) - M(l, n - 1) + M(n - 1, n - 1);
      };
      out.h_edge(a, b) = out.h_edge(b, a) = 2.0 * corner(P);
      out.h_entropy(a, b) = out.h_entropy(b, a) = 2.0 * corner(r.S0P);
      // d u_a / d c_b (raw) = 2 p_ab T_ab; fold chain rule on both indices
      auto du = [&](int aa, int bb) { return 2.0 * P(aa, bb) * r.T(aa, bb); };
      const double v = 3.0 * (du(m, l) - du(m, n - 1) - du(n - 1, l) +
                              du(n - 1, n - 1));
      out.h_triangle(a, b) = out.h_triangle(b, a) = v;
    }

  return out;
}

std::vector<std::pair<int, int>> SampledGraph::edge_list() const {
  std::vector<std::pair<int, int>> out;
  for (int u = 0; u < node_count; ++u)
    for (int v = u + 1; v < node_count; ++v)
      if (has_edge(u, v)) out.emplace_back(u, v);
  return out;
}

long long SampledGraph::edge_count() const {
  long long c = 0;
  for (int u = 0; u < node_count; ++u)
    for (int v = u + 1; v < node_count; ++v)
      if (has_edge(u, v)) ++c;
  return c;
}

SampledGraph sample_graph(const MultipodalGraphon& g, int node_count,
                          std::uint64_t seed) {
  require_valid(g);
  if (node_count < 2) throw InvalidGraphon("need at least 2 nodes");
  const int n = g.pode_count();
  std::vector<double> cum(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += g.sizes[i];
    cum[i] = acc;
  }
  cum[n - 1] = 1.0;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<int> pode(node_count);
  for (int u = 0; u < node_count; ++u) {
    const double x = unif(rng);
    pode[u] = static_cast<int>(
        std::lower_bound(cum.begin(), cum.end(), x) - cum.begin());
    if (pode[u] >= n) pode[u] = n - 1;
  }

  SampledGraph out;
  out.node_count = node_count;
  out.adj.assign(static_cast<size_t>(node_count) * node_count, 0);
  for (int u = 0; u < node_count; ++u)
    for (int v = u + 1; v < node_count; ++v) {
      const double p = g.probs(pode[u], pode[v]);
      if (unif(rng) < p) {
        out.adj[static_cast<size_t>(u) * node_count + v] = 1;
        out.adj[static_cast<size_t>(v) * node_count + u] = 1;
      }
    }
  return out;
}

namespace {

// Counts injective homomorphisms by backtracking; edges to already-placed
// vertices prune the search.
void count_injective(const SampledGraph& graph, const SubgraphPattern& h,
                     std::vector<int>& assign, std::vector<bool>& used,
                     int depth, long long& count) {
  const int k = h.vertex_count;
  if (depth == k) {
    ++count;
    return;
  }
  for (int node = 0; node < graph.node_count; ++node) {
    if (used[node]) continue;
    bool ok = true;
    for (auto [u, v] : h.edges) {
      int other = -1;
      if (u == depth && v < depth) other = assign[v];
      else if (v == depth && u < depth) other = assign[u];
      if (other >= 0 && !graph.has_edge(node, other)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    assign[depth] = node;
    used[node] = true;
    count_injective(graph, h, assign, used, depth + 1, count);
    used[node] = false;
  }
}

}  // namespace

double empirical_density(const SampledGraph& graph, const SubgraphPattern& h) {
  h.check();
  const int k = h.vertex_count;
  if (k > 5) throw PatternTooLarge("empirical density limited to 5 vertices");
  if (graph.node_count < k) return 0.0;

  std::vector<int> assign(k, -1);
  std::vector<bool> used(graph.node_count, false);
  long long count = 0;
  count_injective(graph, h, assign, used, 0, count);

  double denom = 1.0;
  for (int i = 0; i < k; ++i) denom *= graph.node_count - i;
  return static_cast<double>(count) / denom;
}

}  // namespace graphon
