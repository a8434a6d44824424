#include "graphon/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace graphon {

Validation validate(const MultipodalGraphon& g, int max_podes) {
  const int n = g.pode_count();
  if (n < 1)
    return {Validation::Code::PodeCount, "graphon has no podes"};
  if (n > max_podes)
    return {Validation::Code::PodeCount,
            "pode count " + std::to_string(n) + " exceeds maximum " +
                std::to_string(max_podes)};

  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!(g.sizes[i] > 0.0))
      return {Validation::Code::SizeSum,
              "pode " + std::to_string(i) + " has non-positive size"};
    sum += g.sizes[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "pode sizes sum to " << sum << ", expected 1";
    return {Validation::Code::SizeSum, os.str()};
  }

  if (g.probs.rows() != n || g.probs.cols() != n)
    return {Validation::Code::Asymmetry, "probability matrix is not n-by-n"};
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (g.probs(i, j) != g.probs(j, i))
        return {Validation::Code::Asymmetry,
                "p(" + std::to_string(i) + "," + std::to_string(j) +
                    ") differs from its transpose"};

  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double p = g.probs(i, j);
      if (!(p >= 0.0 && p <= 1.0) || std::isnan(p))
        return {Validation::Code::Range,
                "p(" + std::to_string(i) + "," + std::to_string(j) +
                    ") outside [0,1]"};
    }

  return {};
}

void require_valid(const MultipodalGraphon& g, int max_podes) {
  Validation v = validate(g, max_podes);
  if (!v.ok()) throw InvalidGraphon(v.detail);
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

// Podes i and j represent the same step value when their mutual probability
// matches both diagonals and their rows agree entrywise (after aligning the
// i/j coordinates).
bool mergeable(const Eigen::MatrixXd& p, int i, int j, double tol) {
  if (std::abs(p(i, j) - p(i, i)) >= tol) return false;
  if (std::abs(p(i, j) - p(j, j)) >= tol) return false;
  const int n = static_cast<int>(p.rows());
  for (int k = 0; k < n; ++k) {
    if (k == i || k == j) continue;
    if (std::abs(p(i, k) - p(j, k)) >= tol) return false;
  }
  return true;
}

// Swapping podes i and j leaves the matrix invariant within tol. Unlike
// mergeable this does not constrain the mutual probability p_ij, so the two
// podes of an A(2,0) graphon are swap-equivalent but not mergeable.
bool swap_equivalent(const Eigen::MatrixXd& p, int i, int j, double tol) {
  if (std::abs(p(i, i) - p(j, j)) > tol) return false;
  const int n = static_cast<int>(p.rows());
  for (int k = 0; k < n; ++k) {
    if (k == i || k == j) continue;
    if (std::abs(p(i, k) - p(j, k)) > tol) return false;
  }
  return true;
}

MultipodalGraphon drop_degenerate(const MultipodalGraphon& g) {
  const int n = g.pode_count();
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (g.sizes[i] >= kDegeneratePodeSize) keep.push_back(i);
  if (static_cast<int>(keep.size()) == n) return g;
  if (keep.empty()) throw InvalidGraphon("all podes degenerate");

  const int m = static_cast<int>(keep.size());
  std::vector<double> sizes(m);
  Eigen::MatrixXd probs(m, m);
  double total = 0.0;
  for (int a = 0; a < m; ++a) total += g.sizes[keep[a]];
  for (int a = 0; a < m; ++a) {
    sizes[a] = g.sizes[keep[a]] / total;
    for (int b = 0; b < m; ++b) probs(a, b) = g.probs(keep[a], keep[b]);
  }
  return {std::move(sizes), std::move(probs)};
}

MultipodalGraphon merge_pass(const MultipodalGraphon& g, double tol,
                             bool* changed) {
  const int n = g.pode_count();
  UnionFind uf(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (uf.find(i) != uf.find(j) && mergeable(g.probs, i, j, tol))
        uf.unite(i, j);

  std::vector<int> root_to_new(n, -1);
  std::vector<std::vector<int>> groups;
  for (int i = 0; i < n; ++i) {
    int r = uf.find(i);
    if (root_to_new[r] < 0) {
      root_to_new[r] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[root_to_new[r]].push_back(i);
  }
  const int m = static_cast<int>(groups.size());
  *changed = (m != n);
  if (!*changed) return g;

  std::vector<double> sizes(m, 0.0);
  for (int a = 0; a < m; ++a)
    for (int i : groups[a]) sizes[a] += g.sizes[i];

  // Size-weighted average over merged blocks keeps densities unchanged.
  Eigen::MatrixXd probs(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      double mass = 0.0, acc = 0.0;
      for (int i : groups[a])
        for (int j : groups[b]) {
          const double w = g.sizes[i] * g.sizes[j];
          mass += w;
          acc += w * g.probs(i, j);
        }
      probs(a, b) = probs(b, a) = acc / mass;
    }
  return {std::move(sizes), std::move(probs)};
}

// Deterministic pode order: primary key (size desc, diagonal), then
// iteratively refined with each pode's multiset of (neighbor rank, prob)
// pairs. Podes still tied after refinement are related by an automorphism,
// so any stable order yields the same matrix.
std::vector<int> canonical_order(const MultipodalGraphon& g) {
  const int n = g.pode_count();
  std::vector<std::vector<double>> key(n);
  for (int i = 0; i < n; ++i) key[i] = {-g.sizes[i], g.probs(i, i)};

  std::vector<int> rank(n, 0);
  for (int round = 0; round <= n; ++round) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return key[a] < key[b]; });
    std::vector<int> new_rank(n);
    int r = 0;
    for (int t = 0; t < n; ++t) {
      if (t > 0 && key[order[t]] != key[order[t - 1]]) ++r;
      new_rank[order[t]] = r;
    }
    if (new_rank == rank && round > 0) break;
    rank = new_rank;
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<double, double>> nb;
      nb.reserve(n - 1);
      for (int j = 0; j < n; ++j)
        if (j != i)
          nb.emplace_back(static_cast<double>(rank[j]), g.probs(i, j));
      std::sort(nb.begin(), nb.end());
      key[i] = {-g.sizes[i], g.probs(i, i), static_cast<double>(rank[i])};
      for (auto& [rj, pj] : nb) {
        key[i].push_back(rj);
        key[i].push_back(pj);
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return rank[a] < rank[b]; });
  return order;
}

MultipodalGraphon permute(const MultipodalGraphon& g,
                          const std::vector<int>& order) {
  const int n = g.pode_count();
  std::vector<double> sizes(n);
  Eigen::MatrixXd probs(n, n);
  for (int a = 0; a < n; ++a) {
    sizes[a] = g.sizes[order[a]];
    for (int b = 0; b < n; ++b) probs(a, b) = g.probs(order[a], order[b]);
  }
  return {std::move(sizes), std::move(probs)};
}

}  // namespace

MultipodalGraphon canonicalize(const MultipodalGraphon& g, double merge_tol) {
  require_valid(g);
  MultipodalGraphon out = drop_degenerate(g);
  bool changed = true;
  while (changed && out.pode_count() > 1)
    out = merge_pass(out, merge_tol, &changed);
  return permute(out, canonical_order(out));
}

std::string family_name(Family f) {
  switch (f) {
    case Family::A: return "A";
    case Family::B: return "B";
    case Family::C: return "C";
    case Family::F: return "F";
    default: return "UNKNOWN";
  }
}

std::string PhaseLabel::to_string() const {
  if (family == Family::Unknown) {
    std::string s = "UNKNOWN{";
    for (size_t i = 0; i < signature.size(); ++i) {
      if (i) s += ";";
      char buf[48];
      std::snprintf(buf, sizeof(buf), "%dx%.6g", signature[i].first,
                    signature[i].second);
      s += buf;
    }
    return s + "}";
  }
  return family_name(family) + "(" + std::to_string(m) + "," +
         std::to_string(k) + ")";
}

PhaseLabel parse_label(const std::string& text) {
  PhaseLabel out;
  if (text.size() >= 6 && (text[1] == '(') && text.back() == ')') {
    switch (text[0]) {
      case 'A': out.family = Family::A; break;
      case 'B': out.family = Family::B; break;
      case 'C': out.family = Family::C; break;
      case 'F': out.family = Family::F; break;
      default: return out;
    }
    const auto comma = text.find(',');
    if (comma == std::string::npos) {
      out.family = Family::Unknown;
      return out;
    }
    out.m = std::stoi(text.substr(2, comma - 2));
    out.k = std::stoi(text.substr(comma + 1, text.size() - comma - 2));
  }
  return out;
}

std::vector<int> equivalence_classes(const MultipodalGraphon& g, double tol) {
  const int n = g.pode_count();
  UnionFind uf(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(g.sizes[i] - g.sizes[j]) <= tol &&
          swap_equivalent(g.probs, i, j, tol))
        uf.unite(i, j);

  // Tolerance chains can join podes whose pairwise test fails; verify every
  // pair and fall back to singletons for groups that do not hold together.
  std::vector<std::vector<int>> groups;
  std::vector<int> root_to_new(n, -1);
  for (int i = 0; i < n; ++i) {
    int r = uf.find(i);
    if (root_to_new[r] < 0) {
      root_to_new[r] = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[root_to_new[r]].push_back(i);
  }

  std::vector<int> cls(n, -1);
  int next = 0;
  for (auto& grp : groups) {
    bool consistent = true;
    for (size_t a = 0; a < grp.size() && consistent; ++a)
      for (size_t b = a + 1; b < grp.size() && consistent; ++b)
        if (std::abs(g.sizes[grp[a]] - g.sizes[grp[b]]) > tol ||
            !swap_equivalent(g.probs, grp[a], grp[b], tol))
          consistent = false;
    if (consistent) {
      for (int i : grp) cls[i] = next;
      ++next;
    } else {
      for (int i : grp) cls[i] = next++;
    }
  }
  return cls;
}

PhaseLabel classify(const MultipodalGraphon& g, double tol,
                    const std::optional<ConstraintPoint>& context) {
  require_valid(g);
  const MultipodalGraphon* gp = &g;
  MultipodalGraphon dropped;
  for (double s : g.sizes)
    if (s < kDegeneratePodeSize) {
      dropped = canonicalize(g);
      gp = &dropped;
      break;
    }
  const MultipodalGraphon& cg = *gp;
  const int n = cg.pode_count();

  std::vector<int> cls = equivalence_classes(cg, tol);
  const int nclasses = *std::max_element(cls.begin(), cls.end()) + 1;

  PhaseLabel label;
  std::vector<int> count(nclasses, 0);
  std::vector<double> size(nclasses, 0.0);
  for (int i = 0; i < n; ++i) {
    count[cls[i]] += 1;
    size[cls[i]] = cg.sizes[i];
  }
  for (int c = 0; c < nclasses; ++c) label.signature.emplace_back(count[c], size[c]);
  std::sort(label.signature.begin(), label.signature.end(),
            [](const auto& a, const auto& b) {
              if (a.first != b.first) return a.first > b.first;
              return a.second > b.second;
            });

  std::vector<int> pattern;
  for (auto& [cnt, sz] : label.signature) pattern.push_back(cnt);

  if (nclasses == 1) {
    // Deterministic bipodal corners (Mantel-type, all blocks 0/1) are
    // boundary limits of the B(1,1) family rather than A(2,0) states.
    if (n == 2) {
      bool deterministic = true;
      for (int i = 0; i < 2 && deterministic; ++i)
        for (int j = i; j < 2 && deterministic; ++j) {
          const double p = cg.probs(i, j);
          if (p > tol && p < 1.0 - tol) deterministic = false;
        }
      const bool above_er =
          context && context->triangle > std::pow(context->edge, 3);
      if (deterministic && !above_er) {
        label.family = Family::B;
        label.m = 1;
        label.k = 1;
        return label;
      }
    }
    label.family = Family::A;
    label.m = n;
    label.k = 0;
    return label;
  }

  if (nclasses == 2) {
    const int big = pattern[0], small = pattern[1];
    if (small == 1 && big == 1) {
      // Bipodal: B(1,1) below the Erdos-Renyi curve, F(1,1) above it.
      const bool above_er =
          context && context->triangle > std::pow(context->edge, 3);
      if (above_er) {
        label.family = Family::F;
        label.m = 1;
        label.k = 1;
        label.ambiguous_with = {Family::B, {1, 1}};
      } else {
        label.family = Family::B;
        label.m = 1;
        label.k = 1;
      }
      return label;
    }
    if (small == 1) {
      label.family = Family::B;
      label.m = big;
      label.k = 1;
      if (big == 2) label.ambiguous_with = {Family::C, {1, 2}};
      return label;
    }
    if (small == 2 || big == 2) {
      // One class is the interchangeable pair; the other supplies m.
      label.family = Family::C;
      label.m = (small == 2) ? big : small;
      label.k = 2;
      return label;
    }
  }

  return label;  // Unknown with raw signature
}

bool same_signature(const std::vector<std::pair<int, double>>& a,
                    const std::vector<std::pair<int, double>>& b,
                    double size_tol) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].first != b[i].first) return false;
    if (std::abs(a[i].second - b[i].second) > size_tol) return false;
  }
  return true;
}

}  // namespace graphon
