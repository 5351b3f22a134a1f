#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "rareweak/errors.hpp"
#include "rareweak/sym_matrix.hpp"

namespace rareweak {

/// Entries at or below this magnitude count as structural zeros.
inline constexpr double kNumericalZero = 1e-12;

/// Undirected simple graph on nodes 0..p-1 with sorted adjacency lists.
class DependencyGraph {
 public:
  DependencyGraph() = default;
  explicit DependencyGraph(std::size_t num_nodes) : adj_(num_nodes) {}

  static DependencyGraph from_edges(std::size_t num_nodes,
                                    const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    DependencyGraph g(num_nodes);
    for (auto [a, b] : edges) {
      if (a >= num_nodes || b >= num_nodes) throw DomainError("graph: edge endpoint out of range");
      if (a == b) continue;
      g.adj_[a].push_back(b);
      g.adj_[b].push_back(a);
    }
    for (auto& nb : g.adj_) {
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
    return g;
  }

  std::size_t num_nodes() const noexcept { return adj_.size(); }
  const IndexSet& neighbors(std::size_t i) const { return adj_.at(i); }

  bool adjacent(std::size_t i, std::size_t j) const {
    const auto& nb = adj_.at(i);
    return std::binary_search(nb.begin(), nb.end(), j);
  }

  std::size_t num_edges() const noexcept {
    std::size_t twice = 0;
    for (const auto& nb : adj_) twice += nb.size();
    return twice / 2;
  }

 private:
  friend DependencyGraph graph_from_matrix(const SymMatrix& m, double delta);
  std::vector<IndexSet> adj_;
};

/// Edge (i, j), i != j, iff |m(i,j)| >= delta. delta == 0 means the strict
/// nonzero pattern, with |entry| > kNumericalZero.
inline DependencyGraph graph_from_matrix(const SymMatrix& m, double delta) {
  if (!(delta >= 0.0)) throw DomainError("graph_from_matrix: delta must be >= 0");
  DependencyGraph g(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i) {
    m.for_each_in_row(i, [&](std::size_t j, double v) {
      if (j == i) return;
      const bool edge = delta == 0.0 ? std::abs(v) > kNumericalZero : std::abs(v) >= delta;
      if (edge) g.adj_[i].push_back(j);
    });
    std::sort(g.adj_[i].begin(), g.adj_[i].end());
  }
  return g;
}

inline std::size_t max_degree(const DependencyGraph& g) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < g.num_nodes(); ++i) d = std::max(d, g.neighbors(i).size());
  return d;
}

/// Maximum nonzeros per row of the generating matrix, diagonal included.
inline std::size_t row_nonzero_max(const DependencyGraph& g) { return max_degree(g) + 1; }

struct SubgraphList {
  std::vector<IndexSet> subsets;
  std::size_t m0 = 0;
};

/// Upper bound on the number of connected subgraphs of size <= m0: the
/// smaller of p (e d)^m0 and the number of subsets of size <= m0.
inline double projected_subgraph_count(const DependencyGraph& g, std::size_t m0) {
  const double p = static_cast<double>(g.num_nodes());
  const double d = static_cast<double>(std::max<std::size_t>(max_degree(g), 1));
  const double growth = p * std::pow(std::numbers::e * d, static_cast<double>(m0));
  double subsets = 0.0;
  double binom = 1.0;
  for (std::size_t m = 1; m <= m0 && m <= g.num_nodes(); ++m) {
    binom *= (p - static_cast<double>(m) + 1.0) / static_cast<double>(m);
    subsets += binom;
    if (subsets > growth) break;
  }
  return std::min(growth, subsets);
}

namespace detail {

struct SubgraphEnumerator {
  const DependencyGraph& g;
  std::size_t m0;
  std::size_t cap;
  std::size_t anchor = 0;
  std::vector<IndexSet>& out;

  bool touches(const IndexSet& sub, std::size_t u) const {
    for (std::size_t x : sub)
      if (x == u || g.adjacent(x, u)) return true;
    return false;
  }

  // Each connected set is reached exactly once: its minimum element is the
  // anchor and new vertices come only from the exclusive neighborhood of the
  // vertex just added.
  void extend(IndexSet& sub, std::vector<std::size_t> ext) {
    out.push_back(sub);
    if (out.size() > cap) throw CapacityError("enum_connected_subgraphs: count exceeds cap");
    if (sub.size() == m0) return;
    while (!ext.empty()) {
      const std::size_t w = ext.back();
      ext.pop_back();
      std::vector<std::size_t> next = ext;
      for (std::size_t u : g.neighbors(w)) {
        if (u <= anchor || touches(sub, u)) continue;
        if (std::find(next.begin(), next.end(), u) == next.end()) next.push_back(u);
      }
      sub.push_back(w);
      extend(sub, std::move(next));
      sub.pop_back();
    }
  }
};

}  // namespace detail

/// All connected vertex subsets of size <= m0, ordered by size and then
/// lexicographically.
inline SubgraphList enum_connected_subgraphs(const DependencyGraph& g, std::size_t m0,
                                             std::size_t cap = 10'000'000) {
  if (m0 < 1) throw DomainError("enum_connected_subgraphs: m0 must be >= 1");
  if (projected_subgraph_count(g, m0) > static_cast<double>(cap))
    throw CapacityError("enum_connected_subgraphs: projected count " +
                        std::to_string(projected_subgraph_count(g, m0)) + " exceeds cap " +
                        std::to_string(cap));
  SubgraphList result;
  result.m0 = m0;
  detail::SubgraphEnumerator en{g, m0, cap, 0, result.subsets};
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    en.anchor = v;
    IndexSet sub{v};
    std::vector<std::size_t> ext;
    for (std::size_t u : g.neighbors(v))
      if (u > v) ext.push_back(u);
    en.extend(sub, std::move(ext));
  }
  for (auto& s : result.subsets) std::sort(s.begin(), s.end());
  std::sort(result.subsets.begin(), result.subsets.end(), [](const IndexSet& a, const IndexSet& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  });
  return result;
}

struct Coloring {
  std::vector<std::size_t> color_of;
  std::size_t num_colors = 0;
};

/// Sequential greedy coloring in index order; uses at most max_degree + 1 colors.
inline Coloring greedy_coloring(const DependencyGraph& g) {
  const std::size_t p = g.num_nodes();
  constexpr std::size_t kUncolored = static_cast<std::size_t>(-1);
  Coloring c;
  c.color_of.assign(p, kUncolored);
  std::vector<char> used;
  for (std::size_t i = 0; i < p; ++i) {
    used.assign(g.neighbors(i).size() + 1, 0);
    for (std::size_t j : g.neighbors(i)) {
      const std::size_t cj = c.color_of[j];
      if (cj != kUncolored && cj < used.size()) used[cj] = 1;
    }
    std::size_t col = 0;
    while (used[col]) ++col;
    c.color_of[i] = col;
    c.num_colors = std::max(c.num_colors, col + 1);
  }
  return c;
}

/// Components of the subgraph induced on restrict_to, each sorted, listed
/// by smallest element.
inline std::vector<IndexSet> connected_components(const DependencyGraph& g, const IndexSet& restrict_to) {
  const std::size_t p = g.num_nodes();
  std::vector<char> member(p, 0), seen(p, 0);
  for (std::size_t i : restrict_to) {
    if (i >= p) throw DomainError("connected_components: index out of range");
    member[i] = 1;
  }
  IndexSet order = restrict_to;
  std::sort(order.begin(), order.end());
  std::vector<IndexSet> comps;
  std::deque<std::size_t> queue;
  for (std::size_t s : order) {
    if (seen[s]) continue;
    IndexSet comp;
    seen[s] = 1;
    queue.push_back(s);
    while (!queue.empty()) {
      const std::size_t x = queue.front();
      queue.pop_front();
      comp.push_back(x);
      for (std::size_t y : g.neighbors(x)) {
        if (member[y] && !seen[y]) {
          seen[y] = 1;
          queue.push_back(y);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

inline std::vector<IndexSet> connected_components(const DependencyGraph& g) {
  IndexSet all(g.num_nodes());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return connected_components(g, all);
}

}  // namespace rareweak
