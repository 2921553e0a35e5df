#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

#include "errors.hpp"
#include "risk_model.hpp"

namespace carp {

struct NetworkProperties {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  double density = 0.0;
  double average_degree = 0.0;
  double degree_assortativity = std::numeric_limits<double>::quiet_NaN();  // NaN for regular graphs
  double average_clustering = 0.0;
  std::size_t diameter = 0;           // over the largest component
  double average_shortest_path = 0.0; // over the largest component
  std::size_t max_clique_size = 0;
  bool connected = true;              // false: path metrics cover the largest component only
  std::size_t largest_component_size = 0;
};

namespace graph {

// Plain adjacency lists, so the algorithms here can be tested on graphs that
// do not carry a risk catalog.
using AdjacencyList = std::vector<std::vector<std::uint32_t>>;

inline AdjacencyList adjacency_of(const RiskNetwork& net) {
  AdjacencyList adj(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) adj[i] = net.neighbors(i);
  return adj;
}

inline std::vector<int> bfs_distances(const AdjacencyList& adj, std::size_t source) {
  std::vector<int> dist(adj.size(), -1);
  std::queue<std::uint32_t> q;
  dist[source] = 0;
  q.push(static_cast<std::uint32_t>(source));
  while (!q.empty()) {
    auto u = q.front();
    q.pop();
    for (auto v : adj[u])
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
  }
  return dist;
}

inline std::vector<std::vector<std::uint32_t>> components(const AdjacencyList& adj) {
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<bool> seen(adj.size(), false);
  for (std::size_t s = 0; s < adj.size(); ++s) {
    if (seen[s]) continue;
    auto d = bfs_distances(adj, s);
    std::vector<std::uint32_t> comp;
    for (std::size_t v = 0; v < adj.size(); ++v)
      if (d[v] >= 0) {
        seen[v] = true;
        comp.push_back(static_cast<std::uint32_t>(v));
      }
    out.push_back(std::move(comp));
  }
  return out;
}

// Pearson correlation of the degrees at either end of each edge (each edge
// counted in both directions).
inline double degree_assortativity(const AdjacencyList& adj) {
  double sx = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t u = 0; u < adj.size(); ++u)
    for (auto v : adj[u]) {
      const double du = static_cast<double>(adj[u].size()), dv = static_cast<double>(adj[v].size());
      sx += du;
      sxx += du * du;
      sxy += du * dv;
      n += 1;
    }
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  const double mean = sx / n;
  const double var = sxx / n - mean * mean;
  if (!(var > 1e-15)) return std::numeric_limits<double>::quiet_NaN();
  return (sxy / n - mean * mean) / var;
}

// Local clustering averaged over all nodes; nodes of degree < 2 contribute 0.
inline double average_clustering(const AdjacencyList& adj) {
  if (adj.empty()) return 0.0;
  std::vector<char> mark(adj.size(), 0);
  double total = 0.0;
  for (std::size_t u = 0; u < adj.size(); ++u) {
    const std::size_t k = adj[u].size();
    if (k < 2) continue;
    for (auto v : adj[u]) mark[v] = 1;
    std::size_t links = 0;
    for (auto v : adj[u])
      for (auto w : adj[v])
        if (mark[w]) ++links;
    for (auto v : adj[u]) mark[v] = 0;
    total += static_cast<double>(links) / static_cast<double>(k * (k - 1));  // links counted twice
  }
  return total / static_cast<double>(adj.size());
}

namespace detail {

inline void expand_clique(const AdjacencyList& adj, const std::vector<std::vector<char>>& is_adj,
                          std::size_t size, std::vector<std::uint32_t> candidates, std::size_t& best) {
  if (candidates.empty()) {
    best = std::max(best, size);
    return;
  }
  while (!candidates.empty()) {
    if (size + candidates.size() <= best) return;  // bound
    const auto v = candidates.back();
    candidates.pop_back();
    std::vector<std::uint32_t> next;
    for (auto w : candidates)
      if (is_adj[v][w]) next.push_back(w);
    expand_clique(adj, is_adj, size + 1, std::move(next), best);
  }
}

}  // namespace detail

// Exact maximum clique by branch and bound; candidates are ordered by degree.
inline std::size_t max_clique_size(const AdjacencyList& adj) {
  const std::size_t n = adj.size();
  if (n == 0) return 0;
  std::vector<std::vector<char>> is_adj(n, std::vector<char>(n, 0));
  for (std::size_t u = 0; u < n; ++u)
    for (auto v : adj[u]) is_adj[u][v] = 1;
  std::vector<std::uint32_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return adj[a].size() < adj[b].size(); });
  std::size_t best = 1;
  detail::expand_clique(adj, is_adj, 0, order, best);
  return best;
}

inline NetworkProperties compute_properties(const AdjacencyList& adj) {
  const std::size_t N = adj.size();
  if (N == 0) throw DataError("network properties need a non-empty network");
  NetworkProperties p;
  p.node_count = N;
  std::size_t deg_sum = 0;
  for (const auto& nb : adj) deg_sum += nb.size();
  p.edge_count = deg_sum / 2;
  p.density = N > 1 ? 2.0 * static_cast<double>(p.edge_count) / (static_cast<double>(N) * static_cast<double>(N - 1)) : 0.0;
  p.average_degree = static_cast<double>(deg_sum) / static_cast<double>(N);
  p.degree_assortativity = degree_assortativity(adj);
  p.average_clustering = average_clustering(adj);
  p.max_clique_size = max_clique_size(adj);

  auto comps = components(adj);
  p.connected = comps.size() == 1;
  const auto& largest = *std::max_element(comps.begin(), comps.end(), [](const auto& a, const auto& b) {
    return a.size() < b.size();
  });
  p.largest_component_size = largest.size();
  double path_sum = 0.0;
  std::size_t pairs = 0;
  for (auto s : largest) {
    auto d = bfs_distances(adj, s);
    for (auto t : largest) {
      if (t == s) continue;
      p.diameter = std::max(p.diameter, static_cast<std::size_t>(d[t]));
      path_sum += d[t];
      ++pairs;
    }
  }
  p.average_shortest_path = pairs ? path_sum / static_cast<double>(pairs) : 0.0;
  return p;
}

}  // namespace graph

inline NetworkProperties compute_properties(const RiskNetwork& net) {
  return graph::compute_properties(graph::adjacency_of(net));
}

}  // namespace carp
