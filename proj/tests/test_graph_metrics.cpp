#include <gtest/gtest.h>

#include <carp/graph_metrics.hpp>

#include <cmath>
#include <numeric>
#include <random>

#include "support.hpp"

using namespace carp;

namespace {

RiskNetwork graph_of(int n, const test::Edges& e) { return test::make_network(std::vector<double>(n, 0.5), e); }

// Exhaustive search over vertex subsets.
std::size_t brute_clique(const RiskNetwork& net) {
  const std::size_t n = net.size();
  std::size_t best = 0;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i)
      for (std::size_t j = i + 1; j < n && ok; ++j)
        if (((mask >> i) & 1u) && ((mask >> j) & 1u) && !net.adjacent(i, j)) ok = false;
    if (ok) best = std::max<std::size_t>(best, static_cast<std::size_t>(__builtin_popcount(mask)));
  }
  return best;
}

}  // namespace

TEST(GraphMetrics, Triangle) {
  const auto p = compute_properties(graph_of(3, {{0, 1}, {1, 2}, {0, 2}}));
  EXPECT_EQ(p.node_count, 3u);
  EXPECT_EQ(p.edge_count, 3u);
  EXPECT_DOUBLE_EQ(p.density, 1.0);
  EXPECT_DOUBLE_EQ(p.average_degree, 2.0);
  EXPECT_DOUBLE_EQ(p.average_clustering, 1.0);
  EXPECT_EQ(p.diameter, 1u);
  EXPECT_DOUBLE_EQ(p.average_shortest_path, 1.0);
  EXPECT_EQ(p.max_clique_size, 3u);
  EXPECT_TRUE(std::isnan(p.degree_assortativity));  // regular
  EXPECT_TRUE(p.connected);
}

TEST(GraphMetrics, PathOfThree) {
  const auto p = compute_properties(graph_of(3, {{0, 1}, {1, 2}}));
  EXPECT_DOUBLE_EQ(p.density, 2.0 / 3.0);
  EXPECT_EQ(p.diameter, 2u);
  EXPECT_DOUBLE_EQ(p.average_shortest_path, 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(p.average_clustering, 0.0);
  EXPECT_NEAR(p.degree_assortativity, -1.0, 1e-12);
  EXPECT_EQ(p.max_clique_size, 2u);
}

TEST(GraphMetrics, Star) {
  const auto p = compute_properties(graph_of(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}));
  EXPECT_DOUBLE_EQ(p.average_degree, 8.0 / 5.0);
  EXPECT_EQ(p.diameter, 2u);
  // 4 pairs at 1, 6 pairs at 2.
  EXPECT_DOUBLE_EQ(p.average_shortest_path, 16.0 / 10.0);
  EXPECT_NEAR(p.degree_assortativity, -1.0, 1e-12);
  EXPECT_DOUBLE_EQ(p.average_clustering, 0.0);
}

TEST(GraphMetrics, DisconnectedUsesLargestComponent) {
  const auto p = compute_properties(graph_of(6, {{0, 1}, {1, 2}, {2, 3}, {4, 5}}));
  EXPECT_FALSE(p.connected);
  EXPECT_EQ(p.largest_component_size, 4u);
  EXPECT_EQ(p.diameter, 3u);
  EXPECT_DOUBLE_EQ(p.average_shortest_path, 10.0 / 6.0);
}

TEST(GraphMetrics, RelabelInvariant) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5 + trial;
    test::Edges e;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (u(gen) < 0.3) e.push_back({i, j});
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    test::Edges e2;
    for (auto [a, b] : e) e2.push_back({perm[a], perm[b]});
    const auto p = compute_properties(graph_of(n, e)), q = compute_properties(graph_of(n, e2));
    EXPECT_EQ(p.edge_count, q.edge_count);
    EXPECT_EQ(p.diameter, q.diameter);
    EXPECT_EQ(p.max_clique_size, q.max_clique_size);
    EXPECT_NEAR(p.average_clustering, q.average_clustering, 1e-12);
    EXPECT_NEAR(p.average_shortest_path, q.average_shortest_path, 1e-12);
    if (!std::isnan(p.degree_assortativity)) {
      EXPECT_NEAR(p.degree_assortativity, q.degree_assortativity, 1e-12);
    }
  }
}

TEST(GraphMetrics, AddingAnEdge) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6 + trial % 6;
    test::Edges e;
    for (int i = 1; i < n; ++i) e.push_back({static_cast<int>(gen() % i), i});  // spanning tree
    const auto before = graph_of(n, e);
    int a, b;
    do {
      a = static_cast<int>(gen() % n);
      b = static_cast<int>(gen() % n);
    } while (a == b || before.adjacent(a, b));
    auto e2 = e;
    e2.push_back({a, b});
    const auto p = compute_properties(before), q = compute_properties(graph_of(n, e2));
    EXPECT_GT(q.density, p.density);
    EXPECT_GE(q.max_clique_size, p.max_clique_size);
    EXPECT_LE(q.diameter, p.diameter);
    EXPECT_LT(q.average_shortest_path, p.average_shortest_path);
  }
}

TEST(GraphMetrics, CliqueMatchesBruteForce) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + static_cast<int>(gen() % 12);
    const double d = u(gen);
    test::Edges e;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (u(gen) < d) e.push_back({i, j});
    const auto net = graph_of(n, e);
    EXPECT_EQ(graph::max_clique_size(graph::adjacency_of(net)), brute_clique(net));
  }
}

TEST(GraphMetrics, EmptyGraphRejected) {
  EXPECT_THROW(graph::compute_properties(graph::AdjacencyList{}), DataError);
}

TEST(GraphMetrics, RegularCycleHasUndefinedAssortativity) {
  const auto p = compute_properties(graph_of(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}}));
  EXPECT_TRUE(std::isnan(p.degree_assortativity));
  EXPECT_EQ(p.diameter, 2u);
}
