#pragma once

// Shared fixtures and independent reference implementations for the tests.
// Nothing here calls into the dynamics, likelihood or mean-field code.

#include <carp/risk_model.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace carp::test {

using Edges = std::vector<std::pair<int, int>>;

inline RiskNetwork make_network(const std::vector<double>& L, const Edges& edges,
                                const std::vector<Category>& cats = {}, const std::vector<std::uint32_t>& counts = {}) {
  const std::size_t n = L.size();
  std::vector<Risk> risks;
  for (std::size_t i = 0; i < n; ++i) {
    Risk r;
    r.id = "K" + std::to_string(i);
    r.numeric_code = std::to_string(i + 1);
    r.name = r.id;
    r.category = cats.empty() ? Category::economic : cats[i];
    r.raw_likelihood = L[i];
    r.normalized_likelihood = L[i];
    risks.push_back(r);
  }
  std::vector<std::uint32_t> c(n * n, 0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [a, b] = edges[e];
    const std::uint32_t w = counts.empty() ? 1 : counts[e];
    c[a * n + b] = c[b * n + a] = w;
  }
  return RiskNetwork("test", std::move(risks), std::move(c));
}

// rows[i] is risk i's state string, e.g. "0110".
inline HistoryMatrix make_history(const RiskNetwork& net, const std::vector<std::string>& rows) {
  const std::size_t T = rows.at(0).size();
  std::vector<std::uint8_t> s;
  for (const auto& r : rows)
    for (char ch : r) s.push_back(ch == '1');
  std::vector<std::string> ids, months;
  for (const auto& r : net.risks()) ids.push_back(r.id);
  for (std::size_t t = 0; t < T; ++t) months.push_back(format_month(2000 * 12 + static_cast<int>(t)));
  return HistoryMatrix(ids, months, s);
}

// All connected simple graphs on 1..4 vertices up to isomorphism (10 graphs).
inline std::vector<std::pair<int, Edges>> connected_graphs_upto4() {
  return {
      {1, {}},
      {2, {{0, 1}}},
      {3, {{0, 1}, {1, 2}}},
      {3, {{0, 1}, {1, 2}, {0, 2}}},
      {4, {{0, 1}, {1, 2}, {2, 3}}},
      {4, {{0, 1}, {0, 2}, {0, 3}}},
      {4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}},
      {4, {{0, 1}, {1, 2}, {2, 0}, {2, 3}}},
      {4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}}},
      {4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}},
  };
}

// Per-risk switching probabilities written straight from the model text:
// passive -> active with 1 - (1-L)^alpha * ((1-L)^beta)^k, active -> passive
// with (1-L)^gamma.
struct Reference {
  std::vector<double> L;
  std::vector<std::vector<int>> adj;
  double alpha, beta, gamma;

  double p_on(std::size_t i, int k) const {
    const double q = 1.0 - L[i];
    return 1.0 - std::pow(q, alpha) * std::pow(std::pow(q, beta), k);
  }
  double p_off(std::size_t i) const { return std::pow(1.0 - L[i], gamma); }
  int active_neighbors(std::size_t i, unsigned state) const {
    int k = 0;
    for (int j : adj[i]) k += (state >> j) & 1u;
    return k;
  }
};

inline Reference reference_of(const RiskNetwork& net, double alpha, double beta, double gamma) {
  Reference r{{}, {}, alpha, beta, gamma};
  for (std::size_t i = 0; i < net.size(); ++i) {
    r.L.push_back(net.risk(i).normalized_likelihood);
    std::vector<int> nb;
    for (std::size_t j = 0; j < net.size(); ++j)
      if (net.adjacent(i, j)) nb.push_back(static_cast<int>(j));
    r.adj.push_back(nb);
  }
  return r;
}

// Stationary marginals P(risk i active) of the full 2^R synchronous chain,
// by power iteration on the dense transition matrix.
inline std::vector<double> exact_stationary(const Reference& ref) {
  const std::size_t R = ref.L.size();
  const unsigned S = 1u << R;
  std::vector<double> P(S * S, 0.0);
  for (unsigned s = 0; s < S; ++s)
    for (unsigned t = 0; t < S; ++t) {
      double p = 1.0;
      for (std::size_t i = 0; i < R; ++i) {
        const bool on = (s >> i) & 1u, next = (t >> i) & 1u;
        const double flip = on ? ref.p_off(i) : ref.p_on(i, ref.active_neighbors(i, s));
        p *= (on != next) ? flip : 1.0 - flip;
      }
      P[s * S + t] = p;
    }
  std::vector<double> pi(S, 1.0 / S), nxt(S);
  for (int it = 0; it < 200000; ++it) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (unsigned s = 0; s < S; ++s)
      for (unsigned t = 0; t < S; ++t) nxt[t] += pi[s] * P[s * S + t];
    double d = 0.0;
    for (unsigned s = 0; s < S; ++s) d = std::max(d, std::abs(nxt[s] - pi[s]));
    pi.swap(nxt);
    if (d < 1e-15) break;
  }
  std::vector<double> m(R, 0.0);
  for (unsigned s = 0; s < S; ++s)
    for (std::size_t i = 0; i < R; ++i)
      if ((s >> i) & 1u) m[i] += pi[s];
  return m;
}

// Long-run active frequency of the chain sampled with the combined switching
// probabilities (no cause decomposition), starting all passive.
inline std::vector<double> chain_frequency(const Reference& ref, std::size_t steps, std::uint64_t seed) {
  const std::size_t R = ref.L.size();
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> off_p(R);
  std::vector<std::vector<double>> on_k(R);
  for (std::size_t i = 0; i < R; ++i) {
    off_p[i] = ref.p_off(i);
    for (int k = 0; k <= static_cast<int>(ref.adj[i].size()); ++k) on_k[i].push_back(ref.p_on(i, k));
  }
  unsigned state = 0;
  std::vector<double> count(R, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    unsigned next = state;
    for (std::size_t i = 0; i < R; ++i) {
      const bool on = (state >> i) & 1u;
      const double flip = on ? off_p[i] : on_k[i][ref.active_neighbors(i, state)];
      if (u(gen) < flip) next ^= 1u << i;
    }
    state = next;
    for (std::size_t i = 0; i < R; ++i) count[i] += (state >> i) & 1u;
  }
  for (auto& c : count) c /= static_cast<double>(steps);
  return count;
}

}  // namespace carp::test
