#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "engine.hpp"
#include "risk_model.hpp"
#include "rng.hpp"

namespace carp::synthetic {

struct NetworkSpec {
  std::size_t risks = 50;
  double density = 0.2;
  double likelihood_low = 2.5;   // survey scale
  double likelihood_high = 4.0;
  LikelihoodScale scale{};
  std::uint32_t max_pair_count = 20;
  std::string year = "synthetic";
};

// Catalog with categories assigned round-robin, likelihoods uniform on
// [likelihood_low, likelihood_high] (rounded to 0.01) and round(density *
// R(R-1)/2) edges chosen uniformly without replacement.
inline RiskNetwork random_network(const NetworkSpec& spec, std::uint64_t seed) {
  if (spec.risks < 1) throw UsageError("synthetic network needs at least one risk");
  Rng rng = make_stream(seed, 0);
  std::vector<Risk> risks;
  for (std::size_t i = 0; i < spec.risks; ++i) {
    Risk r;
    char code[16];
    std::snprintf(code, sizeof code, "%02zu", i + 1);
    r.id = std::string("R") + code;
    r.numeric_code = code;
    r.name = "Synthetic risk " + std::string(code);
    r.category = kAllCategories[i % kAllCategories.size()];
    const double u = uniform01(rng);
    r.raw_likelihood = std::round((spec.likelihood_low + u * (spec.likelihood_high - spec.likelihood_low)) * 100.0) / 100.0;
    r.normalized_likelihood = normalize_likelihood(r.raw_likelihood, spec.scale);
    risks.push_back(std::move(r));
  }
  const std::size_t n = spec.risks;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> all_pairs;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j) all_pairs.emplace_back(i, j);
  const auto edges = std::min<std::size_t>(
      all_pairs.size(), static_cast<std::size_t>(std::llround(spec.density * static_cast<double>(all_pairs.size()))));
  std::vector<std::uint32_t> counts(n * n, 0);
  for (std::size_t k = 0; k < edges; ++k) {
    const std::size_t span = all_pairs.size() - k;
    const std::size_t pick = k + std::min(span - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(span)));
    std::swap(all_pairs[k], all_pairs[pick]);
    const auto [i, j] = all_pairs[k];
    const auto c = 1 + static_cast<std::uint32_t>(uniform01(rng) * spec.max_pair_count);
    counts[i * n + j] = counts[j * n + i] = std::min(c, spec.max_pair_count);
  }
  return RiskNetwork(spec.year, std::move(risks), std::move(counts));
}

// History of `months` months recorded after `burn_in` months of dynamics
// from the all-passive state. First month label is `first_month`.
inline SimulatedHistory random_history(const RiskNetwork& net, const ModelParams& params, std::size_t months,
                                       std::size_t burn_in, std::uint64_t seed,
                                       const std::string& first_month = "2000-01") {
  const CarpDynamics dyn(net, params);
  Rng rng = make_stream(seed, 1);
  Walker w(dyn, all_passive(net.size()).active);
  for (std::size_t t = 0; t < burn_in; ++t) w.advance(rng);
  return simulate_history(dyn, w.active(), months, rng, parse_month(first_month));
}

// Parameters of the bundled 2013-like fixture: about 14 of 50 risks active at a
// time, 8 to 19 active roughly 90% of months. Per month at L = 0.6 they give
// p_int ~ 0.027, p_ext ~ 0.009 per active neighbor and p_rec ~ 0.12.
inline constexpr ModelParams kFixtureParams{0.03, 0.01, 2.3};

struct Fixture {
  RiskNetwork network;
  ModelParams params;
  HistoryMatrix history;
  AttributionCounts causes;
};

// 50 risks, 156 months (2000-01 .. 2012-12), density 0.2.
inline Fixture fixture_2013(std::uint64_t seed = 2013) {
  NetworkSpec spec;
  spec.year = "2013";
  Fixture f{random_network(spec, seed), kFixtureParams, {}, {}};
  auto sim = random_history(f.network, f.params, 156, 120, seed);
  f.history = std::move(sim.history);
  f.causes = sim.causes;
  return f;
}

}  // namespace carp::synthetic
