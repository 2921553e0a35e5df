#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "risk_model.hpp"
#include "rng.hpp"

namespace carp {

// Exponents mapping a normalized likelihood to the three Poisson processes:
// internal activation (alpha), external activation (beta) and continuation
// (gamma).
struct ModelParams {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  bool valid() const {
    return std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(gamma) && alpha >= 0.0 &&
           beta >= 0.0 && gamma >= 0.0;
  }
  void validate() const {
    if (!valid()) throw DataError("model parameters must be finite and non-negative");
  }
  bool operator==(const ModelParams&) const = default;
};

// Per-month probabilities for one risk. p_ext is per active neighbor.
struct ProcessProbabilities {
  double p_int = 0.0;
  double p_ext = 0.0;
  double p_con = 0.0;
  double p_rec = 1.0;
};

namespace detail {

// Valid for L in [0, 1); L = 0 is a disabled risk (never activates, p_rec = 1).
inline ProcessProbabilities process_probabilities_unchecked(double L, const ModelParams& p) {
  const double c = std::log1p(-L);  // ln(1 - L) <= 0
  ProcessProbabilities out;
  out.p_int = -std::expm1(p.alpha * c);
  out.p_ext = -std::expm1(p.beta * c);
  out.p_rec = std::exp(p.gamma * c);
  out.p_con = 1.0 - out.p_rec;
  return out;
}

}  // namespace detail

// p_int = 1-(1-L)^alpha, p_ext = 1-(1-L)^beta, p_rec = (1-L)^gamma,
// p_con = 1 - p_rec.
inline ProcessProbabilities process_probabilities(double L, const ModelParams& params) {
  if (!(L > 0.0 && L < 1.0)) throw DataError("normalized likelihood must lie in (0, 1)");
  params.validate();
  return detail::process_probabilities_unchecked(L, params);
}

struct NetworkState {
  std::int64_t t = 0;
  std::vector<std::uint8_t> active;
};

inline NetworkState all_passive(std::size_t risks) { return {0, std::vector<std::uint8_t>(risks, 0)}; }

enum class TransitionCause : std::uint8_t { internal, external, both, recovery };

struct TransitionEvent {
  std::uint32_t risk = 0;
  TransitionCause cause = TransitionCause::internal;
  bool operator==(const TransitionEvent&) const = default;
};

inline std::size_t active_neighbor_count(std::size_t i, std::span<const std::uint8_t> active,
                                         const RiskNetwork& net) {
  std::size_t k = 0;
  for (auto j : net.neighbors(i)) k += active[j];
  return k;
}

// P(0->1) = 1 - (1-p_int) * prod over active neighbors of (1-p_ext).
inline double activation_probability(std::size_t i, const NetworkState& state,
                                     std::span<const ProcessProbabilities> probs,
                                     const RiskNetwork& net) {
  if (state.active.size() != net.size() || probs.size() != net.size())
    throw DataError("state dimension does not match network");
  const auto k = static_cast<double>(active_neighbor_count(i, state.active, net));
  const double stay = (1.0 - probs[i].p_int) * std::pow(1.0 - probs[i].p_ext, k);
  return 1.0 - stay;
}

// Counts of activation causes and recoveries over a simulated stretch.
struct AttributionCounts {
  std::uint64_t internal_only = 0;
  std::uint64_t external_only = 0;
  std::uint64_t both = 0;
  std::uint64_t recoveries = 0;

  std::uint64_t activations() const { return internal_only + external_only + both; }
  void record(TransitionCause c) {
    switch (c) {
      case TransitionCause::internal: ++internal_only; break;
      case TransitionCause::external: ++external_only; break;
      case TransitionCause::both: ++both; break;
      case TransitionCause::recovery: ++recoveries; break;
    }
  }
  AttributionCounts& operator+=(const AttributionCounts& o) {
    internal_only += o.internal_only;
    external_only += o.external_only;
    both += o.both;
    recoveries += o.recoveries;
    return *this;
  }
};

// Transition tables for one (network, likelihoods, params) triple.
//
// External activation is drawn as a single Bernoulli with probability
// 1-(1-p_ext)^k for k active neighbors, which is the event "at least one
// neighbor's process fired".
class CarpDynamics {
 public:
  CarpDynamics(const RiskNetwork& net, const ModelParams& params)
      : CarpDynamics(net, net.likelihoods(), params) {}

  // `likelihoods` may contain zeros (disabled risks).
  CarpDynamics(const RiskNetwork& net, std::vector<double> likelihoods, const ModelParams& params)
      : net_(&net), params_(params), L_(std::move(likelihoods)) {
    params.validate();
    if (L_.size() != net.size()) throw DataError("likelihood vector does not match network");
    probs_.resize(net.size());
    ext_fire_.resize(net.size());
    for (std::size_t i = 0; i < net.size(); ++i) {
      if (!(L_[i] >= 0.0 && L_[i] < 1.0)) throw DataError("normalized likelihood outside [0, 1)");
      probs_[i] = detail::process_probabilities_unchecked(L_[i], params);
      const double c = std::log1p(-L_[i]);
      auto& row = ext_fire_[i];
      row.resize(net.degree(i) + 1);
      for (std::size_t k = 0; k < row.size(); ++k)
        row[k] = -std::expm1(static_cast<double>(k) * params.beta * c);
    }
  }

  const RiskNetwork& network() const { return *net_; }
  const ModelParams& params() const { return params_; }
  const std::vector<double>& likelihoods() const { return L_; }
  const std::vector<ProcessProbabilities>& probabilities() const { return probs_; }
  std::size_t size() const { return probs_.size(); }

  // Probability that at least one of k active neighbors activates risk i.
  double external_fire(std::size_t i, std::size_t k) const { return ext_fire_[i][k]; }

  // Draws the transition of one risk. Returns true on a flip and sets `cause`.
  // Draw order: passive -> internal then (if k > 0) external; active -> recovery.
  bool draw(std::size_t i, bool active, std::size_t k, Rng& rng, TransitionCause& cause) const {
    const auto& pr = probs_[i];
    if (active) {
      cause = TransitionCause::recovery;
      return bernoulli(rng, pr.p_rec);
    }
    const bool internal = bernoulli(rng, pr.p_int);
    const bool external = k > 0 && bernoulli(rng, ext_fire_[i][k]);
    if (internal && external) cause = TransitionCause::both;
    else if (internal) cause = TransitionCause::internal;
    else if (external) cause = TransitionCause::external;
    return internal || external;
  }

 private:
  const RiskNetwork* net_;
  ModelParams params_;
  std::vector<double> L_;
  std::vector<ProcessProbabilities> probs_;
  std::vector<std::vector<double>> ext_fire_;
};

// One synchronous month: every risk transitions based on the previous month's
// active set.
inline std::pair<NetworkState, std::vector<TransitionEvent>> step(const NetworkState& state,
                                                                  const CarpDynamics& dyn,
                                                                  Rng& rng) {
  const auto& net = dyn.network();
  if (state.active.size() != net.size()) throw DataError("state dimension does not match network");
  NetworkState next{state.t + 1, state.active};
  std::vector<TransitionEvent> events;
  for (std::size_t i = 0; i < net.size(); ++i) {
    TransitionCause cause{};
    const std::size_t k = state.active[i] ? 0 : active_neighbor_count(i, state.active, net);
    if (dyn.draw(i, state.active[i] != 0, k, rng, cause)) {
      next.active[i] ^= 1;
      events.push_back({static_cast<std::uint32_t>(i), cause});
    }
  }
  return {std::move(next), std::move(events)};
}

// Stateful walker with incrementally maintained active-neighbor counts. Uses
// exactly the same draw sequence as step().
class Walker {
 public:
  Walker(const CarpDynamics& dyn, std::span<const std::uint8_t> initial)
      : dyn_(&dyn), active_(initial.begin(), initial.end()), k_(initial.size(), 0) {
    if (initial.size() != dyn.size()) throw DataError("state dimension does not match network");
    for (std::size_t i = 0; i < active_.size(); ++i)
      k_[i] = static_cast<std::uint32_t>(active_neighbor_count(i, active_, dyn.network()));
    flips_.reserve(active_.size());
  }

  const std::vector<std::uint8_t>& active() const { return active_; }
  // Risks that flipped in the last advance().
  const std::vector<std::uint32_t>& last_flips() const { return flips_; }

  // Advances one month; returns the number of 0->1 flips.
  std::size_t advance(Rng& rng, AttributionCounts* causes = nullptr) {
    flips_.clear();
    std::size_t activations = 0;
    for (std::size_t i = 0; i < active_.size(); ++i) {
      TransitionCause cause{};
      if (dyn_->draw(i, active_[i] != 0, active_[i] ? 0 : k_[i], rng, cause)) {
        flips_.push_back(static_cast<std::uint32_t>(i));
        if (cause != TransitionCause::recovery) ++activations;
        if (causes) causes->record(cause);
      }
    }
    const auto& net = dyn_->network();
    for (auto i : flips_) {
      active_[i] ^= 1;
      if (active_[i]) {
        for (auto j : net.neighbors(i)) ++k_[j];
      } else {
        for (auto j : net.neighbors(i)) --k_[j];
      }
    }
    return activations;
  }

 private:
  const CarpDynamics* dyn_;
  std::vector<std::uint8_t> active_;
  std::vector<std::uint32_t> k_;
  std::vector<std::uint32_t> flips_;
};

struct SimulatedHistory {
  HistoryMatrix history;
  AttributionCounts causes;
};

// `months` months where the first month is `initial` and every later month is
// one step of the dynamics.
inline SimulatedHistory simulate_history(const CarpDynamics& dyn, std::span<const std::uint8_t> initial,
                                         std::size_t months, Rng& rng, int first_month_serial = 2000 * 12) {
  if (months < 1) throw DataError("history length must be at least one month");
  const std::size_t R = dyn.size();
  std::vector<std::uint8_t> states(R * months);
  Walker w(dyn, initial);
  SimulatedHistory out;
  for (std::size_t t = 0; t < months; ++t) {
    if (t > 0) w.advance(rng, &out.causes);
    for (std::size_t i = 0; i < R; ++i) states[i * months + t] = w.active()[i];
  }
  std::vector<std::string> ids, labels;
  for (const Risk& r : dyn.network().risks()) ids.push_back(r.id);
  for (std::size_t t = 0; t < months; ++t)
    labels.push_back(format_month(first_month_serial + static_cast<int>(t)));
  out.history = HistoryMatrix(std::move(ids), std::move(labels), std::move(states));
  return out;
}

// 10, 100, 1000, ... below the horizon, then the horizon itself.
inline std::vector<std::int64_t> checkpoint_schedule(std::int64_t horizon) {
  std::vector<std::int64_t> out;
  for (std::int64_t t = 10; t < horizon; t *= 10) out.push_back(t);
  out.push_back(horizon);
  return out;
}

struct TrajectoryResult {
  std::vector<std::int64_t> checkpoints;
  std::vector<std::vector<double>> frequency;  // [checkpoint][risk], mean over runs
  std::vector<std::vector<double>> std_error;  // [checkpoint][risk]
  std::vector<std::vector<std::uint32_t>> activations;  // [run][risk], 0->1 flips over the horizon
  std::size_t runs = 0;
};

// f_i(t) = (active months of i in 1..t) / t averaged over runs; the initial
// state is month 0 and is not counted. Run r uses make_stream(seed, r), so the
// result does not depend on `jobs`.
inline TrajectoryResult simulate_trajectory(const CarpDynamics& dyn, const NetworkState& initial,
                                            std::int64_t horizon, std::size_t n_runs,
                                            std::uint64_t seed, unsigned jobs = 1) {
  if (horizon < 1) throw DataError("horizon must be at least 1");
  if (n_runs < 1) throw DataError("at least one run is required");
  const std::size_t R = dyn.size();
  TrajectoryResult res;
  res.checkpoints = checkpoint_schedule(horizon);
  res.runs = n_runs;
  const std::size_t C = res.checkpoints.size();
  std::vector<double> per_run(n_runs * C * R);
  res.activations.assign(n_runs, std::vector<std::uint32_t>(R, 0));

  parallel_for(n_runs, jobs, [&](std::size_t run) {
    Rng rng = make_stream(seed, run);
    Walker w(dyn, initial.active);
    std::vector<std::uint64_t> active_months(R, 0);
    auto& acts = res.activations[run];
    std::size_t c = 0;
    for (std::int64_t t = 1; t <= horizon; ++t) {
      w.advance(rng);
      const auto& now = w.active();
      for (std::size_t i = 0; i < R; ++i) active_months[i] += now[i];
      for (auto i : w.last_flips()) acts[i] += now[i];
      if (t == res.checkpoints[c]) {
        for (std::size_t i = 0; i < R; ++i)
          per_run[(run * C + c) * R + i] = static_cast<double>(active_months[i]) / static_cast<double>(t);
        ++c;
      }
    }
  });

  res.frequency.assign(C, std::vector<double>(R, 0.0));
  res.std_error.assign(C, std::vector<double>(R, 0.0));
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < R; ++i) {
      double sum = 0.0;
      for (std::size_t r = 0; r < n_runs; ++r) sum += per_run[(r * C + c) * R + i];
      const double mean = sum / static_cast<double>(n_runs);
      double ss = 0.0;
      for (std::size_t r = 0; r < n_runs; ++r) {
        const double d = per_run[(r * C + c) * R + i] - mean;
        ss += d * d;
      }
      res.frequency[c][i] = mean;
      res.std_error[c][i] =
          n_runs > 1 ? std::sqrt(ss / static_cast<double>(n_runs - 1) / static_cast<double>(n_runs)) : 0.0;
    }
  }
  return res;
}

struct ActivityStatistics {
  double mean_active_fraction = 0.0;       // over risks, months and runs
  double mean_activations_per_risk = 0.0;  // 0->1 flips per risk per run
  std::vector<double> risk_active_fraction;
  std::vector<double> risk_activations;
};

// Statistics over state series. With `first_month_is_prior`, the first month
// of each series is the state the run started from: it is excluded from the
// active fraction but a flip out of it counts as an activation. Otherwise only
// flips observed inside the series count.
inline ActivityStatistics activity_statistics(std::span<const HistoryMatrix> runs,
                                              bool first_month_is_prior = false) {
  if (runs.empty()) throw DataError("activity statistics need at least one run");
  const std::size_t R = runs[0].risks();
  const std::size_t first = first_month_is_prior ? 1 : 0;
  ActivityStatistics s;
  s.risk_active_fraction.assign(R, 0.0);
  s.risk_activations.assign(R, 0.0);
  for (const auto& h : runs) {
    if (h.risks() != R) throw DataError("runs have different risk counts");
    if (h.months() <= first) throw DataError("run has no months to evaluate");
    const double span_months = static_cast<double>(h.months() - first);
    for (std::size_t i = 0; i < R; ++i) {
      std::size_t on = 0, flips = 0;
      for (std::size_t t = first; t < h.months(); ++t) on += h.at(i, t);
      for (std::size_t t = 1; t < h.months(); ++t) flips += (h.at(i, t) && !h.at(i, t - 1));
      s.risk_active_fraction[i] += static_cast<double>(on) / span_months;
      s.risk_activations[i] += static_cast<double>(flips);
    }
  }
  const double n = static_cast<double>(runs.size());
  for (std::size_t i = 0; i < R; ++i) {
    s.risk_active_fraction[i] /= n;
    s.risk_activations[i] /= n;
    s.mean_active_fraction += s.risk_active_fraction[i];
    s.mean_activations_per_risk += s.risk_activations[i];
  }
  s.mean_active_fraction /= static_cast<double>(R);
  s.mean_activations_per_risk /= static_cast<double>(R);
  return s;
}

}  // namespace carp
