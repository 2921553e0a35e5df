#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "engine.hpp"
#include "errors.hpp"
#include "meanfield.hpp"
#include "mle.hpp"
#include "parallel.hpp"
#include "risk_model.hpp"
#include "rng.hpp"

namespace carp {

// max_i |v1[i] / v2[i] - 1|
inline double ks_distance(std::span<const double> v1, std::span<const double> v2) {
  if (v1.size() != v2.size()) throw DataError("KS distance needs vectors of equal length");
  double d = 0.0;
  for (std::size_t i = 0; i < v1.size(); ++i) {
    if (v2[i] == 0.0) throw DataError("KS distance reference vector has a zero entry");
    d = std::max(d, std::abs(v1[i] / v2[i] - 1.0));
  }
  return d;
}

// Shares of activation events by cause. Events where both latent draws fired
// count in both_fraction and are split evenly between a and b, so a + b = 1.
struct AttributionFractions {
  double a = 0.0;
  double b = 0.0;
  double both_fraction = 0.0;
  std::uint64_t activations = 0;

  static AttributionFractions from(const AttributionCounts& c) {
    AttributionFractions f;
    f.activations = c.activations();
    if (f.activations == 0) return f;
    const double n = static_cast<double>(f.activations);
    f.both_fraction = static_cast<double>(c.both) / n;
    f.a = (static_cast<double>(c.internal_only) + 0.5 * static_cast<double>(c.both)) / n;
    f.b = (static_cast<double>(c.external_only) + 0.5 * static_cast<double>(c.both)) / n;
    return f;
  }

  double activation_parameter(const ModelParams& p) const { return a * p.alpha + b * p.beta; }
};

// Number of replicates dropped as outliers: a third, rounded up.
inline std::size_t outlier_count(std::size_t n) { return (n + 2) / 3; }

struct RecoveryConfig {
  std::size_t replicates = 125;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  FitConfig fit;
};

struct ReplicateOutcome {
  bool ok = false;
  std::string error;
  ModelParams params;
  AttributionFractions fractions;      // this replicate's own simulation
  double activation_parameter = 0.0;   // with own fractions
  double activation_parameter_gt_fractions = 0.0;  // with the ground-truth simulation's fractions
  double recovery_parameter = 0.0;
  double ks = std::numeric_limits<double>::quiet_NaN();
  bool retained = false;
  std::vector<std::string> fit_flags;
};

struct ValidationReport {
  ModelParams ground_truth;
  AttributionFractions ground_truth_fractions;
  double ground_truth_activation = 0.0;
  double ground_truth_recovery = 0.0;
  std::vector<ReplicateOutcome> replicates;
  std::size_t failed = 0;
  std::size_t retained = 0;
  std::size_t discarded = 0;
  double activation_bound = 0.0;
  double recovery_bound = 0.0;
  std::vector<std::string> warnings;

  std::vector<ModelParams> retained_params() const {
    std::vector<ModelParams> out;
    for (const auto& r : replicates)
      if (r.retained) out.push_back(r.params);
    return out;
  }
};

// Parametric bootstrap: simulate replicate histories of the same length and
// starting state as `history` from `fitted`, refit each, drop the third with
// the largest KS distance to the ground truth and bound the relative error of
// the rest. Stream 0 of `seed` drives the ground-truth simulation, stream r+1
// replicate r.
inline ValidationReport recovery_experiment(const RiskNetwork& net, const HistoryMatrix& history,
                                            const ModelParams& fitted, const RecoveryConfig& cfg = {}) {
  if (cfg.replicates < 1) throw UsageError("recovery experiment needs at least one replicate");
  detail::check_aligned(history, net);
  const CarpDynamics dyn(net, fitted);
  const auto initial = history.month_state(0);
  const std::size_t T = history.months();

  ValidationReport rep;
  rep.ground_truth = fitted;
  {
    Rng rng = make_stream(cfg.seed, 0);
    auto gt = simulate_history(dyn, initial, T, rng);
    rep.ground_truth_fractions = AttributionFractions::from(gt.causes);
  }
  if (rep.ground_truth_fractions.activations == 0)
    throw NumericalError("ground-truth simulation produced no activations");
  rep.ground_truth_activation = rep.ground_truth_fractions.activation_parameter(fitted);
  rep.ground_truth_recovery = fitted.gamma;
  if (rep.ground_truth_activation == 0.0 || rep.ground_truth_recovery == 0.0)
    throw NumericalError("ground-truth activation or recovery parameter is zero");
  const std::vector<double> truth{rep.ground_truth_activation, rep.ground_truth_recovery};

  rep.replicates.resize(cfg.replicates);
  parallel_for(cfg.replicates, cfg.jobs, [&](std::size_t r) {
    auto& out = rep.replicates[r];
    Rng rng = make_stream(cfg.seed, r + 1);
    auto sim = simulate_history(dyn, initial, T, rng);
    out.fractions = AttributionFractions::from(sim.causes);
    try {
      auto res = fit(sim.history, net, cfg.fit);
      out.fit_flags = res.flags;
      if (!res.converged) throw NumericalError("fit did not converge");
      out.params = res.params;
      out.activation_parameter = out.fractions.activation_parameter(res.params);
      out.activation_parameter_gt_fractions = rep.ground_truth_fractions.activation_parameter(res.params);
      out.recovery_parameter = res.params.gamma;
      const std::vector<double> v{out.activation_parameter, out.recovery_parameter};
      out.ks = ks_distance(v, truth);
      out.ok = true;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });

  std::vector<std::size_t> ok;
  for (std::size_t r = 0; r < rep.replicates.size(); ++r) {
    if (rep.replicates[r].ok) ok.push_back(r);
    else {
      ++rep.failed;
      rep.warnings.push_back("replicate " + std::to_string(r) + " excluded: " + rep.replicates[r].error);
    }
  }
  if (ok.empty()) throw NumericalError("every recovery replicate failed");
  if (rep.failed)
    rep.warnings.push_back(std::to_string(ok.size()) + " of " + std::to_string(cfg.replicates) +
                           " replicates usable");
  std::stable_sort(ok.begin(), ok.end(),
                   [&](auto x, auto y) { return rep.replicates[x].ks < rep.replicates[y].ks; });
  rep.discarded = outlier_count(ok.size());
  rep.retained = ok.size() - rep.discarded;
  if (rep.retained == 0) {
    rep.retained = ok.size();
    rep.discarded = 0;
  }
  for (std::size_t k = 0; k < rep.retained; ++k) {
    auto& r = rep.replicates[ok[k]];
    r.retained = true;
    rep.activation_bound =
        std::max(rep.activation_bound, std::abs(r.activation_parameter / truth[0] - 1.0));
    rep.recovery_bound = std::max(rep.recovery_bound, std::abs(r.recovery_parameter / truth[1] - 1.0));
  }
  return rep;
}

// ---------------------------------------------------------------------------

struct ForwardSummary {
  double mean = 0.0;        // over validation sets
  double worst_high = 0.0;  // max over validation sets
  double worst_low = 0.0;   // min over validation sets
  double worst_relative_deviation = 0.0;  // max |set - ground truth| / ground truth
};

struct ForwardReport {
  ActivityStatistics ground_truth;
  std::vector<ActivityStatistics> sets;
  ForwardSummary active;       // average frequency of risk being active
  ForwardSummary activations;  // average number of activations per risk
};

namespace detail {

inline std::vector<HistoryMatrix> forward_runs(const RiskNetwork& net, const ModelParams& params,
                                               std::span<const std::uint8_t> initial, std::size_t months,
                                               std::size_t runs, std::uint64_t seed, unsigned jobs) {
  const CarpDynamics dyn(net, params);
  std::vector<HistoryMatrix> out(runs);
  parallel_for(runs, jobs, [&](std::size_t r) {
    Rng rng = make_stream(seed, r);
    out[r] = simulate_history(dyn, initial, months + 1, rng).history;
  });
  return out;
}

}  // namespace detail

// Extends the history by `months` from its last observed state under the
// ground truth and under every validation set. Run r of every parameter set
// uses make_stream(seed, r).
inline ForwardReport forward_error_bounds(const RiskNetwork& net, const HistoryMatrix& history,
                                          const ModelParams& ground_truth,
                                          std::span<const ModelParams> validation_sets,
                                          std::size_t months = 12, std::size_t runs = 100,
                                          std::uint64_t seed = 0, unsigned jobs = 1) {
  detail::check_aligned(history, net);
  if (months < 1 || runs < 1) throw UsageError("forward test needs at least one month and one run");
  const auto initial = history.month_state(history.months() - 1);
  auto stats_for = [&](const ModelParams& p) {
    auto sims = detail::forward_runs(net, p, initial, months, runs, seed, jobs);
    return activity_statistics(sims, true);
  };
  ForwardReport rep;
  rep.ground_truth = stats_for(ground_truth);
  for (const auto& p : validation_sets) rep.sets.push_back(stats_for(p));

  auto summarize = [&](auto get) {
    ForwardSummary s;
    const double gt = get(rep.ground_truth);
    if (rep.sets.empty()) {
      s.mean = s.worst_high = s.worst_low = gt;
      return s;
    }
    s.worst_high = -std::numeric_limits<double>::infinity();
    s.worst_low = std::numeric_limits<double>::infinity();
    for (const auto& st : rep.sets) {
      const double v = get(st);
      s.mean += v;
      s.worst_high = std::max(s.worst_high, v);
      s.worst_low = std::min(s.worst_low, v);
      const double dev = gt != 0.0 ? std::abs(v - gt) / gt : (v == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
      s.worst_relative_deviation = std::max(s.worst_relative_deviation, dev);
    }
    s.mean /= static_cast<double>(rep.sets.size());
    return s;
  };
  rep.active = summarize([](const ActivityStatistics& s) { return s.mean_active_fraction; });
  rep.activations = summarize([](const ActivityStatistics& s) { return s.mean_activations_per_risk; });
  return rep;
}

// ---------------------------------------------------------------------------

// 0->1 flips per transition step t -> t+1 (T-1 values), counted per risk.
inline std::vector<double> activation_counts_per_step(const HistoryMatrix& h) {
  std::vector<double> out(h.months() > 0 ? h.months() - 1 : 0, 0.0);
  for (std::size_t i = 0; i < h.risks(); ++i)
    for (std::size_t t = 0; t + 1 < h.months(); ++t) out[t] += (!h.at(i, t) && h.at(i, t + 1));
  return out;
}

struct CoverageSeries {
  std::vector<double> mean, stddev;
  double multiple = 0.0;                     // minimal m covering every historical point
  std::vector<std::size_t> infinite_steps;   // zero std with a nonzero deviation
};

struct NetworkEffectReport {
  std::vector<double> historical;
  CoverageSeries network, independent;
  ModelParams network_params, independent_params;
  double ratio = 0.0;  // m_network / m_independent
};

namespace detail {

inline CoverageSeries coverage(const RiskNetwork& net, const ModelParams& params, const HistoryMatrix& h,
                               std::span<const double> historical, std::size_t runs, std::uint64_t seed,
                               unsigned jobs) {
  const CarpDynamics dyn(net, params);
  const auto initial = h.month_state(0);
  const std::size_t steps = historical.size();
  std::vector<std::vector<double>> counts(runs);
  parallel_for(runs, jobs, [&](std::size_t r) {
    Rng rng = make_stream(seed, r);
    counts[r] = activation_counts_per_step(simulate_history(dyn, initial, h.months(), rng).history);
  });
  CoverageSeries cs;
  cs.mean.assign(steps, 0.0);
  cs.stddev.assign(steps, 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    double sum = 0.0;
    for (std::size_t r = 0; r < runs; ++r) sum += counts[r][t];
    const double mean = sum / static_cast<double>(runs);
    double ss = 0.0;
    for (std::size_t r = 0; r < runs; ++r) ss += (counts[r][t] - mean) * (counts[r][t] - mean);
    cs.mean[t] = mean;
    cs.stddev[t] = runs > 1 ? std::sqrt(ss / static_cast<double>(runs - 1)) : 0.0;
    const double dev = std::abs(historical[t] - mean);
    if (cs.stddev[t] > 0.0) {
      cs.multiple = std::max(cs.multiple, dev / cs.stddev[t]);
    } else if (dev > 0.0) {
      cs.infinite_steps.push_back(t);
      cs.multiple = std::numeric_limits<double>::infinity();
    }
  }
  return cs;
}

}  // namespace detail

// Simulates the history's span under the network model with `params` and
// under the edgeless model with (alpha, gamma) refitted at beta = 0, both from
// the history's first month and with the same run streams.
inline NetworkEffectReport network_effect_comparison(const RiskNetwork& net, const HistoryMatrix& history,
                                                     const ModelParams& params, std::size_t runs = 100,
                                                     std::uint64_t seed = 0, const FitConfig& fit_cfg = {},
                                                     unsigned jobs = 1,
                                                     std::optional<ModelParams> independent_params = std::nullopt) {
  detail::check_aligned(history, net);
  if (runs < 2) throw UsageError("network-effect comparison needs at least two runs");
  NetworkEffectReport rep;
  rep.historical = activation_counts_per_step(history);
  rep.network_params = params;
  const RiskNetwork edgeless = net.without_edges();
  if (independent_params) {
    rep.independent_params = *independent_params;
  } else {
    FitConfig cfg = fit_cfg;
    cfg.fixed_beta = 0.0;
    auto res = fit(history, edgeless, cfg);
    if (!res.converged) throw NumericalError("independent-model refit did not converge");
    rep.independent_params = res.params;
  }
  rep.network = detail::coverage(net, params, history, rep.historical, runs, seed, jobs);
  rep.independent = detail::coverage(edgeless, rep.independent_params, history, rep.historical, runs, seed, jobs);
  rep.ratio = rep.network.multiple / rep.independent.multiple;
  return rep;
}

// ---------------------------------------------------------------------------

struct SensitivityConfig {
  double perturbation = 0.10;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  FitConfig fit;
  SteadyStateOptions steady;
};

struct SensitivityReport {
  std::vector<double> baseline;            // p_hat with the given params
  std::vector<double> single_likelihood;   // [i]: p_hat_i after cutting L_i alone
  std::vector<double> single_history;      // [i]: p_hat_i after thinning risk i's history alone and refitting
  std::vector<double> all_likelihood;      // p_hat after cutting every L
  std::vector<double> all_history;         // p_hat after thinning every history and refitting
  ModelParams all_history_params;
  std::vector<ModelParams> single_history_params;
  std::vector<std::size_t> order;          // risks by descending baseline p_hat
};

// Deactivates round(fraction * active months) uniformly chosen active months of
// risk i. The choice depends only on (seed, i).
inline void thin_history(HistoryMatrix& h, std::size_t i, double fraction, std::uint64_t seed) {
  std::vector<std::size_t> active;
  for (std::size_t t = 0; t < h.months(); ++t)
    if (h.at(i, t)) active.push_back(t);
  const auto remove = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(active.size())));
  Rng rng = make_stream(seed, i);
  for (std::size_t k = 0; k < remove; ++k) {
    const std::size_t span = active.size() - k;
    const auto pick = k + std::min(span - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(span)));
    std::swap(active[k], active[pick]);
    h.set(i, active[k], 0);
  }
}

inline SensitivityReport sensitivity_suite(const RiskNetwork& net, const HistoryMatrix& history,
                                           const ModelParams& params, const SensitivityConfig& cfg = {}) {
  detail::check_aligned(history, net);
  if (!(cfg.perturbation >= 0.0 && cfg.perturbation < 1.0)) throw UsageError("perturbation must lie in [0, 1)");
  const std::size_t R = net.size();
  const auto L = net.likelihoods();
  const double keep = 1.0 - cfg.perturbation;
  SteadyStateOptions ss = cfg.steady;
  ss.dual_start = false;
  auto solve = [&](std::span<const double> lik, const ModelParams& p) {
    auto st = solve_steady_state(lik, p, net, ss);
    require_converged(st);
    return st.p_hat;
  };
  auto refit = [&](const HistoryMatrix& h) {
    auto res = fit(h, net, cfg.fit);
    if (!res.converged) throw NumericalError("refit after history perturbation did not converge");
    return res.params;
  };

  SensitivityReport rep;
  rep.baseline = solve(L, params);
  rep.single_likelihood.assign(R, 0.0);
  rep.single_history.assign(R, 0.0);
  rep.single_history_params.assign(R, ModelParams{});

  parallel_for(R, cfg.jobs, [&](std::size_t i) {
    std::vector<double> cut = L;
    cut[i] *= keep;
    rep.single_likelihood[i] = solve(cut, params)[i];

    HistoryMatrix thinned = history;
    thin_history(thinned, i, cfg.perturbation, cfg.seed);
    const auto p = refit(thinned);
    rep.single_history_params[i] = p;
    rep.single_history[i] = solve(L, p)[i];
  });

  std::vector<double> all_cut = L;
  for (auto& l : all_cut) l *= keep;
  rep.all_likelihood = solve(all_cut, params);

  HistoryMatrix thinned = history;
  for (std::size_t i = 0; i < R; ++i) thin_history(thinned, i, cfg.perturbation, cfg.seed);
  rep.all_history_params = refit(thinned);
  rep.all_history = solve(L, rep.all_history_params);

  rep.order.resize(R);
  std::iota(rep.order.begin(), rep.order.end(), 0);
  std::stable_sort(rep.order.begin(), rep.order.end(),
                   [&](auto a, auto b) { return rep.baseline[a] > rep.baseline[b]; });
  return rep;
}

// ---------------------------------------------------------------------------

// Median KS distance of refitted (a alpha + b beta, gamma) to the truth, using
// each replicate's own attribution fractions on both sides, for each history
// length. Histories start from `initial`.
inline std::vector<double> recovery_error_by_length(const RiskNetwork& net, const ModelParams& truth,
                                                    std::span<const std::uint8_t> initial,
                                                    std::span<const std::size_t> lengths,
                                                    std::size_t replicates, std::uint64_t seed,
                                                    const FitConfig& fit_cfg = {}, unsigned jobs = 1) {
  const CarpDynamics dyn(net, truth);
  std::vector<double> medians;
  for (std::size_t li = 0; li < lengths.size(); ++li) {
    std::vector<double> errors(replicates, std::numeric_limits<double>::infinity());
    parallel_for(replicates, jobs, [&](std::size_t r) {
      Rng rng = make_stream(derive_seed(seed, li), r);
      auto sim = simulate_history(dyn, initial, lengths[li], rng);
      const auto fr = AttributionFractions::from(sim.causes);
      auto res = fit(sim.history, net, fit_cfg);
      const std::vector<double> got{fr.activation_parameter(res.params), res.params.gamma};
      const std::vector<double> want{fr.activation_parameter(truth), truth.gamma};
      if (res.converged && want[0] > 0.0) errors[r] = ks_distance(got, want);
    });
    std::sort(errors.begin(), errors.end());
    const std::size_t n = errors.size();
    medians.push_back(n % 2 ? errors[n / 2] : 0.5 * (errors[n / 2 - 1] + errors[n / 2]));
  }
  return medians;
}

}  // namespace carp
