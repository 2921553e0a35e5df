#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "engine.hpp"
#include "errors.hpp"
#include "nelder_mead.hpp"
#include "risk_model.hpp"

namespace carp {

namespace detail {

inline void check_aligned(const HistoryMatrix& h, const RiskNetwork& net) {
  if (h.risks() != net.size()) throw DataError("history and network have different risk counts");
  for (std::size_t i = 0; i < net.size(); ++i)
    if (h.risk_ids()[i] != net.risk(i).id)
      throw DataError("history risk order does not match network at '" + net.risk(i).id + "'");
}

inline double log_activation(double exponent, double c) {
  // ln(1 - (1-L)^exponent); -inf when exponent == 0
  return std::log(-std::expm1(exponent * c));
}

}  // namespace detail

// ln P_i(t)^{s_i(t) -> s_i(t+1)} for 0-based month t in [0, T-2]. The 0->1
// probability uses the neighbors active in month t. Throws ImpossibleDataError
// when the observed transition has probability zero.
inline double transition_log_prob(std::size_t i, std::size_t t, const HistoryMatrix& h,
                                  const ModelParams& params, const RiskNetwork& net) {
  detail::check_aligned(h, net);
  if (h.months() < 2 || t + 1 >= h.months()) throw DataError("transition month out of range");
  if (i >= net.size()) throw DataError("risk index out of range");
  const auto probs = process_probabilities(net.risk(i).normalized_likelihood, params);
  const bool from = h.at(i, t), to = h.at(i, t + 1);
  double p;
  if (from) {
    p = to ? probs.p_con : probs.p_rec;
  } else {
    std::size_t k = 0;
    for (auto j : net.neighbors(i)) k += h.at(j, t);
    const double stay = (1.0 - probs.p_int) * std::pow(1.0 - probs.p_ext, static_cast<double>(k));
    p = to ? 1.0 - stay : stay;
  }
  if (!(p > 0.0))
    throw ImpossibleDataError("observed transition of risk '" + net.risk(i).id + "' at " +
                              h.month_labels()[t] + " has zero probability");
  return std::log(p);
}

// Per-risk transition counts; the log-likelihood depends on the history only
// through these.
struct TransitionSummary {
  struct RiskCounts {
    double log_survival = 0.0;        // ln(1 - L_i)
    std::uint64_t stay_passive = 0;   // 0->0 cells
    std::uint64_t stay_passive_exposure = 0;  // sum of active neighbors over 0->0 cells
    std::map<std::uint32_t, std::uint64_t> activations_by_k;  // 0->1 cells by active neighbors
    std::uint64_t stay_active = 0;    // 1->1
    std::uint64_t recoveries = 0;     // 1->0
  };
  std::vector<RiskCounts> risks;

  std::uint64_t activations() const {
    std::uint64_t n = 0;
    for (const auto& r : risks)
      for (const auto& [k, c] : r.activations_by_k) n += c;
    return n;
  }
  std::uint64_t recoveries() const {
    std::uint64_t n = 0;
    for (const auto& r : risks) n += r.recoveries;
    return n;
  }
  std::uint64_t active_cells() const {
    std::uint64_t n = 0;
    for (const auto& r : risks) n += r.stay_active + r.recoveries;
    return n;
  }
  // True when some passive cell had an active neighbor, i.e. beta enters the likelihood.
  bool neighbor_exposure() const {
    for (const auto& r : risks) {
      if (r.stay_passive_exposure > 0) return true;
      for (const auto& [k, c] : r.activations_by_k)
        if (k > 0) return true;
    }
    return false;
  }
};

inline TransitionSummary summarize_transitions(const HistoryMatrix& h, const RiskNetwork& net) {
  detail::check_aligned(h, net);
  if (h.months() < 2) throw DataError("log-likelihood needs at least two months");
  TransitionSummary s;
  s.risks.resize(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    auto& rc = s.risks[i];
    rc.log_survival = std::log1p(-net.risk(i).normalized_likelihood);
    for (std::size_t t = 0; t + 1 < h.months(); ++t) {
      const bool from = h.at(i, t), to = h.at(i, t + 1);
      if (from) {
        (to ? rc.stay_active : rc.recoveries)++;
        continue;
      }
      std::uint32_t k = 0;
      for (auto j : net.neighbors(i)) k += h.at(j, t);
      if (to) {
        rc.activations_by_k[k]++;
      } else {
        rc.stay_passive++;
        rc.stay_passive_exposure += k;
      }
    }
  }
  return s;
}

// Log-likelihood from the summary; -inf for impossible data, never throws.
inline double log_likelihood(const TransitionSummary& s, const ModelParams& p) {
  double ll = 0.0;
  for (const auto& r : s.risks) {
    const double c = r.log_survival;
    if (r.stay_passive) ll += c * (p.alpha * static_cast<double>(r.stay_passive) +
                                   p.beta * static_cast<double>(r.stay_passive_exposure));
    for (const auto& [k, n] : r.activations_by_k)
      ll += static_cast<double>(n) * detail::log_activation(p.alpha + p.beta * k, c);
    if (r.stay_active) ll += static_cast<double>(r.stay_active) * detail::log_activation(p.gamma, c);
    if (r.recoveries) ll += static_cast<double>(r.recoveries) * p.gamma * c;
  }
  return ll;
}

// Sum over t = 1..T-1 and all risks of ln P_i(t). Throws ImpossibleDataError.
inline double log_likelihood(const HistoryMatrix& h, const ModelParams& params, const RiskNetwork& net) {
  params.validate();
  for (const auto& r : net.risks())
    if (!(r.normalized_likelihood > 0.0 && r.normalized_likelihood < 1.0))
      throw DataError("normalized likelihood must lie in (0, 1)");
  const double ll = log_likelihood(summarize_transitions(h, net), params);
  if (!(ll > -std::numeric_limits<double>::infinity()))
    throw ImpossibleDataError("history has a transition with zero probability under these parameters");
  return ll;
}

struct FitConfig {
  std::size_t grid_points = 9;  // per free axis, log-spaced
  double grid_low = 1e-4;
  double grid_high = 10.0;
  std::size_t top_k = 5;
  double lower = 0.0;
  double upper = 10.0;
  double ftol = 1e-8;
  std::size_t max_iter = 5000;
  std::size_t max_restarts = 20;
  double polish_step = 1e-4;  // no +-polish_step coordinate move improves the optimum
  std::optional<double> fixed_alpha, fixed_beta, fixed_gamma;
};

struct FitResult {
  ModelParams params;
  double log_likelihood = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::size_t restarts = 0;
  bool converged = false;
  bool degenerate = false;  // no activations in the history
  std::vector<std::string> flags;

  bool has_flag(std::string_view f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
  }
};

// Maximum likelihood estimate of (alpha, beta, gamma): a log-spaced grid over
// the free parameters, Nelder-Mead restarted from the top grid cells until a
// restart gains less than ftol, then a coordinate polish. Parameters the data
// cannot inform (beta without neighbor exposure, gamma without active cells)
// are pinned at zero and flagged.
inline FitResult fit(const TransitionSummary& s, const FitConfig& cfg = {}) {
  if (!(cfg.lower >= 0.0 && cfg.upper > cfg.lower)) throw UsageError("invalid parameter box");
  if (cfg.grid_points < 2 || !(cfg.grid_low > 0.0 && cfg.grid_high > cfg.grid_low))
    throw UsageError("invalid fit grid");
  FitResult out;
  std::array<std::optional<double>, 3> fixed{cfg.fixed_alpha, cfg.fixed_beta, cfg.fixed_gamma};
  static constexpr std::array<const char*, 3> names{"alpha", "beta", "gamma"};

  if (s.activations() == 0) {
    out.degenerate = true;
    out.flags.push_back("no_activations");
    if (!fixed[0]) fixed[0] = cfg.lower;
    if (!fixed[1]) fixed[1] = cfg.lower;
  }
  if (!fixed[1] && !s.neighbor_exposure()) {
    fixed[1] = 0.0;
    out.flags.push_back("beta_unidentified");
  }
  if (!fixed[2] && s.active_cells() == 0) {
    fixed[2] = 0.0;
    out.flags.push_back("gamma_unidentified");
  }

  std::vector<std::size_t> free;
  for (std::size_t k = 0; k < 3; ++k)
    if (!fixed[k]) free.push_back(k);

  auto to_params = [&](const std::vector<double>& x) {
    std::array<double, 3> v{};
    for (std::size_t k = 0; k < 3; ++k) v[k] = fixed[k].value_or(0.0);
    for (std::size_t d = 0; d < free.size(); ++d) v[free[d]] = x[d];
    return ModelParams{v[0], v[1], v[2]};
  };
  auto objective = [&](const std::vector<double>& x) {
    ++out.evaluations;
    const double ll = log_likelihood(s, to_params(x));
    return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
  };

  const std::size_t n = free.size();
  if (n == 0) {
    out.params = to_params({});
    out.log_likelihood = log_likelihood(s, out.params);
    out.converged = std::isfinite(out.log_likelihood);
  } else {
    std::vector<double> lower(n, cfg.lower), upper(n, cfg.upper);
    std::vector<double> axis(cfg.grid_points);
    for (std::size_t g = 0; g < cfg.grid_points; ++g)
      axis[g] = std::exp(std::log(cfg.grid_low) + (std::log(cfg.grid_high) - std::log(cfg.grid_low)) *
                                                      static_cast<double>(g) /
                                                      static_cast<double>(cfg.grid_points - 1));
    std::vector<std::pair<double, std::vector<double>>> grid;
    std::vector<std::size_t> idx(n, 0);
    for (;;) {
      std::vector<double> x(n);
      for (std::size_t d = 0; d < n; ++d) x[d] = std::clamp(axis[idx[d]], cfg.lower, cfg.upper);
      grid.emplace_back(objective(x), x);
      std::size_t d = 0;
      while (d < n && ++idx[d] == cfg.grid_points) idx[d++] = 0;
      if (d == n) break;
    }
    std::stable_sort(grid.begin(), grid.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    NelderMeadOptions nm;
    nm.ftol = cfg.ftol;
    nm.max_iter = cfg.max_iter;
    std::vector<double> best_x;
    double best_f = std::numeric_limits<double>::infinity();
    bool best_converged = false;
    const std::size_t starts = std::min(cfg.top_k, grid.size());
    for (std::size_t st = 0; st < starts; ++st) {
      std::vector<double> x = grid[st].second;
      double fx = grid[st].first;
      bool converged = false;
      for (std::size_t r = 0; r <= cfg.max_restarts; ++r) {
        std::vector<double> step(n);
        for (std::size_t d = 0; d < n; ++d) step[d] = std::max(0.25 * std::abs(x[d]), 1e-3);
        auto res = nelder_mead(objective, x, step, lower, upper, nm);
        out.iterations += res.iterations;
        if (r > 0) ++out.restarts;
        const double gain = fx - res.fx;
        if (res.fx <= fx) {
          x = res.x;
          fx = res.fx;
        }
        if (res.converged && !(gain >= cfg.ftol)) {
          converged = std::isfinite(fx);
          break;
        }
      }
      if (fx < best_f) {
        best_f = fx;
        best_x = x;
        best_converged = converged;
      }
    }
    if (best_x.empty()) best_x = grid.front().second;

    // Coordinate polish so that no single +-polish_step move improves.
    auto polish = [&](std::vector<double>& x, double& fx) {
      std::vector<double> h(n);
      for (std::size_t d = 0; d < n; ++d) h[d] = 0.05 * std::max(std::abs(x[d]), 1e-3);
      while (*std::max_element(h.begin(), h.end()) > 1e-10) {
        bool moved = false;
        for (std::size_t d = 0; d < n; ++d) {
          for (double sign : {1.0, -1.0}) {
            auto y = x;
            y[d] = std::clamp(x[d] + sign * h[d], lower[d], upper[d]);
            const double fy = objective(y);
            if (fy < fx) {
              x = y;
              fx = fy;
              moved = true;
              break;
            }
          }
        }
        if (!moved)
          for (auto& hd : h) hd *= 0.5;
      }
    };
    if (std::isfinite(best_f)) {
      for (int round = 0; round < 50; ++round) {
        polish(best_x, best_f);
        bool improved = false;
        for (std::size_t d = 0; d < n && !improved; ++d)
          for (double sign : {1.0, -1.0}) {
            auto y = best_x;
            y[d] = std::clamp(best_x[d] + sign * cfg.polish_step, lower[d], upper[d]);
            const double fy = objective(y);
            if (fy < best_f) {
              best_x = y;
              best_f = fy;
              improved = true;
              break;
            }
          }
        if (!improved) break;
      }
    }
    out.params = to_params(best_x);
    out.log_likelihood = -best_f;
    out.converged = best_converged && std::isfinite(best_f);
  }

  // Bound flags for every parameter the optimizer (or the no-activation
  // shortcut) chose; user-fixed and unidentified parameters are skipped.
  const std::array<bool, 3> user_fixed{cfg.fixed_alpha.has_value(), cfg.fixed_beta.has_value(),
                                       cfg.fixed_gamma.has_value()};
  const std::array<double, 3> values{out.params.alpha, out.params.beta, out.params.gamma};
  for (std::size_t k = 0; k < 3; ++k) {
    if (user_fixed[k] || out.has_flag(std::string(names[k]) + "_unidentified")) continue;
    if (values[k] <= cfg.lower + 1e-9) out.flags.push_back(std::string(names[k]) + "_at_lower_bound");
    if (values[k] >= cfg.upper - 1e-9) out.flags.push_back(std::string(names[k]) + "_at_upper_bound");
  }
  return out;
}

inline FitResult fit(const HistoryMatrix& h, const RiskNetwork& net, const FitConfig& cfg = {}) {
  for (const auto& r : net.risks())
    if (!(r.normalized_likelihood > 0.0 && r.normalized_likelihood < 1.0))
      throw DataError("normalized likelihood must lie in (0, 1)");
  return fit(summarize_transitions(h, net), cfg);
}

}  // namespace carp
