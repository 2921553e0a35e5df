#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "engine.hpp"
#include "meanfield.hpp"
#include "parallel.hpp"
#include "risk_model.hpp"

namespace carp {

// Steady-state probabilities of the three transition processes per risk and
// their shares. The joint internal-and-external activation term is dropped.
struct TransitionFractions {
  std::vector<double> A_int, A_ext, A_rec;
  std::vector<double> a_int, a_ext, a_rec;  // NaN where the three A's are all zero
  std::vector<bool> defined;
};

inline TransitionFractions transition_fractions(std::span<const double> p_hat, std::span<const double> L,
                                                const ModelParams& params, const RiskNetwork& net) {
  detail::check_meanfield_inputs(L, params, net);
  const std::size_t R = net.size();
  if (p_hat.size() != R) throw DataError("steady state does not match network");
  TransitionFractions f;
  for (auto* v : {&f.A_int, &f.A_ext, &f.A_rec, &f.a_int, &f.a_ext, &f.a_rec}) v->assign(R, 0.0);
  f.defined.assign(R, false);
  for (std::size_t i = 0; i < R; ++i) {
    const auto pr = detail::process_probabilities_unchecked(L[i], params);
    double neighbor_mass = 0.0;
    for (auto j : net.neighbors(i)) neighbor_mass += p_hat[j];
    const double c = std::log1p(-L[i]);
    f.A_int[i] = (1.0 - p_hat[i]) * pr.p_int;
    // 1-(1-p_ext)^S = 1-(1-L)^(beta S)
    f.A_ext[i] = (1.0 - p_hat[i]) * -std::expm1(params.beta * neighbor_mass * c);
    f.A_rec[i] = p_hat[i] * pr.p_rec;
    const double total = f.A_int[i] + f.A_ext[i] + f.A_rec[i];
    if (total > 0.0) {
      f.defined[i] = true;
      f.a_int[i] = f.A_int[i] / total;
      f.a_ext[i] = f.A_ext[i] / total;
      f.a_rec[i] = f.A_rec[i] / total;
    } else {
      f.a_int[i] = f.a_ext[i] = f.a_rec[i] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return f;
}

// Steady state with risk k disabled (L_k = 0).
inline SteadyState knockout_steady_state(std::size_t k, std::span<const double> L,
                                         const ModelParams& params, const RiskNetwork& net,
                                         const SteadyStateOptions& opt = {}) {
  std::vector<double> knocked(L.begin(), L.end());
  knocked.at(k) = 0.0;
  return solve_steady_state(knocked, params, net, opt);
}

// Steady state of the network with risk k deleted, re-expanded to the full
// index space with p_hat_k = 0. Independent of the knockout path.
inline SteadyState deletion_steady_state(std::size_t k, std::span<const double> L,
                                         const ModelParams& params, const RiskNetwork& net,
                                         const SteadyStateOptions& opt = {}) {
  const RiskNetwork reduced = net.without_risk(k);
  std::vector<double> reduced_L;
  for (std::size_t i = 0; i < net.size(); ++i)
    if (i != k) reduced_L.push_back(L[i]);
  SteadyState st = solve_steady_state(reduced_L, params, reduced, opt);
  for (auto* v : {&st.p_hat, &st.p_hat_from_one})
    if (!v->empty()) v->insert(v->begin() + static_cast<std::ptrdiff_t>(k), 0.0);
  return st;
}

// I[i][j] = a_j^ext - a_{j-i}^ext, the drop in j's external activation share
// when i is disabled. Diagonal entries are NaN.
struct InfluenceMatrix {
  std::size_t size = 0;
  std::vector<double> entries;  // row-major [source][target]
  TransitionFractions baseline;
  std::vector<double> baseline_p_hat;
  std::size_t anomalies = 0;  // entries below -1e-12

  double at(std::size_t source, std::size_t target) const { return entries[source * size + target]; }
};

inline InfluenceMatrix risk_influence(const RiskNetwork& net, std::span<const double> L,
                                      const ModelParams& params, const SteadyStateOptions& opt = {},
                                      unsigned jobs = 1) {
  const std::size_t R = net.size();
  const SteadyState base = solve_steady_state(L, params, net, opt);
  require_converged(base);
  InfluenceMatrix m;
  m.size = R;
  m.baseline_p_hat = base.p_hat;
  m.baseline = transition_fractions(base.p_hat, L, params, net);
  m.entries.assign(R * R, std::numeric_limits<double>::quiet_NaN());

  SteadyStateOptions single = opt;
  single.dual_start = false;
  parallel_for(R, jobs, [&](std::size_t i) {
    std::vector<double> knocked(L.begin(), L.end());
    knocked[i] = 0.0;
    const SteadyState st = solve_steady_state(knocked, params, net, single);
    if (!st.converged)
      throw NumericalError("knockout steady state for risk '" + net.risk(i).id + "' did not converge");
    const auto fr = transition_fractions(st.p_hat, knocked, params, net);
    for (std::size_t j = 0; j < R; ++j) {
      if (j == i) continue;
      const double base_ext = m.baseline.defined[j] ? m.baseline.a_ext[j] : 0.0;
      const double knocked_ext = fr.defined[j] ? fr.a_ext[j] : 0.0;
      m.entries[i * R + j] = base_ext - knocked_ext;
    }
  });
  for (std::size_t k = 0; k < R * R; ++k)
    if (m.entries[k] < -1e-12) ++m.anomalies;
  return m;
}

inline InfluenceMatrix risk_influence(const RiskNetwork& net, const ModelParams& params,
                                      const SteadyStateOptions& opt = {}, unsigned jobs = 1) {
  const auto L = net.likelihoods();
  return risk_influence(net, L, params, opt, jobs);
}

enum class CategoryAggregation { sum, mean };

struct CategoryInfluence {
  using Grid = std::array<std::array<double, 5>, 5>;  // [source category][target category]
  Grid raw{}, normalized{}, log_scaled{};
  bool degenerate = false;  // all raw entries equal: normalization undefined
};

// Raw category-to-category influence, min-max normalized over the 25 entries,
// then displayed as ln(1 + kappa * normalized).
inline CategoryInfluence category_influence(const InfluenceMatrix& I, std::span<const Category> categories,
                                            CategoryAggregation agg = CategoryAggregation::sum,
                                            double kappa = 99.0) {
  if (categories.size() != I.size) throw DataError("category list does not match influence matrix");
  CategoryInfluence out;
  std::array<std::array<std::size_t, 5>, 5> pairs{};
  for (std::size_t i = 0; i < I.size; ++i)
    for (std::size_t j = 0; j < I.size; ++j) {
      if (i == j) continue;
      const auto a = static_cast<std::size_t>(categories[i]);
      const auto b = static_cast<std::size_t>(categories[j]);
      out.raw[a][b] += I.at(i, j);
      ++pairs[a][b];
    }
  if (agg == CategoryAggregation::mean)
    for (std::size_t a = 0; a < 5; ++a)
      for (std::size_t b = 0; b < 5; ++b)
        if (pairs[a][b]) out.raw[a][b] /= static_cast<double>(pairs[a][b]);

  double lo = out.raw[0][0], hi = out.raw[0][0];
  for (const auto& row : out.raw)
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  out.degenerate = !(hi > lo);
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = 0; b < 5; ++b) {
      out.normalized[a][b] = out.degenerate ? 0.0 : (out.raw[a][b] - lo) / (hi - lo);
      out.log_scaled[a][b] = std::log1p(kappa * out.normalized[a][b]);
    }
  return out;
}

inline std::vector<Category> categories_of(const RiskNetwork& net) {
  std::vector<Category> out;
  for (const auto& r : net.risks()) out.push_back(r.category);
  return out;
}

}  // namespace carp
