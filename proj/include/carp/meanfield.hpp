#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "engine.hpp"
#include "errors.hpp"
#include "risk_model.hpp"

namespace carp {

struct SteadyStateOptions {
  double tol = 1e-12;
  std::size_t max_iter = 1'000'000;
  bool dual_start = true;  // also iterate down from p = 1
};

struct SteadyState {
  std::vector<double> p_hat;      // least fixed point (iteration from 0)
  double residual = 0.0;          // max_i |p_hat_i - Phi_i(p_hat)|
  std::size_t iterations = 0;
  bool converged = false;
  bool monotone = true;           // Phi^k(0) never decreased in any component by more than 1e-15

  std::vector<double> p_hat_from_one;  // limit of the iteration from p = 1
  std::size_t iterations_from_one = 0;
  bool converged_from_one = false;
  double start_discrepancy = 0.0;      // max_i |p_hat_i - p_hat_from_one_i|
  bool multiple_fixed_points = false;  // discrepancy > 100 tol
};

namespace detail {

inline void check_meanfield_inputs(std::span<const double> L, const ModelParams& params,
                                   const RiskNetwork& net) {
  params.validate();
  if (L.size() != net.size()) throw DataError("likelihood vector does not match network");
  for (double l : L)
    if (!(l >= 0.0 && l < 1.0)) throw DataError("normalized likelihood outside [0, 1)");
}

inline void apply_map(std::span<const double> p, std::span<const double> log_survival,
                      const ModelParams& params, const RiskNetwork& net, std::span<double> out) {
  for (std::size_t i = 0; i < net.size(); ++i) {
    double neighbor_mass = 0.0;
    for (auto j : net.neighbors(i)) neighbor_mass += p[j];
    const double c = log_survival[i];
    const double activate = -std::expm1((params.alpha + params.beta * neighbor_mass) * c);
    const double recover = std::exp(params.gamma * c);
    out[i] = activate / (activate + recover);
  }
}

}  // namespace detail

// Phi_i(p) = [1-(1-L_i)^(a + b S_i)] / [1-(1-L_i)^(a + b S_i) + (1-L_i)^g],
// S_i = sum of p_j over neighbors j of i. L_i = 0 gives Phi_i = 0.
inline std::vector<double> fixed_point_map(std::span<const double> p, std::span<const double> L,
                                           const ModelParams& params, const RiskNetwork& net) {
  detail::check_meanfield_inputs(L, params, net);
  if (p.size() != net.size()) throw DataError("probability vector does not match network");
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw DataError("probability outside [0, 1]");
  std::vector<double> c(L.size()), out(L.size());
  for (std::size_t i = 0; i < L.size(); ++i) c[i] = std::log1p(-L[i]);
  detail::apply_map(p, c, params, net, out);
  return out;
}

// Successive approximation p <- Phi(p) from p = 0. Since Phi is monotone in p
// the sequence increases to the least fixed point. The returned vector
// satisfies ||p - Phi(p)||_inf <= tol when converged.
inline SteadyState solve_steady_state(std::span<const double> L, const ModelParams& params,
                                      const RiskNetwork& net, const SteadyStateOptions& opt = {}) {
  detail::check_meanfield_inputs(L, params, net);
  if (!(opt.tol > 0.0)) throw UsageError("steady-state tolerance must be positive");
  const std::size_t R = net.size();
  std::vector<double> c(R);
  for (std::size_t i = 0; i < R; ++i) c[i] = std::log1p(-L[i]);

  SteadyState st;
  auto iterate = [&](double start, std::vector<double>& p, std::size_t& iters, bool track_monotone) {
    p.assign(R, start);
    std::vector<double> next(R);
    for (iters = 0; iters < opt.max_iter; ++iters) {
      detail::apply_map(p, c, params, net, next);
      double delta = 0.0;
      for (std::size_t i = 0; i < R; ++i) {
        delta = std::max(delta, std::abs(next[i] - p[i]));
        if (track_monotone && next[i] < p[i] - 1e-15) st.monotone = false;  // rounding allowance
      }
      if (delta <= opt.tol) {
        if (track_monotone) st.residual = delta;
        return true;
      }
      p.swap(next);
    }
    if (track_monotone) {
      detail::apply_map(p, c, params, net, next);
      st.residual = 0.0;
      for (std::size_t i = 0; i < R; ++i) st.residual = std::max(st.residual, std::abs(next[i] - p[i]));
    }
    return false;
  };

  st.converged = iterate(0.0, st.p_hat, st.iterations, true);
  if (opt.dual_start) {
    st.converged_from_one = iterate(1.0, st.p_hat_from_one, st.iterations_from_one, false);
    for (std::size_t i = 0; i < R; ++i)
      st.start_discrepancy = std::max(st.start_discrepancy, std::abs(st.p_hat[i] - st.p_hat_from_one[i]));
    st.multiple_fixed_points = st.start_discrepancy > 100.0 * opt.tol;
  }
  return st;
}

inline SteadyState solve_steady_state(const RiskNetwork& net, const ModelParams& params,
                                      const SteadyStateOptions& opt = {}) {
  const auto L = net.likelihoods();
  return solve_steady_state(L, params, net, opt);
}

inline const SteadyState& require_converged(const SteadyState& st) {
  if (!st.converged)
    throw NumericalError("steady-state iteration did not converge (residual " +
                         csv::fmt_double(st.residual) + ")");
  return st;
}

}  // namespace carp
