#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace carp {

struct NelderMeadOptions {
  double ftol = 1e-8;          // stop when f(worst) - f(best) < ftol
  double xtol = 1e-14;         // or when the simplex collapses
  std::size_t max_iter = 5000;
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
};

struct NelderMeadResult {
  std::vector<double> x;
  double fx = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

// Box-constrained Nelder-Mead minimizer. Trial points are projected onto
// [lower, upper]; +inf and NaN objective values rank worst.
template <class F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> x0, const std::vector<double>& step,
                             const std::vector<double>& lower, const std::vector<double>& upper,
                             const NelderMeadOptions& opt = {}) {
  const std::size_t n = x0.size();
  using Point = std::vector<double>;
  NelderMeadResult res;

  auto project = [&](Point& p) {
    for (std::size_t k = 0; k < n; ++k) p[k] = std::clamp(p[k], lower[k], upper[k]);
  };
  auto eval = [&](const Point& p) {
    ++res.evaluations;
    double v = f(p);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  project(x0);
  std::vector<Point> simplex(n + 1, x0);
  for (std::size_t k = 0; k < n; ++k) {
    Point& v = simplex[k + 1];
    v[k] += step[k];
    if (v[k] > upper[k]) v[k] = x0[k] - step[k];
    project(v);
  }
  std::vector<double> fv(n + 1);
  for (std::size_t k = 0; k <= n; ++k) fv[k] = eval(simplex[k]);

  std::vector<std::size_t> order(n + 1);
  Point centroid(n), trial(n), trial2(n);
  for (; res.iterations < opt.max_iter; ++res.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    double xspread = 0.0;
    for (std::size_t k = 0; k <= n; ++k)
      for (std::size_t d = 0; d < n; ++d)
        xspread = std::max(xspread, std::abs(simplex[k][d] - simplex[best][d]));
    if (std::isfinite(fv[worst]) && fv[worst] - fv[best] < opt.ftol) {
      res.converged = true;
      break;
    }
    if (xspread < opt.xtol) {
      res.converged = std::isfinite(fv[best]);
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k <= n; ++k)
      if (k != worst)
        for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[k][d] / static_cast<double>(n);

    for (std::size_t d = 0; d < n; ++d)
      trial[d] = centroid[d] + opt.reflection * (centroid[d] - simplex[worst][d]);
    project(trial);
    const double fr = eval(trial);

    if (fr < fv[best]) {
      for (std::size_t d = 0; d < n; ++d)
        trial2[d] = centroid[d] + opt.expansion * (trial[d] - centroid[d]);
      project(trial2);
      const double fe = eval(trial2);
      if (fe < fr) {
        simplex[worst] = trial2;
        fv[worst] = fe;
      } else {
        simplex[worst] = trial;
        fv[worst] = fr;
      }
      continue;
    }
    if (fr < fv[second]) {
      simplex[worst] = trial;
      fv[worst] = fr;
      continue;
    }
    // Contraction: outside if the reflection beat the worst point, else inside.
    const bool outside = fr < fv[worst];
    for (std::size_t d = 0; d < n; ++d) {
      const double toward = outside ? trial[d] : simplex[worst][d];
      trial2[d] = centroid[d] + opt.contraction * (toward - centroid[d]);
    }
    project(trial2);
    const double fc = eval(trial2);
    if (fc < (outside ? fr : fv[worst])) {
      simplex[worst] = trial2;
      fv[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == best) continue;
      for (std::size_t d = 0; d < n; ++d)
        simplex[k][d] = simplex[best][d] + opt.shrink * (simplex[k][d] - simplex[best][d]);
      fv[k] = eval(simplex[k]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin());
  res.x = simplex[best];
  res.fx = fv[best];
  return res;
}

}  // namespace carp
