#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

namespace epgi {

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0;
  int iterations = 0;
  bool converged = false;
};

/// Derivative-free simplex minimization (reflection 1, expansion 2,
/// contraction 0.5, shrink 0.5). Stops when the relative spread of simplex
/// values drops below `tol` or after `max_iter` objective evaluations.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    const std::vector<double>& x0,
                                    const std::vector<double>& step, double tol, int max_iter) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> xs(n + 1, x0);
  std::vector<double> fx(n + 1);
  int evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    return f(x);
  };
  for (std::size_t i = 0; i < n; ++i) xs[i + 1][i] += step[i];
  for (std::size_t i = 0; i <= n; ++i) fx[i] = eval(xs[i]);

  std::vector<std::size_t> order(n + 1);
  NelderMeadResult result;
  while (evals < max_iter) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return fx[a] < fx[b]; });
    const std::size_t best = order[0], worst = order[n], second = order[n - 1];

    const double spread = std::abs(fx[worst] - fx[best]);
    if (spread <= tol * (std::abs(fx[best]) + std::abs(fx[worst]) + 1e-300)) {
      result.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i)
      if (i != worst)
        for (std::size_t d = 0; d < n; ++d) centroid[d] += xs[i][d] / static_cast<double>(n);

    auto blend = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t d = 0; d < n; ++d) x[d] = centroid[d] + t * (xs[worst][d] - centroid[d]);
      return x;
    };

    const auto reflected = blend(-1.0);
    const double fr = eval(reflected);
    if (fr < fx[best]) {
      const auto expanded = blend(-2.0);
      const double fe = eval(expanded);
      if (fe < fr) {
        xs[worst] = expanded;
        fx[worst] = fe;
      } else {
        xs[worst] = reflected;
        fx[worst] = fr;
      }
    } else if (fr < fx[second]) {
      xs[worst] = reflected;
      fx[worst] = fr;
    } else {
      const auto contracted = blend(fr < fx[worst] ? -0.5 : 0.5);
      const double fc = eval(contracted);
      if (fc < std::min(fr, fx[worst])) {
        xs[worst] = contracted;
        fx[worst] = fc;
      } else {
        for (std::size_t i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (std::size_t d = 0; d < n; ++d) xs[i][d] = 0.5 * (xs[i][d] + xs[best][d]);
          fx[i] = eval(xs[i]);
        }
      }
    }
  }

  const std::size_t best =
      static_cast<std::size_t>(std::min_element(fx.begin(), fx.end()) - fx.begin());
  result.x = xs[best];
  result.value = fx[best];
  result.iterations = evals;
  return result;
}

}  // namespace epgi
