#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace auxsel {

/// Gauss-Hermite rule for the weight exp(-x^2): sum_k w_k h(x_k) ~ int h(x) exp(-x^2) dx.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Golub-Welsch rule with `n` nodes (1 <= n <= 512). Rules are computed once
/// and cached; the returned reference stays valid for the program lifetime.
const GaussHermiteRule& gauss_hermite_rule(std::size_t n);

/// E[h(Y)] for Y ~ N(mean, var).
template <typename F>
double gaussian_expectation(F&& h, double mean, double var, const GaussHermiteRule& rule) {
  constexpr double kInvSqrtPi = 0.56418958354775628695;
  const double scale = std::sqrt(2.0 * var);
  double s = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k)
    s += rule.weights[k] * h(mean + scale * rule.nodes[k]);
  return s * kInvSqrtPi;
}

}  // namespace auxsel
