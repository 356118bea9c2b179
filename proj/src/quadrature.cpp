#include "auxsel/quadrature.hpp"

#include "auxsel/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

namespace auxsel {

namespace {

GaussHermiteRule compute_rule(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index k = 1; k < m; ++k) {
    const double b = std::sqrt(static_cast<double>(k) / 2.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success) throw NumericalError("Gauss-Hermite eigensolver failed");
  GaussHermiteRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double sqrt_pi = std::sqrt(std::acos(-1.0));
  for (std::size_t k = 0; k < n; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double v0 = es.eigenvectors()(0, kk);
    rule.nodes[k] = es.eigenvalues()(kk);
    rule.weights[k] = sqrt_pi * v0 * v0;
  }
  // Exact symmetry: the rule is symmetric about zero in exact arithmetic.
  for (std::size_t k = 0; k < n / 2; ++k) {
    const std::size_t j = n - 1 - k;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[k]);
    const double w = 0.5 * (rule.weights[j] + rule.weights[k]);
    rule.nodes[k] = -x;
    rule.nodes[j] = x;
    rule.weights[k] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite_rule(std::size_t n) {
  if (n < 1 || n > 512) throw InputError("Gauss-Hermite node count must be in [1, 512]");
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<GaussHermiteRule>> cache;
  const std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(compute_rule(n));
  return *slot;
}

}  // namespace auxsel
