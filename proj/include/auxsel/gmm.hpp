#pragma once

// Log densities, responsibilities and derivatives of the two-component
// shared-covariance Gaussian mixture under the three observation regimes:
//   y : only Y observed (mixture over the latent label),
//   b : B = (Y, A) observed (joint (1+m)-variate mixture),
//   x : complete X = (Y, Z).

#include "auxsel/dataset.hpp"
#include "auxsel/params.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace auxsel {

using PrimaryVector = Eigen::Matrix<double, 4, 1>;
using PrimaryMatrix = Eigen::Matrix<double, 4, 4>;

enum class Regime { y, b, x };

/// log(a + b) from log a and log b.
double log_add_exp(double la, double lb);

/// log N(y; mu, var).
double log_normal(double y, double mu, double var);

double logdens_y(const PrimaryParams& theta, double y);
double logdens_x(const PrimaryParams& theta, double y, int z);
double logdens_b(const FullParams& beta, double y, std::span<const double> a);
/// log p_{z|y}(z | y; theta).
double logdens_z_given_y(const PrimaryParams& theta, double y, int z);

/// p_{z|y}(z = 1 | y; theta).
double resp_z_given_y(const PrimaryParams& theta, double y);
/// p(z = 1 | y, a; beta).
double resp_z_given_b(const FullParams& beta, double y, std::span<const double> a);

/// Precomputed factorization of the joint covariance for repeated evaluation.
class JointMixture {
 public:
  explicit JointMixture(const FullParams& beta);

  std::size_t dim() const { return dim_; }
  /// log N((y,a); mu_k, Sigma) for k = 1, 2.
  double log_component(int k, double y, std::span<const double> a) const;
  double logdens(double y, std::span<const double> a) const;
  double resp(double y, std::span<const double> a) const;
  /// Score in the fixed layout (length d + f).
  Eigen::VectorXd score(double y, std::span<const double> a) const;

 private:
  void residual(int k, double y, std::span<const double> a, Eigen::VectorXd& r) const;

  FullParams beta_;
  std::size_t dim_;
  Eigen::VectorXd mean1_;
  Eigen::VectorXd mean2_;
  Eigen::MatrixXd precision_;
  double log_norm_;
};

/// Score of log p_y in the primary layout.
PrimaryVector grad_logdens_y(const PrimaryParams& theta, double y);
/// Score of log p_x in the primary layout.
PrimaryVector grad_logdens_x(const PrimaryParams& theta, double y, int z);
/// Score of log p_{z|y}(z|y) = score_x - score_y.
PrimaryVector grad_logdens_z_given_y(const PrimaryParams& theta, double y, int z);

/// Hessians by central differences of the analytic score, symmetrized.
PrimaryMatrix hess_logdens_y(const PrimaryParams& theta, double y);
PrimaryMatrix hess_logdens_x(const PrimaryParams& theta, double y, int z);

/// Central-difference step used for every numerical derivative in the library.
double fd_step(double value);

/// Central-difference Hessian of log p_b for many records at one beta.
/// The perturbed evaluators are built once and shared across records.
class JointHessianStencil {
 public:
  explicit JointHessianStencil(const FullParams& beta);
  Eigen::MatrixXd hessian(double y, std::span<const double> a) const;

 private:
  std::vector<JointMixture> plus_;
  std::vector<JointMixture> minus_;
  std::vector<double> steps_;
};

/// Score in the full (d + f) layout; phi rows are zero for regimes y and x.
/// Regime x requires record.z; regime b requires record.a.
Eigen::VectorXd grad_logdens(Regime regime, const FullParams& params, const Record& record);
/// Hessian in the full (d + f) layout; phi rows/cols are zero for regimes y and x.
Eigen::MatrixXd hess_logdens(Regime regime, const FullParams& params, const Record& record);

/// Mean log-likelihood over the data (the per-observation l of the estimators).
double loglik_y(const Dataset& data, const PrimaryParams& theta);
double loglik_x(const Dataset& data, const PrimaryParams& theta);
double loglik_b(const Dataset& data, const FullParams& beta);

}  // namespace auxsel
