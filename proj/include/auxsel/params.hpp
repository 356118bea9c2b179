#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>

namespace auxsel {

/// Number of primary parameters (pi1, mu1y, mu2y, sigy2).
inline constexpr std::size_t kPrimaryDim = 4;

/// Default lower bound on variances / covariance eigenvalues.
inline constexpr double kDefaultSigmaFloor = 1e-6;

/// Parameters of the primary two-component model p_x(y, z; theta).
struct PrimaryParams {
  double pi1 = 0.5;
  double mu1y = 0.0;
  double mu2y = 0.0;
  double sigy2 = 1.0;

  /// Same distribution with the component labels exchanged.
  PrimaryParams swapped() const { return {1.0 - pi1, mu2y, mu1y, sigy2}; }
};

/// Nuisance parameters for the auxiliary block A (dimension m).
struct AuxParams {
  Eigen::VectorXd mu1a;
  Eigen::VectorXd mu2a;
  Eigen::MatrixXd sigma_aa;
  Eigen::VectorXd sigma_ya;

  std::size_t dim() const { return static_cast<std::size_t>(mu1a.size()); }
};

/// beta = (theta, phi) of the joint (1+m)-variate mixture with shared covariance.
struct FullParams {
  PrimaryParams theta;
  AuxParams phi;

  std::size_t aux_dim() const { return phi.dim(); }
  Eigen::VectorXd mean1() const;
  Eigen::VectorXd mean2() const;
  /// Joint covariance [[sigy2, sigma_ya^T], [sigma_ya, sigma_aa]].
  Eigen::MatrixXd covariance() const;
  FullParams swapped() const;

  /// Builds a FullParams from component means and a joint covariance.
  static FullParams from_moments(double pi1, const Eigen::VectorXd& mean1,
                                 const Eigen::VectorXd& mean2,
                                 const Eigen::MatrixXd& cov);
};

/// Length of phi for auxiliary dimension m: 2m + m(m+1)/2 + m.
std::size_t aux_param_dim(std::size_t m);
/// d + f.
std::size_t flat_dim(std::size_t m);

/// Fixed layout: pi1, mu1y, mu2y, sigy2, mu1a, mu2a, vech(sigma_aa), sigma_ya.
/// vech walks the lower triangle row by row: (0,0), (1,0), (1,1), (2,0), ...
Eigen::VectorXd flatten(const FullParams& params);
FullParams unflatten(const Eigen::VectorXd& flat, std::size_t m);

Eigen::VectorXd flatten(const PrimaryParams& theta);
PrimaryParams unflatten_primary(const Eigen::VectorXd& flat);

/// Returns the first violated invariant, or std::nullopt when valid.
std::optional<std::string> validate(const PrimaryParams& theta,
                                    double sigma_floor = kDefaultSigmaFloor);
std::optional<std::string> validate(const FullParams& params,
                                    double sigma_floor = kDefaultSigmaFloor);

/// Throws InputError with the violation text when invalid.
void require_valid(const PrimaryParams& theta);
void require_valid(const FullParams& params);

}  // namespace auxsel
