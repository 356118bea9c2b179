#pragma once

#include "auxsel/dataset.hpp"
#include "auxsel/params.hpp"

#include <Eigen/Dense>

#include <string>

namespace auxsel {

inline constexpr double kDefaultCondLimit = 1e10;

/// Empirical information matrices, all in the fixed parameter layout.
///
/// When the estimating variable is B = (Y, A) the matrices are (d+f)x(d+f)
/// and the Y-only matrices (I_y, I_zy, I_x) have zero phi blocks. When B = Y
/// they are d x d and I_b = I_y, J_b = J_y, K_by = J_y.
struct InfoMatrices {
  Eigen::MatrixXd I_b;
  Eigen::MatrixXd J_b;
  Eigen::MatrixXd K_by;
  Eigen::MatrixXd I_y;
  Eigen::MatrixXd I_zy;
  Eigen::MatrixXd I_x;
  double cond_I_b = 0.0;

  std::size_t dim() const { return static_cast<std::size_t>(I_b.rows()); }
};

struct InfoOptions {
  /// false means X = Y: no latent part, I_zy = 0 and I_x = I_y.
  bool latent = true;
  int workers = 1;
};

/// Information matrices for the estimator from B = (Y, A).
///
/// I_b and J_b are evaluated at beta_hat; the Y-side matrices (I_y, I_zy) and
/// the second factor of K_by at theta_eval. I_zy uses the plug-in conditional
/// p_{z|y}(. | y; theta_eval) in outer-product form.
/// Throws NonFiniteRecordError naming the first record with a non-finite term.
InfoMatrices estimate_info(const Dataset& data, const FullParams& beta_hat,
                           const PrimaryParams& theta_eval, const InfoOptions& opts = {});

/// Information matrices for the estimator from Y alone (B = Y).
InfoMatrices estimate_info_y(const Dataset& data, const PrimaryParams& theta,
                             const InfoOptions& opts = {});

/// Straight single-loop accumulation; reference for the blocked parallel path.
InfoMatrices estimate_info_serial(const Dataset& data, const FullParams& beta_hat,
                                  const PrimaryParams& theta_eval, bool latent = true);
InfoMatrices estimate_info_y_serial(const Dataset& data, const PrimaryParams& theta,
                                    bool latent = true);

/// Ratio of largest to smallest absolute eigenvalue of a symmetric matrix
/// (infinity when singular).
double condition_number(const Eigen::MatrixXd& m);

/// Inverse of a symmetric matrix via its eigendecomposition. Throws
/// IllConditionedError carrying the condition estimate when it exceeds
/// cond_limit.
Eigen::MatrixXd safe_inverse(const Eigen::MatrixXd& m, double cond_limit = kDefaultCondLimit);

/// Row-major CSV dump, one matrix row per line.
void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path);

}  // namespace auxsel
