#pragma once

// Leave-one-out cross-validation of the complete-data risk when Z is latent.

#include "auxsel/criteria.hpp"
#include "auxsel/dataset.hpp"
#include "auxsel/em.hpp"
#include "auxsel/params.hpp"

#include <optional>
#include <vector>

namespace auxsel {

/// sum_z p(z|y; theta_ref) log p(z|y; theta), probabilities clamped to
/// [1e-300, 1] before the log.
double f_plugin(double y, const PrimaryParams& theta, const PrimaryParams& theta_ref);

struct LoocvOptions {
  EmOptions em;
  /// false means X = Y: the latent term f is dropped.
  bool latent = true;
  /// false fits from Y alone (B = Y) even when the data carry aux columns.
  bool use_aux = true;
  /// Refit every fold from scratch with all restarts instead of warm-starting
  /// from the full-data fit. Fold labels are aligned to the full-data fit.
  bool cold_start = false;
  int workers = 1;
  /// Fraction of failed fold refits above which loocv_risk throws.
  double max_failure_fraction = 0.1;
};

struct LoocvReport {
  /// -mean of per_fold_g.
  double cv_value = 0.0;
  /// g(y_i; theta^(-i)) in record order.
  std::vector<double> per_fold_g;
  int refit_failures = 0;
  /// Per fold: l^(-i)(refit) - l^(-i)(full-data fit), the leave-one-out
  /// objective gained by refitting.
  std::vector<double> fold_objective_gain;
  /// Full-data fit used as warm start and as the reference inside f.
  FullParams beta_hat;
  bool uses_aux = false;
  /// Set by loocv_with_gap.
  std::optional<double> gap;
  std::optional<CriterionReport> risk;
  /// sum_i f(y_i; theta_hat, theta_hat).
  std::optional<double> sum_f;
};

/// Requires n >= 4. Throws NumericalError when more than
/// max_failure_fraction of the fold refits fail.
LoocvReport loocv_risk(const Dataset& data, const LoocvOptions& opts = {});

/// loocv_risk plus risk_xb at the full-data fit and the residual
/// 2n cv - [risk_xb - 2 sum_i f(y_i; theta_hat, theta_hat)].
LoocvReport loocv_with_gap(const Dataset& data, const LoocvOptions& opts = {});

double equivalence_gap(const Dataset& data, const LoocvOptions& opts = {});

}  // namespace auxsel
