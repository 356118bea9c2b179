#pragma once

// Information criteria for choosing between the Y-only and (Y, A) estimators.
// Every value is on the -2n*loglik scale; the constant term shared by all
// candidates is never computed, so only differences are meaningful.

#include "auxsel/dataset.hpp"
#include "auxsel/infomat.hpp"
#include "auxsel/params.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace auxsel {

enum class Criterion { risk_xb, aic_xb, aic_xy, aic_yb, aic_yy, tic };

std::string to_string(Criterion c);
/// Throws InputError on an unknown name.
Criterion criterion_from_string(std::string_view name);

/// Criteria that estimate the same target and may be compared across
/// candidates: aic_xb with aic_xy ("aic_x"), aic_yb with aic_yy ("aic_y"),
/// risk_xb with tic ("risk").
std::string criterion_family(Criterion c);

struct CriterionReport {
  std::string name;
  double value = 0.0;
  /// -2n * loglik_y at the fitted theta.
  double fit_term = 0.0;
  double penalty = 0.0;
  /// Named trace terms making up the penalty.
  std::vector<std::pair<std::string, double>> traces;
};

/// -2n l_y(theta_b) + 2 tr(I_b^-1 K_by) + tr(I_zy I_b^-1 J_b I_b^-1).
/// `mats` must come from estimate_info at beta_hat.
CriterionReport risk_xb(const Dataset& data, const FullParams& beta_hat, const InfoMatrices& mats,
                        double cond_limit = kDefaultCondLimit);
/// -2n l_y(theta_b) + tr(I_x I_b^-1) + tr(I_y I_b^-1).
CriterionReport aic_xb(const Dataset& data, const FullParams& beta_hat, const InfoMatrices& mats,
                       double cond_limit = kDefaultCondLimit);
/// -2n l_y(theta_b) + 2 tr(I_y I_b^-1).
CriterionReport aic_yb(const Dataset& data, const FullParams& beta_hat, const InfoMatrices& mats,
                       double cond_limit = kDefaultCondLimit);
/// The same three criteria with B = Y (no auxiliary block): `mats` are the
/// d x d matrices from estimate_info_y.
CriterionReport risk_xb(const Dataset& data, const PrimaryParams& theta_hat,
                        const InfoMatrices& mats, double cond_limit = kDefaultCondLimit);
CriterionReport aic_xb(const Dataset& data, const PrimaryParams& theta_hat,
                       const InfoMatrices& mats, double cond_limit = kDefaultCondLimit);
CriterionReport aic_yb(const Dataset& data, const PrimaryParams& theta_hat,
                       const InfoMatrices& mats, double cond_limit = kDefaultCondLimit);
/// -2n l_y(theta_y) + tr(I_x I_y^-1) + d, using the theta block of `mats_y`.
CriterionReport aic_xy(const Dataset& data, const PrimaryParams& theta_y,
                       const InfoMatrices& mats_y, double cond_limit = kDefaultCondLimit);
/// -2n l_y(theta_y) + 2d.
CriterionReport aic_yy(const Dataset& data, const PrimaryParams& theta_y);
/// -2n l_y(theta_y) + 2 tr(I_y^-1 J_y); `mats_y` must be d x d.
CriterionReport tic(const Dataset& data, const PrimaryParams& theta_y, const InfoMatrices& mats_y,
                    double cond_limit = kDefaultCondLimit);

/// Label of the Y-only candidate.
inline constexpr std::string_view kNoAuxiliary = "y";

/// Label with the strictly smallest value. Ties go to kNoAuxiliary, then to
/// the lexicographically smallest label. Throws InputError on an empty list
/// or when the reports mix criterion families.
std::string select_auxiliary(const std::vector<std::pair<std::string, CriterionReport>>& reports);

}  // namespace auxsel
