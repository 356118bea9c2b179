#pragma once

#include "auxsel/dataset.hpp"
#include "auxsel/params.hpp"

#include <cstdint>
#include <vector>

namespace auxsel {

struct EmOptions {
  int max_iter = 500;
  /// Convergence threshold on the per-observation log-likelihood increment.
  double tol = 1e-10;
  /// Convergence additionally requires the mean-score norm below this value,
  /// unless the variance floor or the mixing-weight bound is active.
  double grad_tol = 1e-6;
  int restarts = 10;
  std::uint64_t seed = 0;
  double sigma_floor = kDefaultSigmaFloor;
  /// Keep the per-iteration log-likelihood of every restart in FitReport::traces.
  bool record_trace = false;

  void check() const;
};

template <typename Params>
struct FitReport {
  Params params;
  double loglik_per_obs = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Euclidean norm of the mean score at `params`.
  double grad_norm = 0.0;
  /// True when the variance / eigenvalue floor was active at the returned iterate.
  bool floor_engaged = false;
  int best_restart = 0;
  std::vector<std::vector<double>> traces;
};

/// MLE of theta from Y alone (multi-start EM). Throws DegenerateDataError when
/// all y are identical and InputError when n < 3.
FitReport<PrimaryParams> fit_em_y(const Dataset& data, const EmOptions& opts);
/// Single EM run from `init` (restarts ignored).
FitReport<PrimaryParams> run_em_y(const Dataset& data, const PrimaryParams& init,
                                  const EmOptions& opts);

/// MLE of beta from B = (Y, A) using every auxiliary column of `data`.
FitReport<FullParams> fit_em_b(const Dataset& data, const EmOptions& opts);
FitReport<FullParams> run_em_b(const Dataset& data, const FullParams& init,
                               const EmOptions& opts);

/// Closed-form complete-data MLE from (Y, Z). Throws DegenerateDataError on
/// single-class data.
FitReport<PrimaryParams> fit_complete_x(const Dataset& data,
                                        double sigma_floor = kDefaultSigmaFloor);

}  // namespace auxsel
