#pragma once

// Known-truth simulation: data generation, exact losses by quadrature and the
// replicate engine behind the unbiasedness and selection experiments.

#include "auxsel/dataset.hpp"
#include "auxsel/em.hpp"
#include "auxsel/params.hpp"
#include "auxsel/report_io.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace auxsel {

/// True model. Case 1: a | z ~ N(mu_a[z]), so A carries information on Z.
/// Case 2: a ~ pi N(mu1a) + (1-pi) N(mu2a) independently of (Y, Z).
struct TrueModelSpec {
  double pi = 0.6;
  double mu1y = -1.2;
  double mu2y = 1.2;
  double var_y = 0.7;
  double mu1a = 1.8;
  double mu2a = -1.8;
  double var_a = 0.49;
  int case_id = 1;

  PrimaryParams theta0() const { return {pi, mu1y, mu2y, var_y}; }
  /// Joint (Y, A) parameters under Case 1 (correct specification).
  FullParams beta0() const;
};

/// n records (y, z, a1, a2): a1 follows the Case-1 conditional, a2 the Case-2
/// marginal, both from one stream, so the two cases share (y, z).
Dataset generate(const TrueModelSpec& spec, std::size_t n, std::uint64_t seed);

/// (y, z, a_c) for case c in {1, 2} from a generate() dataset.
Dataset case_view(const Dataset& generated, int case_id);

/// -E_q log p_x(Y, Z; theta) without the label-swap minimum.
double loss_x_raw(const PrimaryParams& theta, const TrueModelSpec& spec, std::size_t nodes = 64);
/// min over theta and its label swap of loss_x_raw. Throws NumericalError when
/// the quadrature is not finite.
double loss_x(const PrimaryParams& theta, const TrueModelSpec& spec, std::size_t nodes = 64);
/// -E_q log p_y(Y; theta).
double loss_y(const PrimaryParams& theta, const TrueModelSpec& spec, std::size_t nodes = 64);

struct ExperimentConfig {
  std::vector<std::size_t> n_list;
  std::size_t T = 2000;
  std::uint64_t seed = 20240101;
  std::size_t quadrature_nodes = 64;
  int workers = 1;
  EmOptions em;
  /// Fraction of excluded replicates above which summaries throw.
  double max_excluded_fraction = 0.01;

  void check() const;
};

/// Seed of replicate t at sample size n.
std::uint64_t replicate_seed(std::uint64_t master, std::size_t n, std::size_t t);

inline constexpr const char* kSelectB = "b";

struct ReplicateOutcome {
  std::size_t n = 0;
  std::size_t t = 0;
  int case_id = 1;
  bool excluded = false;
  std::string error;

  PrimaryParams theta_y;
  FullParams beta_b;
  PrimaryParams theta_x;

  double aic_xb = 0.0;
  double aic_xy = 0.0;
  double aic_yb = 0.0;
  double aic_yy = 0.0;

  double loss_x_y = 0.0;
  double loss_x_b = 0.0;
  double loss_x_x = 0.0;
  double loss_x_best = 0.0;
  double loss_y_y = 0.0;
  double loss_y_b = 0.0;

  /// kSelectB or kNoAuxiliary.
  std::string selected;
};

/// Runs replicates t = 0..T-1 at sample size n. Entry [t][k] is the outcome
/// for cases[k]; the Y-only and complete-data fits are shared across cases.
std::vector<std::vector<ReplicateOutcome>> run_replicates(const ExperimentConfig& config,
                                                          std::size_t n,
                                                          const std::vector<int>& cases);
/// Single-threaded reference for run_replicates.
std::vector<std::vector<ReplicateOutcome>> run_replicates_serial(const ExperimentConfig& config,
                                                                 std::size_t n,
                                                                 const std::vector<int>& cases);

/// Outcomes of one case, in replicate order.
std::vector<ReplicateOutcome> column(const std::vector<std::vector<ReplicateOutcome>>& grid,
                                     std::size_t k);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};
/// Mean and sd / sqrt(count).
MeanSe mean_se(const std::vector<double>& v);

struct UnbiasednessRow {
  std::size_t n = 0;
  std::size_t used = 0;
  std::size_t excluded = 0;
  MeanSe aic_diff;   // AIC_x;b - AIC_x;y
  MeanSe loss_diff;  // 2n (L_x(theta_b) - L_x(theta_y))
};

struct SelectionRow {
  int case_id = 1;
  std::size_t n = 0;
  std::size_t used = 0;
  std::size_t excluded = 0;
  std::size_t count_b = 0;
  std::size_t count_y = 0;
  double fraction_b() const { return used ? static_cast<double>(count_b) / used : 0.0; }
};

struct RiskRow {
  int case_id = 1;
  std::size_t n = 0;
  std::string estimator;  // "b", "y" or "best"
  MeanSe value;           // 2n (mean L_x - L_x(theta0))
};

/// Each throws NumericalError when the excluded fraction exceeds the limit.
UnbiasednessRow summarize_unbiasedness(const std::vector<ReplicateOutcome>& outcomes,
                                       double max_excluded_fraction = 0.01);
SelectionRow summarize_selection(const std::vector<ReplicateOutcome>& outcomes,
                                 double max_excluded_fraction = 0.01);
std::vector<RiskRow> summarize_risk(const std::vector<ReplicateOutcome>& outcomes,
                                    double loss_ref, double max_excluded_fraction = 0.01);

/// Case 1 at every n of the config.
std::vector<UnbiasednessRow> run_unbiasedness(const ExperimentConfig& config);

struct SelectionTables {
  std::vector<SelectionRow> selection;
  std::vector<RiskRow> risk;
};
SelectionTables run_selection(const ExperimentConfig& config, int case_id);

/// Replicate closest to the median of L_x(b)-L_x(y), L_y(b)-L_y(y),
/// AIC_x;b-AIC_x;y and AIC_y;b-AIC_y;y in both cases: sum over the eight
/// quantities of squared distance between the replicate's rank and the median
/// rank, minimized, lowest index on ties. Requires >= 3 pairs.
std::size_t pick_typical(const std::vector<std::pair<ReplicateOutcome, ReplicateOutcome>>& pairs);

/// y grid with p_y at the three fits, for plotting.
Table density_grid(const PrimaryParams& theta_x, const PrimaryParams& theta_y,
                   const PrimaryParams& theta_b, double lo, double hi, std::size_t points);

Table unbiasedness_table(const std::vector<UnbiasednessRow>& rows);
Table selection_table(const std::vector<SelectionRow>& rows);
Table risk_table(const std::vector<RiskRow>& rows);

}  // namespace auxsel
