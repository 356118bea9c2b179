#include "auxsel/simlab.hpp"

#include "auxsel/criteria.hpp"
#include "auxsel/errors.hpp"
#include "auxsel/gmm.hpp"
#include "auxsel/infomat.hpp"
#include "auxsel/parallel.hpp"
#include "auxsel/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace auxsel {

FullParams TrueModelSpec::beta0() const {
  Eigen::VectorXd m1(2), m2(2);
  m1 << mu1y, mu1a;
  m2 << mu2y, mu2a;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2, 2);
  cov(0, 0) = var_y;
  cov(1, 1) = var_a;
  return FullParams::from_moments(pi, m1, m2, cov);
}

Dataset generate(const TrueModelSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InputError("generate requires n >= 1");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    0x73696dU};
  std::mt19937_64 rng(seq);
  std::bernoulli_distribution coin(spec.pi);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sy = std::sqrt(spec.var_y);
  const double sa = std::sqrt(spec.var_a);
  std::vector<double> y(n);
  std::vector<int> z(n);
  Eigen::MatrixXd aux(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const bool z1 = coin(rng);
    z[i] = z1 ? 1 : 0;
    y[i] = (z1 ? spec.mu1y : spec.mu2y) + sy * normal(rng);
    aux(r, 0) = (z1 ? spec.mu1a : spec.mu2a) + sa * normal(rng);
    const bool c1 = coin(rng);
    aux(r, 1) = (c1 ? spec.mu1a : spec.mu2a) + sa * normal(rng);
  }
  return Dataset(std::move(y), std::move(z), aux);
}

Dataset case_view(const Dataset& generated, int case_id) {
  if (generated.aux_dim() != 2) throw InputError("case_view expects the generated (a1, a2) layout");
  if (case_id != 1 && case_id != 2) throw InputError("case must be 1 or 2");
  return generated.with_aux_columns({static_cast<std::size_t>(case_id - 1)});
}

double loss_x_raw(const PrimaryParams& theta, const TrueModelSpec& spec, std::size_t nodes) {
  require_valid(theta);
  const auto& rule = gauss_hermite_rule(nodes);
  const double e1 = gaussian_expectation([&](double y) { return logdens_x(theta, y, 1); },
                                         spec.mu1y, spec.var_y, rule);
  const double e0 = gaussian_expectation([&](double y) { return logdens_x(theta, y, 0); },
                                         spec.mu2y, spec.var_y, rule);
  const double l = -(spec.pi * e1 + (1.0 - spec.pi) * e0);
  if (!std::isfinite(l)) throw NumericalError("loss_x quadrature is not finite");
  return l;
}

double loss_x(const PrimaryParams& theta, const TrueModelSpec& spec, std::size_t nodes) {
  // 1 - (1 - p) is exact for p >= 0.5, so both members of a swap pair map to
  // the same representative and the minimum is exactly swap invariant.
  const PrimaryParams base = theta.pi1 >= 0.5 ? theta : theta.swapped();
  return std::min(loss_x_raw(base, spec, nodes), loss_x_raw(base.swapped(), spec, nodes));
}

double loss_y(const PrimaryParams& theta, const TrueModelSpec& spec, std::size_t nodes) {
  require_valid(theta);
  const auto& rule = gauss_hermite_rule(nodes);
  const auto h = [&](double y) { return logdens_y(theta, y); };
  const double l = -(spec.pi * gaussian_expectation(h, spec.mu1y, spec.var_y, rule) +
                     (1.0 - spec.pi) * gaussian_expectation(h, spec.mu2y, spec.var_y, rule));
  if (!std::isfinite(l)) throw NumericalError("loss_y quadrature is not finite");
  return l;
}

void ExperimentConfig::check() const {
  if (T < 2) throw InputError("experiment needs T >= 2");
  if (n_list.empty()) throw InputError("experiment needs at least one sample size");
  for (auto n : n_list)
    if (n < 10) throw InputError("experiment sample sizes must be >= 10");
  if (workers < 1) throw InputError("workers must be >= 1");
  em.check();
}

std::uint64_t replicate_seed(std::uint64_t master, std::size_t n, std::size_t t) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(t),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(t) >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

namespace {

std::vector<ReplicateOutcome> one_replicate(const ExperimentConfig& config, std::size_t n,
                                            std::size_t t, const std::vector<int>& cases) {
  const TrueModelSpec spec;
  const std::size_t q = config.quadrature_nodes;
  std::vector<ReplicateOutcome> out(cases.size());
  for (std::size_t k = 0; k < cases.size(); ++k) {
    out[k].n = n;
    out[k].t = t;
    out[k].case_id = cases[k];
  }
  const auto exclude_all = [&](const std::string& why) {
    for (auto& o : out) {
      o.excluded = true;
      o.error = why;
    }
    return out;
  };

  const std::uint64_t seed = replicate_seed(config.seed, n, t);
  const Dataset data = generate(spec, n, seed);
  EmOptions em = config.em;
  em.seed = seed;

  PrimaryParams theta_y, theta_x;
  double aic_xy_v = 0.0, aic_yy_v = 0.0, lxy = 0.0, lxx = 0.0, lyy = 0.0;
  try {
    const Dataset ydata = data.without_aux().without_z();
    theta_y = fit_em_y(ydata, em).params;
    theta_x = fit_complete_x(data.without_aux()).params;
    const InfoMatrices mats_y = estimate_info_y(ydata, theta_y);
    aic_xy_v = aic_xy(ydata, theta_y, mats_y).value;
    aic_yy_v = aic_yy(ydata, theta_y).value;
    lxy = loss_x(theta_y, spec, q);
    lxx = loss_x(theta_x, spec, q);
    lyy = loss_y(theta_y, spec, q);
  } catch (const Error& e) {
    return exclude_all(e.what());
  }

  for (std::size_t k = 0; k < cases.size(); ++k) {
    ReplicateOutcome& o = out[k];
    o.theta_y = theta_y;
    o.theta_x = theta_x;
    o.aic_xy = aic_xy_v;
    o.aic_yy = aic_yy_v;
    o.loss_x_y = lxy;
    o.loss_x_x = lxx;
    o.loss_y_y = lyy;
    try {
      const Dataset bdata = case_view(data, cases[k]).without_z();
      o.beta_b = fit_em_b(bdata, em).params;
      const InfoMatrices mats = estimate_info(bdata, o.beta_b, o.beta_b.theta);
      o.aic_xb = aic_xb(bdata, o.beta_b, mats).value;
      o.aic_yb = aic_yb(bdata, o.beta_b, mats).value;
      o.loss_x_b = loss_x(o.beta_b.theta, spec, q);
      o.loss_y_b = loss_y(o.beta_b.theta, spec, q);
    } catch (const Error& e) {
      o.excluded = true;
      o.error = e.what();
      continue;
    }
    const bool pick_b = o.aic_xb < o.aic_xy;
    o.selected = pick_b ? kSelectB : std::string(kNoAuxiliary);
    o.loss_x_best = pick_b ? o.loss_x_b : o.loss_x_y;
  }
  return out;
}

std::size_t check_excluded(const std::vector<ReplicateOutcome>& v, double limit) {
  if (v.empty()) throw InputError("no replicate outcomes to summarize");
  const auto ex = static_cast<std::size_t>(
      std::count_if(v.begin(), v.end(), [](const auto& o) { return o.excluded; }));
  if (static_cast<double>(ex) > limit * static_cast<double>(v.size()))
    throw NumericalError(std::to_string(ex) + " of " + std::to_string(v.size()) +
                         " replicates excluded (first error: " +
                         std::find_if(v.begin(), v.end(), [](const auto& o) {
                           return o.excluded;
                         })->error + ")");
  return ex;
}

template <typename F>
std::vector<double> collect(const std::vector<ReplicateOutcome>& v, F f) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& o : v)
    if (!o.excluded) out.push_back(f(o));
  return out;
}

}  // namespace

std::vector<std::vector<ReplicateOutcome>> run_replicates(const ExperimentConfig& config,
                                                          std::size_t n,
                                                          const std::vector<int>& cases) {
  config.check();
  if (cases.empty()) throw InputError("no cases requested");
  return parallel_map<std::vector<ReplicateOutcome>>(
      config.T, config.workers, [&](std::size_t t) { return one_replicate(config, n, t, cases); });
}

std::vector<std::vector<ReplicateOutcome>> run_replicates_serial(const ExperimentConfig& config,
                                                                 std::size_t n,
                                                                 const std::vector<int>& cases) {
  config.check();
  if (cases.empty()) throw InputError("no cases requested");
  return serial_map<std::vector<ReplicateOutcome>>(
      config.T, [&](std::size_t t) { return one_replicate(config, n, t, cases); });
}

std::vector<ReplicateOutcome> column(const std::vector<std::vector<ReplicateOutcome>>& grid,
                                     std::size_t k) {
  std::vector<ReplicateOutcome> out;
  out.reserve(grid.size());
  for (const auto& row : grid) out.push_back(row.at(k));
  return out;
}

MeanSe mean_se(const std::vector<double>& v) {
  if (v.empty()) throw InputError("mean of an empty sample");
  const auto n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

UnbiasednessRow summarize_unbiasedness(const std::vector<ReplicateOutcome>& outcomes,
                                       double max_excluded_fraction) {
  UnbiasednessRow row;
  row.excluded = check_excluded(outcomes, max_excluded_fraction);
  row.n = outcomes.front().n;
  row.used = outcomes.size() - row.excluded;
  const double two_n = 2.0 * static_cast<double>(row.n);
  row.aic_diff = mean_se(collect(outcomes, [](const auto& o) { return o.aic_xb - o.aic_xy; }));
  row.loss_diff =
      mean_se(collect(outcomes, [&](const auto& o) { return two_n * (o.loss_x_b - o.loss_x_y); }));
  return row;
}

SelectionRow summarize_selection(const std::vector<ReplicateOutcome>& outcomes,
                                 double max_excluded_fraction) {
  SelectionRow row;
  row.excluded = check_excluded(outcomes, max_excluded_fraction);
  row.case_id = outcomes.front().case_id;
  row.n = outcomes.front().n;
  row.used = outcomes.size() - row.excluded;
  for (const auto& o : outcomes) {
    if (o.excluded) continue;
    if (o.selected == kSelectB)
      ++row.count_b;
    else
      ++row.count_y;
  }
  return row;
}

std::vector<RiskRow> summarize_risk(const std::vector<ReplicateOutcome>& outcomes,
                                    double loss_ref, double max_excluded_fraction) {
  check_excluded(outcomes, max_excluded_fraction);
  const int case_id = outcomes.front().case_id;
  const std::size_t n = outcomes.front().n;
  const double two_n = 2.0 * static_cast<double>(n);
  const auto row = [&](const char* name, double ReplicateOutcome::*field) {
    return RiskRow{case_id, n, name,
                   mean_se(collect(outcomes, [&](const ReplicateOutcome& o) {
                     return two_n * (o.*field - loss_ref);
                   }))};
  };
  return {row("b", &ReplicateOutcome::loss_x_b), row("y", &ReplicateOutcome::loss_x_y),
          row("best", &ReplicateOutcome::loss_x_best)};
}

std::vector<UnbiasednessRow> run_unbiasedness(const ExperimentConfig& config) {
  config.check();
  std::vector<UnbiasednessRow> rows;
  for (std::size_t n : config.n_list)
    rows.push_back(
        summarize_unbiasedness(column(run_replicates(config, n, {1}), 0),
                               config.max_excluded_fraction));
  return rows;
}

SelectionTables run_selection(const ExperimentConfig& config, int case_id) {
  config.check();
  const TrueModelSpec spec;
  const double ref = loss_x(spec.theta0(), spec, config.quadrature_nodes);
  SelectionTables out;
  for (std::size_t n : config.n_list) {
    const auto outcomes = column(run_replicates(config, n, {case_id}), 0);
    out.selection.push_back(summarize_selection(outcomes, config.max_excluded_fraction));
    for (auto& r : summarize_risk(outcomes, ref, config.max_excluded_fraction))
      out.risk.push_back(std::move(r));
  }
  return out;
}

std::size_t pick_typical(
    const std::vector<std::pair<ReplicateOutcome, ReplicateOutcome>>& pairs) {
  const std::size_t m = pairs.size();
  if (m < 3) throw InputError("pick_typical needs at least 3 replicates");
  using Getter = double (*)(const ReplicateOutcome&);
  const Getter quantities[] = {
      [](const ReplicateOutcome& o) { return o.loss_x_b - o.loss_x_y; },
      [](const ReplicateOutcome& o) { return o.loss_y_b - o.loss_y_y; },
      [](const ReplicateOutcome& o) { return o.aic_xb - o.aic_xy; },
      [](const ReplicateOutcome& o) { return o.aic_yb - o.aic_yy; },
  };
  std::vector<double> score(m, 0.0);
  const double median_rank = 0.5 * static_cast<double>(m - 1);
  for (int side = 0; side < 2; ++side) {
    for (Getter g : quantities) {
      std::vector<double> v(m);
      for (std::size_t i = 0; i < m; ++i) v[i] = g(side == 0 ? pairs[i].first : pairs[i].second);
      std::vector<std::size_t> idx(m);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
      for (std::size_t r = 0; r < m; ++r) {
        const double dist = static_cast<double>(r) - median_rank;
        score[idx[r]] += dist * dist;
      }
    }
  }
  return static_cast<std::size_t>(std::min_element(score.begin(), score.end()) - score.begin());
}

Table density_grid(const PrimaryParams& theta_x, const PrimaryParams& theta_y,
                   const PrimaryParams& theta_b, double lo, double hi, std::size_t points) {
  if (points < 2 || !(hi > lo)) throw InputError("density grid needs hi > lo and >= 2 points");
  Table t{{"y", "p_y_theta_x", "p_y_theta_y", "p_y_theta_b"}, {}};
  for (std::size_t k = 0; k < points; ++k) {
    const double y = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    t.add_row({format_number(y), format_number(std::exp(logdens_y(theta_x, y))),
               format_number(std::exp(logdens_y(theta_y, y))),
               format_number(std::exp(logdens_y(theta_b, y)))});
  }
  return t;
}

Table unbiasedness_table(const std::vector<UnbiasednessRow>& rows) {
  Table t{{"n", "used", "excluded", "mean_aic_xb_minus_aic_xy", "se_aic", "mean_2n_loss_diff",
           "se_loss"},
          {}};
  for (const auto& r : rows)
    t.add_row({std::to_string(r.n), std::to_string(r.used), std::to_string(r.excluded),
               format_fixed(r.aic_diff.mean, 3), format_fixed(r.aic_diff.se, 3),
               format_fixed(r.loss_diff.mean, 3), format_fixed(r.loss_diff.se, 3)});
  return t;
}

Table selection_table(const std::vector<SelectionRow>& rows) {
  Table t{{"case", "n", "used", "excluded", "selected_b", "selected_y", "fraction_b"}, {}};
  for (const auto& r : rows)
    t.add_row({std::to_string(r.case_id), std::to_string(r.n), std::to_string(r.used),
               std::to_string(r.excluded), std::to_string(r.count_b), std::to_string(r.count_y),
               format_fixed(r.fraction_b(), 4)});
  return t;
}

Table risk_table(const std::vector<RiskRow>& rows) {
  Table t{{"case", "n", "estimator", "2n_risk_minus_loss_theta0", "se"}, {}};
  for (const auto& r : rows)
    t.add_row({std::to_string(r.case_id), std::to_string(r.n), r.estimator,
               format_fixed(r.value.mean, 3), format_fixed(r.value.se, 3)});
  return t;
}

}  // namespace auxsel
