#include "auxsel/loocv.hpp"

#include "auxsel/errors.hpp"
#include "auxsel/gmm.hpp"
#include "auxsel/infomat.hpp"
#include "auxsel/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace auxsel {

namespace {

constexpr double kProbFloor = 1e-300;

// Records sorted by value, so every fit sees the same summation order
// whatever the input order.
std::vector<std::size_t> canonical_order(const Dataset& data) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    if (data.y(i) != data.y(j)) return data.y(i) < data.y(j);
    const auto ai = data.a(i);
    const auto aj = data.a(j);
    return std::lexicographical_compare(ai.begin(), ai.end(), aj.begin(), aj.end());
  });
  return idx;
}

// Primary parameters wrapped as FullParams with an empty auxiliary block.
FullParams as_full(const PrimaryParams& t) {
  FullParams f;
  f.theta = t;
  return f;
}

template <typename P>
double distance(const P& a, const P& b) {
  return (flatten(a) - flatten(b)).squaredNorm();
}

template <typename P>
P align(const P& p, const P& ref) {
  const P s = p.swapped();
  return distance(s, ref) < distance(p, ref) ? s : p;
}

const PrimaryParams& primary_of(const PrimaryParams& p) { return p; }
const PrimaryParams& primary_of(const FullParams& p) { return p.theta; }

double objective(const Dataset& d, const PrimaryParams& p) { return loglik_y(d, p); }
double objective(const Dataset& d, const FullParams& p) { return loglik_b(d, p); }

struct Fold {
  PrimaryParams theta;
  bool failed = false;
  double gain = 0.0;
};

template <typename P, typename Full, typename Run>
Fold refit(const Dataset& train, const P& ref, const LoocvOptions& opts, Full full, Run run) {
  Fold out;
  const double base = objective(train, ref);
  try {
    if (opts.cold_start) {
      const auto rep = full(train, opts.em);
      if (rep.converged) {
        out.theta = primary_of(align(rep.params, ref));
        out.gain = rep.loglik_per_obs - base;
        return out;
      }
    } else {
      EmOptions em = opts.em;
      em.restarts = 1;
      const auto rep = run(train, ref, em);
      if (rep.converged) {
        out.theta = primary_of(rep.params);
        out.gain = rep.loglik_per_obs - base;
        return out;
      }
    }
  } catch (const NumericalError&) {
  }
  out.failed = true;
  EmOptions one = opts.em;
  one.restarts = 1;
  one.max_iter = 1;
  const auto rep = run(train, ref, one);
  out.theta = primary_of(rep.params);
  out.gain = rep.loglik_per_obs - base;
  return out;
}

}  // namespace

double f_plugin(double y, const PrimaryParams& theta, const PrimaryParams& theta_ref) {
  require_valid(theta);
  require_valid(theta_ref);
  const double log_floor = std::log(kProbFloor);
  double f = 0.0;
  for (int z : {1, 0}) {
    const double w = std::clamp(std::exp(logdens_z_given_y(theta_ref, y, z)), kProbFloor, 1.0);
    f += w * std::clamp(logdens_z_given_y(theta, y, z), log_floor, 0.0);
  }
  return f;
}

LoocvReport loocv_risk(const Dataset& data, const LoocvOptions& opts) {
  opts.em.check();
  const std::size_t n = data.size();
  if (n < 4) throw InputError("loocv requires n >= 4");
  const bool with_aux = opts.use_aux && data.aux_dim() > 0;
  const Dataset base = with_aux ? data.without_z() : data.without_z().without_aux();

  const auto order = canonical_order(base);
  const Dataset sorted = base.subset(order);

  LoocvReport rep;
  rep.uses_aux = with_aux;
  std::vector<Fold> folds;
  if (with_aux) {
    const FullParams beta = fit_em_b(sorted, opts.em).params;
    rep.beta_hat = beta;
    folds = parallel_map<Fold>(n, opts.workers, [&](std::size_t k) {
      return refit(sorted.without_record(k), beta, opts, fit_em_b, run_em_b);
    });
  } else {
    const PrimaryParams theta = fit_em_y(sorted, opts.em).params;
    rep.beta_hat = as_full(theta);
    folds = parallel_map<Fold>(n, opts.workers, [&](std::size_t k) {
      return refit(sorted.without_record(k), theta, opts, fit_em_y, run_em_y);
    });
  }

  const PrimaryParams& ref = rep.beta_hat.theta;
  std::vector<double> g_sorted(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double y = sorted.y(k);
    double g = logdens_y(folds[k].theta, y);
    if (opts.latent) g += f_plugin(y, folds[k].theta, ref);
    if (!std::isfinite(g))
      throw NonFiniteRecordError("non-finite LOOCV term at record " + std::to_string(order[k]),
                                 order[k]);
    g_sorted[k] = g;
    if (folds[k].failed) ++rep.refit_failures;
  }
  if (static_cast<double>(rep.refit_failures) > opts.max_failure_fraction * static_cast<double>(n))
    throw NumericalError("loocv: " + std::to_string(rep.refit_failures) + " of " +
                         std::to_string(n) + " fold refits failed");

  double sum = 0.0;
  for (double g : g_sorted) sum += g;
  rep.cv_value = -sum / static_cast<double>(n);
  rep.per_fold_g.resize(n);
  rep.fold_objective_gain.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    rep.per_fold_g[order[k]] = g_sorted[k];
    rep.fold_objective_gain[order[k]] = folds[k].gain;
  }
  return rep;
}

LoocvReport loocv_with_gap(const Dataset& data, const LoocvOptions& opts) {
  LoocvReport rep = loocv_risk(data, opts);
  const Dataset base = rep.uses_aux ? data.without_z() : data.without_z().without_aux();
  const auto order = canonical_order(base);
  const Dataset sorted = base.subset(order);
  const PrimaryParams& theta = rep.beta_hat.theta;

  InfoOptions io;
  io.latent = opts.latent;
  io.workers = opts.workers;
  if (rep.uses_aux) {
    rep.risk = risk_xb(sorted, rep.beta_hat, estimate_info(sorted, rep.beta_hat, theta, io));
  } else {
    rep.risk = risk_xb(sorted, theta, estimate_info_y(sorted, theta, io));
  }
  double sum_f = 0.0;
  if (opts.latent)
    for (std::size_t k = 0; k < sorted.size(); ++k) sum_f += f_plugin(sorted.y(k), theta, theta);
  rep.sum_f = sum_f;
  const double n = static_cast<double>(data.size());
  rep.gap = 2.0 * n * rep.cv_value - (rep.risk->value - 2.0 * sum_f);
  return rep;
}

double equivalence_gap(const Dataset& data, const LoocvOptions& opts) {
  return *loocv_with_gap(data, opts).gap;
}

}  // namespace auxsel
