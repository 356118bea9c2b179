#include "auxsel/em.hpp"

#include "auxsel/errors.hpp"
#include "auxsel/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace auxsel {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kPiFloor = 1e-10;

double clamp_pi(double p) { return std::clamp(p, kPiFloor, 1.0 - kPiFloor); }

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::mt19937_64 restart_rng(std::uint64_t seed, int restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart), 0x454du};
  return std::mt19937_64(seq);
}

void require_spread(const Dataset& data) {
  const auto [lo, hi] = std::minmax_element(data.y_values().begin(), data.y_values().end());
  if (*lo == *hi) throw DegenerateDataError("all y values are identical; mixture fit is undefined");
}

// ---------------------------------------------------------------- Y regime

struct YRun {
  PrimaryParams params;
  double loglik;
  int iterations;
  bool converged;
  bool floor_engaged;
  std::vector<double> trace;
};

// Mean score of log p_y from E-step sums over centered y:
// w1 = sum w, s1 = sum w y, sy = sum y, syy = sum y^2.
double stats_score_norm_y(const PrimaryParams& t, double n, double w1, double s1, double sy,
                          double syy) {
  const double w2 = n - w1;
  const double s2 = sy - s1;
  const double s = t.sigy2;
  const double m = syy - 2.0 * t.mu1y * s1 + w1 * t.mu1y * t.mu1y - 2.0 * t.mu2y * s2 +
                   w2 * t.mu2y * t.mu2y;
  PrimaryVector g;
  g(0) = w1 / t.pi1 - w2 / (1.0 - t.pi1);
  g(1) = (s1 - w1 * t.mu1y) / s;
  g(2) = (s2 - w2 * t.mu2y) / s;
  g(3) = (m - n * s) / (2.0 * s * s);
  return (g / n).norm();
}

bool pi_at_bound(double pi1) { return pi1 <= kPiFloor || pi1 >= 1.0 - kPiFloor; }

// Runs EM on centered y; `init` is in centered coordinates.
YRun em_y_centered(const std::vector<double>& y, double sum_y2, PrimaryParams t,
                   const EmOptions& opts) {
  const auto n = static_cast<double>(y.size());
  double sy = 0.0;
  for (double yi : y) sy += yi;
  YRun run{t, -std::numeric_limits<double>::infinity(), 0, false, false, {}};
  double prev = -std::numeric_limits<double>::infinity();
  for (int iter = 0;; ++iter) {
    // E-step at the current parameters.
    const double c = -0.5 * (kLog2Pi + std::log(t.sigy2));
    const double inv2s = 0.5 / t.sigy2;
    const double lp1 = std::log(t.pi1);
    const double lp2 = std::log1p(-t.pi1);
    double ll = 0.0, sw = 0.0, swy = 0.0;
    for (double yi : y) {
      const double d1 = yi - t.mu1y;
      const double d2 = yi - t.mu2y;
      const double l1 = lp1 + c - d1 * d1 * inv2s;
      const double l2 = lp2 + c - d2 * d2 * inv2s;
      const double diff = l1 - l2;
      const double e = std::exp(-std::abs(diff));
      const double w1 = diff >= 0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
      ll += std::max(l1, l2) + std::log1p(e);
      sw += w1;
      swy += w1 * yi;
    }
    ll /= n;
    if (opts.record_trace) run.trace.push_back(ll);
    run.params = t;
    run.loglik = ll;
    run.iterations = iter;
    if (iter > 0 && ll - prev < opts.tol &&
        (run.floor_engaged || pi_at_bound(t.pi1) ||
         stats_score_norm_y(t, n, sw, swy, sy, sum_y2) <= opts.grad_tol)) {
      run.converged = true;
      break;
    }
    if (iter >= opts.max_iter) break;
    prev = ll;
    // M-step with shared variance.
    const double n1 = sw;
    const double n2 = n - sw;
    PrimaryParams next = t;
    next.pi1 = clamp_pi(n1 / n);
    if (n1 > 1e-12 * n) next.mu1y = swy / n1;
    if (n2 > 1e-12 * n) next.mu2y = (sy - swy) / n2;
    double s = (sum_y2 - n1 * next.mu1y * next.mu1y - n2 * next.mu2y * next.mu2y) / n;
    run.floor_engaged = !(s >= opts.sigma_floor);
    next.sigy2 = run.floor_engaged ? opts.sigma_floor : s;
    t = next;
  }
  return run;
}

PrimaryParams shift(PrimaryParams t, double offset) {
  t.mu1y += offset;
  t.mu2y += offset;
  return t;
}

double mean_score_norm_y(const Dataset& data, const PrimaryParams& t) {
  PrimaryVector g = PrimaryVector::Zero();
  for (std::size_t i = 0; i < data.size(); ++i) g += grad_logdens_y(t, data.y(i));
  return (g / static_cast<double>(data.size())).norm();
}

FitReport<PrimaryParams> finish_y(const Dataset& data, const YRun& run, double offset,
                                  int restart) {
  FitReport<PrimaryParams> rep;
  rep.params = shift(run.params, offset);
  rep.loglik_per_obs = run.loglik;
  rep.iterations = run.iterations;
  rep.converged = run.converged;
  rep.floor_engaged = run.floor_engaged;
  rep.best_restart = restart;
  rep.grad_norm = mean_score_norm_y(data, rep.params);
  return rep;
}

struct CenteredY {
  std::vector<double> y;
  double offset = 0.0;
  double sum_y2 = 0.0;
};

CenteredY center_y(const Dataset& data) {
  CenteredY c;
  double s = 0.0;
  for (double v : data.y_values()) s += v;
  c.offset = s / static_cast<double>(data.size());
  c.y.reserve(data.size());
  for (double v : data.y_values()) {
    c.y.push_back(v - c.offset);
    c.sum_y2 += (v - c.offset) * (v - c.offset);
  }
  return c;
}

// ---------------------------------------------------------------- B regime

struct BRun {
  Eigen::VectorXd mu1, mu2;
  Eigen::MatrixXd cov;
  double pi1;
  double loglik;
  int iterations;
  bool converged;
  bool floor_engaged;
  std::vector<double> trace;
};

struct CenteredB {
  Eigen::MatrixXd v;  // dim x n, column per record
  Eigen::VectorXd offset;
  Eigen::MatrixXd scatter;  // sum of v v^T over centered records
};

CenteredB center_b(const Dataset& data) {
  const auto dim = static_cast<Eigen::Index>(1 + data.aux_dim());
  const auto n = static_cast<Eigen::Index>(data.size());
  CenteredB c;
  c.v.resize(dim, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c.v(0, i) = data.y(static_cast<std::size_t>(i));
    const auto a = data.a(static_cast<std::size_t>(i));
    for (Eigen::Index j = 1; j < dim; ++j) c.v(j, i) = a[static_cast<std::size_t>(j - 1)];
  }
  c.offset = c.v.rowwise().mean();
  c.v.colwise() -= c.offset;
  c.scatter = c.v * c.v.transpose();
  return c;
}

// Returns true when the floor changed the matrix.
bool floor_covariance(Eigen::MatrixXd& cov, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::VectorXd ev = es.eigenvalues();
  if (es.info() == Eigen::Success && ev.minCoeff() >= floor) return false;
  ev = ev.cwiseMax(floor);
  cov = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  cov = 0.5 * (cov + cov.transpose());
  return true;
}

// Mean score norm of log p_b from E-step sums (all in centered coordinates):
// w1 = sum w, s1 = sum w v, sv = sum v, scatter = sum v v^T.
double stats_score_norm_b(double pi1, const Eigen::VectorXd& mu1, const Eigen::VectorXd& mu2,
                          const Eigen::MatrixXd& prec, double n, double w1,
                          const Eigen::VectorXd& s1, const Eigen::VectorXd& sv,
                          const Eigen::MatrixXd& scatter) {
  const Eigen::Index dim = mu1.size();
  const Eigen::Index m = dim - 1;
  const double w2 = n - w1;
  const Eigen::VectorXd s2 = sv - s1;
  const Eigen::MatrixXd resid = scatter - mu1 * s1.transpose() - s1 * mu1.transpose() +
                                w1 * mu1 * mu1.transpose() - mu2 * s2.transpose() -
                                s2 * mu2.transpose() + w2 * mu2 * mu2.transpose();
  const Eigen::VectorXd g1 = prec * (s1 - w1 * mu1);
  const Eigen::VectorXd g2 = prec * (s2 - w2 * mu2);
  const Eigen::MatrixXd gs = 0.5 * (prec * resid * prec) - 0.5 * n * prec;
  Eigen::VectorXd g(static_cast<Eigen::Index>(flat_dim(static_cast<std::size_t>(m))));
  g(0) = w1 / pi1 - w2 / (1.0 - pi1);
  g(1) = g1(0);
  g(2) = g2(0);
  g(3) = gs(0, 0);
  Eigen::Index k = kPrimaryDim;
  for (Eigen::Index j = 0; j < m; ++j) g(k++) = g1(1 + j);
  for (Eigen::Index j = 0; j < m; ++j) g(k++) = g2(1 + j);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c <= r; ++c) g(k++) = r == c ? gs(1 + r, 1 + r) : 2.0 * gs(1 + r, 1 + c);
  for (Eigen::Index j = 0; j < m; ++j) g(k++) = 2.0 * gs(1 + j, 0);
  return (g / n).norm();
}

BRun em_b_centered(const CenteredB& c, double pi1, Eigen::VectorXd mu1, Eigen::VectorXd mu2,
                   Eigen::MatrixXd cov, const EmOptions& opts) {
  const Eigen::Index dim = c.v.rows();
  const Eigen::Index ncols = c.v.cols();
  const auto n = static_cast<double>(ncols);
  const auto d = static_cast<std::size_t>(dim);
  BRun run;
  run.converged = false;
  run.floor_engaged = floor_covariance(cov, opts.sigma_floor);
  double prev = -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd sum_v = c.v.rowwise().sum();
  Eigen::VectorXd sum_w_v(dim);
  std::vector<double> p(d * d), r1(d), u(d), del(d), m1(d), acc(d);
  const double* data = c.v.data();
  for (int iter = 0;; ++iter) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
      throw NumericalError("EM covariance lost positive definiteness");
    const Eigen::MatrixXd prec = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
    const Eigen::MatrixXd lmat = llt.matrixL();
    const double log_det = 2.0 * lmat.diagonal().array().log().sum();
    const double cnorm = -0.5 * (static_cast<double>(dim) * kLog2Pi + log_det);
    const double lp1 = std::log(pi1);
    const double lp2 = std::log1p(-pi1);
    const Eigen::VectorXd delta = mu1 - mu2;
    const double dpd = delta.dot(prec * delta);
    for (std::size_t j = 0; j < d; ++j) {
      del[j] = delta(static_cast<Eigen::Index>(j));
      m1[j] = mu1(static_cast<Eigen::Index>(j));
      acc[j] = 0.0;
      for (std::size_t k = 0; k < d; ++k)
        p[j * d + k] = prec(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
    }
    double ll = 0.0, sw = 0.0;
    for (Eigen::Index i = 0; i < ncols; ++i) {
      const double* x = data + i * dim;
      for (std::size_t j = 0; j < d; ++j) r1[j] = x[j] - m1[j];
      double q1 = 0.0, du = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double uj = 0.0;
        for (std::size_t k = 0; k < d; ++k) uj += p[j * d + k] * r1[k];
        q1 += r1[j] * uj;
        du += del[j] * uj;
      }
      const double q2 = q1 + 2.0 * du + dpd;
      const double l1 = lp1 + cnorm - 0.5 * q1;
      const double l2 = lp2 + cnorm - 0.5 * q2;
      const double diff = l1 - l2;
      const double e = std::exp(-std::abs(diff));
      const double w1 = diff >= 0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
      ll += std::max(l1, l2) + std::log1p(e);
      sw += w1;
      for (std::size_t j = 0; j < d; ++j) acc[j] += w1 * x[j];
    }
    for (std::size_t j = 0; j < d; ++j) sum_w_v(static_cast<Eigen::Index>(j)) = acc[j];
    ll /= n;
    if (opts.record_trace) run.trace.push_back(ll);
    run.mu1 = mu1;
    run.mu2 = mu2;
    run.cov = cov;
    run.pi1 = pi1;
    run.loglik = ll;
    run.iterations = iter;
    if (iter > 0 && ll - prev < opts.tol &&
        (run.floor_engaged || pi_at_bound(pi1) ||
         stats_score_norm_b(pi1, mu1, mu2, prec, n, sw, sum_w_v, sum_v, c.scatter) <=
             opts.grad_tol)) {
      run.converged = true;
      break;
    }
    if (iter >= opts.max_iter) break;
    prev = ll;
    const double n1 = sw;
    const double n2 = n - sw;
    pi1 = clamp_pi(n1 / n);
    if (n1 > 1e-12 * n) mu1 = sum_w_v / n1;
    if (n2 > 1e-12 * n) mu2 = (sum_v - sum_w_v) / n2;
    cov = (c.scatter - n1 * mu1 * mu1.transpose() - n2 * mu2 * mu2.transpose()) / n;
    cov = 0.5 * (cov + cov.transpose());
    run.floor_engaged = floor_covariance(cov, opts.sigma_floor);
  }
  return run;
}

FitReport<FullParams> finish_b(const Dataset& data, const CenteredB& c, const BRun& run,
                               int restart) {
  FitReport<FullParams> rep;
  rep.params = FullParams::from_moments(run.pi1, run.mu1 + c.offset, run.mu2 + c.offset, run.cov);
  rep.loglik_per_obs = run.loglik;
  rep.iterations = run.iterations;
  rep.converged = run.converged;
  rep.floor_engaged = run.floor_engaged;
  rep.best_restart = restart;
  const JointMixture mix(rep.params);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(flat_dim(data.aux_dim())));
  for (std::size_t i = 0; i < data.size(); ++i) g += mix.score(data.y(i), data.a(i));
  rep.grad_norm = (g / static_cast<double>(data.size())).norm();
  return rep;
}

}  // namespace

void EmOptions::check() const {
  if (max_iter < 1) throw InputError("EmOptions: max_iter must be >= 1");
  if (!(tol > 0.0)) throw InputError("EmOptions: tol must be > 0");
  if (restarts < 1) throw InputError("EmOptions: restarts must be >= 1");
  if (!(sigma_floor > 0.0)) throw InputError("EmOptions: sigma_floor must be > 0");
}

FitReport<PrimaryParams> run_em_y(const Dataset& data, const PrimaryParams& init,
                                  const EmOptions& opts) {
  opts.check();
  require_valid(init);
  if (data.size() < 3) throw InputError("fit_em_y requires n >= 3");
  const CenteredY c = center_y(data);
  YRun run = em_y_centered(c.y, c.sum_y2, shift(init, -c.offset), opts);
  auto rep = finish_y(data, run, c.offset, 0);
  if (opts.record_trace) rep.traces.push_back(std::move(run.trace));
  return rep;
}

FitReport<PrimaryParams> fit_em_y(const Dataset& data, const EmOptions& opts) {
  opts.check();
  if (data.size() < 3) throw InputError("fit_em_y requires n >= 3");
  require_spread(data);
  const CenteredY c = center_y(data);
  const double q20 = quantile(c.y, 0.2);
  const double q80 = quantile(c.y, 0.8);
  const double var = c.sum_y2 / static_cast<double>(c.y.size());
  const double sd = std::sqrt(var);

  std::vector<std::vector<double>> traces;
  YRun best;
  int best_restart = -1;
  for (int r = 0; r < opts.restarts; ++r) {
    PrimaryParams init{0.5, q20, q80, std::max(var, opts.sigma_floor)};
    if (r > 0) {
      auto rng = restart_rng(opts.seed, r);
      std::normal_distribution<double> jitter(0.0, 0.25 * sd);
      std::uniform_real_distribution<double> mix(0.3, 0.7);
      init.mu1y += jitter(rng);
      init.mu2y += jitter(rng);
      init.pi1 = mix(rng);
    }
    YRun run = em_y_centered(c.y, c.sum_y2, init, opts);
    if (best_restart < 0 || run.loglik > best.loglik) {
      best = run;
      best_restart = r;
    }
    if (opts.record_trace) traces.push_back(std::move(run.trace));
  }
  auto rep = finish_y(data, best, c.offset, best_restart);
  rep.traces = std::move(traces);
  return rep;
}

FitReport<FullParams> run_em_b(const Dataset& data, const FullParams& init,
                               const EmOptions& opts) {
  opts.check();
  require_valid(init);
  if (data.aux_dim() == 0) throw InputError("fit_em_b requires auxiliary columns");
  if (init.aux_dim() != data.aux_dim())
    throw InputError("initial parameters and data have different auxiliary dimensions");
  if (data.size() < data.aux_dim() + 3) throw InputError("fit_em_b requires n >= m + 3");
  const CenteredB c = center_b(data);
  BRun run = em_b_centered(c, init.theta.pi1, init.mean1() - c.offset, init.mean2() - c.offset,
                           init.covariance(), opts);
  auto rep = finish_b(data, c, run, 0);
  if (opts.record_trace) rep.traces.push_back(std::move(run.trace));
  return rep;
}

FitReport<FullParams> fit_em_b(const Dataset& data, const EmOptions& opts) {
  opts.check();
  if (data.aux_dim() == 0) throw InputError("fit_em_b requires auxiliary columns");
  if (data.size() < data.aux_dim() + 3) throw InputError("fit_em_b requires n >= m + 3");
  require_spread(data);
  const CenteredB c = center_b(data);
  const Eigen::Index dim = c.v.rows();
  const Eigen::Index n = c.v.cols();
  const Eigen::MatrixXd cov0 = c.scatter / static_cast<double>(n);
  const Eigen::VectorXd sd = cov0.diagonal().cwiseMax(0.0).cwiseSqrt();

  // Quantile-pair start along coordinate k: records split at the median of
  // coordinate k; the k-th entries of the means are its 20/80th percentiles.
  auto quantile_start = [&](Eigen::Index k, Eigen::VectorXd& m1, Eigen::VectorXd& m2) {
    std::vector<double> col(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = c.v(k, i);
    const double med = quantile(col, 0.5);
    m1 = Eigen::VectorXd::Zero(dim);
    m2 = Eigen::VectorXd::Zero(dim);
    double n1 = 0, n2 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (c.v(k, i) <= med) {
        m1 += c.v.col(i);
        n1 += 1;
      } else {
        m2 += c.v.col(i);
        n2 += 1;
      }
    }
    if (n1 > 0) m1 /= n1;
    if (n2 > 0) m2 /= n2;
    m1(k) = quantile(col, 0.2);
    m2(k) = quantile(col, 0.8);
  };

  std::vector<std::vector<double>> traces;
  BRun best;
  int best_restart = -1;
  for (int r = 0; r < opts.restarts; ++r) {
    Eigen::VectorXd m1, m2;
    quantile_start(r % dim, m1, m2);
    double pi1 = 0.5;
    if (r >= dim) {
      auto rng = restart_rng(opts.seed, r);
      std::normal_distribution<double> jitter(0.0, 1.0);
      std::uniform_real_distribution<double> mix(0.3, 0.7);
      for (Eigen::Index j = 0; j < dim; ++j) m1(j) += 0.25 * sd(j) * jitter(rng);
      for (Eigen::Index j = 0; j < dim; ++j) m2(j) += 0.25 * sd(j) * jitter(rng);
      pi1 = mix(rng);
    }
    BRun run = em_b_centered(c, pi1, m1, m2, cov0, opts);
    if (best_restart < 0 || run.loglik > best.loglik) {
      best = run;
      best_restart = r;
    }
    if (opts.record_trace) traces.push_back(std::move(run.trace));
  }
  auto rep = finish_b(data, c, best, best_restart);
  rep.traces = std::move(traces);
  return rep;
}

FitReport<PrimaryParams> fit_complete_x(const Dataset& data, double sigma_floor) {
  if (!data.has_z()) throw InputError("fit_complete_x requires the latent label column");
  double n1 = 0, s1 = 0, s2 = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.z(i) == 1) {
      n1 += 1;
      s1 += data.y(i);
    } else {
      s2 += data.y(i);
    }
  }
  const auto n = static_cast<double>(data.size());
  const double n2 = n - n1;
  if (n1 == 0 || n2 == 0) throw DegenerateDataError("complete-data fit needs both classes present");
  PrimaryParams t{n1 / n, s1 / n1, s2 / n2, 0.0};
  double ss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double r = data.y(i) - (data.z(i) == 1 ? t.mu1y : t.mu2y);
    ss += r * r;
  }
  FitReport<PrimaryParams> rep;
  rep.floor_engaged = !(ss / n >= sigma_floor);
  t.sigy2 = rep.floor_engaged ? sigma_floor : ss / n;
  rep.params = t;
  rep.loglik_per_obs = loglik_x(data, t);
  rep.converged = true;
  PrimaryVector g = PrimaryVector::Zero();
  for (std::size_t i = 0; i < data.size(); ++i) g += grad_logdens_x(t, data.y(i), data.z(i));
  rep.grad_norm = (g / n).norm();
  return rep;
}

}  // namespace auxsel
