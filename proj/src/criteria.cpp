#include "auxsel/criteria.hpp"

#include "auxsel/errors.hpp"
#include "auxsel/gmm.hpp"

#include <array>

namespace auxsel {

namespace {

constexpr std::array<std::pair<Criterion, const char*>, 6> kNames{{
    {Criterion::risk_xb, "risk_xb"},
    {Criterion::aic_xb, "aic_xb"},
    {Criterion::aic_xy, "aic_xy"},
    {Criterion::aic_yb, "aic_yb"},
    {Criterion::aic_yy, "aic_yy"},
    {Criterion::tic, "tic"},
}};

double fit_term(const Dataset& data, const PrimaryParams& theta) {
  return -2.0 * static_cast<double>(data.size()) * loglik_y(data, theta);
}

// Trace of a * b without forming the product.
double trace_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a.array() * b.transpose().array()).sum();
}

void check_dims(const InfoMatrices& m) {
  const auto d = m.I_b.rows();
  for (const auto* x : {&m.I_b, &m.J_b, &m.K_by, &m.I_y, &m.I_zy, &m.I_x})
    if (x->rows() != d || x->cols() != d)
      throw InputError("information matrices have inconsistent dimensions");
}

void check_b(const Dataset& data, const FullParams& beta, const InfoMatrices& m) {
  if (data.empty()) throw InputError("criteria need at least one record");
  require_valid(beta);
  check_dims(m);
  if (m.dim() != flat_dim(beta.aux_dim()))
    throw InputError("information matrices do not match the parameter dimension");
}

void check_y(const Dataset& data, const PrimaryParams& theta, const InfoMatrices& m) {
  if (data.empty()) throw InputError("criteria need at least one record");
  require_valid(theta);
  check_dims(m);
  if (m.dim() != kPrimaryDim) throw InputError("Y-only criteria need d x d matrices");
}

CriterionReport make(Criterion c, double fit, std::vector<std::pair<std::string, double>> traces,
                     double constant = 0.0) {
  CriterionReport r;
  r.name = to_string(c);
  r.fit_term = fit;
  r.penalty = constant;
  for (const auto& t : traces) r.penalty += t.second;
  r.traces = std::move(traces);
  r.value = r.fit_term + r.penalty;
  return r;
}

Eigen::MatrixXd theta_block(const Eigen::MatrixXd& m) {
  if (m.rows() < static_cast<Eigen::Index>(kPrimaryDim))
    throw InputError("matrix smaller than the primary parameter block");
  return m.topLeftCorner(kPrimaryDim, kPrimaryDim);
}

}  // namespace

std::string to_string(Criterion c) {
  for (const auto& [k, name] : kNames)
    if (k == c) return name;
  return "unknown";
}

std::string criterion_family(Criterion c) {
  switch (c) {
    case Criterion::aic_xb:
    case Criterion::aic_xy:
      return "aic_x";
    case Criterion::aic_yb:
    case Criterion::aic_yy:
      return "aic_y";
    case Criterion::risk_xb:
    case Criterion::tic:
      return "risk";
  }
  return "unknown";
}

Criterion criterion_from_string(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (name == n) return k;
  throw InputError("unknown criterion '" + std::string(name) + "'");
}

namespace {

CriterionReport risk_core(const Dataset& data, const PrimaryParams& theta,
                          const InfoMatrices& mats, double cond_limit) {
  const Eigen::MatrixXd ib_inv = safe_inverse(mats.I_b, cond_limit);
  const double t1 = 2.0 * trace_product(ib_inv, mats.K_by);
  const double t2 = trace_product(mats.I_zy, ib_inv * mats.J_b * ib_inv);
  return make(Criterion::risk_xb, fit_term(data, theta),
              {{"2tr(Ib^-1 Kby)", t1}, {"tr(Izy Ib^-1 Jb Ib^-1)", t2}});
}

CriterionReport aic_xb_core(const Dataset& data, const PrimaryParams& theta,
                            const InfoMatrices& mats, double cond_limit) {
  const Eigen::MatrixXd ib_inv = safe_inverse(mats.I_b, cond_limit);
  return make(Criterion::aic_xb, fit_term(data, theta),
              {{"tr(Ix Ib^-1)", trace_product(mats.I_x, ib_inv)},
               {"tr(Iy Ib^-1)", trace_product(mats.I_y, ib_inv)}});
}

CriterionReport aic_yb_core(const Dataset& data, const PrimaryParams& theta,
                            const InfoMatrices& mats, double cond_limit) {
  const Eigen::MatrixXd ib_inv = safe_inverse(mats.I_b, cond_limit);
  return make(Criterion::aic_yb, fit_term(data, theta),
              {{"2tr(Iy Ib^-1)", 2.0 * trace_product(mats.I_y, ib_inv)}});
}

}  // namespace

CriterionReport risk_xb(const Dataset& data, const FullParams& beta_hat, const InfoMatrices& mats,
                        double cond_limit) {
  check_b(data, beta_hat, mats);
  return risk_core(data, beta_hat.theta, mats, cond_limit);
}

CriterionReport risk_xb(const Dataset& data, const PrimaryParams& theta_hat,
                        const InfoMatrices& mats, double cond_limit) {
  check_y(data, theta_hat, mats);
  return risk_core(data, theta_hat, mats, cond_limit);
}

CriterionReport aic_xb(const Dataset& data, const FullParams& beta_hat, const InfoMatrices& mats,
                       double cond_limit) {
  check_b(data, beta_hat, mats);
  return aic_xb_core(data, beta_hat.theta, mats, cond_limit);
}

CriterionReport aic_xb(const Dataset& data, const PrimaryParams& theta_hat,
                       const InfoMatrices& mats, double cond_limit) {
  check_y(data, theta_hat, mats);
  return aic_xb_core(data, theta_hat, mats, cond_limit);
}

CriterionReport aic_yb(const Dataset& data, const FullParams& beta_hat, const InfoMatrices& mats,
                       double cond_limit) {
  check_b(data, beta_hat, mats);
  return aic_yb_core(data, beta_hat.theta, mats, cond_limit);
}

CriterionReport aic_yb(const Dataset& data, const PrimaryParams& theta_hat,
                       const InfoMatrices& mats, double cond_limit) {
  check_y(data, theta_hat, mats);
  return aic_yb_core(data, theta_hat, mats, cond_limit);
}

CriterionReport aic_xy(const Dataset& data, const PrimaryParams& theta_y,
                       const InfoMatrices& mats_y, double cond_limit) {
  if (data.empty()) throw InputError("criteria need at least one record");
  require_valid(theta_y);
  check_dims(mats_y);
  const Eigen::MatrixXd iy_inv = safe_inverse(theta_block(mats_y.I_y), cond_limit);
  return make(Criterion::aic_xy, fit_term(data, theta_y),
              {{"tr(Ix Iy^-1)", trace_product(theta_block(mats_y.I_x), iy_inv)}},
              static_cast<double>(kPrimaryDim));
}

CriterionReport aic_yy(const Dataset& data, const PrimaryParams& theta_y) {
  if (data.empty()) throw InputError("criteria need at least one record");
  require_valid(theta_y);
  return make(Criterion::aic_yy, fit_term(data, theta_y), {},
              2.0 * static_cast<double>(kPrimaryDim));
}

CriterionReport tic(const Dataset& data, const PrimaryParams& theta_y, const InfoMatrices& mats_y,
                    double cond_limit) {
  check_y(data, theta_y, mats_y);
  const Eigen::MatrixXd iy_inv = safe_inverse(mats_y.I_y, cond_limit);
  return make(Criterion::tic, fit_term(data, theta_y),
              {{"2tr(Iy^-1 Jy)", 2.0 * trace_product(iy_inv, mats_y.J_b)}});
}

std::string select_auxiliary(const std::vector<std::pair<std::string, CriterionReport>>& reports) {
  if (reports.empty()) throw InputError("select_auxiliary: no candidates");
  const std::string& name = reports.front().second.name;
  const std::string family = criterion_family(criterion_from_string(name));
  for (const auto& [label, r] : reports)
    if (criterion_family(criterion_from_string(r.name)) != family)
      throw InputError("select_auxiliary: mixed criteria '" + name + "' and '" + r.name + "'");
  const auto rank = [](const std::string& label) { return label == kNoAuxiliary ? 0 : 1; };
  const auto* best = &reports.front();
  for (const auto& cand : reports) {
    const double v = cand.second.value;
    const double b = best->second.value;
    if (v < b) {
      best = &cand;
    } else if (v == b) {
      const auto key = std::pair(rank(cand.first), cand.first);
      if (key < std::pair(rank(best->first), best->first)) best = &cand;
    }
  }
  return best->first;
}

}  // namespace auxsel
