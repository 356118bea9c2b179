#include "auxsel/gmm.hpp"

#include "auxsel/errors.hpp"

#include <cmath>
#include <numbers>

namespace auxsel {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Score of one primary component pair weighted by (w1, 1 - w1).
PrimaryVector primary_score(const PrimaryParams& t, double y, double w1) {
  const double w2 = 1.0 - w1;
  const double r1 = y - t.mu1y;
  const double r2 = y - t.mu2y;
  const double s = t.sigy2;
  PrimaryVector g;
  g(0) = w1 / t.pi1 - w2 / (1.0 - t.pi1);
  g(1) = w1 * r1 / s;
  g(2) = w2 * r2 / s;
  g(3) = (w1 * (r1 * r1 - s) + w2 * (r2 * r2 - s)) / (2.0 * s * s);
  return g;
}

template <typename Grad>
PrimaryMatrix fd_jacobian_primary(const PrimaryParams& theta, Grad&& grad) {
  const PrimaryVector base = flatten(theta);
  PrimaryMatrix h;
  for (int j = 0; j < 4; ++j) {
    const double step = fd_step(base(j));
    PrimaryVector plus = base;
    PrimaryVector minus = base;
    plus(j) += step;
    minus(j) -= step;
    h.col(j) = (grad(unflatten_primary(plus)) - grad(unflatten_primary(minus))) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

}  // namespace

double log_add_exp(double la, double lb) {
  if (la < lb) std::swap(la, lb);
  if (lb == -std::numeric_limits<double>::infinity()) return la;
  return la + std::log1p(std::exp(lb - la));
}

double log_normal(double y, double mu, double var) {
  const double r = y - mu;
  return -0.5 * (kLog2Pi + std::log(var) + r * r / var);
}

double logdens_y(const PrimaryParams& t, double y) {
  return log_add_exp(std::log(t.pi1) + log_normal(y, t.mu1y, t.sigy2),
                     std::log1p(-t.pi1) + log_normal(y, t.mu2y, t.sigy2));
}

double logdens_x(const PrimaryParams& t, double y, int z) {
  return z == 1 ? std::log(t.pi1) + log_normal(y, t.mu1y, t.sigy2)
                : std::log1p(-t.pi1) + log_normal(y, t.mu2y, t.sigy2);
}

double logdens_z_given_y(const PrimaryParams& t, double y, int z) {
  return logdens_x(t, y, z) - logdens_y(t, y);
}

double resp_z_given_y(const PrimaryParams& t, double y) {
  const double l1 = std::log(t.pi1) + log_normal(y, t.mu1y, t.sigy2);
  const double l2 = std::log1p(-t.pi1) + log_normal(y, t.mu2y, t.sigy2);
  // logistic of the log-odds, stable in both tails
  const double d = l2 - l1;
  return d > 0 ? std::exp(-d) / (1.0 + std::exp(-d)) : 1.0 / (1.0 + std::exp(d));
}

JointMixture::JointMixture(const FullParams& beta)
    : beta_(beta), dim_(1 + beta.aux_dim()), mean1_(beta.mean1()), mean2_(beta.mean2()) {
  const Eigen::MatrixXd cov = beta.covariance();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw NumericalError("joint covariance not positive definite");
  precision_ = llt.solve(Eigen::MatrixXd::Identity(cov.rows(), cov.cols()));
  const Eigen::MatrixXd l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  log_norm_ = -0.5 * (static_cast<double>(dim_) * kLog2Pi + log_det);
}

void JointMixture::residual(int k, double y, std::span<const double> a,
                            Eigen::VectorXd& r) const {
  const Eigen::VectorXd& mu = k == 1 ? mean1_ : mean2_;
  r.resize(static_cast<Eigen::Index>(dim_));
  r(0) = y - mu(0);
  for (std::size_t j = 0; j + 1 < dim_; ++j)
    r(static_cast<Eigen::Index>(j + 1)) = a[j] - mu(static_cast<Eigen::Index>(j + 1));
}

double JointMixture::log_component(int k, double y, std::span<const double> a) const {
  if (a.size() + 1 != dim_) throw InputError("auxiliary vector has wrong dimension");
  Eigen::VectorXd r;
  residual(k, y, a, r);
  return log_norm_ - 0.5 * r.dot(precision_ * r);
}

double JointMixture::logdens(double y, std::span<const double> a) const {
  return log_add_exp(std::log(beta_.theta.pi1) + log_component(1, y, a),
                     std::log1p(-beta_.theta.pi1) + log_component(2, y, a));
}

double JointMixture::resp(double y, std::span<const double> a) const {
  const double d = (std::log1p(-beta_.theta.pi1) + log_component(2, y, a)) -
                   (std::log(beta_.theta.pi1) + log_component(1, y, a));
  return d > 0 ? std::exp(-d) / (1.0 + std::exp(-d)) : 1.0 / (1.0 + std::exp(d));
}

Eigen::VectorXd JointMixture::score(double y, std::span<const double> a) const {
  const double w1 = resp(y, a);
  const double w[2] = {w1, 1.0 - w1};
  const std::size_t m = dim_ - 1;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(flat_dim(m)));
  g(0) = w1 / beta_.theta.pi1 - (1.0 - w1) / (1.0 - beta_.theta.pi1);
  const auto mi = static_cast<Eigen::Index>(m);
  const Eigen::Index off_mu1a = kPrimaryDim;
  const Eigen::Index off_mu2a = off_mu1a + mi;
  const Eigen::Index off_saa = off_mu2a + mi;
  const Eigen::Index off_sya = off_saa + mi * (mi + 1) / 2;
  Eigen::VectorXd r;
  Eigen::MatrixXd gsig = Eigen::MatrixXd::Zero(mi + 1, mi + 1);
  for (int k = 1; k <= 2; ++k) {
    residual(k, y, a, r);
    const Eigen::VectorXd u = precision_ * r;  // dlogN/dmu
    const double wk = w[k - 1];
    g(k) += wk * u(0);
    g.segment(k == 1 ? off_mu1a : off_mu2a, mi) += wk * u.tail(mi);
    gsig += wk * 0.5 * (u * u.transpose() - precision_);
  }
  g(3) += gsig(0, 0);
  Eigen::Index idx = off_saa;
  for (Eigen::Index rr = 0; rr < mi; ++rr)
    for (Eigen::Index c = 0; c <= rr; ++c)
      g(idx++) = rr == c ? gsig(1 + rr, 1 + rr) : 2.0 * gsig(1 + rr, 1 + c);
  for (Eigen::Index j = 0; j < mi; ++j) g(off_sya + j) = 2.0 * gsig(1 + j, 0);
  return g;
}

double logdens_b(const FullParams& beta, double y, std::span<const double> a) {
  return JointMixture(beta).logdens(y, a);
}

double resp_z_given_b(const FullParams& beta, double y, std::span<const double> a) {
  return JointMixture(beta).resp(y, a);
}

PrimaryVector grad_logdens_y(const PrimaryParams& theta, double y) {
  return primary_score(theta, y, resp_z_given_y(theta, y));
}

PrimaryVector grad_logdens_x(const PrimaryParams& theta, double y, int z) {
  return primary_score(theta, y, z == 1 ? 1.0 : 0.0);
}

PrimaryVector grad_logdens_z_given_y(const PrimaryParams& theta, double y, int z) {
  return grad_logdens_x(theta, y, z) - grad_logdens_y(theta, y);
}

double fd_step(double value) { return 1e-5 * std::max(1.0, std::abs(value)); }

PrimaryMatrix hess_logdens_y(const PrimaryParams& theta, double y) {
  return fd_jacobian_primary(theta, [y](const PrimaryParams& t) { return grad_logdens_y(t, y); });
}

PrimaryMatrix hess_logdens_x(const PrimaryParams& theta, double y, int z) {
  return fd_jacobian_primary(theta,
                             [y, z](const PrimaryParams& t) { return grad_logdens_x(t, y, z); });
}

JointHessianStencil::JointHessianStencil(const FullParams& beta) {
  const std::size_t m = beta.aux_dim();
  const Eigen::VectorXd base = flatten(beta);
  for (Eigen::Index j = 0; j < base.size(); ++j) {
    const double step = fd_step(base(j));
    Eigen::VectorXd plus = base;
    Eigen::VectorXd minus = base;
    plus(j) += step;
    minus(j) -= step;
    plus_.emplace_back(unflatten(plus, m));
    minus_.emplace_back(unflatten(minus, m));
    steps_.push_back(step);
  }
}

Eigen::MatrixXd JointHessianStencil::hessian(double y, std::span<const double> a) const {
  const auto n = static_cast<Eigen::Index>(steps_.size());
  Eigen::MatrixXd h(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto k = static_cast<std::size_t>(j);
    h.col(j) = (plus_[k].score(y, a) - minus_[k].score(y, a)) / (2.0 * steps_[k]);
  }
  return 0.5 * (h + h.transpose());
}

namespace {

const Eigen::VectorXd& require_aux(const Record& record) {
  if (!record.a) throw InputError("regime b requires an auxiliary vector");
  return *record.a;
}

int require_z(const Record& record) {
  if (!record.z) throw InputError("regime x requires a latent label");
  return *record.z;
}

}  // namespace

Eigen::VectorXd grad_logdens(Regime regime, const FullParams& params, const Record& record) {
  const std::size_t m = params.aux_dim();
  switch (regime) {
    case Regime::b: {
      const Eigen::VectorXd& a = require_aux(record);
      return JointMixture(params).score(record.y, {a.data(), static_cast<std::size_t>(a.size())});
    }
    case Regime::y: {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(flat_dim(m)));
      g.head<4>() = grad_logdens_y(params.theta, record.y);
      return g;
    }
    case Regime::x: {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(flat_dim(m)));
      g.head<4>() = grad_logdens_x(params.theta, record.y, require_z(record));
      return g;
    }
  }
  return {};
}

Eigen::MatrixXd hess_logdens(Regime regime, const FullParams& params, const Record& record) {
  const std::size_t m = params.aux_dim();
  const auto n = static_cast<Eigen::Index>(flat_dim(m));
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  switch (regime) {
    case Regime::y:
      h.topLeftCorner<4, 4>() = hess_logdens_y(params.theta, record.y);
      return h;
    case Regime::x:
      h.topLeftCorner<4, 4>() = hess_logdens_x(params.theta, record.y, require_z(record));
      return h;
    case Regime::b: {
      const Eigen::VectorXd& a = require_aux(record);
      return JointHessianStencil(params).hessian(
          record.y, {a.data(), static_cast<std::size_t>(a.size())});
    }
  }
  return h;
}

double loglik_y(const Dataset& data, const PrimaryParams& theta) {
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) s += logdens_y(theta, data.y(i));
  return s / static_cast<double>(data.size());
}

double loglik_x(const Dataset& data, const PrimaryParams& theta) {
  if (!data.has_z()) throw InputError("loglik_x requires the latent label column");
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) s += logdens_x(theta, data.y(i), data.z(i));
  return s / static_cast<double>(data.size());
}

double loglik_b(const Dataset& data, const FullParams& beta) {
  const JointMixture mix(beta);
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) s += mix.logdens(data.y(i), data.a(i));
  return s / static_cast<double>(data.size());
}

}  // namespace auxsel
