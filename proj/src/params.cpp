#include "auxsel/params.hpp"

#include "auxsel/errors.hpp"

#include <cmath>
#include <sstream>

namespace auxsel {

Eigen::VectorXd FullParams::mean1() const {
  Eigen::VectorXd mu(1 + aux_dim());
  mu(0) = theta.mu1y;
  mu.tail(aux_dim()) = phi.mu1a;
  return mu;
}

Eigen::VectorXd FullParams::mean2() const {
  Eigen::VectorXd mu(1 + aux_dim());
  mu(0) = theta.mu2y;
  mu.tail(aux_dim()) = phi.mu2a;
  return mu;
}

Eigen::MatrixXd FullParams::covariance() const {
  const auto m = static_cast<Eigen::Index>(aux_dim());
  Eigen::MatrixXd cov(m + 1, m + 1);
  cov(0, 0) = theta.sigy2;
  cov.block(1, 0, m, 1) = phi.sigma_ya;
  cov.block(0, 1, 1, m) = phi.sigma_ya.transpose();
  cov.block(1, 1, m, m) = phi.sigma_aa;
  return cov;
}

FullParams FullParams::swapped() const {
  FullParams out = *this;
  out.theta = theta.swapped();
  out.phi.mu1a = phi.mu2a;
  out.phi.mu2a = phi.mu1a;
  return out;
}

FullParams FullParams::from_moments(double pi1, const Eigen::VectorXd& mean1,
                                    const Eigen::VectorXd& mean2,
                                    const Eigen::MatrixXd& cov) {
  const Eigen::Index m = mean1.size() - 1;
  FullParams p;
  p.theta = {pi1, mean1(0), mean2(0), cov(0, 0)};
  p.phi.mu1a = mean1.tail(m);
  p.phi.mu2a = mean2.tail(m);
  p.phi.sigma_aa = cov.block(1, 1, m, m);
  p.phi.sigma_ya = cov.block(1, 0, m, 1);
  return p;
}

std::size_t aux_param_dim(std::size_t m) { return 3 * m + m * (m + 1) / 2; }

std::size_t flat_dim(std::size_t m) { return kPrimaryDim + aux_param_dim(m); }

Eigen::VectorXd flatten(const PrimaryParams& theta) {
  Eigen::VectorXd v(kPrimaryDim);
  v << theta.pi1, theta.mu1y, theta.mu2y, theta.sigy2;
  return v;
}

PrimaryParams unflatten_primary(const Eigen::VectorXd& flat) {
  return {flat(0), flat(1), flat(2), flat(3)};
}

Eigen::VectorXd flatten(const FullParams& params) {
  const std::size_t m = params.aux_dim();
  Eigen::VectorXd v(flat_dim(m));
  v.head(kPrimaryDim) = flatten(params.theta);
  Eigen::Index k = kPrimaryDim;
  for (std::size_t j = 0; j < m; ++j) v(k++) = params.phi.mu1a(j);
  for (std::size_t j = 0; j < m; ++j) v(k++) = params.phi.mu2a(j);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c <= r; ++c) v(k++) = params.phi.sigma_aa(r, c);
  for (std::size_t j = 0; j < m; ++j) v(k++) = params.phi.sigma_ya(j);
  return v;
}

FullParams unflatten(const Eigen::VectorXd& flat, std::size_t m) {
  if (static_cast<std::size_t>(flat.size()) != flat_dim(m))
    throw InputError("unflatten: vector length does not match aux dimension");
  FullParams p;
  p.theta = unflatten_primary(flat.head(kPrimaryDim));
  const auto mm = static_cast<Eigen::Index>(m);
  p.phi.mu1a.resize(mm);
  p.phi.mu2a.resize(mm);
  p.phi.sigma_aa.resize(mm, mm);
  p.phi.sigma_ya.resize(mm);
  Eigen::Index k = kPrimaryDim;
  for (Eigen::Index j = 0; j < mm; ++j) p.phi.mu1a(j) = flat(k++);
  for (Eigen::Index j = 0; j < mm; ++j) p.phi.mu2a(j) = flat(k++);
  for (Eigen::Index r = 0; r < mm; ++r)
    for (Eigen::Index c = 0; c <= r; ++c) {
      p.phi.sigma_aa(r, c) = flat(k);
      p.phi.sigma_aa(c, r) = flat(k);
      ++k;
    }
  for (Eigen::Index j = 0; j < mm; ++j) p.phi.sigma_ya(j) = flat(k++);
  return p;
}

std::optional<std::string> validate(const PrimaryParams& theta, double sigma_floor) {
  if (!std::isfinite(theta.pi1) || !std::isfinite(theta.mu1y) ||
      !std::isfinite(theta.mu2y) || !std::isfinite(theta.sigy2))
    return "non-finite primary parameter";
  if (!(theta.pi1 > 0.0 && theta.pi1 < 1.0)) return "pi1 out of open interval (0,1)";
  if (!(theta.sigy2 >= sigma_floor)) return "sigy2 below variance floor";
  return std::nullopt;
}

std::optional<std::string> validate(const FullParams& params, double sigma_floor) {
  if (auto v = validate(params.theta, sigma_floor)) return v;
  const auto m = params.phi.dim();
  if (m == 0) return "auxiliary dimension must be at least 1";
  if (static_cast<std::size_t>(params.phi.mu2a.size()) != m ||
      static_cast<std::size_t>(params.phi.sigma_ya.size()) != m ||
      static_cast<std::size_t>(params.phi.sigma_aa.rows()) != m ||
      static_cast<std::size_t>(params.phi.sigma_aa.cols()) != m)
    return "auxiliary parameter blocks have inconsistent dimensions";
  const Eigen::MatrixXd cov = params.covariance();
  if (!cov.allFinite() || !params.phi.mu1a.allFinite() || !params.phi.mu2a.allFinite())
    return "non-finite auxiliary parameter";
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 0.0)
    return "joint covariance not symmetric";
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) return "joint covariance not positive definite";
  return std::nullopt;
}

void require_valid(const PrimaryParams& theta) {
  if (auto v = validate(theta)) throw InputError("invalid primary parameters: " + *v);
}

void require_valid(const FullParams& params) {
  if (auto v = validate(params)) throw InputError("invalid parameters: " + *v);
}

}  // namespace auxsel
