#include "auxsel/infomat.hpp"

#include "auxsel/errors.hpp"
#include "auxsel/gmm.hpp"
#include "auxsel/parallel.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>

namespace auxsel {

namespace {

constexpr std::size_t kBlock = 128;

struct Sums {
  Eigen::MatrixXd neg_hb, jb, kby, neg_hy, izy;

  explicit Sums(Eigen::Index dim)
      : neg_hb(Eigen::MatrixXd::Zero(dim, dim)),
        jb(Eigen::MatrixXd::Zero(dim, dim)),
        kby(Eigen::MatrixXd::Zero(dim, dim)),
        neg_hy(Eigen::MatrixXd::Zero(dim, dim)),
        izy(Eigen::MatrixXd::Zero(dim, dim)) {}
  Sums() = default;

  void add(const Sums& o) {
    neg_hb += o.neg_hb;
    jb += o.jb;
    kby += o.kby;
    neg_hy += o.neg_hy;
    izy += o.izy;
  }
};

// Latent-part outer product: sum_z p(z|y) s_z s_z^T with s_z = score of log p_{z|y}.
PrimaryMatrix latent_outer(const PrimaryParams& theta, double y) {
  const double r1 = resp_z_given_y(theta, y);
  const PrimaryVector s1 = grad_logdens_z_given_y(theta, y, 1);
  const PrimaryVector s0 = grad_logdens_z_given_y(theta, y, 0);
  return r1 * s1 * s1.transpose() + (1.0 - r1) * s0 * s0.transpose();
}

// Per-record accumulation shared by the blocked and serial paths. With a
// null `stencil` the estimating variable is Y and the b-terms reuse p_y.
class Accumulator {
 public:
  Accumulator(const Dataset& data, const PrimaryParams& theta_eval, bool latent,
              const FullParams* beta_hat)
      : data_(data), theta_(theta_eval), latent_(latent), beta_(beta_hat) {
    if (beta_) {
      mix_.emplace(*beta_);
      stencil_.emplace(*beta_);
      dim_ = static_cast<Eigen::Index>(flat_dim(beta_->aux_dim()));
    } else {
      dim_ = kPrimaryDim;
    }
  }

  Eigen::Index dim() const { return dim_; }

  void add(std::size_t i, Sums& s) const {
    const double y = data_.y(i);
    const PrimaryVector gy = grad_logdens_y(theta_, y);
    const PrimaryMatrix hy = hess_logdens_y(theta_, y);
    Eigen::VectorXd gb;
    Eigen::MatrixXd hb;
    if (beta_) {
      gb = mix_->score(y, data_.a(i));
      hb = stencil_->hessian(y, data_.a(i));
    } else {
      gb = gy;
      hb = hy;
    }
    if (!gb.allFinite() || !hb.allFinite() || !gy.allFinite() || !hy.allFinite())
      throw NonFiniteRecordError("non-finite derivative at record " + std::to_string(i), i);
    s.neg_hb -= hb;
    s.jb.noalias() += gb * gb.transpose();
    s.kby.leftCols<4>().noalias() += gb * gy.transpose();
    s.neg_hy.topLeftCorner<4, 4>() -= hy;
    if (latent_) {
      const PrimaryMatrix lo = latent_outer(theta_, y);
      if (!lo.allFinite())
        throw NonFiniteRecordError("non-finite latent score at record " + std::to_string(i), i);
      s.izy.topLeftCorner<4, 4>() += lo;
    }
  }

  InfoMatrices finish(const Sums& s) const {
    const auto n = static_cast<double>(data_.size());
    InfoMatrices m;
    m.I_b = s.neg_hb / n;
    m.J_b = s.jb / n;
    m.K_by = s.kby / n;
    m.I_y = s.neg_hy / n;
    m.I_zy = s.izy / n;
    m.I_x = m.I_y + m.I_zy;
    m.cond_I_b = condition_number(m.I_b);
    return m;
  }

 private:
  const Dataset& data_;
  PrimaryParams theta_;
  bool latent_;
  const FullParams* beta_;
  std::optional<JointMixture> mix_;
  std::optional<JointHessianStencil> stencil_;
  Eigen::Index dim_ = 0;
};

// Fixed blocks of records are reduced sequentially, then blocks in index
// order, so the result is independent of the worker count.
InfoMatrices blocked(const Accumulator& acc, std::size_t n, int workers) {
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  const auto partial = parallel_map<Sums>(blocks, workers, [&](std::size_t b) {
    Sums s(acc.dim());
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) acc.add(i, s);
    return s;
  });
  Sums total(acc.dim());
  for (const auto& p : partial) total.add(p);
  return acc.finish(total);
}

InfoMatrices serial(const Accumulator& acc, std::size_t n) {
  Sums total(acc.dim());
  for (std::size_t i = 0; i < n; ++i) acc.add(i, total);
  return acc.finish(total);
}

void check_inputs(const Dataset& data) {
  if (data.empty()) throw InputError("information matrices need at least one record");
}

}  // namespace

InfoMatrices estimate_info(const Dataset& data, const FullParams& beta_hat,
                           const PrimaryParams& theta_eval, const InfoOptions& opts) {
  check_inputs(data);
  require_valid(beta_hat);
  require_valid(theta_eval);
  if (beta_hat.aux_dim() != data.aux_dim())
    throw InputError("parameters and data have different auxiliary dimensions");
  const Accumulator acc(data, theta_eval, opts.latent, &beta_hat);
  return blocked(acc, data.size(), opts.workers);
}

InfoMatrices estimate_info_y(const Dataset& data, const PrimaryParams& theta,
                             const InfoOptions& opts) {
  check_inputs(data);
  require_valid(theta);
  const Accumulator acc(data, theta, opts.latent, nullptr);
  return blocked(acc, data.size(), opts.workers);
}

InfoMatrices estimate_info_serial(const Dataset& data, const FullParams& beta_hat,
                                  const PrimaryParams& theta_eval, bool latent) {
  check_inputs(data);
  require_valid(beta_hat);
  require_valid(theta_eval);
  const Accumulator acc(data, theta_eval, latent, &beta_hat);
  return serial(acc, data.size());
}

InfoMatrices estimate_info_y_serial(const Dataset& data, const PrimaryParams& theta,
                                    bool latent) {
  check_inputs(data);
  require_valid(theta);
  const Accumulator acc(data, theta, latent, nullptr);
  return serial(acc, data.size());
}

double condition_number(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
  const double lo = ev.minCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return ev.maxCoeff() / lo;
}

Eigen::MatrixXd safe_inverse(const Eigen::MatrixXd& m, double cond_limit) {
  if (m.rows() != m.cols()) throw InputError("safe_inverse: matrix is not square");
  if (!m.allFinite()) throw NumericalError("safe_inverse: matrix has non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw InputError("safe_inverse: matrix is not symmetric");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw NumericalError("safe_inverse: eigendecomposition failed");
  const Eigen::VectorXd ev = es.eigenvalues();
  const double lo = ev.cwiseAbs().minCoeff();
  const double cond = lo > 0.0 ? ev.cwiseAbs().maxCoeff() / lo
                               : std::numeric_limits<double>::infinity();
  if (!(cond <= cond_limit)) {
    std::ostringstream msg;
    msg << "matrix is ill-conditioned (condition estimate " << cond << " > " << cond_limit << ")";
    throw IllConditionedError(msg.str(), cond);
  }
  const Eigen::MatrixXd inv =
      es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (inv + inv.transpose());
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write matrix file '" + path + "'");
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << m(r, c);
    out << '\n';
  }
}

}  // namespace auxsel
