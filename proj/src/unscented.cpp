#include "kinv/unscented.hpp"

#include <cmath>

namespace kinv {

UtWeights ut_weights(Eigen::Index n) {
  if (n < 1) {
    throw DimensionError("ut_weights: dimension must be >= 1");
  }
  UtWeights w;
  w.n = n;
  w.kappa = 0.0;
  const double nk = static_cast<double>(n) + w.kappa;
  w.a = std::min(std::sqrt(4.0 / nk), 1.0);
  w.lambda = w.a * w.a * nk - static_cast<double>(n);
  w.c = std::sqrt(static_cast<double>(n) + w.lambda);
  w.w_c = 1.0 / (2.0 * (static_cast<double>(n) + w.lambda));
  return w;
}

SigmaEnsemble sigma_points_full(const Eigen::VectorXd& m,
                                const Eigen::MatrixXd& c) {
  if (c.rows() != m.size() || c.cols() != m.size()) {
    throw DimensionError("sigma_points_full: covariance does not match mean");
  }
  const Eigen::MatrixXd l = chol_sqrt(c);
  const Eigen::Index n = m.size();

  SigmaEnsemble ens;
  ens.weights = ut_weights(n);
  ens.points.resize(2 * static_cast<std::size_t>(n) + 1);
  ens.points[0] = m;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::VectorXd offset = ens.weights.c * l.col(j);
    ens.points[1 + j] = m + offset;
    ens.points[1 + j + n] = m - offset;
  }
  return ens;
}

SigmaEnsemble sigma_points_truncated(const Eigen::VectorXd& m,
                                     const TsvdFactors& factors) {
  if (factors.left.rows() != m.size()) {
    throw DimensionError("sigma_points_truncated: factors do not match mean");
  }
  const Eigen::Index r = factors.rank();

  SigmaEnsemble ens;
  ens.weights = ut_weights(r);
  ens.points.resize(2 * static_cast<std::size_t>(r) + 1);
  ens.points[0] = m;
  for (Eigen::Index j = 0; j < r; ++j) {
    const double d = std::max(factors.singular(j), 0.0);
    const Eigen::VectorXd offset = ens.weights.c * std::sqrt(d) * factors.left.col(j);
    ens.points[1 + j] = m + offset;
    ens.points[1 + j + r] = m - offset;
  }
  return ens;
}

UtEstimate ut_estimate(const std::vector<Eigen::VectorXd>& outputs,
                       const SigmaEnsemble& inputs) {
  if (outputs.size() != inputs.points.size() || outputs.empty()) {
    throw DimensionError("ut_estimate: output count does not match point count");
  }
  const Eigen::Index n_theta = inputs.points[0].size();
  const Eigen::Index n_y = outputs[0].size();
  const Eigen::Index two_n = static_cast<Eigen::Index>(outputs.size()) - 1;

  UtEstimate est;
  est.mean = outputs[0];
  // Weighted deviation matrices make the covariance sums plain GEMMs.
  const double sw = std::sqrt(inputs.weights.w_c);
  Eigen::MatrixXd dev_in(n_theta, two_n);
  Eigen::MatrixXd dev_out(n_y, two_n);
  for (Eigen::Index j = 1; j <= two_n; ++j) {
    if (outputs[static_cast<std::size_t>(j)].size() != n_y) {
      throw DimensionError("ut_estimate: inconsistent output dimensions");
    }
    dev_in.col(j - 1) = sw * (inputs.points[static_cast<std::size_t>(j)] - inputs.points[0]);
    dev_out.col(j - 1) = sw * (outputs[static_cast<std::size_t>(j)] - outputs[0]);
  }
  est.cross_cov = dev_in * dev_out.transpose();
  est.out_cov = dev_out * dev_out.transpose();
  return est;
}

}  // namespace kinv
