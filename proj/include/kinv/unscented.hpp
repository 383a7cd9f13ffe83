#pragma once

#include <Eigen/Dense>
#include <vector>

#include "kinv/linalg.hpp"

namespace kinv {

/// Weights of the modified unscented transform over an n-dimensional Gaussian.
/// All point spreads c_j are equal, as are all covariance weights W_j^c.
struct UtWeights {
  Eigen::Index n = 0;  // effective dimension (N_theta or N_r)
  double a = 0.0;
  double kappa = 0.0;
  double lambda = 0.0;
  double c = 0.0;    // point spread
  double w_c = 0.0;  // covariance weight
};

/// 2n+1 sigma points; points[0] is the mean, points[j] and points[j+n] form
/// symmetric pairs around it.
struct SigmaEnsemble {
  std::vector<Eigen::VectorXd> points;
  UtWeights weights;
};

/// Transformed-moment estimates of the modified unscented transform.
struct UtEstimate {
  Eigen::VectorXd mean;        // output at the mean point
  Eigen::MatrixXd cross_cov;   // N_theta x N_y
  Eigen::MatrixXd out_cov;     // N_y x N_y
};

/// kappa = 0, a = min(sqrt(4/(n+kappa)), 1), lambda = a^2 (n+kappa) - n,
/// c = sqrt(n+lambda), w_c = 1/(2(n+lambda)).
UtWeights ut_weights(Eigen::Index n);

/// Sigma points m +- c [sqrt(C)]_j from the Cholesky columns of SPD C.
SigmaEnsemble sigma_points_full(const Eigen::VectorXd& m, const Eigen::MatrixXd& c);

/// Truncated variant: m +- c_j sqrt(d_j) u_j along the rank-N_r TSVD directions
/// of the covariance (factors.singular holds d). A zero singular value collapses
/// its point pair onto the mean; this is allowed, not an error.
SigmaEnsemble sigma_points_truncated(const Eigen::VectorXd& m,
                                     const TsvdFactors& factors);

/// Quadrature over transformed points. The mean estimate is the output at
/// point 0 only; covariances sum over points 1..2n with deviations taken from
/// the point-0 output and the input mean.
UtEstimate ut_estimate(const std::vector<Eigen::VectorXd>& outputs,
                       const SigmaEnsemble& inputs);

}  // namespace kinv
