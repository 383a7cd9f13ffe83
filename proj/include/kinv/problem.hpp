#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>

#include "kinv/forward_model.hpp"

namespace kinv {

/// Affine reparameterization theta = offset + basis * tau.
struct Reparameterization {
  Eigen::MatrixXd basis;   // U, N_theta x N_r, full column rank
  Eigen::VectorXd offset;  // r0
};

/// An inverse problem y = G(theta) + eta with Gaussian prior information.
/// The prior covariance is carried either densely (prior_cov) or as a tall
/// square-root factor Z0 with Lambda = Z0 Z0^T (prior_factor); builders set
/// whichever form is natural for the problem.
struct InverseProblem {
  std::shared_ptr<const ForwardModel> model;
  Eigen::VectorXd y_obs;
  Eigen::MatrixXd sigma_eta;                  // SPD observation-noise covariance
  Eigen::VectorXd prior_mean;
  std::optional<Eigen::MatrixXd> prior_cov;   // Lambda, N_theta x N_theta
  std::optional<Eigen::MatrixXd> prior_factor;  // Z0, N_theta x N_r
  std::optional<Eigen::VectorXd> theta_ref;   // ground truth for error metrics

  /// Set on reparameterized problems: theta_ref lives in the ambient space and
  /// engine means are lifted through this map before error metrics.
  std::optional<Reparameterization> metric_lift;

  Eigen::Index parameter_dim() const { return model->parameter_dim(); }
  Eigen::Index observation_dim() const { return model->observation_dim(); }

  /// Dense prior covariance, materialized from the factor when needed.
  Eigen::MatrixXd dense_prior_cov() const;
};

/// Relative L2 error of an engine-space mean against theta_ref, lifting
/// through metric_lift when present. NaN when the problem has no theta_ref.
double relative_error(const InverseProblem& problem, const Eigen::VectorXd& mean);

/// Linear specialization G(theta) = G theta.
class LinearModel : public ForwardModel {
 public:
  explicit LinearModel(Eigen::MatrixXd g) : g_(std::move(g)) {}

  Eigen::Index parameter_dim() const override { return g_.cols(); }
  Eigen::Index observation_dim() const override { return g_.rows(); }
  const Eigen::MatrixXd& matrix() const { return g_; }

 protected:
  Eigen::VectorXd evaluate_high(const Eigen::VectorXd& theta) const override {
    return g_ * theta;
  }

 private:
  Eigen::MatrixXd g_;
};

/// Misfit Phi = 1/2 || sigma_nu^{-1/2} (y - y_hat) ||^2, the per-iteration
/// optimization error.
double misfit_phi(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat,
                  const Eigen::MatrixXd& sigma_nu);

/// Tikhonov term 1/2 || Lambda^{-1/2} (theta - r0) ||^2, reported separately
/// from Phi when the prior covariance is finite.
double tikhonov_term(const Eigen::VectorXd& theta, const Eigen::VectorXd& r0,
                     const Eigen::MatrixXd& lambda);

}  // namespace kinv
