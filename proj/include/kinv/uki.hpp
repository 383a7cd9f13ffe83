#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "kinv/problem.hpp"
#include "kinv/run_record.hpp"

namespace kinv {

/// Gaussian iterate (m_n, C_n) of the full-covariance engine.
struct GaussianState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Hyperparameters of the artificial stochastic dynamics:
/// r = prior mean, sigma_omega = (2 - alpha^2) Lambda, sigma_nu = 2 sigma_eta.
struct UkiHyper {
  double alpha = 1.0;
  Eigen::VectorXd r;
  Eigen::MatrixXd lambda;
  Eigen::MatrixXd sigma_omega;
  Eigen::MatrixXd sigma_nu;
  /// Square root W with sigma_omega = W W^T, kept when Lambda was built from a
  /// tall factor. Ensemble engines sample evolution noise through it so
  /// particles stay in the prior factor's column space.
  std::optional<Eigen::MatrixXd> omega_factor;
};

/// Side outputs of one analysis step.
struct AnalysisInfo {
  Eigen::VectorXd y_pred;  // forward output at the predicted mean
  long evals_high = 0;
  long evals_reduced = 0;
};

UkiHyper default_hyper(const Eigen::VectorXd& prior_mean,
                       const Eigen::MatrixXd& lambda,
                       const Eigen::MatrixXd& sigma_eta, double alpha);

/// m_hat = alpha m + (1-alpha) r;  C_hat = alpha^2 C + sigma_omega.
GaussianState uki_predict(const GaussianState& state, const UkiHyper& hyper);

/// Kalman analysis through the modified unscented transform: sigma points from
/// (m_hat, C_hat), forward evaluation under the policy, then conditioning on y.
/// Falls back to an eigenvalue square root when Cholesky of C_hat fails.
GaussianState uki_analyze(const GaussianState& predicted, const ForwardModel& model,
                          const Eigen::VectorXd& y, const UkiHyper& hyper,
                          EvaluationPolicy policy, const RunOptions& opts = {},
                          AnalysisInfo* info = nullptr);

/// n_iter predict/analyze alternations from (r, Lambda), with per-iteration
/// metrics. Evaluation counts accumulate across iterations.
std::vector<std::pair<GaussianState, RunRecord>> uki_run(
    const InverseProblem& problem, const UkiHyper& hyper, int n_iter,
    EvaluationPolicy policy, const RunOptions& opts = {});

/// Lift a tau-space state to the ambient space:
/// mean = r0 + U m(tau), cov = U C(tau) U^T.
GaussianState reparam_lift(const Reparameterization& rp,
                           const GaussianState& tau_state);

/// Wrap a problem for inversion over tau, with G'(tau) = G(r0 + U tau).
/// The tau prior is N(0, tau_prior_cov); theta_ref stays in the ambient space
/// and is reached through the wrapped problem's metric lift.
InverseProblem reparam_wrap(const InverseProblem& problem,
                            const Reparameterization& rp,
                            const Eigen::MatrixXd& tau_prior_cov);

}  // namespace kinv
