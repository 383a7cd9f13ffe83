#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "kinv/linalg.hpp"
#include "kinv/problem.hpp"
#include "kinv/run_record.hpp"
#include "kinv/uki.hpp"

namespace kinv {

/// Square-root iterate: C_n = Z_n Z_n^T is implied and never materialized as
/// an N_theta x N_theta matrix. Z keeps N_r columns and full column rank
/// throughout a run.
struct SquareRootState {
  Eigen::VectorXd mean;    // N_theta
  Eigen::MatrixXd factor;  // Z, N_theta x N_r
};

/// Square-root hyperparameters: Lambda = Z0 Z0^T with rank(Z0) = N_r and
/// Z_omega = sqrt(2 - alpha^2) Z0.
struct TukiHyper {
  double alpha = 1.0;
  Eigen::VectorXd r;
  Eigen::MatrixXd z0;       // N_theta x N_r, full column rank
  Eigen::MatrixXd z_omega;  // N_theta x N_r
  Eigen::MatrixXd sigma_nu;
};

TukiHyper default_tuki_hyper(const Eigen::VectorXd& prior_mean,
                             const Eigen::MatrixXd& z0,
                             const Eigen::MatrixXd& sigma_eta, double alpha);

/// Prediction step: m_hat = alpha m + (1-alpha) r, plus the rank-N_r TSVD of
/// the N_theta x 2N_r concatenation (alpha Z | Z_omega). The returned singular
/// values are those of the concatenation, i.e. sqrt of the predicted-covariance
/// spectrum.
std::pair<Eigen::VectorXd, TsvdFactors> tuki_predict(const SquareRootState& state,
                                                     const TukiHyper& hyper);

/// SMW-form analysis: truncated sigma points, weighted deviations Z_hat/Y_hat,
/// eigendecomposition of Y_hat^T sigma_nu^-1 Y_hat, mean and factor updates.
/// The updated factor is recompressed from 2N_r to N_r columns, which is exact
/// because all square roots share Z0's column space.
SquareRootState tuki_analyze(const Eigen::VectorXd& mean, const TsvdFactors& factors,
                             const ForwardModel& model, const Eigen::VectorXd& y,
                             const TukiHyper& hyper, EvaluationPolicy policy,
                             const RunOptions& opts = {}, AnalysisInfo* info = nullptr,
                             const SpdSolver* nu_solver = nullptr);

/// n_iter predict/analyze alternations from (r, Z0). With opts.verify on, the
/// factor's rank, its principal angle to span(Z0), and the mean-span condition
/// are asserted every iteration.
std::vector<std::pair<SquareRootState, RunRecord>> tuki_run(
    const InverseProblem& problem, const TukiHyper& hyper, int n_iter,
    EvaluationPolicy policy, const RunOptions& opts = {});

/// Largest principal angle (radians) between the column spaces of two full
/// column rank matrices.
double column_space_angle(const Eigen::MatrixXd& z, const Eigen::MatrixXd& z0);

}  // namespace kinv
