#include "kinv/tuki.hpp"

#include <chrono>
#include <cmath>
#include <optional>

#include "kinv/unscented.hpp"

namespace kinv {

namespace {

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& z, const char* who) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  if (qr.rank() < z.cols()) {
    throw RankError(std::string(who) + ": matrix is column rank deficient (rank " +
                    std::to_string(qr.rank()) + " of " + std::to_string(z.cols()) +
                    ")");
  }
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(z.rows(), z.cols());
  return q;
}

}  // namespace

double column_space_angle(const Eigen::MatrixXd& z, const Eigen::MatrixXd& z0) {
  if (z.rows() != z0.rows() || z.cols() != z0.cols()) {
    throw DimensionError("column_space_angle: shapes do not match");
  }
  const Eigen::MatrixXd qa = orthonormal_columns(z, "column_space_angle");
  const Eigen::MatrixXd qb = orthonormal_columns(z0, "column_space_angle");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(qa.transpose() * qb);
  double smin = svd.singularValues().minCoeff();
  smin = std::min(std::max(smin, -1.0), 1.0);
  return std::acos(smin);
}

TukiHyper default_tuki_hyper(const Eigen::VectorXd& prior_mean,
                             const Eigen::MatrixXd& z0,
                             const Eigen::MatrixXd& sigma_eta, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha", "must lie in (0, 1], got " + std::to_string(alpha));
  }
  if (z0.rows() != prior_mean.size()) {
    throw DimensionError("default_tuki_hyper: Z0 does not match prior mean");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z0);
  if (qr.rank() < z0.cols()) {
    throw RankError("default_tuki_hyper: Z0 must have full column rank");
  }
  TukiHyper h;
  h.alpha = alpha;
  h.r = prior_mean;
  h.z0 = z0;
  h.z_omega = std::sqrt(2.0 - alpha * alpha) * z0;
  h.sigma_nu = 2.0 * sigma_eta;
  return h;
}

std::pair<Eigen::VectorXd, TsvdFactors> tuki_predict(const SquareRootState& state,
                                                     const TukiHyper& hyper) {
  const Eigen::Index n_r = hyper.z0.cols();
  if (state.factor.cols() != n_r || state.factor.rows() != hyper.z0.rows()) {
    throw DimensionError("tuki_predict: factor must be N_theta x N_r");
  }
  Eigen::VectorXd mean_hat =
      hyper.alpha * state.mean + (1.0 - hyper.alpha) * hyper.r;

  Eigen::MatrixXd concat(state.factor.rows(), 2 * n_r);
  concat.leftCols(n_r) = hyper.alpha * state.factor;
  concat.rightCols(n_r) = hyper.z_omega;
  return {std::move(mean_hat), tsvd(concat, n_r)};
}

SquareRootState tuki_analyze(const Eigen::VectorXd& mean, const TsvdFactors& factors,
                             const ForwardModel& model, const Eigen::VectorXd& y,
                             const TukiHyper& hyper, EvaluationPolicy policy,
                             const RunOptions& opts, AnalysisInfo* info,
                             const SpdSolver* nu_solver) {
  const Eigen::Index n_r = factors.rank();
  if (n_r != hyper.z0.cols()) {
    throw DimensionError("tuki_analyze: factors rank must equal N_r");
  }

  // The factors carry singular values s of (alpha Z | Z_omega); the truncated
  // transform wants the covariance spectrum d = s^2.
  TsvdFactors cov_factors;
  cov_factors.left = factors.left;
  cov_factors.singular = factors.singular.array().square();
  cov_factors.right = factors.left;
  const SigmaEnsemble ens = sigma_points_truncated(mean, cov_factors);
  const BatchResult batch = evaluate_batch(model, ens.points, policy, opts.threads);
  const Eigen::VectorXd& y_hat = batch.outputs[0];

  const Eigen::Index two_r = 2 * n_r;
  const double sw = std::sqrt(ens.weights.w_c);
  Eigen::MatrixXd z_hat(mean.size(), two_r);
  Eigen::MatrixXd y_dev(y.size(), two_r);
  for (Eigen::Index j = 1; j <= two_r; ++j) {
    z_hat.col(j - 1) = sw * (ens.points[static_cast<std::size_t>(j)] - mean);
    y_dev.col(j - 1) = sw * (batch.outputs[static_cast<std::size_t>(j)] - y_hat);
  }

  std::optional<SpdSolver> local_solver;
  if (nu_solver == nullptr) local_solver.emplace(hyper.sigma_nu);
  const SpdSolver& nu = nu_solver ? *nu_solver : *local_solver;

  const Eigen::MatrixXd nu_inv_y_dev = nu.solve(y_dev);
  Eigen::MatrixXd kernel = y_dev.transpose() * nu_inv_y_dev;  // 2N_r x 2N_r
  kernel = 0.5 * (kernel + kernel.transpose()).eval();
  const SymEig eig = sym_eig_psd(kernel);
  const Eigen::ArrayXd gamma_plus_one = eig.values.array() + 1.0;

  const Eigen::VectorXd innovation_coeff =
      y_dev.transpose() * nu.solve((y - y_hat).eval());
  const Eigen::VectorXd weights =
      eig.vectors *
      ((eig.vectors.transpose() * innovation_coeff).array() / gamma_plus_one)
          .matrix();

  SquareRootState out;
  out.mean = mean + z_hat * weights;

  const Eigen::MatrixXd z_wide =
      z_hat * (eig.vectors * gamma_plus_one.rsqrt().matrix().asDiagonal());
  // Recompress 2N_r columns back to N_r; lossless since rank stays N_r.
  const TsvdFactors compressed = tsvd(z_wide, n_r);
  out.factor = compressed.left * compressed.singular.asDiagonal();

  if (info != nullptr) {
    info->y_pred = y_hat;
    info->evals_high = batch.high_count;
    info->evals_reduced = batch.reduced_count;
  }
  return out;
}

std::vector<std::pair<SquareRootState, RunRecord>> tuki_run(
    const InverseProblem& problem, const TukiHyper& hyper, int n_iter,
    EvaluationPolicy policy, const RunOptions& opts) {
  if (n_iter < 1) {
    throw ConfigError("n_iter", "must be >= 1");
  }
  std::vector<std::pair<SquareRootState, RunRecord>> trajectory;
  trajectory.reserve(static_cast<std::size_t>(n_iter));

  SquareRootState state{hyper.r, hyper.z0};
  const SpdSolver nu_solver(hyper.sigma_nu);
  long evals_high = 0;
  long evals_reduced = 0;

  // Span references for verify mode: span(Z0) and span(r, Z0).
  Eigen::MatrixXd q_z0;
  Eigen::MatrixXd q_mean_span;
  if (opts.verify) {
    q_z0 = orthonormal_columns(hyper.z0, "tuki_run");
    Eigen::MatrixXd rz(hyper.z0.rows(), hyper.z0.cols() + 1);
    rz.col(0) = hyper.r;
    rz.rightCols(hyper.z0.cols()) = hyper.z0;
    if (hyper.r.norm() == 0.0) {
      q_mean_span = q_z0;
    } else {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(rz);
      q_mean_span = Eigen::MatrixXd(qr.householderQ() *
                                    Eigen::MatrixXd::Identity(rz.rows(), qr.rank()));
    }
  }

  for (int it = 1; it <= n_iter; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [mean_hat, factors] = tuki_predict(state, hyper);
    AnalysisInfo infoa;
    state = tuki_analyze(mean_hat, factors, *problem.model, problem.y_obs, hyper,
                         policy, opts, &infoa, &nu_solver);
    const auto t1 = std::chrono::steady_clock::now();

    if (opts.verify) {
      const double angle = column_space_angle(state.factor, hyper.z0);
      if (angle >= 1e-7) {
        throw NumericError("tuki_run: column space drifted from span(Z0), angle " +
                           std::to_string(angle));
      }
      const Eigen::VectorXd residual =
          state.mean - q_mean_span * (q_mean_span.transpose() * state.mean);
      if (state.mean.norm() > 0.0 &&
          residual.norm() >= 1e-7 * state.mean.norm()) {
        throw NumericError("tuki_run: mean left span(r, Z0)");
      }
    }

    evals_high += infoa.evals_high;
    evals_reduced += infoa.evals_reduced;

    RunRecord rec;
    rec.iter = it;
    rec.rel_l2_error = relative_error(problem, state.mean);
    const Eigen::VectorXd r = problem.y_obs - infoa.y_pred;
    rec.misfit_phi = 0.5 * r.dot(nu_solver.solve(r));
    rec.wall_ms = opts.timing
                      ? std::chrono::duration<double, std::milli>(t1 - t0).count()
                      : 0.0;
    rec.evals_high = evals_high;
    rec.evals_reduced = evals_reduced;
    trajectory.emplace_back(state, rec);
  }
  return trajectory;
}

}  // namespace kinv
