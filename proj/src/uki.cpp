#include "kinv/uki.hpp"

#include <chrono>
#include <cmath>

#include "kinv/linalg.hpp"
#include "kinv/unscented.hpp"

namespace kinv {

namespace {

// Sigma points from (m, C) with the eigenvalue square-root fallback. Near
// convergence C can drift marginally indefinite and the strict Cholesky in
// sigma_points_full would end the run.
SigmaEnsemble sigma_points_robust(const Eigen::VectorXd& m,
                                  const Eigen::MatrixXd& c) {
  try {
    return sigma_points_full(m, c);
  } catch (const DecompositionError&) {
    const Eigen::MatrixXd root = psd_sqrt(c);
    const Eigen::Index n = m.size();
    SigmaEnsemble ens;
    ens.weights = ut_weights(n);
    ens.points.resize(2 * static_cast<std::size_t>(n) + 1);
    ens.points[0] = m;
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::VectorXd offset = ens.weights.c * root.col(j);
      ens.points[1 + j] = m + offset;
      ens.points[1 + j + n] = m - offset;
    }
    return ens;
  }
}

class ReparamModel : public ForwardModel {
 public:
  ReparamModel(std::shared_ptr<const ForwardModel> inner, Reparameterization rp)
      : inner_(std::move(inner)), rp_(std::move(rp)) {}

  Eigen::Index parameter_dim() const override { return rp_.basis.cols(); }
  Eigen::Index observation_dim() const override { return inner_->observation_dim(); }
  bool thread_safe() const override { return inner_->thread_safe(); }

 protected:
  Eigen::VectorXd evaluate_high(const Eigen::VectorXd& tau) const override {
    return inner_->evaluate(rp_.offset + rp_.basis * tau, FidelityLevel::High);
  }
  Eigen::VectorXd evaluate_reduced(const Eigen::VectorXd& tau) const override {
    return inner_->evaluate(rp_.offset + rp_.basis * tau, FidelityLevel::Reduced);
  }

 private:
  std::shared_ptr<const ForwardModel> inner_;
  Reparameterization rp_;
};

}  // namespace

UkiHyper default_hyper(const Eigen::VectorXd& prior_mean,
                       const Eigen::MatrixXd& lambda,
                       const Eigen::MatrixXd& sigma_eta, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha", "must lie in (0, 1], got " + std::to_string(alpha));
  }
  if (lambda.rows() != lambda.cols() || lambda.rows() != prior_mean.size()) {
    throw DimensionError("default_hyper: Lambda does not match prior mean");
  }
  if (sigma_eta.rows() != sigma_eta.cols()) {
    throw DimensionError("default_hyper: sigma_eta must be square");
  }
  UkiHyper h;
  h.alpha = alpha;
  h.r = prior_mean;
  h.lambda = lambda;
  h.sigma_omega = (2.0 - alpha * alpha) * lambda;
  h.sigma_nu = 2.0 * sigma_eta;
  return h;
}

GaussianState uki_predict(const GaussianState& state, const UkiHyper& hyper) {
  if (state.mean.size() != hyper.r.size() ||
      state.cov.rows() != state.mean.size()) {
    throw DimensionError("uki_predict: state does not match hyperparameters");
  }
  GaussianState out;
  out.mean = hyper.alpha * state.mean + (1.0 - hyper.alpha) * hyper.r;
  out.cov = hyper.alpha * hyper.alpha * state.cov + hyper.sigma_omega;
  return out;
}

GaussianState uki_analyze(const GaussianState& predicted, const ForwardModel& model,
                          const Eigen::VectorXd& y, const UkiHyper& hyper,
                          EvaluationPolicy policy, const RunOptions& opts,
                          AnalysisInfo* info) {
  if (y.size() != model.observation_dim()) {
    throw DimensionError("uki_analyze: observation dimension mismatch");
  }
  const SigmaEnsemble ens = sigma_points_robust(predicted.mean, predicted.cov);
  const BatchResult batch = evaluate_batch(model, ens.points, policy, opts.threads);

  const Eigen::Index n = predicted.mean.size();
  const Eigen::Index n_y = y.size();
  const Eigen::Index two_n = 2 * n;
  const Eigen::VectorXd& y_hat = batch.outputs[0];

  // Weighted deviations; covariance sums become GEMMs and the covariance
  // update factors through a (2n x 2n) core instead of an N_y x N_theta solve.
  const double sw = std::sqrt(ens.weights.w_c);
  Eigen::MatrixXd dev_in(n, two_n);
  Eigen::MatrixXd dev_out(n_y, two_n);
  for (Eigen::Index j = 1; j <= two_n; ++j) {
    dev_in.col(j - 1) = sw * (ens.points[static_cast<std::size_t>(j)] - predicted.mean);
    dev_out.col(j - 1) = sw * (batch.outputs[static_cast<std::size_t>(j)] - y_hat);
  }

  Eigen::MatrixXd cpp = dev_out * dev_out.transpose() + hyper.sigma_nu;
  cpp = 0.5 * (cpp + cpp.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(cpp);
  if (llt.info() != Eigen::Success) {
    throw NumericError("uki_analyze: predicted data covariance not SPD");
  }

  GaussianState out;
  out.mean = predicted.mean + dev_in * (dev_out.transpose() * llt.solve(y - y_hat));
  const Eigen::MatrixXd core =
      dev_out.transpose() * llt.solve(dev_out);  // (2n x 2n)
  out.cov = predicted.cov - dev_in * core * dev_in.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();

  if (info != nullptr) {
    info->y_pred = y_hat;
    info->evals_high = batch.high_count;
    info->evals_reduced = batch.reduced_count;
  }
  return out;
}

std::vector<std::pair<GaussianState, RunRecord>> uki_run(
    const InverseProblem& problem, const UkiHyper& hyper, int n_iter,
    EvaluationPolicy policy, const RunOptions& opts) {
  if (n_iter < 1) {
    throw ConfigError("n_iter", "must be >= 1");
  }
  std::vector<std::pair<GaussianState, RunRecord>> trajectory;
  trajectory.reserve(static_cast<std::size_t>(n_iter));

  GaussianState state{hyper.r, hyper.lambda};
  const SpdSolver nu_solver(hyper.sigma_nu);
  long evals_high = 0;
  long evals_reduced = 0;

  for (int it = 1; it <= n_iter; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    const GaussianState predicted = uki_predict(state, hyper);
    AnalysisInfo info;
    state = uki_analyze(predicted, *problem.model, problem.y_obs, hyper, policy,
                        opts, &info);
    const auto t1 = std::chrono::steady_clock::now();

    evals_high += info.evals_high;
    evals_reduced += info.evals_reduced;

    RunRecord rec;
    rec.iter = it;
    rec.rel_l2_error = relative_error(problem, state.mean);
    const Eigen::VectorXd r = problem.y_obs - info.y_pred;
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

GaussianState reparam_lift(const Reparameterization& rp,
                           const GaussianState& tau_state) {
  if (rp.basis.cols() != tau_state.mean.size() ||
      rp.basis.rows() != rp.offset.size()) {
    throw DimensionError("reparam_lift: dimension mismatch");
  }
  GaussianState out;
  out.mean = rp.offset + rp.basis * tau_state.mean;
  out.cov = rp.basis * tau_state.cov * rp.basis.transpose();
  return out;
}

InverseProblem reparam_wrap(const InverseProblem& problem,
                            const Reparameterization& rp,
                            const Eigen::MatrixXd& tau_prior_cov) {
  if (rp.basis.rows() != problem.parameter_dim() ||
      rp.offset.size() != problem.parameter_dim()) {
    throw DimensionError("reparam_wrap: basis does not match problem");
  }
  if (tau_prior_cov.rows() != rp.basis.cols() ||
      tau_prior_cov.cols() != rp.basis.cols()) {
    throw DimensionError("reparam_wrap: tau prior does not match basis");
  }
  InverseProblem wrapped;
  wrapped.model = std::make_shared<ReparamModel>(problem.model, rp);
  wrapped.y_obs = problem.y_obs;
  wrapped.sigma_eta = problem.sigma_eta;
  wrapped.prior_mean = Eigen::VectorXd::Zero(rp.basis.cols());
  wrapped.prior_cov = tau_prior_cov;
  wrapped.theta_ref = problem.theta_ref;
  wrapped.metric_lift = rp;
  return wrapped;
}

}  // namespace kinv
