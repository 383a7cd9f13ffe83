#include "kinv/problem.hpp"

#include <limits>

#include "kinv/linalg.hpp"

namespace kinv {

Eigen::MatrixXd InverseProblem::dense_prior_cov() const {
  if (prior_cov) return *prior_cov;
  if (prior_factor) return *prior_factor * prior_factor->transpose();
  throw InputError("InverseProblem: neither prior_cov nor prior_factor is set");
}

double relative_error(const InverseProblem& problem, const Eigen::VectorXd& mean) {
  if (!problem.theta_ref) return std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd lifted = mean;
  if (problem.metric_lift) {
    lifted = problem.metric_lift->offset + problem.metric_lift->basis * mean;
  }
  if (lifted.size() != problem.theta_ref->size()) {
    throw DimensionError("relative_error: mean does not match theta_ref");
  }
  return (lifted - *problem.theta_ref).norm() / problem.theta_ref->norm();
}

double misfit_phi(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat,
                  const Eigen::MatrixXd& sigma_nu) {
  if (y.size() != y_hat.size() || sigma_nu.rows() != y.size()) {
    throw DimensionError("misfit_phi: inconsistent dimensions");
  }
  const Eigen::VectorXd r = y - y_hat;
  SpdSolver solver(sigma_nu);
  return 0.5 * r.dot(solver.solve(r));
}

double tikhonov_term(const Eigen::VectorXd& theta, const Eigen::VectorXd& r0,
                     const Eigen::MatrixXd& lambda) {
  if (theta.size() != r0.size() || lambda.rows() != theta.size()) {
    throw DimensionError("tikhonov_term: inconsistent dimensions");
  }
  const Eigen::VectorXd d = theta - r0;
  SpdSolver solver(lambda);
  return 0.5 * d.dot(solver.solve(d));
}

}  // namespace kinv
