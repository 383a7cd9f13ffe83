#include "kinv/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "kinv/csv.hpp"
#include "kinv/ensemble.hpp"
#include "kinv/linalg.hpp"
#include "kinv/problems.hpp"
#include "kinv/rng.hpp"
#include "kinv/tuki.hpp"
#include "kinv/uki.hpp"

namespace kinv {

namespace {

constexpr std::uint64_t kTagSubspaceRef = 17;
constexpr std::uint64_t kTagRandomZ0 = 18;

const char* kTraceHeader = "iter,rel_l2_error,misfit_phi,wall_ms,evals_high,evals_reduced";

std::string trace_row(const RunRecord& rec) {
  std::ostringstream out;
  out << rec.iter << ',' << format_double(rec.rel_l2_error) << ','
      << format_double(rec.misfit_phi) << ',' << format_double(rec.wall_ms) << ','
      << rec.evals_high << ',' << rec.evals_reduced << '\n';
  return out.str();
}

std::string state_csv(const Eigen::VectorXd& mean, const Eigen::VectorXd& stddev) {
  std::ostringstream out;
  out << "coord,mean,std\n";
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    out << i << ',' << format_double(mean(i)) << ',' << format_double(stddev(i))
        << '\n';
  }
  return out.str();
}

struct BuiltProblem {
  InverseProblem problem;
  std::optional<Reparameterization> reparam;
  std::optional<Eigen::MatrixXd> tau_prior_cov;
};

BuiltProblem build_problem(const RunConfig& cfg) {
  BuiltProblem built;
  if (cfg.problem == "elliptic") {
    EllipticSetup setup = elliptic_problem(cfg.problem_n, cfg.n_rank);
    built.problem = std::move(setup.problem);
    built.reparam = std::move(setup.reparam);
    built.tau_prior_cov = std::move(setup.tau_prior_cov);
  } else if (cfg.problem == "bernoulli") {
    built.problem = bernoulli_problem(cfg.problem_n, cfg.problem_seed);
  } else if (cfg.problem == "twofid") {
    built.problem = twofid_diffusion_problem(cfg.problem_n_fine, cfg.problem_n_coarse,
                                             cfg.problem_n_params, cfg.problem_seed);
  } else {
    throw ConfigError("problem", "not an inversion problem: " + cfg.problem);
  }
  return built;
}

// Square-root prior for TUKI. Problems without a built-in factor get a random
// rank-n_rank subspace (the Theorem 3.1 setting) unless the requested rank is
// full, in which case the exact prior square root is used.
Eigen::MatrixXd tuki_prior_factor(const RunConfig& cfg, const InverseProblem& problem) {
  if (problem.prior_factor) {
    if (problem.prior_factor->cols() != cfg.n_rank) {
      throw ConfigError("n_rank",
                        "problem supplies a rank-" +
                            std::to_string(problem.prior_factor->cols()) +
                            " prior factor");
    }
    return *problem.prior_factor;
  }
  const Eigen::Index n = problem.parameter_dim();
  if (cfg.n_rank > n) {
    throw ConfigError("n_rank", "exceeds parameter dimension");
  }
  if (cfg.n_rank == n) {
    return chol_sqrt(problem.dense_prior_cov());
  }
  RandomStream stream(cfg.seed_or_default(),
                      RandomStream::substream(kTagRandomZ0, 0, 0));
  Eigen::MatrixXd z0(n, cfg.n_rank);
  for (Eigen::Index j = 0; j < cfg.n_rank; ++j) {
    z0.col(j) = stream.normal_vector(n);
  }
  return z0;
}

RunArtifacts execute_subspace_mc(const RunConfig& cfg) {
  RandomStream stream(cfg.seed_or_default(),
                      RandomStream::substream(kTagSubspaceRef, 0, 0));
  Eigen::VectorXd theta_ref = stream.normal_vector(cfg.problem_n);
  theta_ref /= theta_ref.norm();

  const auto [estimate, stderr_est] =
      subspace_distance_mc(cfg.problem_n, cfg.problem_samples, theta_ref,
                           cfg.problem_trials, cfg.seed_or_default());
  const double closed_form =
      1.0 - static_cast<double>(cfg.problem_samples) /
                static_cast<double>(cfg.problem_n);

  RunArtifacts art;
  std::ostringstream out;
  out << "n_theta,samples,trials,estimate,stderr,closed_form\n"
      << cfg.problem_n << ',' << cfg.problem_samples << ',' << cfg.problem_trials
      << ',' << format_double(estimate) << ',' << format_double(stderr_est) << ','
      << format_double(closed_form) << '\n';
  art.trace_csv = out.str();
  return art;
}

}  // namespace

RunArtifacts execute(const RunConfig& cfg) {
  if (cfg.problem == "subspace-mc") {
    return execute_subspace_mc(cfg);
  }

  const BuiltProblem built = build_problem(cfg);
  const InverseProblem& problem = built.problem;
  RunOptions opts;
  opts.threads = cfg.threads;
  opts.verify = cfg.verify;
  opts.timing = cfg.timing;

  RunArtifacts art;
  std::ostringstream trace;
  trace << kTraceHeader << '\n';

  Eigen::VectorXd final_mean;
  Eigen::VectorXd final_std;

  const Method method = *cfg.method;
  switch (method) {
    case Method::Uki: {
      const UkiHyper hyper = default_hyper(problem.prior_mean,
                                           problem.dense_prior_cov(),
                                           problem.sigma_eta, cfg.alpha);
      const auto traj = uki_run(problem, hyper, cfg.n_iter, cfg.policy, opts);
      for (const auto& [state, rec] : traj) trace << trace_row(rec);
      const GaussianState& last = traj.back().first;
      final_mean = last.mean;
      final_std = last.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
      break;
    }
    case Method::UkiReparam: {
      if (!built.reparam) {
        throw ConfigError("method", "problem has no reparameterization basis");
      }
      const InverseProblem wrapped =
          reparam_wrap(problem, *built.reparam, *built.tau_prior_cov);
      const UkiHyper hyper = default_hyper(wrapped.prior_mean, *wrapped.prior_cov,
                                           wrapped.sigma_eta, cfg.alpha);
      const auto traj = uki_run(wrapped, hyper, cfg.n_iter, cfg.policy, opts);
      for (const auto& [state, rec] : traj) trace << trace_row(rec);
      const GaussianState lifted = reparam_lift(*built.reparam, traj.back().first);
      final_mean = lifted.mean;
      final_std = lifted.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
      break;
    }
    case Method::Tuki: {
      const Eigen::MatrixXd z0 = tuki_prior_factor(cfg, problem);
      const TukiHyper hyper =
          default_tuki_hyper(problem.prior_mean, z0, problem.sigma_eta, cfg.alpha);
      const auto traj = tuki_run(problem, hyper, cfg.n_iter, cfg.policy, opts);
      for (const auto& [state, rec] : traj) trace << trace_row(rec);
      const SquareRootState& last = traj.back().first;
      final_mean = last.mean;
      final_std = last.factor.rowwise().norm();
      break;
    }
    default: {
      UkiHyper hyper = default_hyper(problem.prior_mean, problem.dense_prior_cov(),
                                     problem.sigma_eta, cfg.alpha);
      if (problem.prior_factor) {
        hyper.omega_factor =
            std::sqrt(2.0 - cfg.alpha * cfg.alpha) * (*problem.prior_factor);
      }
      const Eigen::Index j_count = cfg.ensemble_size.value_or(2 * cfg.n_rank + 1);
      EnsembleMethod em = EnsembleMethod::Eki;
      if (method == Method::Eaki) em = EnsembleMethod::Eaki;
      if (method == Method::Etki) em = EnsembleMethod::EtkiBiased;
      if (method == Method::EtkiUnbiased) em = EnsembleMethod::EtkiUnbiased;
      const EnsembleRunResult result = ensemble_run(
          problem, hyper, em, j_count, cfg.n_iter, cfg.seed_or_default(), opts);
      for (const auto& [mean, rec] : result.iterates) trace << trace_row(rec);
      final_mean = result.iterates.back().first;
      const Eigen::MatrixXd& parts = result.final_ensemble.particles;
      const Eigen::VectorXd pm = parts.rowwise().mean();
      const Eigen::MatrixXd dev =
          (parts.colwise() - pm) / std::sqrt(static_cast<double>(parts.cols() - 1));
      final_std = dev.rowwise().norm();
      break;
    }
  }

  art.trace_csv = trace.str();
  if (cfg.state_output) {
    art.state_csv = state_csv(final_mean, final_std);
  }
  return art;
}

void run(const RunConfig& cfg) {
  const RunArtifacts art = execute(cfg);
  if (cfg.output == "-") {
    std::cout << art.trace_csv;
  } else {
    std::ofstream out(cfg.output, std::ios::binary);
    if (!out) {
      throw Error("cannot open output file " + cfg.output);
    }
    out << art.trace_csv;
  }
  if (cfg.state_output && art.state_csv) {
    std::ofstream out(*cfg.state_output, std::ios::binary);
    if (!out) {
      throw Error("cannot open state output file " + *cfg.state_output);
    }
    out << *art.state_csv;
  }
}

CompareReport compare_runs(const std::string& path_a, const std::string& path_b,
                           std::optional<double> tol) {
  const CsvTable a = read_csv(path_a);
  const CsvTable b = read_csv(path_b);
  if (a.columns != b.columns) {
    throw FormatError("compare: header schemas differ (" + path_a + " vs " +
                      path_b + ")");
  }
  if (a.rows.empty() || b.rows.empty()) {
    throw FormatError("compare: empty table");
  }

  CompareReport report;
  std::ostringstream out;
  const std::size_t common = std::min(a.rows.size(), b.rows.size());
  out << "rows: a=" << a.rows.size() << " b=" << b.rows.size() << '\n';

  for (std::size_t c = 0; c < a.columns.size(); ++c) {
    double max_delta = 0.0;
    for (std::size_t r = 0; r < common; ++r) {
      const double d = std::abs(a.rows[r][c] - b.rows[r][c]);
      if (std::isnan(d)) continue;
      max_delta = std::max(max_delta, d);
    }
    const double fa = a.rows.back()[c];
    const double fb = b.rows.back()[c];
    out << "column " << a.columns[c] << ": max_abs_delta=" << format_double(max_delta)
        << " final_a=" << format_double(fa) << " final_b=" << format_double(fb)
        << '\n';
  }

  if (tol) {
    const std::ptrdiff_t rel = a.find_column("rel_l2_error");
    if (rel >= 0) {
      const double fa = a.rows.back()[static_cast<std::size_t>(rel)];
      const double fb = b.rows.back()[static_cast<std::size_t>(rel)];
      double ratio = std::numeric_limits<double>::infinity();
      if (std::isfinite(fa) && std::isfinite(fb)) {
        const double lo = std::min(std::abs(fa), std::abs(fb));
        const double hi = std::max(std::abs(fa), std::abs(fb));
        ratio = (hi == 0.0) ? 1.0 : (lo == 0.0 ? std::numeric_limits<double>::infinity()
                                               : hi / lo);
      }
      report.tolerance_breached = !(ratio <= *tol);
      out << "final rel_l2_error ratio=" << format_double(ratio)
          << (report.tolerance_breached ? " exceeds " : " within ")
          << "tolerance " << format_double(*tol) << '\n';
    } else {
      double worst = 0.0;
      for (std::size_t c = 0; c < a.columns.size(); ++c) {
        if (a.columns[c] == "wall_ms") continue;
        worst = std::max(worst,
                         std::abs(a.rows.back()[c] - b.rows.back()[c]));
      }
      report.tolerance_breached = !(worst <= *tol);
      out << "max final delta=" << format_double(worst)
          << (report.tolerance_breached ? " exceeds " : " within ")
          << "tolerance " << format_double(*tol) << '\n';
    }
  }

  report.text = out.str();
  return report;
}

}  // namespace kinv
