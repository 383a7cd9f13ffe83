#include "kinv/ensemble.hpp"

#include <chrono>
#include <cmath>
#include <optional>

#include "kinv/linalg.hpp"
#include "kinv/rng.hpp"

namespace kinv {

namespace {

// Substream tags; combined with (step, particle) they pin every draw.
constexpr std::uint64_t kTagInit = 1;
constexpr std::uint64_t kTagOmega = 2;
constexpr std::uint64_t kTagNu = 3;

// Square-root sampler for N(0, S): prefers a supplied factor, falls back to
// Cholesky, then to the eigenvalue root for PSD-singular S.
Eigen::MatrixXd noise_factor(const Eigen::MatrixXd& s,
                             const std::optional<Eigen::MatrixXd>& factor) {
  if (factor) return *factor;
  try {
    return chol_sqrt(s);
  } catch (const DecompositionError&) {
    return psd_sqrt(s);
  }
}

struct Deviations {
  Eigen::VectorXd mean_hat;
  Eigen::VectorXd y_mean;
  Eigen::MatrixXd z_hat;  // N_theta x J, (theta_hat - m_hat)/sqrt(J-1)
  Eigen::MatrixXd y_hat;  // N_y x J, (y_j - y_mean)/sqrt(J-1)
};

Deviations compute_deviations(const Eigen::MatrixXd& predicted,
                              const Eigen::MatrixXd& outputs) {
  const Eigen::Index j_count = predicted.cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(j_count - 1));
  Deviations d;
  d.mean_hat = predicted.rowwise().mean();
  d.y_mean = outputs.rowwise().mean();
  d.z_hat = scale * (predicted.colwise() - d.mean_hat);
  d.y_hat = scale * (outputs.colwise() - d.y_mean);
  return d;
}

Eigen::MatrixXd predict_deterministic(const Ensemble& ens, const UkiHyper& hyper) {
  return hyper.alpha * ens.particles +
         ((1.0 - hyper.alpha) * hyper.r).replicate(1, ens.size());
}

Eigen::MatrixXd evaluate_particles(const Eigen::MatrixXd& particles,
                                   const ForwardModel& model,
                                   const RunOptions& opts, long* high,
                                   long* reduced) {
  std::vector<Eigen::VectorXd> points(static_cast<std::size_t>(particles.cols()));
  for (Eigen::Index j = 0; j < particles.cols(); ++j) {
    points[static_cast<std::size_t>(j)] = particles.col(j);
  }
  const BatchResult batch =
      evaluate_batch(model, points, EvaluationPolicy::AllHigh, opts.threads);
  Eigen::MatrixXd outputs(model.observation_dim(), particles.cols());
  for (Eigen::Index j = 0; j < particles.cols(); ++j) {
    outputs.col(j) = batch.outputs[static_cast<std::size_t>(j)];
  }
  *high = batch.high_count;
  *reduced = batch.reduced_count;
  return outputs;
}

// Deterministic Kalman mean update m_hat + Z_hat Y_hat^T (Y Y^T + S_nu)^-1 dy
// through the Woodbury form.
Eigen::VectorXd kalman_mean(const Deviations& d, const Eigen::VectorXd& y,
                            const SpdSolver& nu_solver) {
  const Eigen::MatrixXd s =
      woodbury_solve(d.y_hat, nu_solver, Eigen::MatrixXd(y - d.y_mean));
  return d.mean_hat + d.z_hat * (d.y_hat.transpose() * s.col(0));
}

}  // namespace

Ensemble init_ensemble(const InverseProblem& problem, Eigen::Index j_count,
                       std::uint64_t seed) {
  if (j_count < 2) {
    throw DimensionError("init_ensemble: ensemble size must be >= 2");
  }
  Ensemble ens;
  ens.seed = seed;
  ens.step = 0;
  ens.particles.resize(problem.parameter_dim(), j_count);

  if (problem.prior_factor) {
    const Eigen::MatrixXd& z0 = *problem.prior_factor;
    for (Eigen::Index j = 0; j < j_count; ++j) {
      RandomStream stream(seed, RandomStream::substream(kTagInit, 0,
                                                        static_cast<std::uint64_t>(j)));
      ens.particles.col(j) =
          problem.prior_mean + z0 * stream.normal_vector(z0.cols());
    }
    return ens;
  }

  const Eigen::MatrixXd root = noise_factor(problem.dense_prior_cov(), std::nullopt);
  for (Eigen::Index j = 0; j < j_count; ++j) {
    RandomStream stream(seed, RandomStream::substream(kTagInit, 0,
                                                      static_cast<std::uint64_t>(j)));
    ens.particles.col(j) =
        problem.prior_mean + root * stream.normal_vector(root.cols());
  }
  return ens;
}

Ensemble eki_step(const Ensemble& ens, const ForwardModel& model,
                  const Eigen::VectorXd& y, const UkiHyper& hyper,
                  std::uint64_t rng_seed, const RunOptions& opts,
                  EnsembleStepInfo* info) {
  if (ens.size() < 2) {
    throw DimensionError("eki_step: ensemble size must be >= 2");
  }
  const Eigen::Index j_count = ens.size();

  // Noisy prediction; omega drawn per particle from its own substream.
  const Eigen::MatrixXd omega_root = noise_factor(hyper.sigma_omega, hyper.omega_factor);
  Eigen::MatrixXd predicted = predict_deterministic(ens, hyper);
  for (Eigen::Index j = 0; j < j_count; ++j) {
    RandomStream stream(rng_seed,
                        RandomStream::substream(kTagOmega, ens.step + 1,
                                                static_cast<std::uint64_t>(j)));
    predicted.col(j) += omega_root * stream.normal_vector(omega_root.cols());
  }

  long high = 0, reduced = 0;
  const Eigen::MatrixXd outputs =
      evaluate_particles(predicted, model, opts, &high, &reduced);
  const Deviations d = compute_deviations(predicted, outputs);
  const SpdSolver nu_solver(hyper.sigma_nu);
  const Eigen::MatrixXd nu_root = noise_factor(hyper.sigma_nu, std::nullopt);

  // Perturbed observations: innovation y - y_j - nu_j per particle.
  Eigen::MatrixXd innovations(y.size(), j_count);
  for (Eigen::Index j = 0; j < j_count; ++j) {
    RandomStream stream(rng_seed,
                        RandomStream::substream(kTagNu, ens.step + 1,
                                                static_cast<std::uint64_t>(j)));
    innovations.col(j) =
        y - outputs.col(j) - nu_root * stream.normal_vector(nu_root.cols());
  }

  const Eigen::MatrixXd solved = woodbury_solve(d.y_hat, nu_solver, innovations);
  Ensemble out;
  out.particles = predicted + d.z_hat * (d.y_hat.transpose() * solved);
  out.seed = ens.seed;
  out.step = ens.step + 1;

  if (info != nullptr) {
    info->mean = out.particles.rowwise().mean();
    info->y_pred_mean = d.y_mean;
    info->evals_high = high;
    info->evals_reduced = reduced;
  }
  return out;
}

Ensemble eaki_step(const Ensemble& ens, const ForwardModel& model,
                   const Eigen::VectorXd& y, const UkiHyper& hyper,
                   const RunOptions& opts, EnsembleStepInfo* info) {
  if (ens.size() < 2) {
    throw DimensionError("eaki_step: ensemble size must be >= 2");
  }
  const Eigen::Index j_count = ens.size();
  const Eigen::MatrixXd predicted = predict_deterministic(ens, hyper);

  long high = 0, reduced = 0;
  const Eigen::MatrixXd outputs =
      evaluate_particles(predicted, model, opts, &high, &reduced);
  const Deviations d = compute_deviations(predicted, outputs);
  const SpdSolver nu_solver(hyper.sigma_nu);
  const Eigen::VectorXd mean_new = kalman_mean(d, y, nu_solver);

  // SVD of Z_hat restricted to its numerical rank.
  const TsvdFactors full = tsvd(d.z_hat, std::min(d.z_hat.rows(), d.z_hat.cols()));
  const double smax = full.singular(0);
  Eigen::Index rank = 0;
  while (rank < full.rank() && full.singular(rank) > 1e-12 * smax) ++rank;
  if (rank == 0) {
    throw DegenerateEnsembleError("eaki_step: predicted deviations have rank zero");
  }
  const Eigen::MatrixXd f = full.left.leftCols(rank);
  const Eigen::VectorXd sp = full.singular.head(rank);
  const Eigen::MatrixXd v = full.right.leftCols(rank);

  // Inner eigenproblem V^T (I + Y_hat^T S_nu^-1 Y_hat)^-1 V = U D U^T.
  Eigen::MatrixXd inner = Eigen::MatrixXd::Identity(j_count, j_count) +
                          d.y_hat.transpose() * nu_solver.solve(d.y_hat);
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::LLT<Eigen::MatrixXd> inner_llt(inner);
  if (inner_llt.info() != Eigen::Success) {
    throw NumericError("eaki_step: inner system not SPD");
  }
  Eigen::MatrixXd m = v.transpose() * inner_llt.solve(v);
  m = 0.5 * (m + m.transpose()).eval();
  const SymEig eig = sym_eig_psd(m);

  // A dev = F sqrt(Dp) U sqrt(D) sqrt(Dp)^-1 F^T dev, applied right to left.
  Eigen::MatrixXd t = f.transpose() * (predicted.colwise() - d.mean_hat);
  t.array().colwise() /= sp.array();
  t = eig.values.cwiseSqrt().asDiagonal() * t;
  t = eig.vectors * t;
  t.array().colwise() *= sp.array();

  Ensemble out;
  out.particles = (f * t).colwise() + mean_new;
  out.seed = ens.seed;
  out.step = ens.step + 1;

  if (info != nullptr) {
    info->mean = mean_new;
    info->y_pred_mean = d.y_mean;
    info->evals_high = high;
    info->evals_reduced = reduced;
  }
  return out;
}

Ensemble etki_step(const Ensemble& ens, const ForwardModel& model,
                   const Eigen::VectorXd& y, const UkiHyper& hyper, bool unbiased,
                   const RunOptions& opts, EnsembleStepInfo* info) {
  if (ens.size() < 2) {
    throw DimensionError("etki_step: ensemble size must be >= 2");
  }
  const Eigen::Index j_count = ens.size();
  const Eigen::MatrixXd predicted = predict_deterministic(ens, hyper);

  long high = 0, reduced = 0;
  const Eigen::MatrixXd outputs =
      evaluate_particles(predicted, model, opts, &high, &reduced);
  const Deviations d = compute_deviations(predicted, outputs);
  const SpdSolver nu_solver(hyper.sigma_nu);
  const Eigen::VectorXd mean_new = kalman_mean(d, y, nu_solver);

  Eigen::MatrixXd kernel = d.y_hat.transpose() * nu_solver.solve(d.y_hat);
  kernel = 0.5 * (kernel + kernel.transpose()).eval();
  const SymEig eig = sym_eig_psd(kernel);

  Eigen::MatrixXd transform =
      eig.vectors * (eig.values.array() + 1.0).rsqrt().matrix().asDiagonal();
  if (unbiased) {
    transform = (transform * eig.vectors.transpose()).eval();
  }
  const Eigen::MatrixXd z_new = d.z_hat * transform;

  Ensemble out;
  out.particles =
      (std::sqrt(static_cast<double>(j_count - 1)) * z_new).colwise() + mean_new;
  out.seed = ens.seed;
  out.step = ens.step + 1;

  if (info != nullptr) {
    info->mean = mean_new;
    info->y_pred_mean = d.y_mean;
    info->evals_high = high;
    info->evals_reduced = reduced;
  }
  return out;
}

EnsembleRunResult ensemble_run(const InverseProblem& problem, const UkiHyper& hyper,
                               EnsembleMethod method, Eigen::Index j_count,
                               int n_iter, std::uint64_t seed,
                               const RunOptions& opts) {
  if (n_iter < 1) {
    throw ConfigError("n_iter", "must be >= 1");
  }
  EnsembleRunResult result;
  result.final_ensemble = init_ensemble(problem, j_count, seed);
  Ensemble& ens = result.final_ensemble;

  const SpdSolver nu_solver(hyper.sigma_nu);
  // Span reference for verify mode: span(r, initial particles).
  Eigen::MatrixXd q_span;
  if (opts.verify) {
    Eigen::MatrixXd basis(ens.particles.rows(), ens.particles.cols() + 1);
    basis.col(0) = hyper.r;
    basis.rightCols(ens.particles.cols()) = ens.particles;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
    q_span = Eigen::MatrixXd(qr.householderQ() *
                             Eigen::MatrixXd::Identity(basis.rows(), qr.rank()));
  }

  long evals_high = 0;
  long evals_reduced = 0;
  for (int it = 1; it <= n_iter; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    EnsembleStepInfo step_info;
    switch (method) {
      case EnsembleMethod::Eki:
        ens = eki_step(ens, *problem.model, problem.y_obs, hyper, seed, opts,
                       &step_info);
        break;
      case EnsembleMethod::Eaki:
        ens = eaki_step(ens, *problem.model, problem.y_obs, hyper, opts, &step_info);
        break;
      case EnsembleMethod::EtkiBiased:
        ens = etki_step(ens, *problem.model, problem.y_obs, hyper, false, opts,
                        &step_info);
        break;
      case EnsembleMethod::EtkiUnbiased:
        ens = etki_step(ens, *problem.model, problem.y_obs, hyper, true, opts,
                        &step_info);
        break;
    }
    const auto t1 = std::chrono::steady_clock::now();

    if (opts.verify && method != EnsembleMethod::Eki) {
      for (Eigen::Index j = 0; j < ens.particles.cols(); ++j) {
        const Eigen::VectorXd p = ens.particles.col(j);
        const Eigen::VectorXd residual = p - q_span * (q_span.transpose() * p);
        if (p.norm() > 0.0 && residual.norm() >= 1e-7 * p.norm()) {
          throw NumericError("ensemble_run: particle left the invariant subspace");
        }
      }
    }

    evals_high += step_info.evals_high;
    evals_reduced += step_info.evals_reduced;

    RunRecord rec;
    rec.iter = it;
    rec.rel_l2_error = relative_error(problem, step_info.mean);
    const Eigen::VectorXd r = problem.y_obs - step_info.y_pred_mean;
    rec.misfit_phi = 0.5 * r.dot(nu_solver.solve(r));
    rec.wall_ms = opts.timing
                      ? std::chrono::duration<double, std::milli>(t1 - t0).count()
                      : 0.0;
    rec.evals_high = evals_high;
    rec.evals_reduced = evals_reduced;
    result.iterates.emplace_back(step_info.mean, rec);
  }
  return result;
}

}  // namespace kinv
