#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "kinv/problem.hpp"
#include "kinv/run_record.hpp"
#include "kinv/uki.hpp"

namespace kinv {

/// Particle ensemble; column j of particles is particle j. The seed plus the
/// step counter identify the random substream consumed by stochastic steps,
/// split per particle index so concurrency cannot change results.
struct Ensemble {
  Eigen::MatrixXd particles;  // N_theta x J
  std::uint64_t seed = 0;
  std::uint64_t step = 0;

  Eigen::Index size() const { return particles.cols(); }
  Eigen::VectorXd mean() const { return particles.rowwise().mean(); }
};

/// Side outputs of one ensemble analysis step.
struct EnsembleStepInfo {
  Eigen::VectorXd mean;         // updated mean used for error metrics
  Eigen::VectorXd y_pred_mean;  // ensemble-mean prediction, for the misfit
  long evals_high = 0;
  long evals_reduced = 0;
};

/// Draws J particles from N(prior_mean, Lambda). When the problem carries a
/// prior factor Z0 the draw is prior_mean + Z0 xi, which keeps the ensemble in
/// Z0's column space exactly.
Ensemble init_ensemble(const InverseProblem& problem, Eigen::Index j_count,
                       std::uint64_t seed);

/// Stochastic ensemble Kalman step: noisy prediction, perturbed-observation
/// analysis with per-particle innovations. Deterministic given rng_seed.
Ensemble eki_step(const Ensemble& ens, const ForwardModel& model,
                  const Eigen::VectorXd& y, const UkiHyper& hyper,
                  std::uint64_t rng_seed, const RunOptions& opts = {},
                  EnsembleStepInfo* info = nullptr);

/// Ensemble adjustment step: deterministic Kalman mean update plus the
/// pre-multiplier A = F sqrt(Dp) U sqrt(D) sqrt(Dp)^-1 F^T applied to the
/// predicted deviations, built from the rank of Z_hat only.
Ensemble eaki_step(const Ensemble& ens, const ForwardModel& model,
                   const Eigen::VectorXd& y, const UkiHyper& hyper,
                   const RunOptions& opts = {}, EnsembleStepInfo* info = nullptr);

/// Ensemble transform step: deterministic Kalman mean update plus the
/// post-multiplier T = P (Gamma + I)^{-1/2} (biased) or its symmetric unbiased
/// variant T = P (Gamma + I)^{-1/2} P^T.
Ensemble etki_step(const Ensemble& ens, const ForwardModel& model,
                   const Eigen::VectorXd& y, const UkiHyper& hyper, bool unbiased,
                   const RunOptions& opts = {}, EnsembleStepInfo* info = nullptr);

enum class EnsembleMethod { Eki, Eaki, EtkiBiased, EtkiUnbiased };

struct EnsembleRunResult {
  std::vector<std::pair<Eigen::VectorXd, RunRecord>> iterates;  // mean per iteration
  Ensemble final_ensemble;
};

/// n_iter ensemble steps from an ensemble drawn with `seed`; `seed` also feeds
/// the EKI noise streams.
EnsembleRunResult ensemble_run(const InverseProblem& problem, const UkiHyper& hyper,
                               EnsembleMethod method, Eigen::Index j_count,
                               int n_iter, std::uint64_t seed,
                               const RunOptions& opts = {});

}  // namespace kinv
