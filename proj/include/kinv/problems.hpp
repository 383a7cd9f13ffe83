#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>

#include "kinv/problem.hpp"

namespace kinv {

/// Elliptic benchmark: G discretizes (-d^2/dx^2 + 1) on n interior points of a
/// uniform grid with zero Dirichlet ends, observed source f = 1 on [0, 1/2] and
/// 2 on (1/2, 1]. Comes with the sine reparameterization and its tau prior.
struct EllipticSetup {
  InverseProblem problem;        // prior factor Z0 = 10 (sin(pi x) ... sin(N_r pi x))
  Reparameterization reparam;    // unit sine columns, zero offset
  Eigen::MatrixXd tau_prior_cov; // 10^2 I
};

EllipticSetup elliptic_problem(Eigen::Index n = 1000, Eigen::Index n_rank = 5);

/// Identity-map problem with i.i.d. Bernoulli(1/2) ground truth, y = theta_ref
/// with no sampled observation error, prior N(0, I).
InverseProblem bernoulli_problem(Eigen::Index n = 1000, std::uint64_t seed = 0);

/// Monte-Carlo estimate of E[dist^2(theta_ref, span of J standard normal
/// samples)]; the closed form is (1 - J/N_theta) ||theta_ref||^2.
std::pair<double, double> subspace_distance_mc(Eigen::Index n_theta, Eigen::Index j_count,
                                               const Eigen::VectorXd& theta_ref,
                                               int trials, std::uint64_t seed);

/// Two-fidelity steady diffusion -(a u')' = 1 on (0,1), u(0) = u(1) = 0, with
/// log a = sum_k theta_k sin(k pi x). High fidelity solves on the fine grid,
/// Reduced on the coarse one; observations are solution values at 16 interior
/// stations with 1% multiplicative noise (seeded).
InverseProblem twofid_diffusion_problem(Eigen::Index n_fine = 128,
                                        Eigen::Index n_coarse = 32,
                                        Eigen::Index n_params = 8,
                                        std::uint64_t noise_seed = 0);

/// Elementwise y_ref * (1 + level * xi) with seeded standard normal xi.
Eigen::VectorXd noisy_observe(const Eigen::VectorXd& y_ref, double level,
                              std::uint64_t seed);

}  // namespace kinv
