#include "kinv/problems.hpp"

#include <cmath>
#include <memory>
#include <vector>

#include "kinv/linalg.hpp"
#include "kinv/rng.hpp"

namespace kinv {

namespace {

constexpr std::uint64_t kTagNoise = 11;
constexpr std::uint64_t kTagBernoulli = 12;
constexpr std::uint64_t kTagSubspace = 13;

// Steady diffusion solver shared by both fidelities. Conductivity is sampled
// at cell midpoints; the interior system is tridiagonal and solved by the
// Thomas algorithm.
class TwofidDiffusionModel : public ForwardModel {
 public:
  TwofidDiffusionModel(Eigen::Index n_fine, Eigen::Index n_coarse,
                       Eigen::Index n_params, Eigen::VectorXd stations)
      : n_fine_(n_fine),
        n_coarse_(n_coarse),
        n_params_(n_params),
        stations_(std::move(stations)) {}

  Eigen::Index parameter_dim() const override { return n_params_; }
  Eigen::Index observation_dim() const override { return stations_.size(); }

  Eigen::VectorXd solve_on_grid(const Eigen::VectorXd& theta, Eigen::Index n) const {
    const double h = 1.0 / static_cast<double>(n);
    // a at midpoints x_{i+1/2}, i = 0..n-1
    Eigen::VectorXd a(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double xm = (static_cast<double>(i) + 0.5) * h;
      double log_a = 0.0;
      for (Eigen::Index k = 0; k < n_params_; ++k) {
        log_a += theta(k) * std::sin(static_cast<double>(k + 1) * M_PI * xm);
      }
      a(i) = std::exp(log_a);
    }
    // Interior unknowns u_1..u_{n-1}; -(a u')' = 1 with zero Dirichlet ends.
    const Eigen::Index m = n - 1;
    Eigen::VectorXd diag(m), lower(m), upper(m), rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      diag(i) = (a(i) + a(i + 1)) / (h * h);
      lower(i) = (i > 0) ? -a(i) / (h * h) : 0.0;
      upper(i) = (i < m - 1) ? -a(i + 1) / (h * h) : 0.0;
      rhs(i) = 1.0;
    }
    // Thomas sweep
    for (Eigen::Index i = 1; i < m; ++i) {
      const double w = lower(i) / diag(i - 1);
      diag(i) -= w * upper(i - 1);
      rhs(i) -= w * rhs(i - 1);
    }
    Eigen::VectorXd u(m);
    u(m - 1) = rhs(m - 1) / diag(m - 1);
    for (Eigen::Index i = m - 2; i >= 0; --i) {
      u(i) = (rhs(i) - upper(i) * u(i + 1)) / diag(i);
    }
    return u;
  }

  Eigen::VectorXd observe_on_grid(const Eigen::VectorXd& theta, Eigen::Index n) const {
    const Eigen::VectorXd u = solve_on_grid(theta, n);
    const double h = 1.0 / static_cast<double>(n);
    Eigen::VectorXd out(stations_.size());
    for (Eigen::Index s = 0; s < stations_.size(); ++s) {
      const double x = stations_(s);
      const double pos = x / h;  // grid coordinate; node i sits at i*h, u_0 = u_n = 0
      const Eigen::Index i0 = static_cast<Eigen::Index>(std::floor(pos));
      const double w = pos - static_cast<double>(i0);
      const auto node = [&](Eigen::Index i) -> double {
        if (i <= 0 || i >= n) return 0.0;
        return u(i - 1);
      };
      out(s) = (1.0 - w) * node(i0) + w * node(i0 + 1);
    }
    return out;
  }

 protected:
  Eigen::VectorXd evaluate_high(const Eigen::VectorXd& theta) const override {
    return observe_on_grid(theta, n_fine_);
  }
  Eigen::VectorXd evaluate_reduced(const Eigen::VectorXd& theta) const override {
    return observe_on_grid(theta, n_coarse_);
  }

 private:
  Eigen::Index n_fine_;
  Eigen::Index n_coarse_;
  Eigen::Index n_params_;
  Eigen::VectorXd stations_;
};

}  // namespace

EllipticSetup elliptic_problem(Eigen::Index n, Eigen::Index n_rank) {
  if (n < 3) {
    throw DimensionError("elliptic_problem: n must be >= 3");
  }
  if (n_rank < 1 || n_rank > n) {
    throw DimensionError("elliptic_problem: n_rank out of range");
  }
  const double h = 1.0 / static_cast<double>(n + 1);

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd f(n);
  Eigen::MatrixXd basis(n, n_rank);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = static_cast<double>(i + 1) * h;
    g(i, i) = 2.0 / (h * h) + 1.0;
    if (i > 0) g(i, i - 1) = -1.0 / (h * h);
    if (i < n - 1) g(i, i + 1) = -1.0 / (h * h);
    f(i) = (x <= 0.5) ? 1.0 : 2.0;
    for (Eigen::Index k = 0; k < n_rank; ++k) {
      basis(i, k) = std::sin(static_cast<double>(k + 1) * M_PI * x);
    }
  }

  EllipticSetup setup;
  setup.problem.model = std::make_shared<LinearModel>(g);
  setup.problem.y_obs = f;
  setup.problem.sigma_eta = Eigen::MatrixXd::Identity(n, n);
  setup.problem.prior_mean = Eigen::VectorXd::Zero(n);
  setup.problem.prior_factor = 10.0 * basis;
  setup.problem.theta_ref = Eigen::LLT<Eigen::MatrixXd>(g).solve(f);
  setup.reparam.basis = basis;
  setup.reparam.offset = Eigen::VectorXd::Zero(n);
  setup.tau_prior_cov = 100.0 * Eigen::MatrixXd::Identity(n_rank, n_rank);
  return setup;
}

InverseProblem bernoulli_problem(Eigen::Index n, std::uint64_t seed) {
  if (n < 1) {
    throw DimensionError("bernoulli_problem: n must be >= 1");
  }
  RandomStream stream(seed, RandomStream::substream(kTagBernoulli, 0, 0));
  Eigen::VectorXd theta_ref(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    theta_ref(i) = stream.uniform() < 0.5 ? 1.0 : 0.0;
  }

  InverseProblem p;
  p.model = std::make_shared<LinearModel>(Eigen::MatrixXd::Identity(n, n));
  p.y_obs = theta_ref;  // y = G theta_ref with no sampled observation error
  p.sigma_eta = Eigen::MatrixXd::Identity(n, n);
  p.prior_mean = Eigen::VectorXd::Zero(n);
  p.prior_cov = Eigen::MatrixXd::Identity(n, n);
  p.theta_ref = theta_ref;
  return p;
}

std::pair<double, double> subspace_distance_mc(Eigen::Index n_theta,
                                               Eigen::Index j_count,
                                               const Eigen::VectorXd& theta_ref,
                                               int trials, std::uint64_t seed) {
  if (j_count < 1 || j_count > n_theta) {
    throw DimensionError("subspace_distance_mc: need 1 <= J <= n_theta");
  }
  if (theta_ref.size() != n_theta) {
    throw DimensionError("subspace_distance_mc: theta_ref has wrong dimension");
  }
  if (trials < 1) {
    throw DimensionError("subspace_distance_mc: trials must be >= 1");
  }

  Eigen::VectorXd dist2(trials);
  for (int t = 0; t < trials; ++t) {
    RandomStream stream(seed, RandomStream::substream(kTagSubspace,
                                                      static_cast<std::uint64_t>(t), 0));
    Eigen::MatrixXd samples(n_theta, j_count);
    for (Eigen::Index j = 0; j < j_count; ++j) {
      samples.col(j) = stream.normal_vector(n_theta);
    }
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(samples);
    const Eigen::MatrixXd q =
        qr.householderQ() * Eigen::MatrixXd::Identity(n_theta, j_count);
    const Eigen::VectorXd residual = theta_ref - q * (q.transpose() * theta_ref);
    dist2(t) = residual.squaredNorm();
  }
  const double mean = dist2.mean();
  double stderr_est = 0.0;
  if (trials > 1) {
    const double var =
        (dist2.array() - mean).square().sum() / static_cast<double>(trials - 1);
    stderr_est = std::sqrt(var / static_cast<double>(trials));
  }
  return {mean, stderr_est};
}

InverseProblem twofid_diffusion_problem(Eigen::Index n_fine, Eigen::Index n_coarse,
                                        Eigen::Index n_params,
                                        std::uint64_t noise_seed) {
  if (n_coarse >= n_fine) {
    throw DimensionError("twofid_diffusion_problem: n_coarse must be < n_fine");
  }
  if (n_params > n_coarse || n_params < 1) {
    throw DimensionError("twofid_diffusion_problem: need 1 <= n_params <= n_coarse");
  }

  Eigen::VectorXd stations(16);
  for (Eigen::Index s = 0; s < 16; ++s) {
    stations(s) = static_cast<double>(s + 1) / 17.0;
  }
  auto model = std::make_shared<TwofidDiffusionModel>(n_fine, n_coarse, n_params,
                                                      stations);

  // Smooth ground truth with decaying sine coefficients; weakly observed high
  // modes contribute little to the reference norm.
  Eigen::VectorXd theta_ref(n_params);
  for (Eigen::Index k = 0; k < n_params; ++k) {
    const double kk = static_cast<double>(k + 1);
    theta_ref(k) = 1.5 * ((k % 2 == 0) ? 1.0 : -1.0) * std::pow(kk, -4.0);
  }
  const Eigen::VectorXd y_ref = model->evaluate(theta_ref, FidelityLevel::High);
  const Eigen::VectorXd y_obs = noisy_observe(y_ref, 0.01, noise_seed);

  InverseProblem p;
  p.model = model;
  p.y_obs = y_obs;
  p.sigma_eta = (0.01 * y_obs.cwiseAbs()).cwiseMax(1e-8).array().square().matrix().asDiagonal();
  p.prior_mean = Eigen::VectorXd::Zero(n_params);
  // Smoothness prior: sigma_k = 0.2 k^-3.
  Eigen::VectorXd prior_var(n_params);
  for (Eigen::Index k = 0; k < n_params; ++k) {
    prior_var(k) = std::pow(0.2 * std::pow(static_cast<double>(k + 1), -3.0), 2.0);
  }
  p.prior_cov = prior_var.asDiagonal();
  p.theta_ref = theta_ref;
  return p;
}

Eigen::VectorXd noisy_observe(const Eigen::VectorXd& y_ref, double level,
                              std::uint64_t seed) {
  if (level < 0.0) {
    throw InputError("noisy_observe: level must be >= 0");
  }
  RandomStream stream(seed, RandomStream::substream(kTagNoise, 0, 0));
  Eigen::VectorXd out(y_ref.size());
  for (Eigen::Index i = 0; i < y_ref.size(); ++i) {
    out(i) = y_ref(i) * (1.0 + level * stream.normal());
  }
  return out;
}

}  // namespace kinv
