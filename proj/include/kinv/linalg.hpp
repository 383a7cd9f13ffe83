#pragma once

#include <Eigen/Dense>

#include "kinv/errors.hpp"

namespace kinv {

/// Truncated SVD A ~ left * diag(singular) * right^T with r dominant triplets.
struct TsvdFactors {
  Eigen::MatrixXd left;       // N x r, orthonormal columns
  Eigen::VectorXd singular;   // r, nonincreasing, >= 0
  Eigen::MatrixXd right;      // M x r, orthonormal columns

  Eigen::Index rank() const { return singular.size(); }
};

/// Eigendecomposition of a symmetric PSD matrix, S = vectors * diag(values) * vectors^T.
/// Eigenvalues are sorted nonincreasing and clamped to >= 0.
struct SymEig {
  Eigen::MatrixXd vectors;    // n x n orthogonal
  Eigen::VectorXd values;     // n, nonincreasing, >= 0
};

/// Rank-r truncated SVD via full SVD of the (assumed thin) input. Vector signs
/// are fixed so the largest-magnitude entry of each left singular vector is
/// positive, making factor output reproducible across platforms.
TsvdFactors tsvd(const Eigen::MatrixXd& a, Eigen::Index rank);

/// Eigendecomposition of a symmetric PSD matrix. Input must be symmetric within
/// 1e-10 (relative); eigenvalues below 1e-12 * max are clamped to zero.
SymEig sym_eig_psd(const Eigen::MatrixXd& s);

/// Lower-triangular Cholesky factor L with L L^T = C. Throws DecompositionError
/// naming the failing pivot when C is not SPD.
Eigen::MatrixXd chol_sqrt(const Eigen::MatrixXd& c);

/// Cached SPD solver (LLT). Used to reuse one factorization of a constant
/// matrix (e.g. sigma_nu) across iterations.
class SpdSolver {
 public:
  explicit SpdSolver(const Eigen::MatrixXd& s);

  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::Index dim() const { return llt_.matrixLLT().rows(); }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Solves (Y Y^T + sigma_nu) x = v through the k x k inner system
/// (I + Y^T sigma_nu^-1 Y); never forms the N_y x N_y sum.
Eigen::VectorXd woodbury_solve(const Eigen::MatrixXd& y,
                               const Eigen::MatrixXd& sigma_nu,
                               const Eigen::VectorXd& v);

/// Variant reusing a prefactored sigma_nu; supports block right-hand sides.
Eigen::MatrixXd woodbury_solve(const Eigen::MatrixXd& y, const SpdSolver& sigma_nu,
                               const Eigen::MatrixXd& v);

/// Symmetric PSD square root P * diag(sqrt(clamped values)); columns span the
/// input's range. Fallback square root when Cholesky is not applicable.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s);

}  // namespace kinv
