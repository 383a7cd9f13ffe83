#include "kinv/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace kinv {

namespace {

constexpr double kEigClamp = 1e-12;

// Flip column signs so the largest-magnitude entry of each column is positive.
// Ties resolve to the first extremal entry, so the convention is deterministic.
void fix_column_signs(Eigen::MatrixXd& primary, Eigen::MatrixXd* paired) {
  for (Eigen::Index j = 0; j < primary.cols(); ++j) {
    Eigen::Index imax = 0;
    primary.col(j).cwiseAbs().maxCoeff(&imax);
    if (primary(imax, j) < 0.0) {
      primary.col(j) = -primary.col(j);
      if (paired != nullptr && j < paired->cols()) {
        paired->col(j) = -paired->col(j);
      }
    }
  }
}

}  // namespace

TsvdFactors tsvd(const Eigen::MatrixXd& a, Eigen::Index rank) {
  if (rank < 1 || rank > std::min(a.rows(), a.cols())) {
    throw DimensionError("tsvd: rank " + std::to_string(rank) +
                         " out of range for " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " input");
  }
  if (!a.allFinite()) {
    throw InputError("tsvd: input has non-finite entries");
  }
  // Full SVD then truncation. Inputs here are thin (N x 2N_r), so this stays cheap.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  TsvdFactors f;
  f.left = svd.matrixU().leftCols(rank);
  f.singular = svd.singularValues().head(rank);
  f.right = svd.matrixV().leftCols(rank);
  fix_column_signs(f.left, &f.right);
  return f;
}

SymEig sym_eig_psd(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols() || s.rows() < 1) {
    throw DimensionError("sym_eig_psd: input must be square and nonempty");
  }
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InputError("sym_eig_psd: input asymmetric beyond tolerance");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  if (es.info() != Eigen::Success) {
    throw NumericError("sym_eig_psd: eigendecomposition failed to converge");
  }
  const Eigen::Index n = s.rows();
  SymEig out;
  out.vectors.resize(n, n);
  out.values.resize(n);
  // Eigen returns increasing order; flip to nonincreasing.
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  const double clamp = kEigClamp * std::max(1.0, out.values.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (out.values(i) < clamp) out.values(i) = std::max(out.values(i), 0.0);
    if (out.values(i) < 0.0) out.values(i) = 0.0;
  }
  fix_column_signs(out.vectors, nullptr);
  return out;
}

Eigen::MatrixXd chol_sqrt(const Eigen::MatrixXd& c) {
  if (c.rows() != c.cols() || c.rows() < 1) {
    throw DimensionError("chol_sqrt: input must be square and nonempty");
  }
  const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw InputError("chol_sqrt: input asymmetric beyond tolerance");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() == Eigen::Success) {
    return llt.matrixL();
  }
  // Diagnose which pivot failed with a scalar pass; only runs on the error path.
  const Eigen::Index n = c.rows();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = c(j, j) - l.row(j).head(j).squaredNorm();
    if (d <= 0.0 || !std::isfinite(d)) {
      throw DecompositionError(
          "chol_sqrt: matrix not positive definite at pivot " + std::to_string(j),
          static_cast<int>(j));
    }
    l(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      l(i, j) = (c(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return l;  // scalar pass succeeded where LLT reported failure; keep its factor
}

SpdSolver::SpdSolver(const Eigen::MatrixXd& s) : llt_(s) {
  if (llt_.info() != Eigen::Success) {
    throw DecompositionError("SpdSolver: matrix not positive definite");
  }
}

Eigen::MatrixXd SpdSolver::solve(const Eigen::MatrixXd& rhs) const {
  return llt_.solve(rhs);
}

Eigen::VectorXd SpdSolver::solve(const Eigen::VectorXd& rhs) const {
  return llt_.solve(rhs);
}

Eigen::MatrixXd woodbury_solve(const Eigen::MatrixXd& y, const SpdSolver& sigma_nu,
                               const Eigen::MatrixXd& v) {
  if (y.rows() != sigma_nu.dim() || v.rows() != sigma_nu.dim()) {
    throw DimensionError("woodbury_solve: inconsistent dimensions");
  }
  const Eigen::MatrixXd sv = sigma_nu.solve(v);
  if (y.cols() == 0) {
    return sv;
  }
  const Eigen::MatrixXd sy = sigma_nu.solve(y);
  Eigen::MatrixXd inner =
      Eigen::MatrixXd::Identity(y.cols(), y.cols()) + y.transpose() * sy;
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(inner);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw NumericError("woodbury_solve: inner system numerically singular");
  }
  return sv - sy * ldlt.solve(y.transpose() * sv);
}

Eigen::VectorXd woodbury_solve(const Eigen::MatrixXd& y,
                               const Eigen::MatrixXd& sigma_nu,
                               const Eigen::VectorXd& v) {
  SpdSolver solver(sigma_nu);
  return woodbury_solve(y, solver, Eigen::MatrixXd(v)).col(0);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s) {
  const SymEig eig = sym_eig_psd(s);
  return eig.vectors * eig.values.cwiseSqrt().asDiagonal();
}

}  // namespace kinv
