#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "blepi/rng.hpp"

namespace blepi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative tolerance used for ranks of images of subspaces. Looser than the
/// machine-precision rule because bases built from kernels and intersections
/// carry O(1e-15) noise.
inline constexpr double kSubspaceRankTol = 1e-9;

/// Numerical-rank threshold max(rows, cols) * eps * sigma_max.
double machine_rank_tolerance(const Eigen::Ref<const Matrix>& a);

/// Numerical rank with threshold `rel_tol * sigma_max` (machine rule when rel_tol < 0).
int numerical_rank(const Eigen::Ref<const Matrix>& a, double rel_tol = -1.0);

/// Orthonormal basis for the column span of `a`.
Matrix column_basis(const Eigen::Ref<const Matrix>& a, double rel_tol = kSubspaceRankTol);

/// Orthonormal basis of ker(a), as columns.
Matrix null_basis(const Eigen::Ref<const Matrix>& a, double rel_tol = -1.0);

/// Orthonormal basis for the orthogonal complement of span(basis) in R^dim.
Matrix orthogonal_complement(const Eigen::Ref<const Matrix>& basis, Eigen::Index dim);

/// Orthonormal basis of span(a) ∩ span(b); both inputs have orthonormal columns.
Matrix intersect_spans(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b);

/// Haar-distributed rows x cols matrix with orthonormal columns (QR of a Gaussian).
Matrix random_orthonormal(Eigen::Index rows, Eigen::Index cols, CounterRng& rng);

/// Standard normal matrix.
Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, CounterRng& rng);

/// log det of an SPD matrix; nullopt when the Cholesky factorization fails.
template <typename Derived>
std::optional<double> log_det_spd(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::LLT<Matrix> llt(m.derived());
  if (llt.info() != Eigen::Success) return std::nullopt;
  const auto diag = llt.matrixLLT().diagonal();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag(i) > 0.0)) return std::nullopt;
    sum += std::log(diag(i));
  }
  return 2.0 * sum;
}

/// Spectral condition number of a symmetric positive semidefinite matrix.
template <typename Derived>
double condition_number_spd(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() <= 1) return 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.derived(), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

/// Block-diagonal assembly.
Matrix block_diagonal(const std::vector<Matrix>& blocks);

}  // namespace blepi
