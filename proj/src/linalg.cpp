#include "blepi/linalg.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace blepi {

double machine_rank_tolerance(const Eigen::Ref<const Matrix>& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  return static_cast<double>(std::max(a.rows(), a.cols())) *
         std::numeric_limits<double>::epsilon() * smax;
}

int numerical_rank(const Eigen::Ref<const Matrix>& a, double rel_tol) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double tol = rel_tol < 0.0
                         ? static_cast<double>(std::max(a.rows(), a.cols())) *
                               std::numeric_limits<double>::epsilon() * s(0)
                         : rel_tol * s(0);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++r;
  return r;
}

Matrix column_basis(const Eigen::Ref<const Matrix>& a, double rel_tol) {
  if (a.cols() == 0 || a.rows() == 0) return Matrix(a.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU);
  const int r = numerical_rank(a, rel_tol);
  return svd.matrixU().leftCols(r);
}

Matrix null_basis(const Eigen::Ref<const Matrix>& a, double rel_tol) {
  const Eigen::Index n = a.cols();
  if (a.rows() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const int r = numerical_rank(a, rel_tol);
  return svd.matrixV().rightCols(n - r);
}

Matrix orthogonal_complement(const Eigen::Ref<const Matrix>& basis, Eigen::Index dim) {
  if (basis.cols() == 0) return Matrix::Identity(dim, dim);
  return null_basis(basis.transpose(), kSubspaceRankTol);
}

Matrix intersect_spans(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  const Eigen::Index dim = a.rows();
  if (a.cols() == 0 || b.cols() == 0) return Matrix(dim, 0);
  // x in both spans iff x is orthogonal to both complements.
  Matrix ca = orthogonal_complement(a, dim);
  Matrix cb = orthogonal_complement(b, dim);
  Matrix stacked(ca.cols() + cb.cols(), dim);
  stacked << ca.transpose(), cb.transpose();
  if (stacked.rows() == 0) return Matrix::Identity(dim, dim);
  return null_basis(stacked, kSubspaceRankTol);
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, CounterRng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  return g;
}

Matrix random_orthonormal(Eigen::Index rows, Eigen::Index cols, CounterRng& rng) {
  if (cols == 0) return Matrix(rows, 0);
  Matrix g = standard_normal(rows, cols, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  // Sign fix makes the distribution exactly Haar.
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < cols; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

Matrix block_diagonal(const std::vector<Matrix>& blocks) {
  Eigen::Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix out = Matrix::Zero(rows, cols);
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

}  // namespace blepi
