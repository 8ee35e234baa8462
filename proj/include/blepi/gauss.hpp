#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "blepi/datum.hpp"
#include "blepi/subspace.hpp"

namespace blepi {

/// Raised when an image covariance A_j Sigma A_j^T is singular, i.e. the
/// objective sits at -infinity rather than at a finite value.
class DegenerateImageError : public std::domain_error {
 public:
  DegenerateImageError(int map_index, const std::string& what)
      : std::domain_error(what), map_index_(map_index) {}
  int map_index() const { return map_index_; }

 private:
  int map_index_;
};

/// Differential entropy (nats) of N(0, cov): 0.5 * log((2 pi e)^d det cov).
/// A 0 x 0 covariance has entropy 0.
template <typename Derived>
double gaussian_entropy(const Eigen::MatrixBase<Derived>& cov) {
  const auto d = static_cast<double>(cov.rows());
  if (cov.rows() != cov.cols()) throw std::invalid_argument("gaussian_entropy: covariance must be square");
  if (cov.rows() == 0) return 0.0;
  const auto logdet = log_det_spd(cov);
  if (!logdet) throw std::domain_error("gaussian_entropy: covariance is not positive definite");
  return 0.5 * (d * std::log(2.0 * std::numbers::pi * std::numbers::e) + *logdet);
}

/// Sigma = Diag(Sigma_1, ..., Sigma_k).
struct BlockCovariance {
  std::vector<Matrix> blocks;

  int k() const { return static_cast<int>(blocks.size()); }
  Matrix dense() const { return block_diagonal(blocks); }
  BlockCovariance scaled(double t) const;

  static BlockCovariance identity(const Partition& partition);
};

/// Symmetric within 1e-10 and Cholesky-factorizable, with block sizes matching `partition`.
bool is_valid_for(const BlockCovariance& sigma, const Partition& partition);

/// Block noise variance delta and image noise variance epsilon.
struct PerturbationParams {
  double epsilon = 0.0;
  double delta = 0.0;
};

/// sum_i d_i h(Sigma_i) - sum_j c_j h(A_j Sigma A_j^T).
double objective(const BLEPDatum& datum, const BlockCovariance& sigma);

/// Same functional with delta I added to every block and epsilon I added to every image.
double objective_perturbed(const BLEPDatum& datum, const BlockCovariance& sigma,
                           const PerturbationParams& p);

/// d objective / d Sigma_i for each block (symmetric matrices).
std::vector<Matrix> gradient(const BLEPDatum& datum, const BlockCovariance& sigma);

struct SolverOptions {
  int starts = 8;
  double tol = 1e-8;
  int max_iterations = 4000;
  /// Objective gain over the Sigma = I value that is taken as divergence.
  double blowup_threshold = 1e3;
  /// Image covariances above this condition number count as failed evaluations.
  double cond_threshold = 1e12;
  /// Escape-ray probe: number of doublings (2^20 ~ 1e6) and minimal per-doubling gain.
  int ray_doublings = 20;
  double ray_gain_floor = 1e-3;
  std::uint64_t seed = 0;
};

struct GaussianSolveResult {
  /// Best objective value (nats); +infinity when unbounded.
  double mg_value = 0.0;
  /// Best finite objective value reached by the ascent.
  double best_value = 0.0;
  BlockCovariance sigma_star;
  bool converged = false;
  bool unbounded = false;
  int starts_used = 0;
  /// Euclidean norm of the gradient in log-Cholesky coordinates at sigma_star.
  double gradient_norm = 0.0;
  int iterations = 0;
  /// Product subspace along which the objective was seen to grow without bound.
  std::optional<ProductSubspace> escape_subspace;
  std::string note;
};

/// Multi-start quasi-Newton ascent of the objective over block covariances,
/// parameterized as Sigma_i = L_i L_i^T with log-diagonal L_i.
GaussianSolveResult solve_mg(const BLEPDatum& datum, const SolverOptions& opts = {});

/// Objective along Sigma(t) = Sigma + (t - 1) P_V Sigma P_V for t = 2^0 .. 2^doublings.
struct RayProbe {
  std::vector<double> values;
  std::vector<double> gains;  // values[s] - values[s - 1]
  bool escaping = false;
};

RayProbe probe_escape_ray(const BLEPDatum& datum, const BlockCovariance& sigma,
                          const ProductSubspace& v, const SolverOptions& opts = {});

/// Joint law of a pair (X_1, X_2): per block, the 2 r_i x 2 r_i covariance of
/// (X_{i1}, X_{i2}) (first r_i coordinates are X_{i1}). Blocks are independent.
struct GaussianPair {
  std::vector<Matrix> joint;

  BlockCovariance first() const;
  BlockCovariance second() const;
  static GaussianPair independent(const BlockCovariance& a, const BlockCovariance& b);
};

/// Paired functional: sum_i d_i h(X_i1 + W, X_i2 + W) - sum_j c_j h(A_j(X_1 + W) + Z, A_j(X_2 + W) + Z)
/// with per-copy block noise delta I and image noise epsilon I.
double pair_s(const BLEPDatum& datum, const GaussianPair& pair, const PerturbationParams& p = {});

/// Law of ((X_1 + X_2)/sqrt 2, (X_1 - X_2)/sqrt 2). An involution.
GaussianPair rotate_pair(const GaussianPair& pair);

/// Finite mixture of centered Gaussians: X | U = u ~ N(0, components[u]).
struct GaussianMixture {
  std::vector<double> weights;
  std::vector<BlockCovariance> components;

  /// Caratheodory cap sum_i r_i (r_i + 1) / 2 + 1 on the number of components.
  static int max_components(const Partition& partition);
};

/// Conditional functional sum_u p_u * objective_perturbed(Sigma^(u)).
double mixture_s(const BLEPDatum& datum, const GaussianMixture& mix, const PerturbationParams& p = {});

}  // namespace blepi
