#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "blepi/linalg.hpp"

namespace blepi {

/// Gaussian constant of the Lieb-form EPI: 0 for every lambda in (0, 1) and dimension.
double epi_mg(double lambda, int dim);

/// alpha_j^2 = squared norm of column j of a k x n matrix with orthonormal rows.
/// Also checks that d/d(log lambda_j) log|A Lambda A^T| at Lambda = I equals alpha_j^2.
Vector zf_coefficients(const Matrix& a, double tol = 1e-9);

/// Analytic sensitivities lambda_j a_j^T (A Lambda A^T)^{-1} a_j = d log|A Lambda A^T| / d log lambda_j.
Vector zf_log_det_sensitivity(const Matrix& a, const Vector& lambda);

/// F(Lambda) = log|A Lambda A^T| - sum_j alpha_j^2 log lambda_j, nonnegative for orthonormal-row A.
double zf_F(const Matrix& a, const Vector& lambda, double tol = 1e-9);

struct CauchyBinet {
  double lhs = 0.0;  // det(B B^T)
  double rhs = 0.0;  // sum of squared k x k minors
  double relative_error() const;
};

/// Both sides of the Cauchy-Binet expansion of det(B B^T) for a k x n matrix, k <= n.
CauchyBinet cauchy_binet_check(const Matrix& b);

struct Section6Params {
  double alpha = 0.0;
  double beta = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
};

/// Per-condition flags for the dependent-components inequality:
/// (1) 2 alpha + beta = 2 + delta1 + delta2, (2) beta <= 1,
/// (3) alpha <= 1 + delta1 and alpha <= 1 + delta2, (4) alpha >= 1.
struct Section6Feasibility {
  std::array<bool, 4> conditions{};
  bool feasible() const { return conditions[0] && conditions[1] && conditions[2] && conditions[3]; }
  /// Names of the failing conditions, e.g. "(2) beta <= 1".
  std::vector<std::string> failures() const;
};

Section6Feasibility section6_feasible(const Section6Params& p, double tol = 1e-9);

/// Domain error carrying the violated precondition.
class Section6DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Section6Constant {
  double c = 0.0;  // optimal additive constant (nats)
  double d = 0.0;  // the same constant in the rearranged mutual-information form
  double rho_star = 0.0;
  double x_star = 0.0;  // optimal K_3 / K at rho_star
};

/// Closed form for delta1 = delta2 = delta:
/// e^{2C} = beta^beta (1-beta)^{1-beta} / 2^beta * (1 + beta/2delta)^{alpha+beta-1} (1 - beta/2delta)^{alpha-1}.
/// Requires feasibility, 0 < beta < 1, delta > 0 and beta / (2 delta) <= 1.
Section6Constant section6_constant(double alpha, double beta, double delta);

struct Section6Bruteforce {
  double c_full = 0.0;     // half log of the sup over (K_1, K_2, K_3, rho)
  double c_reduced = 0.0;  // half log of the sup over (x, rho) after K_1 = K_2
  double k1_over_k2 = 0.0;
  double rho = 0.0;

  double value() const { return c_full; }
};

/// Numerical maximization of the covariance ratio defining C: grid search then
/// Nelder-Mead refinement, for the four-variable and the reduced two-variable forms.
Section6Bruteforce section6_bruteforce(double alpha, double beta, double delta1, double delta2);
Section6Bruteforce section6_bruteforce(double alpha, double beta, double delta);

/// Right side of h(X_1+Y, X_2+Y) >= (alpha - delta) h(X_1, X_2) + beta h(Y) - delta I(X_1; X_2) - D.
double section6_lower_bound(double alpha, double beta, double delta, double h_x1x2, double h_y,
                            double mutual_information);

}  // namespace blepi
