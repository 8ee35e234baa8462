#include "blepi/closed_forms.hpp"

#include <cmath>
#include <sstream>

#include "nelder_mead.hpp"

namespace blepi {

double epi_mg(double lambda, int dim) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("epi_mg: lambda must lie in (0, 1)");
  if (dim < 1) throw std::invalid_argument("epi_mg: dimension must be positive");
  return 0.0;
}

namespace {

void require_orthonormal_rows(const Matrix& a, double tol) {
  if (a.rows() == 0 || a.rows() > a.cols())
    throw std::invalid_argument("matrix must be k x n with 1 <= k <= n");
  const Matrix gram = a * a.transpose();
  if ((gram - Matrix::Identity(a.rows(), a.rows())).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("matrix rows must be orthonormal (A A^T = I)");
}

}  // namespace

Vector zf_log_det_sensitivity(const Matrix& a, const Vector& lambda) {
  if (lambda.size() != a.cols()) throw std::invalid_argument("need one lambda per column");
  const Matrix inner = a * lambda.asDiagonal() * a.transpose();
  Eigen::LLT<Matrix> llt(inner);
  if (llt.info() != Eigen::Success) throw std::domain_error("A Lambda A^T is not positive definite");
  Vector out(a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) out(j) = lambda(j) * a.col(j).dot(llt.solve(a.col(j)));
  return out;
}

Vector zf_coefficients(const Matrix& a, double tol) {
  require_orthonormal_rows(a, tol);
  Vector alpha2 = a.colwise().squaredNorm().transpose();
  const Vector sens = zf_log_det_sensitivity(a, Vector::Ones(a.cols()));
  if ((sens - alpha2).cwiseAbs().maxCoeff() > 1e-8)
    throw std::logic_error("log-det sensitivity disagrees with the column norms");
  return alpha2;
}

double zf_F(const Matrix& a, const Vector& lambda, double tol) {
  require_orthonormal_rows(a, tol);
  if (lambda.size() != a.cols()) throw std::invalid_argument("need one lambda per column");
  if (!(lambda.array() > 0.0).all()) throw std::invalid_argument("lambda entries must be positive");
  const auto logdet = log_det_spd(a * lambda.asDiagonal() * a.transpose());
  if (!logdet) throw std::domain_error("A Lambda A^T is not positive definite");
  const Vector alpha2 = a.colwise().squaredNorm().transpose();
  return *logdet - alpha2.dot(lambda.array().log().matrix());
}

double CauchyBinet::relative_error() const {
  const double scale = std::max(std::abs(lhs), std::numeric_limits<double>::min());
  return std::abs(lhs - rhs) / scale;
}

CauchyBinet cauchy_binet_check(const Matrix& b) {
  const Eigen::Index k = b.rows(), n = b.cols();
  if (k > n) throw std::invalid_argument("cauchy_binet_check: need k <= n");
  CauchyBinet out;
  out.lhs = (b * b.transpose()).determinant();
  if (k == 0) {
    out.rhs = 1.0;
    return out;
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) idx[i] = i;
  Matrix minor(k, k);
  while (true) {
    for (Eigen::Index c = 0; c < k; ++c) minor.col(c) = b.col(idx[c]);
    const double det = minor.determinant();
    out.rhs += det * det;
    Eigen::Index i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (Eigen::Index q = i + 1; q < k; ++q) idx[q] = idx[q - 1] + 1;
  }
  return out;
}

std::vector<std::string> Section6Feasibility::failures() const {
  static const char* names[] = {
      "(1) 2 alpha + beta = 2 + delta1 + delta2",
      "(2) beta <= 1",
      "(3) alpha <= 1 + delta1 and alpha <= 1 + delta2",
      "(4) alpha >= 1",
  };
  std::vector<std::string> out;
  for (std::size_t i = 0; i < conditions.size(); ++i)
    if (!conditions[i]) out.emplace_back(names[i]);
  return out;
}

Section6Feasibility section6_feasible(const Section6Params& p, double tol) {
  Section6Feasibility f;
  f.conditions[0] = std::abs(2.0 * p.alpha + p.beta - 2.0 - p.delta1 - p.delta2) <= tol;
  f.conditions[1] = p.beta <= 1.0 + tol;
  f.conditions[2] = p.alpha <= 1.0 + p.delta1 + tol && p.alpha <= 1.0 + p.delta2 + tol;
  f.conditions[3] = p.alpha >= 1.0 - tol;
  return f;
}

Section6Constant section6_constant(double alpha, double beta, double delta) {
  if (alpha < 0.0 || beta < 0.0 || delta < 0.0)
    throw Section6DomainError("parameters must be nonnegative");
  const auto feasibility = section6_feasible({alpha, beta, delta, delta});
  if (!feasibility.feasible()) {
    std::ostringstream os;
    os << "infeasible parameters; violated condition";
    for (const auto& name : feasibility.failures()) os << ' ' << name << ';';
    throw Section6DomainError(os.str());
  }
  if (!(delta > 0.0)) throw Section6DomainError("closed form needs delta > 0");
  if (!(beta > 0.0 && beta < 1.0)) throw Section6DomainError("closed form needs 0 < beta < 1");
  const double rho = beta / (2.0 * delta);
  if (rho > 1.0 + 1e-12) throw Section6DomainError("closed form needs beta / (2 delta) <= 1");
  const double r = std::min(rho, 1.0);

  const double product = std::pow(beta, beta) * std::pow(1.0 - beta, 1.0 - beta) / std::pow(2.0, beta) *
                         std::pow(1.0 + r, alpha + beta - 1.0) * std::pow(1.0 - r, alpha - 1.0);
  Section6Constant out;
  out.c = 0.5 * std::log(product);
  out.d = out.c;
  out.rho_star = r;
  out.x_star = beta * (1.0 + r) / (2.0 * (1.0 - beta));
  return out;
}

namespace {

constexpr double kRhoEdge = 1.0 - 1e-9;

double rho_of(double w) { return kRhoEdge * std::tanh(w); }

// log of the covariance ratio over (log K_1, log K_2, log K_3, atanh-like rho).
double full_log_ratio(const Vector& v, double alpha, double beta, double d1, double d2) {
  const double k1 = std::exp(v(0)), k2 = std::exp(v(1)), k3 = std::exp(v(2));
  const double rho = rho_of(v(3));
  const double cross = rho * std::sqrt(k1 * k2);
  const double det_x = k1 * k2 - cross * cross;
  const double det_sum = (k1 + k3) * (k2 + k3) - (cross + k3) * (cross + k3);
  if (!(det_x > 0.0) || !(det_sum > 0.0)) return -std::numeric_limits<double>::infinity();
  return alpha * std::log(det_x) + beta * v(2) - std::log(det_sum) - d1 * v(0) - d2 * v(1);
}

double reduced_log_ratio(const Vector& v, double alpha, double beta) {
  const double x = std::exp(v(0));
  const double rho = rho_of(v(1));
  return beta * v(0) + (alpha - 1.0) * std::log1p(-rho) + alpha * std::log1p(rho) -
         std::log((1.0 + rho) + 2.0 * x);
}

}  // namespace

Section6Bruteforce section6_bruteforce(double alpha, double beta, double delta1, double delta2) {
  if (!section6_feasible({alpha, beta, delta1, delta2}).feasible())
    throw Section6DomainError("section6_bruteforce: infeasible parameters");
  Section6Bruteforce out;

  auto full = [&](const Vector& v) { return full_log_ratio(v, alpha, beta, delta1, delta2); };
  Vector best(4);
  double best_value = -std::numeric_limits<double>::infinity();
  for (double a = -3.0; a <= 3.0; a += 1.0)
    for (double b = -3.0; b <= 3.0; b += 1.0)
      for (double c = -4.0; c <= 4.0; c += 1.0)
        for (double w = -4.0; w <= 6.0; w += 0.5) {
          Vector v(4);
          v << a, b, c, w;
          const double f = full(v);
          if (f > best_value) {
            best_value = f;
            best = v;
          }
        }
  const auto refined = detail::nelder_mead_max(full, best, 0.5, 8);
  out.c_full = 0.5 * refined.value;
  out.k1_over_k2 = std::exp(refined.x(0) - refined.x(1));
  out.rho = rho_of(refined.x(3));

  auto reduced = [&](const Vector& v) { return reduced_log_ratio(v, alpha, beta); };
  Vector start(2);
  double start_value = -std::numeric_limits<double>::infinity();
  for (double lx = -8.0; lx <= 8.0; lx += 0.25)
    for (double w = -4.0; w <= 10.0; w += 0.25) {
      Vector v(2);
      v << lx, w;
      const double f = reduced(v);
      if (f > start_value) {
        start_value = f;
        start = v;
      }
    }
  out.c_reduced = 0.5 * detail::nelder_mead_max(reduced, start, 0.25, 8).value;
  return out;
}

Section6Bruteforce section6_bruteforce(double alpha, double beta, double delta) {
  return section6_bruteforce(alpha, beta, delta, delta);
}

double section6_lower_bound(double alpha, double beta, double delta, double h_x1x2, double h_y,
                            double mutual_information) {
  const Section6Constant k = section6_constant(alpha, beta, delta);
  return (alpha - delta) * h_x1x2 + beta * h_y - delta * mutual_information - k.d;
}

}  // namespace blepi
