#include "blepi/gauss.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace blepi {

BlockCovariance BlockCovariance::scaled(double t) const {
  BlockCovariance out = *this;
  for (auto& b : out.blocks) b *= t;
  return out;
}

BlockCovariance BlockCovariance::identity(const Partition& partition) {
  BlockCovariance out;
  for (int r : partition.blocks) out.blocks.push_back(Matrix::Identity(r, r));
  return out;
}

bool is_valid_for(const BlockCovariance& sigma, const Partition& partition) {
  if (sigma.k() != partition.k()) return false;
  for (int i = 0; i < sigma.k(); ++i) {
    const Matrix& b = sigma.blocks[i];
    if (b.rows() != partition.blocks[i] || b.cols() != partition.blocks[i]) return false;
    if ((b - b.transpose()).cwiseAbs().maxCoeff() > 1e-10) return false;
    if (!log_det_spd(b)) return false;
  }
  return true;
}

namespace {

void require_compatible(const BLEPDatum& datum, const BlockCovariance& sigma) {
  if (sigma.k() != datum.k())
    throw std::invalid_argument("covariance block count does not match the partition");
  for (int i = 0; i < sigma.k(); ++i)
    if (sigma.blocks[i].rows() != datum.partition.blocks[i] ||
        sigma.blocks[i].cols() != datum.partition.blocks[i])
      throw std::invalid_argument("covariance block size does not match the partition");
}

double block_entropy(const Matrix& block) {
  return gaussian_entropy(block);
}

// Entropy of an image covariance, raising DegenerateImageError when singular.
double image_entropy(const Matrix& cov, int j) {
  if (cov.rows() == 0) return 0.0;
  const auto logdet = log_det_spd(cov);
  if (!logdet) {
    std::ostringstream os;
    os << "image covariance of map " << j << " is singular";
    throw DegenerateImageError(j, os.str());
  }
  const double d = static_cast<double>(cov.rows());
  return 0.5 * (d * std::log(2.0 * std::numbers::pi * std::numbers::e) + *logdet);
}

double evaluate(const BLEPDatum& datum, const BlockCovariance& sigma, const PerturbationParams& p) {
  require_compatible(datum, sigma);
  double value = 0.0;
  std::vector<Matrix> noisy = sigma.blocks;
  for (int i = 0; i < datum.k(); ++i) {
    if (p.delta != 0.0) noisy[i] += p.delta * Matrix::Identity(noisy[i].rows(), noisy[i].cols());
    if (datum.d[i] != 0.0) value += datum.d[i] * block_entropy(noisy[i]);
  }
  const Matrix full = block_diagonal(noisy);
  for (int j = 0; j < datum.m(); ++j) {
    const Matrix& a = datum.maps[j];
    Matrix image = a * full * a.transpose();
    if (p.epsilon != 0.0) image += p.epsilon * Matrix::Identity(image.rows(), image.cols());
    if (datum.c[j] != 0.0) value -= datum.c[j] * image_entropy(image, j);
  }
  return value;
}

// Objective from per-block Cholesky factors. Image log-dets come from a QR of
// (A L)^T so the conditioning of A Sigma A^T is never squared. nullopt for
// singular images or images whose condition number exceeds `cond_threshold`.
struct FactorEval {
  double value = 0.0;
  std::vector<Matrix> r_factors;
};

std::optional<FactorEval> eval_factors(const BLEPDatum& datum, const std::vector<Matrix>& factors,
                                       double cond_threshold) {
  const double log_2pie = std::log(2.0 * std::numbers::pi * std::numbers::e);
  FactorEval out;
  for (int i = 0; i < datum.k(); ++i) {
    const Vector diag = factors[i].diagonal();
    if ((diag.array() <= 0.0).any() || !diag.allFinite()) return std::nullopt;
    const double ld = 2.0 * diag.array().log().sum();
    out.value += datum.d[i] * 0.5 * (static_cast<double>(diag.size()) * log_2pie + ld);
  }
  const Matrix full = block_diagonal(factors);
  for (int j = 0; j < datum.m(); ++j) {
    const Matrix b = (datum.maps[j] * full).transpose();
    if (!b.allFinite()) return std::nullopt;
    Eigen::HouseholderQR<Matrix> qr(b);
    const Eigen::Index nj = b.cols();
    Matrix r = qr.matrixQR().topRows(nj).triangularView<Eigen::Upper>();
    const Vector rd = r.diagonal().cwiseAbs();
    if (!(rd.minCoeff() > 0.0)) return std::nullopt;
    const double ratio = rd.maxCoeff() / rd.minCoeff();
    if (nj > 1 && ratio * ratio > cond_threshold) return std::nullopt;
    const double ld = 2.0 * rd.array().log().sum();
    out.value -= datum.c[j] * 0.5 * (static_cast<double>(nj) * log_2pie + ld);
    out.r_factors.push_back(std::move(r));
  }
  if (!std::isfinite(out.value)) return std::nullopt;
  return out;
}

std::optional<double> try_objective(const BLEPDatum& datum, const std::vector<Matrix>& blocks,
                                    double cond_threshold) {
  std::vector<Matrix> factors;
  for (const auto& b : blocks) {
    if (!b.allFinite()) return std::nullopt;
    Eigen::LLT<Matrix> llt(b);
    if (llt.info() != Eigen::Success) return std::nullopt;
    factors.push_back(llt.matrixL());
  }
  const auto e = eval_factors(datum, factors, cond_threshold);
  if (!e) return std::nullopt;
  return e->value;
}

// Per-block gradient using the factors of eval_factors.
std::vector<Matrix> gradient_from_factors(const BLEPDatum& datum, const std::vector<Matrix>& factors,
                                          const FactorEval& e) {
  const int n = datum.n();
  Matrix weighted = Matrix::Zero(n, n);
  for (int j = 0; j < datum.m(); ++j) {
    if (datum.c[j] == 0.0) continue;
    const Matrix w = e.r_factors[j].transpose().triangularView<Eigen::Lower>().solve(datum.maps[j]);
    weighted += datum.c[j] * (w.transpose() * w);
  }
  std::vector<Matrix> grads;
  for (int i = 0; i < datum.k(); ++i) {
    const int o = datum.partition.offset(i);
    const int r = datum.partition.blocks[i];
    const Matrix linv = factors[i].triangularView<Eigen::Lower>().solve(Matrix::Identity(r, r));
    Matrix g = 0.5 * datum.d[i] * (linv.transpose() * linv) - 0.5 * weighted.block(o, o, r, r);
    grads.push_back(0.5 * (g + g.transpose()));
  }
  return grads;
}

std::vector<Matrix> gradient_blocks(const BLEPDatum& datum, const std::vector<Matrix>& blocks) {
  const Matrix full = block_diagonal(blocks);
  const int n = datum.n();
  Matrix weighted = Matrix::Zero(n, n);
  for (int j = 0; j < datum.m(); ++j) {
    if (datum.c[j] == 0.0) continue;
    const Matrix& a = datum.maps[j];
    const Matrix image = a * full * a.transpose();
    Eigen::LLT<Matrix> llt(image);
    if (llt.info() != Eigen::Success) {
      std::ostringstream os;
      os << "image covariance of map " << j << " is singular";
      throw DegenerateImageError(j, os.str());
    }
    weighted += datum.c[j] * (a.transpose() * llt.solve(a));
  }
  std::vector<Matrix> grads;
  for (int i = 0; i < datum.k(); ++i) {
    const int o = datum.partition.offset(i);
    const int r = datum.partition.blocks[i];
    Eigen::LLT<Matrix> llt(blocks[i]);
    if (llt.info() != Eigen::Success) throw std::domain_error("covariance block is not positive definite");
    Matrix g = 0.5 * datum.d[i] * llt.solve(Matrix::Identity(r, r)) -
               0.5 * weighted.block(o, o, r, r);
    grads.push_back(0.5 * (g + g.transpose()));
  }
  return grads;
}

// ---- log-Cholesky parameterization ----

std::vector<Matrix> factors_from(const Partition& partition, const Vector& theta) {
  std::vector<Matrix> factors;
  Eigen::Index at = 0;
  for (int r : partition.blocks) {
    Matrix l = Matrix::Zero(r, r);
    for (int c = 0; c < r; ++c)
      for (int row = c; row < r; ++row) l(row, c) = (row == c) ? std::exp(theta(at++)) : theta(at++);
    factors.push_back(std::move(l));
  }
  return factors;
}

std::vector<Matrix> blocks_from(const std::vector<Matrix>& factors) {
  std::vector<Matrix> blocks;
  for (const auto& l : factors) blocks.push_back(l * l.transpose());
  return blocks;
}

Vector theta_from(const std::vector<Matrix>& blocks) {
  std::vector<double> values;
  for (const auto& b : blocks) {
    Eigen::LLT<Matrix> llt(b);
    const Matrix l = llt.matrixL();
    for (Eigen::Index c = 0; c < l.cols(); ++c)
      for (Eigen::Index row = c; row < l.rows(); ++row)
        values.push_back(row == c ? std::log(l(row, c)) : l(row, c));
  }
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Vector theta_gradient(const std::vector<Matrix>& factors, const std::vector<Matrix>& grads) {
  std::vector<double> values;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const Matrix& l = factors[i];
    const Matrix dl = 2.0 * grads[i] * l;
    for (Eigen::Index c = 0; c < l.cols(); ++c)
      for (Eigen::Index row = c; row < l.rows(); ++row)
        values.push_back(row == c ? dl(row, c) * l(row, c) : dl(row, c));
  }
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

struct Point {
  Vector theta;
  double value = -std::numeric_limits<double>::infinity();
  Vector grad;
  std::vector<Matrix> blocks;
};

std::optional<Point> make_point(const BLEPDatum& datum, const Vector& theta, double cond_threshold) {
  if (!theta.allFinite()) return std::nullopt;
  const auto factors = factors_from(datum.partition, theta);
  for (const auto& l : factors)
    if (!l.allFinite()) return std::nullopt;
  Point p;
  p.theta = theta;
  p.blocks = blocks_from(factors);
  const auto e = eval_factors(datum, factors, cond_threshold);
  if (!e) return std::nullopt;
  p.value = e->value;
  p.grad = theta_gradient(factors, gradient_from_factors(datum, factors, *e));
  if (!p.grad.allFinite()) return std::nullopt;
  return p;
}

struct AscentOutcome {
  Point best;
  bool converged = false;
  bool blew_up = false;
  int iterations = 0;
};

AscentOutcome ascend(const BLEPDatum& datum, Point start, double reference, const SolverOptions& opts) {
  AscentOutcome out;
  Point x = std::move(start);
  const Eigen::Index dim = x.theta.size();
  Matrix h = Matrix::Identity(dim, dim);
  bool fresh_h = true;
  int flat_steps = 0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    out.iterations = it;
    if (x.grad.norm() <= opts.tol) {
      out.converged = true;
      break;
    }
    Vector dir = h * x.grad;
    if (x.grad.dot(dir) <= 1e-14 * x.grad.norm() * dir.norm()) {
      h.setIdentity();
      fresh_h = true;
      dir = x.grad;
    }
    const double slope = x.grad.dot(dir);
    double step = std::min(1.0, 5.0 / dir.cwiseAbs().maxCoeff());
    std::optional<Point> next;
    while (step > 1e-20) {
      auto trial = make_point(datum, x.theta + step * dir, opts.cond_threshold);
      // Near the optimum the value stops resolving; a step that stays within
      // rounding noise but shrinks the gradient is still progress.
      const bool polish = trial && std::abs(trial->value - x.value) <= 1e-12 * (1.0 + std::abs(x.value)) &&
                          trial->grad.norm() < 0.9 * x.grad.norm();
      if (trial && (trial->value >= x.value + 1e-4 * step * slope || polish)) {
        next = std::move(trial);
        break;
      }
      step *= 0.5;
    }
    if (!next) {
      if (fresh_h) break;  // no ascent along the gradient either
      h.setIdentity();
      fresh_h = true;
      continue;
    }
    const Vector s = next->theta - x.theta;
    const Vector y = x.grad - next->grad;  // gradient change of the negated objective
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh_h) h *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Matrix left = Matrix::Identity(dim, dim) - rho * s * y.transpose();
      h = left * h * left.transpose() + rho * s * s.transpose();
      fresh_h = false;
    }
    const double gain = next->value - x.value;
    x = std::move(*next);
    if (x.value - reference > opts.blowup_threshold) {
      out.blew_up = true;
      break;
    }
    flat_steps = (gain <= 1e-15 * (1.0 + std::abs(x.value))) ? flat_steps + 1 : 0;
    if (flat_steps >= 50) break;
  }
  if (!out.converged && x.grad.norm() <= opts.tol) out.converged = true;
  out.best = std::move(x);
  return out;
}

// Top-t_i eigenvector cuts of each block, for every profile except zero/full.
std::vector<ProductSubspace> eigen_cuts(const BlockCovariance& sigma, int cap) {
  std::vector<Matrix> vectors;
  for (const auto& b : sigma.blocks) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(b);
    vectors.push_back(es.eigenvectors().rowwise().reverse());  // descending eigenvalues
  }
  std::vector<ProductSubspace> cuts;
  std::vector<int> t(sigma.blocks.size(), 0);
  const int k = sigma.k();
  while (static_cast<int>(cuts.size()) < cap) {
    ProductSubspace v;
    int dim = 0, total = 0;
    for (int i = 0; i < k; ++i) {
      v.bases.push_back(vectors[i].leftCols(t[i]));
      dim += t[i];
      total += static_cast<int>(sigma.blocks[i].rows());
    }
    if (dim > 0 && dim < total) cuts.push_back(std::move(v));
    int i = k - 1;
    while (i >= 0 && t[i] == sigma.blocks[i].rows()) t[i--] = 0;
    if (i < 0) break;
    ++t[i];
  }
  return cuts;
}

double scaling_residual_of(const BLEPDatum& datum) {
  double residual = 0.0;
  for (int i = 0; i < datum.k(); ++i) residual += datum.d[i] * datum.partition.blocks[i];
  for (int j = 0; j < datum.m(); ++j) residual -= datum.c[j] * datum.image_dim(j);
  return residual;
}

BlockCovariance random_start(const Partition& partition, CounterRng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  BlockCovariance sigma;
  for (int r : partition.blocks) {
    Matrix l = Matrix::Zero(r, r);
    for (int c = 0; c < r; ++c)
      for (int row = c; row < r; ++row)
        l(row, c) = row == c ? std::exp(0.5 * normal(rng)) : 0.5 * normal(rng);
    sigma.blocks.push_back(l * l.transpose());
  }
  return sigma;
}

}  // namespace

double objective(const BLEPDatum& datum, const BlockCovariance& sigma) {
  return evaluate(datum, sigma, {});
}

double objective_perturbed(const BLEPDatum& datum, const BlockCovariance& sigma,
                           const PerturbationParams& p) {
  if (p.epsilon < 0.0 || p.delta < 0.0)
    throw std::invalid_argument("perturbation parameters must be nonnegative");
  return evaluate(datum, sigma, p);
}

std::vector<Matrix> gradient(const BLEPDatum& datum, const BlockCovariance& sigma) {
  require_compatible(datum, sigma);
  return gradient_blocks(datum, sigma.blocks);
}

RayProbe probe_escape_ray(const BLEPDatum& datum, const BlockCovariance& sigma,
                          const ProductSubspace& v, const SolverOptions& opts) {
  require_compatible(datum, sigma);
  RayProbe probe;
  std::vector<Matrix> lifted(sigma.blocks.size());
  for (int i = 0; i < sigma.k(); ++i) {
    const Matrix proj = v.bases[i] * v.bases[i].transpose();
    lifted[i] = proj * sigma.blocks[i] * proj;
  }
  double t = 1.0;
  for (int s = 0; s <= opts.ray_doublings; ++s, t *= 2.0) {
    std::vector<Matrix> blocks = sigma.blocks;
    for (int i = 0; i < sigma.k(); ++i) blocks[i] += (t - 1.0) * lifted[i];
    const auto value = try_objective(datum, blocks, std::numeric_limits<double>::infinity());
    if (!value) break;
    if (!probe.values.empty()) probe.gains.push_back(*value - probe.values.back());
    probe.values.push_back(*value);
  }
  const int window = std::min(10, opts.ray_doublings);
  if (static_cast<int>(probe.gains.size()) == opts.ray_doublings && window > 0) {
    const auto tail = probe.gains.end() - window;
    const bool growing = std::all_of(tail, probe.gains.end(),
                                      [&](double g) { return g >= opts.ray_gain_floor; });
    probe.escaping = growing && probe.gains.back() >= 0.5 * *tail;
  }
  return probe;
}

GaussianSolveResult solve_mg(const BLEPDatum& datum, const SolverOptions& opts) {
  GaussianSolveResult result;
  const Partition& partition = datum.partition;
  const BlockCovariance identity = BlockCovariance::identity(partition);
  result.sigma_star = identity;

  const double residual = scaling_residual_of(datum);
  if (std::abs(residual) > 1e-9) {
    // objective(t Sigma) - objective(Sigma) = residual / 2 * log t exactly.
    result.unbounded = true;
    result.mg_value = std::numeric_limits<double>::infinity();
    result.best_value = -std::numeric_limits<double>::infinity();
    if (auto v = try_objective(datum, identity.blocks, opts.cond_threshold)) result.best_value = *v;
    if (residual > 0.0) result.escape_subspace = ProductSubspace::full(partition);
    std::ostringstream os;
    os << "scaling ray: objective changes by " << 0.5 * residual << " * log t under Sigma -> t Sigma";
    result.note = os.str();
    return result;
  }

  const auto reference_value = try_objective(datum, identity.blocks, opts.cond_threshold);
  const double reference = reference_value ? *reference_value : 0.0;
  const CounterRng root(opts.seed);

  std::vector<AscentOutcome> outcomes;
  bool blew_up = false;
  for (int s = 0; s < std::max(opts.starts, 1); ++s) {
    CounterRng rng = root.split(static_cast<std::uint64_t>(s));
    BlockCovariance start = s == 0 ? identity : random_start(partition, rng);
    auto point = make_point(datum, theta_from(start.blocks), opts.cond_threshold);
    if (!point) continue;
    outcomes.push_back(ascend(datum, std::move(*point), reference, opts));
    result.iterations += outcomes.back().iterations;
    if (outcomes.back().blew_up) {
      blew_up = true;
      break;
    }
  }
  result.starts_used = static_cast<int>(outcomes.size());
  if (outcomes.empty()) {
    result.note = "no start produced a finite objective";
    result.mg_value = result.best_value = -std::numeric_limits<double>::infinity();
    return result;
  }

  std::size_t best = 0;
  for (std::size_t s = 1; s < outcomes.size(); ++s)
    if (outcomes[s].best.value > outcomes[best].best.value) best = s;
  const AscentOutcome& winner = outcomes[best];
  result.best_value = winner.best.value;
  result.sigma_star.blocks = winner.best.blocks;
  result.gradient_norm = winner.best.grad.norm();
  result.converged = winner.converged;

  // Escape-ray probe along eigenvector cuts of the best iterate and of every
  // start that stopped without converging.
  std::vector<const AscentOutcome*> probed{&winner};
  for (const auto& o : outcomes)
    if (!o.converged && &o != &winner) probed.push_back(&o);
  for (const AscentOutcome* o : probed) {
    BlockCovariance sigma{o->best.blocks};
    for (const auto& v : eigen_cuts(sigma, 4096)) {
      if (probe_escape_ray(datum, sigma, v, opts).escaping) {
        result.escape_subspace = v;
        break;
      }
    }
    if (result.escape_subspace) break;
  }

  if (blew_up || result.escape_subspace) {
    result.unbounded = true;
    result.converged = false;
    result.mg_value = std::numeric_limits<double>::infinity();
    result.note = blew_up ? "objective exceeded the blow-up threshold"
                          : "objective grows along an escape ray";
    return result;
  }
  result.mg_value = result.best_value;
  if (!result.converged) result.note = "gradient tolerance not reached";
  return result;
}

BlockCovariance GaussianPair::first() const {
  BlockCovariance out;
  for (const auto& j : joint) {
    const Eigen::Index r = j.rows() / 2;
    out.blocks.push_back(j.topLeftCorner(r, r));
  }
  return out;
}

BlockCovariance GaussianPair::second() const {
  BlockCovariance out;
  for (const auto& j : joint) {
    const Eigen::Index r = j.rows() / 2;
    out.blocks.push_back(j.bottomRightCorner(r, r));
  }
  return out;
}

GaussianPair GaussianPair::independent(const BlockCovariance& a, const BlockCovariance& b) {
  GaussianPair pair;
  for (int i = 0; i < a.k(); ++i) pair.joint.push_back(block_diagonal({a.blocks[i], b.blocks[i]}));
  return pair;
}

double pair_s(const BLEPDatum& datum, const GaussianPair& pair, const PerturbationParams& p) {
  if (static_cast<int>(pair.joint.size()) != datum.k())
    throw std::invalid_argument("pair block count does not match the partition");
  const int n = datum.n();
  Matrix full = Matrix::Zero(2 * n, 2 * n);
  double value = 0.0;
  for (int i = 0; i < datum.k(); ++i) {
    const int r = datum.partition.blocks[i];
    const int o = datum.partition.offset(i);
    Matrix j = pair.joint[i];
    if (j.rows() != 2 * r || j.cols() != 2 * r)
      throw std::invalid_argument("pair block has the wrong size");
    j += p.delta * Matrix::Identity(2 * r, 2 * r);
    value += datum.d[i] * gaussian_entropy(j);
    // Scatter into the [X_1; X_2] ordering.
    const std::array<int, 2> base{o, n + o};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) full.block(base[a], base[b], r, r) = j.block(a * r, b * r, r, r);
  }
  for (int jdx = 0; jdx < datum.m(); ++jdx) {
    const Matrix& a = datum.maps[jdx];
    const Matrix doubled = block_diagonal({a, a});
    Matrix image = doubled * full * doubled.transpose();
    image += p.epsilon * Matrix::Identity(image.rows(), image.cols());
    value -= datum.c[jdx] * image_entropy(image, jdx);
  }
  return value;
}

GaussianPair rotate_pair(const GaussianPair& pair) {
  GaussianPair out;
  for (const auto& j : pair.joint) {
    const Eigen::Index r = j.rows() / 2;
    Matrix rot(2 * r, 2 * r);
    const Matrix id = Matrix::Identity(r, r);
    rot << id, id, id, -id;
    rot *= std::numbers::sqrt2 / 2.0;
    Matrix rotated = rot * j * rot.transpose();
    out.joint.push_back(0.5 * (rotated + rotated.transpose()));
  }
  return out;
}

int GaussianMixture::max_components(const Partition& partition) {
  int cap = 1;
  for (int r : partition.blocks) cap += r * (r + 1) / 2;
  return cap;
}

double mixture_s(const BLEPDatum& datum, const GaussianMixture& mix, const PerturbationParams& p) {
  if (mix.weights.empty() || mix.weights.size() != mix.components.size())
    throw std::invalid_argument("mixture needs one positive weight per component");
  if (static_cast<int>(mix.components.size()) > GaussianMixture::max_components(datum.partition))
    throw std::invalid_argument("mixture has more components than the cardinality bound");
  double total = 0.0;
  for (double w : mix.weights) {
    if (!(w > 0.0)) throw std::invalid_argument("mixture weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("mixture weights must sum to 1");
  double value = 0.0;
  for (std::size_t u = 0; u < mix.components.size(); ++u)
    value += mix.weights[u] * objective_perturbed(datum, mix.components[u], p);
  return value;
}

}  // namespace blepi
