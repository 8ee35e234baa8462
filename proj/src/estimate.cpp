#include "blepi/estimate.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "kdtree.hpp"

namespace blepi {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// log N(x; 0, cov) = log_norm - x^T precision x / 2.
struct GaussianKernel {
  Matrix precision;
  double log_norm = 0.0;

  explicit GaussianKernel(const Matrix& cov) {
    Eigen::LLT<Matrix> chol(cov);
    if (chol.info() != Eigen::Success)
      throw std::domain_error("mixture component covariance is not positive definite");
    precision = chol.solve(Matrix::Identity(cov.rows(), cov.cols()));
    const double logdet = 2.0 * chol.matrixLLT().diagonal().array().log().sum();
    log_norm = -0.5 * (static_cast<double>(cov.rows()) * std::log(2.0 * std::numbers::pi) + logdet);
  }

  double density(double x0, double x1, Eigen::Index d) const {
    double q = precision(0, 0) * x0 * x0;
    if (d == 2) q += 2.0 * precision(0, 1) * x0 * x1 + precision(1, 1) * x1 * x1;
    return std::exp(log_norm - 0.5 * q);
  }
};

// Composite Simpson weights on `points` nodes (points odd).
std::vector<double> simpson_weights(int points, double h) {
  std::vector<double> w(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) w[i] = (i == 0 || i == points - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  for (auto& v : w) v *= h / 3.0;
  return w;
}

double mixture_entropy(const Mixture2Block& m) {
  const Eigen::Index d = m.cov_a.rows();
  if (d > 2)
    throw std::domain_error("mixture entropy by quadrature is only available for blocks of dimension <= 2");
  const GaussianKernel ka(m.cov_a), kb(m.cov_b);
  Eigen::SelfAdjointEigenSolver<Matrix> ea(m.cov_a, Eigen::EigenvaluesOnly), eb(m.cov_b, Eigen::EigenvaluesOnly);
  const double spread = std::sqrt(std::max(ea.eigenvalues().maxCoeff(), eb.eigenvalues().maxCoeff()));
  auto neg_f_log_f = [&](double x0, double x1) {
    const double f = m.weight * ka.density(x0, x1, d) + (1.0 - m.weight) * kb.density(x0, x1, d);
    return f > 0.0 ? -f * std::log(f) : 0.0;
  };
  const int points = d == 1 ? 40001 : 1601;
  const double half = (d == 1 ? 14.0 : 11.0) * spread;
  const double h = 2.0 * half / (points - 1);
  const auto w = simpson_weights(points, h);
  double total = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x0 = -half + i * h;
    if (d == 1) {
      total += w[i] * neg_f_log_f(x0, 0.0);
      continue;
    }
    for (int j = 0; j < points; ++j) total += w[i] * w[j] * neg_f_log_f(x0, -half + j * h);
  }
  return total;
}

}  // namespace

int family_dim(const BlockFamily& family) {
  return std::visit(overloaded{
                        [](const GaussianBlock& g) { return static_cast<int>(g.cov.rows()); },
                        [](const UniformBoxBlock& u) { return static_cast<int>(u.widths.size()); },
                        [](const LaplaceBlock& l) { return static_cast<int>(l.scales.size()); },
                        [](const Mixture2Block& m) { return static_cast<int>(m.cov_a.rows()); },
                    },
                    family);
}

std::string family_name(const BlockFamily& family) {
  return std::visit(overloaded{
                        [](const GaussianBlock&) { return std::string("gaussian"); },
                        [](const UniformBoxBlock&) { return std::string("uniform"); },
                        [](const LaplaceBlock&) { return std::string("laplace"); },
                        [](const Mixture2Block&) { return std::string("mixture"); },
                    },
                    family);
}

int SampleModel::n() const {
  int total = 0;
  for (const auto& b : blocks) total += family_dim(b);
  return total;
}

bool SampleModel::compatible_with(const Partition& partition) const {
  if (static_cast<int>(blocks.size()) != partition.k()) return false;
  for (int i = 0; i < partition.k(); ++i)
    if (family_dim(blocks[i]) != partition.blocks[i]) return false;
  return true;
}

SampleModel SampleModel::gaussian(const BlockCovariance& sigma) {
  SampleModel model{"gaussian", {}};
  for (const auto& b : sigma.blocks) model.blocks.push_back(GaussianBlock{b});
  return model;
}

SampleModel SampleModel::uniform(const Partition& partition, double width) {
  SampleModel model{"uniform", {}};
  for (int r : partition.blocks) model.blocks.push_back(UniformBoxBlock{Vector::Constant(r, width)});
  return model;
}

SampleModel SampleModel::laplace(const Partition& partition, double scale) {
  SampleModel model{"laplace", {}};
  for (int r : partition.blocks) model.blocks.push_back(LaplaceBlock{Vector::Constant(r, scale)});
  return model;
}

SampleModel SampleModel::mixture(const Partition& partition) {
  SampleModel model{"mixture", {}};
  for (int r : partition.blocks) {
    Matrix corr = Matrix::Constant(r, r, 0.5);
    corr.diagonal().setOnes();
    model.blocks.push_back(Mixture2Block{0.5, 0.25 * corr, 2.0 * Matrix::Identity(r, r)});
  }
  return model;
}

Matrix sample(const SampleModel& model, int count, CounterRng& rng) {
  if (count < 1) throw std::invalid_argument("sample: need at least one draw");
  Matrix out(count, model.n());
  int col = 0;
  for (std::size_t i = 0; i < model.blocks.size(); ++i) {
    CounterRng local = rng.split(i);
    const BlockFamily& family = model.blocks[i];
    const int r = family_dim(family);
    auto block = out.middleCols(col, r);
    std::visit(overloaded{
                   [&](const GaussianBlock& g) {
                     const Matrix l = Eigen::LLT<Matrix>(g.cov).matrixL();
                     block = standard_normal(count, r, local) * l.transpose();
                   },
                   [&](const UniformBoxBlock& u) {
                     std::uniform_real_distribution<double> unit(-0.5, 0.5);
                     for (int c = 0; c < r; ++c)
                       for (int s = 0; s < count; ++s) block(s, c) = u.widths(c) * unit(local);
                   },
                   [&](const LaplaceBlock& l) {
                     std::exponential_distribution<double> expo(1.0);
                     for (int c = 0; c < r; ++c)
                       for (int s = 0; s < count; ++s) block(s, c) = l.scales(c) * (expo(local) - expo(local));
                   },
                   [&](const Mixture2Block& m) {
                     const Matrix la = Eigen::LLT<Matrix>(m.cov_a).matrixL();
                     const Matrix lb = Eigen::LLT<Matrix>(m.cov_b).matrixL();
                     std::uniform_real_distribution<double> unit(0.0, 1.0);
                     const Matrix z = standard_normal(count, r, local);
                     for (int s = 0; s < count; ++s) {
                       const Matrix& l = unit(local) < m.weight ? la : lb;
                       block.row(s) = z.row(s) * l.transpose();
                     }
                   },
               },
               family);
    col += r;
  }
  rng();
  return out;
}

bool has_exact_entropy(const SampleModel& model, int block_index) {
  const BlockFamily& family = model.blocks.at(static_cast<std::size_t>(block_index));
  if (const auto* m = std::get_if<Mixture2Block>(&family)) return m->cov_a.rows() <= 2;
  return true;
}

double exact_entropy(const SampleModel& model, int block_index) {
  const BlockFamily& family = model.blocks.at(static_cast<std::size_t>(block_index));
  return std::visit(overloaded{
                        [](const GaussianBlock& g) { return gaussian_entropy(g.cov); },
                        [](const UniformBoxBlock& u) { return u.widths.array().log().sum(); },
                        [](const LaplaceBlock& l) {
                          return (1.0 + (2.0 * l.scales.array()).log()).sum();
                        },
                        [](const Mixture2Block& m) { return mixture_entropy(m); },
                    },
                    family);
}

std::string to_string(EntropyEstimate::Method method) {
  return method == EntropyEstimate::Method::ClosedForm ? "closed_form" : "knn";
}

double digamma_int(long n) {
  if (n < 1) throw std::domain_error("digamma_int: argument must be positive");
  constexpr double euler_gamma = 0.57721566490153286061;
  if (n < 20) {
    double h = 0.0;
    for (long i = 1; i < n; ++i) h += 1.0 / static_cast<double>(i);
    return h - euler_gamma;
  }
  const double x = static_cast<double>(n);
  const double x2 = 1.0 / (x * x);
  return std::log(x) - 0.5 / x - x2 * (1.0 / 12.0 - x2 * (1.0 / 120.0 - x2 / 252.0));
}

double knn_entropy_value(const Matrix& samples, int k, bool* jittered) {
  const Eigen::Index count = samples.rows();
  const Eigen::Index d = samples.cols();
  if (d < 1) throw std::invalid_argument("knn_entropy: need at least one dimension");
  if (k < 1 || count < k + 1) throw std::invalid_argument("knn_entropy: need N >= k + 1 samples");
  Matrix points = samples.transpose();

  auto sum_log_dist = [&](const Matrix& pts, bool& saw_zero) {
    detail::KdTree tree(pts);
    double total = 0.0;
    saw_zero = false;
    for (Eigen::Index i = 0; i < count; ++i) {
      const double d2 = tree.kth_neighbour_sq(i, k);
      if (!(d2 > 0.0)) {
        saw_zero = true;
        return 0.0;
      }
      total += 0.5 * std::log(d2);
    }
    return total;
  };

  bool saw_zero = false;
  double total = sum_log_dist(points, saw_zero);
  if (jittered) *jittered = false;
  if (saw_zero) {
    const double scale = std::max(points.cwiseAbs().maxCoeff(), 1.0);
    CounterRng jitter_rng(0x6a1773ULL);
    points += 1e-12 * scale * standard_normal(d, count, jitter_rng);
    total = sum_log_dist(points, saw_zero);
    if (saw_zero) throw std::domain_error("knn_entropy: duplicate points survive jitter");
    if (jittered) *jittered = true;
  }
  const double dd = static_cast<double>(d);
  const double log_unit_ball = 0.5 * dd * std::log(std::numbers::pi) - std::lgamma(0.5 * dd + 1.0);
  return digamma_int(static_cast<long>(count)) - digamma_int(k) + log_unit_ball +
         dd * total / static_cast<double>(count);
}

EntropyEstimate knn_entropy(const Matrix& samples, int k) {
  EntropyEstimate out;
  out.method = EntropyEstimate::Method::Knn;
  out.n_samples = static_cast<int>(samples.rows());
  out.k_neighbors = k;
  out.value = knn_entropy_value(samples, k, &out.jittered);

  const Eigen::Index batches = std::min<Eigen::Index>(10, samples.rows() / (k + 1));
  if (batches < 2) {
    out.std_error = std::numeric_limits<double>::infinity();
    return out;
  }
  const Eigen::Index size = samples.rows() / batches;
  std::vector<double> values;
  for (Eigen::Index b = 0; b < batches; ++b) {
    bool jit = false;
    values.push_back(knn_entropy_value(samples.middleRows(b * size, size), k, &jit));
    out.jittered = out.jittered || jit;
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size() - 1);
  out.std_error = std::sqrt(var / static_cast<double>(values.size()));
  return out;
}

FunctionalEstimate empirical_f(const BLEPDatum& datum, const SampleModel& model, int count, int k,
                               CounterRng& rng) {
  if (!model.compatible_with(datum.partition))
    throw std::invalid_argument("sample model does not match the datum's partition");
  FunctionalEstimate out;
  const Matrix x = sample(model, count, rng);
  double value = 0.0, variance = 0.0;
  bool any_knn = false;

  auto warn_dim = [&](Eigen::Index dim, const std::string& what) {
    if (dim > kKnnDimWarning) {
      std::ostringstream os;
      os << what << " has dimension " << dim << " > " << kKnnDimWarning
         << "; k-NN bias may dominate";
      out.warnings.push_back(os.str());
    }
  };

  for (int i = 0; i < datum.k(); ++i) {
    EntropyEstimate term;
    if (has_exact_entropy(model, i)) {
      term.value = exact_entropy(model, i);
      term.method = EntropyEstimate::Method::ClosedForm;
      term.n_samples = count;
    } else {
      warn_dim(datum.partition.blocks[i], "block " + std::to_string(i));
      term = knn_entropy(x.middleCols(datum.partition.offset(i), datum.partition.blocks[i]), k);
      any_knn = true;
    }
    value += datum.d[i] * term.value;
    variance += datum.d[i] * datum.d[i] * term.std_error * term.std_error;
    out.block_terms.push_back(term);
  }
  for (int j = 0; j < datum.m(); ++j) {
    warn_dim(datum.image_dim(j), "image of map " + std::to_string(j));
    EntropyEstimate term = knn_entropy(x * datum.maps[j].transpose(), k);
    any_knn = true;
    value -= datum.c[j] * term.value;
    variance += datum.c[j] * datum.c[j] * term.std_error * term.std_error;
    out.map_terms.push_back(term);
  }
  out.total.value = value;
  out.total.std_error = std::sqrt(variance);
  out.total.method = any_knn ? EntropyEstimate::Method::Knn : EntropyEstimate::Method::ClosedForm;
  out.total.n_samples = count;
  out.total.k_neighbors = k;
  for (const auto& t : out.block_terms) out.total.jittered = out.total.jittered || t.jittered;
  for (const auto& t : out.map_terms) out.total.jittered = out.total.jittered || t.jittered;
  return out;
}

std::vector<VerificationReport> verify_inequality(const BLEPDatum& datum,
                                                  const std::vector<SampleModel>& models, double mg,
                                                  int count, int k, double z_crit, CounterRng& rng) {
  std::vector<VerificationReport> reports;
  for (std::size_t m = 0; m < models.size(); ++m) {
    CounterRng local = rng.split(m);
    VerificationReport report;
    report.model = models[m].name;
    report.empirical = empirical_f(datum, models[m], count, k, local);
    report.mg_reference = mg;
    report.margin = report.empirical.total.value - mg;
    const double se = report.empirical.total.std_error;
    report.z_score = se > 0.0 ? report.margin / se : (report.margin > 0.0 ? std::numeric_limits<double>::infinity()
                                                                           : -std::numeric_limits<double>::infinity());
    report.z_crit = z_crit;
    report.pass = report.margin <= z_crit * se;
    reports.push_back(std::move(report));
  }
  rng();
  return reports;
}

}  // namespace blepi
