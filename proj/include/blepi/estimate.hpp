#pragma once

#include <string>
#include <variant>
#include <vector>

#include "blepi/datum.hpp"
#include "blepi/gauss.hpp"
#include "blepi/rng.hpp"

namespace blepi {

struct GaussianBlock {
  Matrix cov;
};
/// Independent centered uniforms, coordinate l on [-w_l/2, w_l/2].
struct UniformBoxBlock {
  Vector widths;
};
/// Independent centered Laplace coordinates with scales b_l.
struct LaplaceBlock {
  Vector scales;
};
/// weight * N(0, cov_a) + (1 - weight) * N(0, cov_b).
struct Mixture2Block {
  double weight = 0.5;
  Matrix cov_a;
  Matrix cov_b;
};

using BlockFamily = std::variant<GaussianBlock, UniformBoxBlock, LaplaceBlock, Mixture2Block>;

int family_dim(const BlockFamily& family);
std::string family_name(const BlockFamily& family);

/// Product-form law: independent blocks, each from one family, all centered.
struct SampleModel {
  std::string name;
  std::vector<BlockFamily> blocks;

  int n() const;
  bool compatible_with(const Partition& partition) const;

  static SampleModel gaussian(const BlockCovariance& sigma);
  static SampleModel uniform(const Partition& partition, double width = 1.0);
  static SampleModel laplace(const Partition& partition, double scale = 1.0);
  /// Equal-weight scale mixture: 0.25 * R and 2 I, with R unit-diagonal with 0.5 off-diagonal.
  static SampleModel mixture(const Partition& partition);
};

/// N x n matrix of i.i.d. rows. Each block draws from its own stream of `rng`.
Matrix sample(const SampleModel& model, int count, CounterRng& rng);

/// Closed-form (or quadrature, for two-component mixtures with r_i <= 2)
/// entropy of block i in nats. Throws std::domain_error when unavailable.
double exact_entropy(const SampleModel& model, int block_index);
bool has_exact_entropy(const SampleModel& model, int block_index);

struct EntropyEstimate {
  enum class Method { ClosedForm, Knn };

  double value = 0.0;
  double std_error = 0.0;
  Method method = Method::ClosedForm;
  int n_samples = 0;
  int k_neighbors = 0;
  bool jittered = false;
};

std::string to_string(EntropyEstimate::Method method);

/// Digamma at a positive integer.
double digamma_int(long n);

/// Kozachenko-Leonenko k-nearest-neighbour entropy (nats) of the rows of an
/// N x d sample, with the standard error from 10 batch means.
EntropyEstimate knn_entropy(const Matrix& samples, int k = 3);

/// Point estimate only (no batching), used by knn_entropy per batch.
double knn_entropy_value(const Matrix& samples, int k, bool* jittered = nullptr);

struct FunctionalEstimate {
  EntropyEstimate total;  // sum_i d_i h(X_i) - sum_j c_j h(A_j X)
  std::vector<EntropyEstimate> block_terms;
  std::vector<EntropyEstimate> map_terms;
  std::vector<std::string> warnings;
};

/// Largest dimension the k-NN estimator is trusted in without a warning.
inline constexpr int kKnnDimWarning = 8;

FunctionalEstimate empirical_f(const BLEPDatum& datum, const SampleModel& model, int count, int k,
                               CounterRng& rng);

struct VerificationReport {
  std::string model;
  FunctionalEstimate empirical;
  double mg_reference = 0.0;
  double margin = 0.0;   // empirical value - mg
  double z_score = 0.0;  // margin / std_error
  double z_crit = 3.0;
  bool pass = true;      // margin <= z_crit * std_error
};

/// One report per model; a failure flags a statistical counterexample, not a proof.
std::vector<VerificationReport> verify_inequality(const BLEPDatum& datum,
                                                  const std::vector<SampleModel>& models, double mg,
                                                  int count, int k, double z_crit, CounterRng& rng);

}  // namespace blepi
