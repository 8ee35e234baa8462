#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "blepi/datum.hpp"
#include "blepi/gauss.hpp"
#include "blepi/subspace.hpp"

namespace blepi {

/// sum_i d_i r_i - sum_j c_j n_j; must vanish for a finite constant.
double scaling_residual(const BLEPDatum& datum);

struct ScalingWitness {
  double residual = 0.0;
};

struct SubspaceWitness {
  ProductSubspace subspace;
  double slack = 0.0;
};

using InfinitenessWitness = std::variant<ScalingWitness, SubspaceWitness>;

/// Recomputes the witness from scratch against `datum`; true iff it still shows a violation.
bool recheck(const BLEPDatum& datum, const InfinitenessWitness& witness);

/// Output of splitting a datum along a critical subspace U.
struct DatumSplit {
  BLEPDatum on_u;
  BLEPDatum on_perp;
  /// Gamma_j: component of A_j restricted to U^perp that lands in A_j U,
  /// in the bases (image_bases[j], embed(complement)). One per parent map.
  std::vector<Matrix> cross_terms;
  /// Orthonormal bases of A_j U and (A_j U)^perp inside R^{n_j}.
  std::vector<Matrix> image_bases;
  std::vector<Matrix> image_complements;
  ProductSubspace u;
  ProductSubspace complement;
  /// Parent indices of the blocks and maps kept in each child; blocks or
  /// images of dimension zero are dropped (their entropy is 0).
  std::vector<int> u_blocks, perp_blocks, u_maps, perp_maps;
};

/// Splits along a critical U with 0 < dim U < n. Throws std::invalid_argument otherwise.
DatumSplit split_datum(const BLEPDatum& datum, const ProductSubspace& u);

/// Recursive decomposition along critical subspaces.
struct SplitTree {
  BLEPDatum datum;
  std::optional<ProductSubspace> critical;
  std::vector<SplitTree> children;  // empty (leaf) or {on U, on U^perp}
  /// Value of the Gaussian constant at a leaf (nats).
  double leaf_value = 0.0;
  std::string leaf_reason;

  bool is_leaf() const { return children.empty(); }
  /// Sum of leaf values. Bounds the root constant from above when every leaf value is exact.
  double bound() const;
  int depth() const;
  int leaf_count() const;
};

struct FinitenessVerdict {
  enum class Status { Finite, Infinite, Unknown };

  Status status = Status::Unknown;
  std::optional<InfinitenessWitness> witness;
  std::optional<SplitTree> certificate;
  std::optional<GaussianSolveResult> probe;
  std::string notes;
};

std::string to_string(FinitenessVerdict::Status status);

/// Sound for Infinite (every witness re-checks); Finite needs both conditions to
/// survive the whole candidate search and the solver to converge without an escape ray.
FinitenessVerdict check_finiteness(const BLEPDatum& datum, const SearchBudget& budget,
                                   CounterRng& rng, const SolverOptions& solver = {});

/// Splits recursively until n = 1, m = 1, or no proper critical subspace is found.
/// Throws std::invalid_argument when the datum has a witness of infiniteness.
SplitTree certify(const BLEPDatum& datum, const SearchBudget& budget, CounterRng& rng,
                  const SolverOptions& solver = {});

}  // namespace blepi
