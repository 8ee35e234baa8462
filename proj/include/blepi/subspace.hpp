#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "blepi/datum.hpp"
#include "blepi/rng.hpp"

namespace blepi {

/// |slack| at or below this declares a subspace critical.
inline constexpr double kCriticalTol = 1e-7;

/// V = V_1 x ... x V_k, each V_i given by an r_i x t_i matrix with orthonormal
/// columns (t_i = 0 is an r_i x 0 matrix).
struct ProductSubspace {
  std::vector<Matrix> bases;

  int k() const { return static_cast<int>(bases.size()); }
  int dim() const;
  int ambient_dim() const;
  std::vector<int> block_dims() const;

  static ProductSubspace zero(const Partition& partition);
  static ProductSubspace full(const Partition& partition);
  /// Coordinate subspace spanned by the axes whose bit is set in `mask`
  /// (bit l <-> global coordinate l).
  static ProductSubspace coordinate(const Partition& partition, std::uint64_t mask);
};

/// True when every basis has orthonormal columns (within `tol`) and matches the partition.
bool is_valid_for(const ProductSubspace& v, const Partition& partition, double tol = 1e-10);

/// Per-block orthogonal complement V_1^perp x ... x V_k^perp.
ProductSubspace orthogonal_complement(const ProductSubspace& v);

/// n x dim(V) orthonormal basis of V inside R^n (block i rows hold B_i).
Matrix embed(const ProductSubspace& v);

/// dim(A V): numerical rank of A * embed(V).
int dim_image(const Matrix& a, const ProductSubspace& v);

struct SlackResult {
  double slack = 0.0;
  std::vector<int> per_map_dims;
  std::vector<int> per_block_dims;

  bool critical() const { return std::abs(slack) <= kCriticalTol; }
  bool violating() const { return slack > kCriticalTol; }
};

/// sum_i d_i dim(V_i) - sum_j c_j dim(A_j V). Positive slack means V breaks the
/// finiteness condition; zero slack means V is critical.
SlackResult slack(const BLEPDatum& datum, const ProductSubspace& v);

struct SearchBudget {
  /// Cap on the number of coordinate subspaces and of dimension profiles visited.
  int max_profiles = 4096;
  /// Random product subspaces drawn per dimension profile.
  int random_per_profile = 8;
};

struct CandidateSet {
  std::vector<ProductSubspace> subspaces;
  /// False when the coordinate or profile enumeration hit the budget cap.
  bool exhaustive = true;
};

/// Candidate r-product subspaces in a fixed order: coordinate-axis subspaces,
/// subspaces derived from the kernels ker(A_j), then random subspaces per profile.
CandidateSet candidate_subspaces(const BLEPDatum& datum, const SearchBudget& budget,
                                 CounterRng& rng);

/// Proper subspace (0 < dim < n) with the largest positive slack among the
/// candidates, if any exceeds kCriticalTol. Not finding one proves nothing.
std::optional<ProductSubspace> find_violating_subspace(const BLEPDatum& datum,
                                                       const SearchBudget& budget,
                                                       CounterRng& rng);

/// First proper critical candidate subspace, if any.
std::optional<ProductSubspace> find_critical_subspace(const BLEPDatum& datum,
                                                      const SearchBudget& budget,
                                                      CounterRng& rng);

}  // namespace blepi
