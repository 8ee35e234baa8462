#include "blepi/subspace.hpp"

#include <algorithm>
#include <stdexcept>

namespace blepi {

int ProductSubspace::dim() const {
  int t = 0;
  for (const auto& b : bases) t += static_cast<int>(b.cols());
  return t;
}

int ProductSubspace::ambient_dim() const {
  int n = 0;
  for (const auto& b : bases) n += static_cast<int>(b.rows());
  return n;
}

std::vector<int> ProductSubspace::block_dims() const {
  std::vector<int> dims;
  dims.reserve(bases.size());
  for (const auto& b : bases) dims.push_back(static_cast<int>(b.cols()));
  return dims;
}

ProductSubspace ProductSubspace::zero(const Partition& partition) {
  ProductSubspace v;
  for (int r : partition.blocks) v.bases.emplace_back(r, 0);
  return v;
}

ProductSubspace ProductSubspace::full(const Partition& partition) {
  ProductSubspace v;
  for (int r : partition.blocks) v.bases.push_back(Matrix::Identity(r, r));
  return v;
}

ProductSubspace ProductSubspace::coordinate(const Partition& partition, std::uint64_t mask) {
  ProductSubspace v;
  int global = 0;
  for (int r : partition.blocks) {
    std::vector<int> axes;
    for (int l = 0; l < r; ++l, ++global)
      if (mask & (std::uint64_t{1} << global)) axes.push_back(l);
    Matrix b = Matrix::Zero(r, static_cast<Eigen::Index>(axes.size()));
    for (std::size_t c = 0; c < axes.size(); ++c) b(axes[c], static_cast<Eigen::Index>(c)) = 1.0;
    v.bases.push_back(std::move(b));
  }
  return v;
}

bool is_valid_for(const ProductSubspace& v, const Partition& partition, double tol) {
  if (v.k() != partition.k()) return false;
  for (int i = 0; i < v.k(); ++i) {
    const Matrix& b = v.bases[i];
    if (b.rows() != partition.blocks[i] || b.cols() > b.rows()) return false;
    if (b.cols() == 0) continue;
    const Matrix gram = b.transpose() * b;
    if ((gram - Matrix::Identity(b.cols(), b.cols())).cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

ProductSubspace orthogonal_complement(const ProductSubspace& v) {
  ProductSubspace out;
  for (const auto& b : v.bases) out.bases.push_back(orthogonal_complement(b, b.rows()));
  return out;
}

Matrix embed(const ProductSubspace& v) {
  Matrix q = Matrix::Zero(v.ambient_dim(), v.dim());
  Eigen::Index row = 0, col = 0;
  for (const auto& b : v.bases) {
    q.block(row, col, b.rows(), b.cols()) = b;
    row += b.rows();
    col += b.cols();
  }
  return q;
}

int dim_image(const Matrix& a, const ProductSubspace& v) {
  if (a.cols() != v.ambient_dim())
    throw std::invalid_argument("dim_image: map column count does not match subspace ambient dimension");
  if (v.dim() == 0 || a.rows() == 0) return 0;
  return numerical_rank(a * embed(v), kSubspaceRankTol);
}

SlackResult slack(const BLEPDatum& datum, const ProductSubspace& v) {
  if (v.k() != datum.k())
    throw std::invalid_argument("slack: subspace block count does not match the partition");
  for (int i = 0; i < v.k(); ++i)
    if (v.bases[i].rows() != datum.partition.blocks[i])
      throw std::invalid_argument("slack: subspace block size does not match the partition");
  SlackResult out;
  out.per_block_dims = v.block_dims();
  for (int i = 0; i < datum.k(); ++i) out.slack += datum.d[i] * out.per_block_dims[i];
  for (int j = 0; j < datum.m(); ++j) {
    const int dj = dim_image(datum.maps[j], v);
    out.per_map_dims.push_back(dj);
    out.slack -= datum.c[j] * dj;
  }
  return out;
}

namespace {

// Restriction of an n x t basis to block i's rows, reduced to an orthonormal basis.
ProductSubspace project_to_blocks(const Partition& partition, const Matrix& basis) {
  ProductSubspace v;
  for (int i = 0; i < partition.k(); ++i)
    v.bases.push_back(column_basis(basis.middleRows(partition.offset(i), partition.blocks[i])));
  return v;
}

ProductSubspace intersect(const ProductSubspace& a, const ProductSubspace& b) {
  ProductSubspace v;
  for (int i = 0; i < a.k(); ++i) v.bases.push_back(intersect_spans(a.bases[i], b.bases[i]));
  return v;
}

// Vectors of span(basis) supported on block i only, as a product subspace.
ProductSubspace part_inside_block(const Partition& partition, const Matrix& basis, int i) {
  const int n = partition.n();
  Matrix selector = Matrix::Zero(n, partition.blocks[i]);
  selector.middleRows(partition.offset(i), partition.blocks[i]).setIdentity();
  const Matrix inside = intersect_spans(basis, selector);
  ProductSubspace v = ProductSubspace::zero(partition);
  v.bases[i] = column_basis(inside.middleRows(partition.offset(i), partition.blocks[i]));
  return v;
}

// All profiles (t_1..t_k), 0 <= t_i <= r_i, in lexicographic order, up to `cap`.
std::vector<std::vector<int>> dimension_profiles(const Partition& partition, int cap, bool& truncated) {
  std::vector<std::vector<int>> out;
  std::vector<int> t(partition.blocks.size(), 0);
  while (true) {
    if (static_cast<int>(out.size()) >= cap) {
      truncated = true;
      break;
    }
    out.push_back(t);
    int i = partition.k() - 1;
    while (i >= 0 && t[i] == partition.blocks[i]) t[i--] = 0;
    if (i < 0) break;
    ++t[i];
  }
  return out;
}

}  // namespace

CandidateSet candidate_subspaces(const BLEPDatum& datum, const SearchBudget& budget,
                                 CounterRng& rng) {
  CandidateSet out;
  const Partition& partition = datum.partition;
  const int n = partition.n();
  const int cap = std::max(budget.max_profiles, 0);

  // (a) coordinate-axis subspaces
  const bool too_wide = n >= 63;
  const std::uint64_t total = too_wide ? 0 : (std::uint64_t{1} << n);
  if (too_wide || total > static_cast<std::uint64_t>(cap)) out.exhaustive = false;
  const std::uint64_t count = too_wide ? static_cast<std::uint64_t>(cap)
                                       : std::min<std::uint64_t>(total, static_cast<std::uint64_t>(cap));
  for (std::uint64_t mask = 0; mask < count; ++mask)
    out.subspaces.push_back(ProductSubspace::coordinate(partition, mask));

  // (b) kernel-derived subspaces
  std::vector<ProductSubspace> kernel_products;
  for (const auto& a : datum.maps) {
    if (a.cols() != n) continue;
    const Matrix kernel = null_basis(a);
    if (kernel.cols() == 0) continue;
    ProductSubspace projected = project_to_blocks(partition, kernel);
    out.subspaces.push_back(projected);
    kernel_products.push_back(projected);
    for (int i = 0; i < partition.k(); ++i) {
      ProductSubspace inside = part_inside_block(partition, kernel, i);
      if (inside.dim() > 0) out.subspaces.push_back(std::move(inside));
    }
    // Each block independently takes {0, projection, whole block}.
    int combos = 1;
    for (int i = 0; i < partition.k() && combos <= cap; ++i) combos *= 3;
    if (combos > cap) {
      out.exhaustive = false;
      continue;
    }
    for (int code = 0; code < combos; ++code) {
      ProductSubspace v;
      int rest = code;
      for (int i = 0; i < partition.k(); ++i, rest /= 3) {
        const int r = partition.blocks[i];
        switch (rest % 3) {
          case 0: v.bases.emplace_back(r, 0); break;
          case 1: v.bases.push_back(projected.bases[i]); break;
          default: v.bases.push_back(Matrix::Identity(r, r)); break;
        }
      }
      out.subspaces.push_back(std::move(v));
    }
  }
  for (std::size_t p = 0; p < kernel_products.size(); ++p)
    for (std::size_t q = p + 1; q < kernel_products.size(); ++q)
      out.subspaces.push_back(intersect(kernel_products[p], kernel_products[q]));

  // (c) random product subspaces per dimension profile
  if (budget.random_per_profile > 0) {
    bool truncated = false;
    const auto profiles = dimension_profiles(partition, cap, truncated);
    if (truncated) out.exhaustive = false;
    std::uint64_t stream = 0;
    for (const auto& t : profiles) {
      bool coordinate_like = true;
      for (int i = 0; i < partition.k(); ++i)
        if (t[i] != 0 && t[i] != partition.blocks[i]) coordinate_like = false;
      if (coordinate_like) continue;
      for (int s = 0; s < budget.random_per_profile; ++s) {
        CounterRng local = rng.split(stream++);
        ProductSubspace v;
        for (int i = 0; i < partition.k(); ++i)
          v.bases.push_back(random_orthonormal(partition.blocks[i], t[i], local));
        out.subspaces.push_back(std::move(v));
      }
    }
  }
  rng();  // consume one draw so repeated calls see fresh random families
  return out;
}

std::optional<ProductSubspace> find_violating_subspace(const BLEPDatum& datum,
                                                       const SearchBudget& budget,
                                                       CounterRng& rng) {
  const int n = datum.n();
  const CandidateSet candidates = candidate_subspaces(datum, budget, rng);
  std::optional<ProductSubspace> best;
  double best_slack = kCriticalTol;
  for (const auto& v : candidates.subspaces) {
    const int t = v.dim();
    if (t == 0 || t == n) continue;
    const double s = slack(datum, v).slack;
    if (s > best_slack) {
      best_slack = s;
      best = v;
    }
  }
  return best;
}

std::optional<ProductSubspace> find_critical_subspace(const BLEPDatum& datum,
                                                      const SearchBudget& budget,
                                                      CounterRng& rng) {
  const int n = datum.n();
  const CandidateSet candidates = candidate_subspaces(datum, budget, rng);
  for (const auto& v : candidates.subspaces) {
    const int t = v.dim();
    if (t == 0 || t == n) continue;
    if (slack(datum, v).critical()) return v;
  }
  return std::nullopt;
}

}  // namespace blepi
