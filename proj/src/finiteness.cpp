#include "blepi/finiteness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace blepi {

double scaling_residual(const BLEPDatum& datum) {
  double residual = 0.0;
  for (int i = 0; i < datum.k(); ++i) residual += datum.d[i] * datum.partition.blocks[i];
  for (int j = 0; j < datum.m(); ++j) residual -= datum.c[j] * datum.image_dim(j);
  return residual;
}

bool recheck(const BLEPDatum& datum, const InfinitenessWitness& witness) {
  if (const auto* s = std::get_if<ScalingWitness>(&witness))
    return std::abs(scaling_residual(datum)) > 1e-9 &&
           std::abs(scaling_residual(datum) - s->residual) <= 1e-12 * (1.0 + std::abs(s->residual));
  const auto& v = std::get<SubspaceWitness>(witness);
  if (!is_valid_for(v.subspace, datum.partition, 1e-8)) return false;
  return slack(datum, v.subspace).violating();
}

std::string to_string(FinitenessVerdict::Status status) {
  switch (status) {
    case FinitenessVerdict::Status::Finite: return "finite";
    case FinitenessVerdict::Status::Infinite: return "infinite";
    case FinitenessVerdict::Status::Unknown: return "unknown";
  }
  return "unknown";
}

DatumSplit split_datum(const BLEPDatum& datum, const ProductSubspace& u) {
  if (!is_valid_for(u, datum.partition, 1e-8))
    throw std::invalid_argument("split_datum: subspace does not fit the partition");
  const int n = datum.n();
  const int t = u.dim();
  if (t == 0 || t == n) throw std::invalid_argument("split_datum: subspace must be proper and nonzero");
  const SlackResult s = slack(datum, u);
  if (!s.critical()) {
    std::ostringstream os;
    os << "split_datum: subspace is not critical (slack " << s.slack << ")";
    throw std::invalid_argument(os.str());
  }

  DatumSplit out;
  out.u = u;
  out.complement = orthogonal_complement(u);
  const Matrix qu = embed(out.u);
  const Matrix qp = embed(out.complement);

  for (int i = 0; i < datum.k(); ++i) {
    const int tu = static_cast<int>(out.u.bases[i].cols());
    const int tp = static_cast<int>(out.complement.bases[i].cols());
    if (tu > 0) {
      out.u_blocks.push_back(i);
      out.on_u.partition.blocks.push_back(tu);
      out.on_u.d.push_back(datum.d[i]);
    }
    if (tp > 0) {
      out.perp_blocks.push_back(i);
      out.on_perp.partition.blocks.push_back(tp);
      out.on_perp.d.push_back(datum.d[i]);
    }
  }
  // Child coordinates follow embed(): block by block, so dropping empty blocks
  // leaves the column order intact.
  for (int j = 0; j < datum.m(); ++j) {
    const Matrix& a = datum.maps[j];
    const Matrix image_u = a * qu;
    Matrix basis = column_basis(image_u);
    Matrix comp = orthogonal_complement(basis, a.rows());
    out.image_bases.push_back(basis);
    out.image_complements.push_back(comp);
    out.cross_terms.push_back(basis.transpose() * a * qp);
    if (basis.cols() > 0) {
      out.u_maps.push_back(j);
      out.on_u.maps.push_back(basis.transpose() * image_u);
      out.on_u.c.push_back(datum.c[j]);
    }
    if (comp.cols() > 0) {
      out.perp_maps.push_back(j);
      out.on_perp.maps.push_back(comp.transpose() * a * qp);
      out.on_perp.c.push_back(datum.c[j]);
    }
  }
  out.on_u.metadata["kind"] = "split-on-subspace";
  out.on_perp.metadata["kind"] = "split-on-complement";
  return out;
}

double SplitTree::bound() const {
  if (is_leaf()) return leaf_value;
  double total = 0.0;
  for (const auto& c : children) total += c.bound();
  return total;
}

int SplitTree::depth() const {
  int d = 0;
  for (const auto& c : children) d = std::max(d, c.depth());
  return is_leaf() ? 0 : d + 1;
}

int SplitTree::leaf_count() const {
  if (is_leaf()) return 1;
  int total = 0;
  for (const auto& c : children) total += c.leaf_count();
  return total;
}

FinitenessVerdict check_finiteness(const BLEPDatum& datum, const SearchBudget& budget,
                                   CounterRng& rng, const SolverOptions& solver) {
  FinitenessVerdict verdict;
  const double residual = scaling_residual(datum);
  if (std::abs(residual) > 1e-9) {
    verdict.status = FinitenessVerdict::Status::Infinite;
    verdict.witness = ScalingWitness{residual};
    std::ostringstream os;
    os << "sum d_i r_i - sum c_j n_j = " << residual << "; the objective scales as "
       << 0.5 * residual << " * log t";
    verdict.notes = os.str();
    return verdict;
  }

  CounterRng search_rng = rng.split(0);
  const CandidateSet candidates = candidate_subspaces(datum, budget, search_rng);
  std::optional<ProductSubspace> worst;
  double worst_slack = kCriticalTol;
  for (const auto& v : candidates.subspaces) {
    if (v.dim() == 0 || v.dim() == datum.n()) continue;
    const double s = slack(datum, v).slack;
    if (s > worst_slack) {
      worst_slack = s;
      worst = v;
    }
  }
  if (worst) {
    verdict.status = FinitenessVerdict::Status::Infinite;
    verdict.witness = SubspaceWitness{*worst, worst_slack};
    std::ostringstream os;
    os << "product subspace of dimension " << worst->dim() << " has slack " << worst_slack;
    verdict.notes = os.str();
    return verdict;
  }

  SolverOptions probe_options = solver;
  probe_options.seed = rng.split(1)();
  GaussianSolveResult probe = solve_mg(datum, probe_options);
  if (probe.unbounded) {
    if (probe.escape_subspace && slack(datum, *probe.escape_subspace).violating()) {
      const double s = slack(datum, *probe.escape_subspace).slack;
      verdict.status = FinitenessVerdict::Status::Infinite;
      verdict.witness = SubspaceWitness{*probe.escape_subspace, s};
      verdict.notes = "solver escape ray confirmed by a positive slack";
    } else {
      verdict.status = FinitenessVerdict::Status::Unknown;
      verdict.notes = "solver reports divergence but no subspace witness re-checks: " + probe.note;
    }
  } else if (!candidates.exhaustive) {
    verdict.status = FinitenessVerdict::Status::Unknown;
    verdict.notes = "search budget exhausted before the deterministic families were covered";
  } else if (!probe.converged) {
    verdict.status = FinitenessVerdict::Status::Unknown;
    verdict.notes = "no violation found but the solver did not converge: " + probe.note;
  } else {
    verdict.status = FinitenessVerdict::Status::Finite;
    verdict.notes = "both finiteness conditions hold over the search and the solver converged";
  }
  verdict.probe = std::move(probe);
  return verdict;
}

namespace {

bool all_equal(const std::vector<double>& values, double target) {
  return std::all_of(values.begin(), values.end(),
                     [&](double v) { return std::abs(v - target) <= 1e-9; });
}

SplitTree build(const BLEPDatum& datum, const SearchBudget& budget, CounterRng& rng,
                const SolverOptions& solver, int depth_left) {
  SplitTree node;
  node.datum = datum;
  const int n = datum.n();
  if (datum.m() == 0) {
    node.leaf_reason = "no maps";
    node.leaf_value = all_equal(datum.d, 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
    return node;
  }
  if (n == 1) {
    double value = 0.0;
    for (int j = 0; j < datum.m(); ++j) value -= datum.c[j] * std::log(std::abs(datum.maps[j](0, 0)));
    node.leaf_reason = "n = 1";
    node.leaf_value = value;
    return node;
  }
  if (datum.m() == 1 && datum.maps[0].rows() == n && all_equal(datum.d, datum.c[0])) {
    node.leaf_reason = "m = 1";
    node.leaf_value = -datum.c[0] * std::log(std::abs(datum.maps[0].determinant()));
    return node;
  }
  std::optional<ProductSubspace> u;
  if (depth_left > 0) u = find_critical_subspace(datum, budget, rng);
  if (!u) {
    SolverOptions opts = solver;
    opts.seed = rng();
    const GaussianSolveResult r = solve_mg(datum, opts);
    node.leaf_reason = "no proper critical subspace found; value from the Gaussian solver";
    node.leaf_value = r.mg_value;
    return node;
  }
  const DatumSplit split = split_datum(datum, *u);
  node.critical = *u;
  node.children.push_back(build(split.on_u, budget, rng, solver, depth_left - 1));
  node.children.push_back(build(split.on_perp, budget, rng, solver, depth_left - 1));
  return node;
}

}  // namespace

SplitTree certify(const BLEPDatum& datum, const SearchBudget& budget, CounterRng& rng,
                  const SolverOptions& solver) {
  const double residual = scaling_residual(datum);
  if (std::abs(residual) > 1e-9)
    throw std::invalid_argument("certify: scaling condition fails, the constant is infinite");
  CounterRng search_rng = rng.split(0);
  if (find_violating_subspace(datum, budget, search_rng))
    throw std::invalid_argument("certify: a product subspace violates the dimension condition");
  CounterRng tree_rng = rng.split(1);
  return build(datum, budget, tree_rng, solver, datum.n());
}

}  // namespace blepi
