#include <doctest.h>

#include <functional>

#include "blepi/finiteness.hpp"
#include "helpers.hpp"

using namespace blepi;
using testing::row;

namespace {

ProductSubspace critical_u() {
  ProductSubspace u;
  u.bases = {Matrix::Constant(2, 1, std::sqrt(0.5)), Matrix::Identity(1, 1)};
  return u;
}

BLEPDatum half_identity() {
  BLEPDatum d;
  d.partition.blocks = {1};
  d.maps = {Matrix::Identity(1, 1)};
  d.c = {0.5};
  d.d = {1.0};
  return d;
}

}  // namespace

TEST_CASE("scaling residual") {
  CHECK(scaling_residual(make_epi_datum(0.5, 1)) == 0.0);
  CHECK(std::abs(scaling_residual(make_section6_datum(1, 1, 0.5, 0.5))) < 1e-15);
  CHECK(scaling_residual(half_identity()) == 0.5);
}

TEST_CASE("check_finiteness verdicts") {
  CounterRng rng(1);
  const auto epi = check_finiteness(make_epi_datum(0.4, 1), SearchBudget{}, rng);
  CHECK(epi.status == FinitenessVerdict::Status::Finite);
  REQUIRE(epi.probe.has_value());
  CHECK(epi.probe->converged);

  const auto scaling = check_finiteness(half_identity(), SearchBudget{}, rng);
  CHECK(scaling.status == FinitenessVerdict::Status::Infinite);
  REQUIRE(scaling.witness.has_value());
  REQUIRE(std::holds_alternative<ScalingWitness>(*scaling.witness));
  CHECK(std::get<ScalingWitness>(*scaling.witness).residual == 0.5);
  CHECK(recheck(half_identity(), *scaling.witness));

  const BLEPDatum s6 = make_section6_datum(1.0, 1.2, 0.6, 0.6);
  const auto sub = check_finiteness(s6, SearchBudget{}, rng);
  CHECK(sub.status == FinitenessVerdict::Status::Infinite);
  REQUIRE(sub.witness.has_value());
  REQUIRE(std::holds_alternative<SubspaceWitness>(*sub.witness));
  const auto& w = std::get<SubspaceWitness>(*sub.witness);
  CHECK(w.slack >= 0.2 - 1e-12);
  CHECK(slack(s6, w.subspace).slack == doctest::Approx(w.slack));
  CHECK(recheck(s6, *sub.witness));
  CHECK_FALSE(recheck(make_epi_datum(0.5, 1), InfinitenessWitness{ScalingWitness{0.0}}));
}

TEST_CASE("tiny budget gives an unknown verdict") {
  CounterRng rng(2);
  CounterRng data_rng(9);
  BLEPDatum d = testing::balanced(testing::random_datum(data_rng, 6));
  while (d.n() < 6) d = testing::balanced(testing::random_datum(data_rng, 6));
  const auto v = check_finiteness(d, SearchBudget{1, 0}, rng);
  CHECK(v.status != FinitenessVerdict::Status::Finite);
}

TEST_CASE("split along the critical subspace") {
  const BLEPDatum d = make_section6_datum(1, 1, 0.5, 0.5);
  const DatumSplit split = split_datum(d, critical_u());
  CHECK(split.on_u.n() == 2);
  CHECK(split.on_perp.n() == 1);
  CHECK(validate(split.on_u).ok);
  CHECK(validate(split.on_perp).ok);
  CHECK(std::abs(scaling_residual(split.on_u)) < 1e-9);
  CHECK(std::abs(scaling_residual(split.on_perp)) < 1e-9);

  // Reconstruction: A_j x = A~_j (P_U x) + Gamma_j (P_perp x) + A~~_j (P_perp x) in the chosen bases.
  CounterRng rng(3);
  const Matrix eu = embed(split.u);
  const Matrix ep = embed(split.complement);
  for (int t = 0; t < 20; ++t) {
    const Vector x = standard_normal(3, 1, rng);
    const Vector xu = eu.transpose() * x;
    const Vector xp = ep.transpose() * x;
    for (int j = 0; j < d.m(); ++j) {
      Vector rebuilt = split.image_bases[j] * (split.image_bases[j].transpose() * d.maps[j] * eu * xu) +
                       split.image_bases[j] * (split.cross_terms[j] * xp) +
                       split.image_complements[j] * (split.image_complements[j].transpose() * d.maps[j] * ep * xp);
      CHECK((rebuilt - d.maps[j] * x).norm() < 1e-9);
    }
  }

  CHECK_THROWS_AS(split_datum(make_epi_datum(0.5, 1), ProductSubspace::coordinate(Partition{{1, 1}}, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(split_datum(d, ProductSubspace::zero(d.partition)), std::invalid_argument);
  CHECK_THROWS_AS(split_datum(d, ProductSubspace::full(d.partition)), std::invalid_argument);
}

TEST_CASE("split children keep both conditions") {
  const BLEPDatum d = make_section6_datum(1, 1, 0.5, 0.5);
  const DatumSplit split = split_datum(d, critical_u());
  CounterRng rng(4);
  for (const BLEPDatum* child : {&split.on_u, &split.on_perp}) {
    CHECK(std::abs(scaling_residual(*child)) < 1e-9);
    CHECK_FALSE(find_violating_subspace(*child, SearchBudget{}, rng).has_value());
  }
  const double parent = solve_mg(d).best_value;
  const double child_u = solve_mg(split.on_u).best_value;
  const double child_p = solve_mg(split.on_perp).best_value;
  CHECK(parent <= child_u + child_p + 1e-4);
  CHECK(std::abs(child_p) < 1e-9);
}

TEST_CASE("certificate trees") {
  CounterRng rng(5);
  BLEPDatum one;
  one.partition.blocks = {1};
  one.maps = {Matrix::Constant(1, 1, 2.0)};
  one.c = {1.0};
  one.d = {1.0};
  const SplitTree leaf = certify(one, SearchBudget{}, rng);
  CHECK(leaf.is_leaf());
  CHECK(leaf.leaf_value == doctest::Approx(-std::log(2.0)));

  BLEPDatum square;
  square.partition.blocks = {1, 1};
  square.maps = {Matrix::Identity(2, 2)};
  square.c = {1.0};
  square.d = {1.0, 1.0};
  const SplitTree sq = certify(square, SearchBudget{}, rng);
  CHECK(sq.is_leaf());
  CHECK(std::abs(sq.leaf_value) < 1e-15);

  const BLEPDatum s6 = make_section6_datum(1, 1, 0.5, 0.5);
  const SplitTree tree = certify(s6, SearchBudget{}, rng);
  REQUIRE_FALSE(tree.is_leaf());
  REQUIRE(tree.critical.has_value());
  CHECK(slack(s6, *tree.critical).critical());
  CHECK(tree.leaf_count() >= 2);
  int total_dim = 0;
  std::function<void(const SplitTree&)> walk = [&](const SplitTree& t) {
    if (t.is_leaf()) total_dim += t.datum.n();
    for (const auto& c : t.children) walk(c);
  };
  walk(tree);
  CHECK(total_dim == 3);
  CHECK(tree.bound() >= solve_mg(s6).best_value - 1e-9);

  CHECK_THROWS_AS(certify(half_identity(), SearchBudget{}, rng), std::invalid_argument);
  CHECK_THROWS_AS(certify(make_section6_datum(1.0, 1.2, 0.6, 0.6), SearchBudget{}, rng), std::invalid_argument);
}

TEST_CASE("finite verdicts come with a converged solver") {
  CounterRng rng(6);
  for (double lambda : {0.2, 0.5, 0.8})
    for (int dim : {1, 2}) {
      const auto v = check_finiteness(make_epi_datum(lambda, dim), SearchBudget{}, rng);
      REQUIRE(v.status == FinitenessVerdict::Status::Finite);
      CHECK(v.probe->converged);
    }
  const auto s6 = check_finiteness(make_section6_datum(1.2, 0.5, 0.45, 0.45), SearchBudget{}, rng);
  CHECK(s6.status == FinitenessVerdict::Status::Finite);
  CHECK(s6.probe->converged);
}
