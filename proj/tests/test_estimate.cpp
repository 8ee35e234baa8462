#include <doctest.h>

#include "blepi/estimate.hpp"
#include "helpers.hpp"

using namespace blepi;
using testing::row;

namespace {

double triangular_entropy_quadrature() {
  // density of (U1 + U2) / sqrt 2 on [0, sqrt 2], midpoint rule
  const double w = std::sqrt(2.0);
  const int n = 200000;
  double h = 0.0;
  for (int i = 0; i < n; ++i) {
    const double y = (i + 0.5) * w / n;
    const double s = y * w;
    const double f = w * (s < 1.0 ? s : 2.0 - s);
    if (f > 0.0) h -= f * std::log(f) * (w / n);
  }
  return h;
}

double gaussian_density(const Vector& x, const Matrix& cov) {
  const double d = static_cast<double>(x.size());
  const Eigen::LLT<Matrix> llt(cov);
  const double q = x.dot(llt.solve(x));
  return std::exp(-0.5 * q) / std::sqrt(std::pow(2.0 * M_PI, d) * cov.determinant());
}

}  // namespace

TEST_CASE("sample moments") {
  CounterRng rng(51);
  const Matrix u = sample(SampleModel::uniform(Partition{{1}}), 100000, rng);
  const double var = u.col(0).squaredNorm() / u.rows();
  CHECK(std::abs(var - 1.0 / 12.0) <= 3.0 * std::sqrt(1.0 / 80.0 - 1.0 / 144.0) / std::sqrt(1e5));
  CHECK(std::abs(u.col(0).mean()) <= 3.0 * std::sqrt(1.0 / 12.0 / 1e5));

  const Matrix g = sample(SampleModel::gaussian(BlockCovariance::identity(Partition{{1}})), 100000, rng);
  CHECK(std::abs(g.col(0).squaredNorm() / g.rows() - 1.0) <= 3.0 * std::sqrt(2.0 / 1e5));

  const Matrix two = sample(SampleModel::laplace(Partition{{1, 1}}), 100000, rng);
  const double corr = two.col(0).dot(two.col(1)) / (two.col(0).norm() * two.col(1).norm());
  CHECK(std::abs(corr) <= 3.0 / std::sqrt(1e5));
}

TEST_CASE("closed-form entropies") {
  CHECK(exact_entropy(SampleModel::uniform(Partition{{1}}), 0) == 0.0);
  CHECK(exact_entropy(SampleModel::laplace(Partition{{1}}), 0) == doctest::Approx(1.0 + std::log(2.0)));
  CHECK(exact_entropy(SampleModel::gaussian(BlockCovariance::identity(Partition{{1}})), 0) ==
        doctest::Approx(1.41893853320467));
  CHECK(exact_entropy(SampleModel::uniform(Partition{{2}}, 3.0), 0) == doctest::Approx(2.0 * std::log(3.0)));
  SampleModel big;
  big.blocks = {Mixture2Block{0.5, Matrix::Identity(3, 3), 2.0 * Matrix::Identity(3, 3)}};
  CHECK_FALSE(has_exact_entropy(big, 0));
  CHECK_THROWS_AS(exact_entropy(big, 0), std::domain_error);
}

TEST_CASE("mixture quadrature agrees with a Monte Carlo log-density average") {
  CounterRng rng(52);
  for (int r : {1, 2}) {
    const SampleModel model = SampleModel::mixture(Partition{{r}});
    const auto& mix = std::get<Mixture2Block>(model.blocks[0]);
    const Matrix x = sample(model, 200000, rng);
    double sum = 0.0, sum2 = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Vector p = x.row(i).transpose();
      const double v = -std::log(mix.weight * gaussian_density(p, mix.cov_a) +
                                 (1.0 - mix.weight) * gaussian_density(p, mix.cov_b));
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / x.rows();
    const double se = std::sqrt((sum2 / x.rows() - mean * mean) / x.rows());
    CHECK(std::abs(exact_entropy(model, 0) - mean) <= 4.0 * se);
  }
}

TEST_CASE("knn calibration") {
  CounterRng rng(53);
  const int n = 50000;
  const auto u = knn_entropy(sample(SampleModel::uniform(Partition{{1}}), n, rng), 3);
  CHECK(std::abs(u.value - 0.0) <= 0.02);
  CHECK(u.method == EntropyEstimate::Method::Knn);
  CHECK(u.std_error > 0.0);
  CHECK(u.n_samples == n);

  const auto g = knn_entropy(sample(SampleModel::gaussian(BlockCovariance::identity(Partition{{1}})), n, rng), 3);
  CHECK(std::abs(g.value - 1.41893853320467) <= 0.02);

  const Matrix pair = sample(SampleModel::uniform(Partition{{1, 1}}), n, rng);
  const Matrix tri = ((pair.col(0).array() + pair.col(1).array()) / std::sqrt(2.0)).matrix();
  const double target = triangular_entropy_quadrature();
  CHECK(target == doctest::Approx(0.5 - 0.5 * std::log(2.0)).epsilon(1e-6));
  CHECK(std::abs(knn_entropy(tri, 3).value - target) <= 0.02);
}

TEST_CASE("knn scaling and translation") {
  CounterRng rng(54);
  const Matrix x = sample(SampleModel::laplace(Partition{{2}}), 4000, rng);
  const double base = knn_entropy_value(x, 3);
  CHECK(std::abs(knn_entropy_value(4.0 * x, 3) - (base + 2.0 * std::log(4.0))) <= 1e-12);
  CHECK(std::abs(knn_entropy_value(0.3 * x, 3) - (base + 2.0 * std::log(0.3))) <= 1e-12);
  const Eigen::RowVector2d offset(0.5, -0.25);
  const Matrix shifted = x.rowwise() + offset;
  CHECK(std::abs(knn_entropy_value(shifted, 3) - base) <= 1e-9);
}

TEST_CASE("duplicates are jittered and flagged") {
  Matrix x(200, 1);
  for (int i = 0; i < 200; ++i) x(i, 0) = i / 10;
  bool jittered = false;
  const double v = knn_entropy_value(x, 3, &jittered);
  CHECK(jittered);
  CHECK(std::isfinite(v));
  CHECK_THROWS(knn_entropy(Matrix::Zero(3, 1), 3));
  CHECK(digamma_int(1) == doctest::Approx(-0.5772156649015329));
  CHECK(digamma_int(10) == doctest::Approx(2.251752589066721));
}

TEST_CASE("empirical functional examples") {
  CounterRng rng(55);
  const BLEPDatum epi = make_epi_datum(0.5, 1);
  const auto u = empirical_f(epi, SampleModel::uniform(epi.partition), 50000, 3, rng);
  CHECK(std::abs(u.total.value - (-0.5 + 0.5 * std::log(2.0))) <= 3.0 * u.total.std_error + 0.01);

  const auto g = empirical_f(epi, SampleModel::gaussian(BlockCovariance::identity(epi.partition)), 50000, 3, rng);
  CHECK(std::abs(g.total.value) <= 3.0 * g.total.std_error + 0.01);

  BLEPDatum bli;
  bli.partition.blocks = {2};
  bli.maps = {row({1, 0}), row({0, 1})};
  bli.c = {1.0, 1.0};
  bli.d = {1.0};
  BlockCovariance corr;
  Matrix c(2, 2);
  c << 1, 0.8, 0.8, 1;
  corr.blocks = {c};
  const auto b = empirical_f(bli, SampleModel::gaussian(corr), 50000, 3, rng);
  CHECK(b.block_terms[0].method == EntropyEstimate::Method::ClosedForm);
  CHECK(b.block_terms[0].std_error == 0.0);
  CHECK(std::abs(b.total.value - 0.5 * std::log(0.36)) <= 3.0 * b.total.std_error + 0.01);
  CHECK(std::abs(b.total.value - objective(bli, corr)) <= 3.0 * b.total.std_error + 0.01);
}

TEST_CASE("high dimension warns but runs") {
  CounterRng rng(56);
  BLEPDatum d;
  d.partition.blocks = {9};
  d.maps = {Matrix::Identity(9, 9)};
  d.c = {1.0};
  d.d = {1.0};
  const auto f = empirical_f(d, SampleModel::uniform(d.partition), 2000, 3, rng);
  CHECK_FALSE(f.warnings.empty());
}

TEST_CASE("verification harness") {
  CounterRng rng(57);
  const BLEPDatum epi = make_epi_datum(0.5, 1);
  const auto reports = verify_inequality(
      epi, {SampleModel::uniform(epi.partition), SampleModel::laplace(epi.partition), SampleModel::mixture(epi.partition)},
      0.0, 50000, 3, 3.0, rng);
  REQUIRE(reports.size() == 3);
  for (const auto& r : reports) {
    CHECK(r.pass);
    CHECK(r.margin < 0.0);
    CHECK(r.margin == doctest::Approx(r.empirical.total.value - r.mg_reference));
  }

  const auto gauss = SampleModel::gaussian(BlockCovariance::identity(epi.partition));
  const auto fair = verify_inequality(epi, {gauss}, 0.0, 50000, 3, 3.0, rng);
  CHECK(fair[0].pass);
  const auto corrupted = verify_inequality(epi, {gauss}, -1.0, 50000, 3, 3.0, rng);
  CHECK_FALSE(corrupted[0].pass);
  CHECK(corrupted[0].margin == doctest::Approx(1.0).epsilon(0.05));
}
