#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "blepi/datum.hpp"
#include "blepi/gauss.hpp"
#include "blepi/rng.hpp"

namespace testing {

using blepi::BLEPDatum;
using blepi::BlockCovariance;
using blepi::CounterRng;
using blepi::Matrix;
using blepi::Vector;

inline Matrix row(std::initializer_list<double> values) {
  Matrix m(1, static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) m(0, i++) = v;
  return m;
}

inline Matrix spd(int r, CounterRng& rng, double spread = 0.5) {
  const Matrix g = blepi::standard_normal(r, r, rng);
  return Matrix::Identity(r, r) + spread * g * g.transpose() / r;
}

inline BlockCovariance random_sigma(const blepi::Partition& p, CounterRng& rng) {
  BlockCovariance s;
  for (int r : p.blocks) s.blocks.push_back(spd(r, rng));
  return s;
}

// Random datum with n <= max_n: random blocks, surjective maps with singular
// values in [0.5, 2],
// positive exponents (scaling not enforced).
inline BLEPDatum random_datum(CounterRng& rng, int max_n = 6) {
  std::uniform_int_distribution<int> n_dist(2, max_n);
  std::uniform_real_distribution<double> unit(0.2, 1.2);
  const int n = n_dist(rng);
  BLEPDatum d;
  int left = n;
  while (left > 0) {
    std::uniform_int_distribution<int> r_dist(1, std::min(left, 3));
    const int r = r_dist(rng);
    d.partition.blocks.push_back(r);
    d.d.push_back(unit(rng));
    left -= r;
  }
  std::uniform_int_distribution<int> m_dist(1, 3);
  const int m = m_dist(rng);
  for (int j = 0; j < m; ++j) {
    std::uniform_int_distribution<int> rows_dist(1, n);
    const int rows = rows_dist(rng);
    std::uniform_real_distribution<double> sv(0.5, 2.0);
    Vector s(rows);
    for (int l = 0; l < rows; ++l) s(l) = sv(rng);
    d.maps.push_back(blepi::random_orthonormal(rows, rows, rng) * s.asDiagonal() *
                     blepi::random_orthonormal(n, rows, rng).transpose());
    d.c.push_back(unit(rng));
  }
  return d;
}

// Rescales c so that the scaling condition holds exactly.
inline BLEPDatum balanced(BLEPDatum d) {
  double lhs = 0.0, rhs = 0.0;
  for (int i = 0; i < d.k(); ++i) lhs += d.d[i] * d.partition.blocks[i];
  for (int j = 0; j < d.m(); ++j) rhs += d.c[j] * d.image_dim(j);
  for (auto& c : d.c) c *= lhs / rhs;
  return d;
}

inline double h1(double var) { return 0.5 * std::log(2.0 * M_PI * M_E * var); }

inline std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("blepi_test_" + name);
}

}  // namespace testing
