#include "blepi/datum.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace blepi {

int Partition::n() const { return std::accumulate(blocks.begin(), blocks.end(), 0); }

int Partition::offset(int i) const {
  return std::accumulate(blocks.begin(), blocks.begin() + i, 0);
}

bool BLEPDatum::operator==(const BLEPDatum& other) const {
  if (partition != other.partition || c != other.c || d != other.d ||
      metadata != other.metadata || maps.size() != other.maps.size())
    return false;
  for (std::size_t j = 0; j < maps.size(); ++j) {
    if (maps[j].rows() != other.maps[j].rows() || maps[j].cols() != other.maps[j].cols())
      return false;
    if (maps[j] != other.maps[j]) return false;
  }
  return true;
}

std::string to_string(IssueCode code) {
  switch (code) {
    case IssueCode::EmptyPartition: return "EMPTY_PARTITION";
    case IssueCode::NonPositiveBlock: return "NONPOSITIVE_BLOCK";
    case IssueCode::NoMaps: return "NO_MAPS";
    case IssueCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case IssueCode::ZeroDimImage: return "ZERO_DIM_IMAGE";
    case IssueCode::Surjectivity: return "SURJECTIVITY";
    case IssueCode::ExponentCount: return "EXPONENT_COUNT";
    case IssueCode::NegativeExponent: return "NEGATIVE_EXPONENT";
    case IssueCode::NonFinite: return "NON_FINITE";
  }
  return "UNKNOWN";
}

bool ValidationReport::has(IssueCode code) const {
  for (const auto& issue : issues)
    if (issue.code == code) return true;
  return false;
}

namespace {

std::string indexed(const char* field, std::size_t i) {
  std::ostringstream os;
  os << field << '[' << i << ']';
  return os.str();
}

}  // namespace

ValidationReport validate(const BLEPDatum& datum) {
  ValidationReport report;
  auto add = [&](IssueCode code, std::string message, std::string location) {
    report.issues.push_back({code, std::move(message), std::move(location)});
  };

  const auto& blocks = datum.partition.blocks;
  if (blocks.empty()) add(IssueCode::EmptyPartition, "partition has no blocks", "partition");
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (blocks[i] < 1)
      add(IssueCode::NonPositiveBlock, "block size must be at least 1", indexed("partition", i));
  const int n = datum.n();

  if (datum.maps.empty()) add(IssueCode::NoMaps, "datum has no linear maps", "maps");
  for (std::size_t j = 0; j < datum.maps.size(); ++j) {
    const Matrix& a = datum.maps[j];
    const auto where = indexed("maps", j);
    if (a.cols() != n) {
      std::ostringstream os;
      os << "map has " << a.cols() << " columns but the partition covers " << n;
      add(IssueCode::DimensionMismatch, os.str(), where);
    }
    if (a.rows() == 0) {
      add(IssueCode::ZeroDimImage, "map has a zero-dimensional image", where);
      continue;
    }
    if (!a.allFinite()) {
      add(IssueCode::NonFinite, "map has non-finite entries", where);
      continue;
    }
    const int rank = numerical_rank(a);
    if (rank < a.rows()) {
      std::ostringstream os;
      os << "map has rank " << rank << " but " << a.rows() << " rows (not surjective)";
      add(IssueCode::Surjectivity, os.str(), where);
    }
  }

  if (datum.c.size() != datum.maps.size())
    add(IssueCode::ExponentCount, "need one exponent c_j per map", "c");
  if (datum.d.size() != blocks.size())
    add(IssueCode::ExponentCount, "need one exponent d_i per block", "d");
  auto check_exponents = [&](const std::vector<double>& values, const char* name) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!std::isfinite(values[i]))
        add(IssueCode::NonFinite, "exponent is not finite", indexed(name, i));
      else if (values[i] < 0.0)
        add(IssueCode::NegativeExponent, "exponent must be nonnegative", indexed(name, i));
    }
  };
  check_exponents(datum.c, "c");
  check_exponents(datum.d, "d");

  report.ok = report.issues.empty();
  return report;
}

BLEPDatum make_epi_datum(double lambda, int dim) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::invalid_argument("EPI weight lambda must lie in (0, 1)");
  if (dim < 1) throw std::invalid_argument("EPI dimension must be positive");
  BLEPDatum datum;
  datum.partition.blocks = {dim, dim};
  Matrix a(dim, 2 * dim);
  a << std::sqrt(lambda) * Matrix::Identity(dim, dim),
      std::sqrt(1.0 - lambda) * Matrix::Identity(dim, dim);
  datum.maps = {a};
  datum.c = {1.0};
  datum.d = {lambda, 1.0 - lambda};
  datum.metadata["kind"] = "epi";
  return datum;
}

BLEPDatum make_zamir_feder_datum(const Matrix& a, double tol) {
  if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("empty Zamir-Feder matrix");
  const Matrix gram = a * a.transpose();
  if ((gram - Matrix::Identity(a.rows(), a.rows())).cwiseAbs().maxCoeff() > tol)
    throw std::invalid_argument("Zamir-Feder matrix must satisfy A A^T = I");
  BLEPDatum datum;
  datum.partition.blocks.assign(static_cast<std::size_t>(a.cols()), 1);
  datum.maps = {a};
  datum.c = {1.0};
  const Vector norms = a.colwise().squaredNorm().transpose();
  datum.d.assign(norms.data(), norms.data() + norms.size());
  datum.metadata["kind"] = "zamir-feder";
  return datum;
}

BLEPDatum make_section6_datum(double alpha, double beta, double delta1, double delta2) {
  if (alpha < 0.0 || beta < 0.0 || delta1 < 0.0 || delta2 < 0.0)
    throw std::invalid_argument("dependent-components parameters must be nonnegative");
  BLEPDatum datum;
  datum.partition.blocks = {2, 1};
  Matrix a1(2, 3), a2(1, 3), a3(1, 3);
  a1 << 1, 0, 1, 0, 1, 1;
  a2 << 1, 0, 0;
  a3 << 0, 1, 0;
  datum.maps = {a1, a2, a3};
  datum.c = {1.0, delta1, delta2};
  datum.d = {alpha, beta};
  datum.metadata["kind"] = "dependent-components";
  return datum;
}

}  // namespace blepi
