#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "blepi/linalg.hpp"

namespace blepi {

/// Block partition r = (r_1, ..., r_k) of R^n.
struct Partition {
  std::vector<int> blocks;

  int k() const { return static_cast<int>(blocks.size()); }
  int n() const;
  /// First coordinate of block i.
  int offset(int i) const;

  bool operator==(const Partition&) const = default;
};

/// A BL-EPI datum (A, c, r, d): maps A_j : R^n -> R^{n_j} weighted by c_j, and a
/// block partition r weighted by d_i. Construction does not validate; use validate().
struct BLEPDatum {
  Partition partition;
  std::vector<Matrix> maps;
  std::vector<double> c;
  std::vector<double> d;
  std::map<std::string, std::string> metadata;

  int n() const { return partition.n(); }
  int k() const { return partition.k(); }
  int m() const { return static_cast<int>(maps.size()); }
  int image_dim(int j) const { return static_cast<int>(maps[j].rows()); }

  bool operator==(const BLEPDatum& other) const;
};

enum class IssueCode {
  EmptyPartition,
  NonPositiveBlock,
  NoMaps,
  DimensionMismatch,
  ZeroDimImage,
  Surjectivity,
  ExponentCount,
  NegativeExponent,
  NonFinite,
};

/// Upper-snake name used in reports, e.g. "SURJECTIVITY".
std::string to_string(IssueCode code);

struct ValidationIssue {
  IssueCode code;
  std::string message;
  std::string location;  // e.g. "maps[1]", "c[0]"
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;

  bool has(IssueCode code) const;
};

/// Lists every violated datum invariant. Never throws.
ValidationReport validate(const BLEPDatum& datum);

/// Lieb-form EPI: k = 2, r = (dim, dim), d = (lambda, 1 - lambda),
/// A_1 = [sqrt(lambda) I, sqrt(1 - lambda) I], c_1 = 1.
BLEPDatum make_epi_datum(double lambda, int dim);

/// Zamir-Feder datum for a k x n matrix with orthonormal rows: n singleton
/// blocks with d_j = squared norm of column j, one map A with c = 1.
BLEPDatum make_zamir_feder_datum(const Matrix& a, double tol = 1e-9);

/// Dependent-components datum on (X_1, X_2, Y): r = (2, 1), d = (alpha, beta),
/// A_1 = [[1,0,1],[0,1,1]] (c = 1), A_2 = e_1^T (c = delta1), A_3 = e_2^T (c = delta2).
BLEPDatum make_section6_datum(double alpha, double beta, double delta1, double delta2);

/// Malformed datum document. `field` names the offending JSON field.
class DatumParseError : public std::runtime_error {
 public:
  DatumParseError(std::string field, const std::string& what)
      : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Reads a datum document. Structural errors throw DatumParseError; invariant
/// violations (negative exponents, rank deficits) are left for validate().
BLEPDatum load_datum(const std::filesystem::path& path);
BLEPDatum parse_datum(const std::string& text);

void save_datum(const BLEPDatum& datum, const std::filesystem::path& path);
std::string dump_datum(const BLEPDatum& datum);

}  // namespace blepi
