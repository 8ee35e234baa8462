#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "blepi/closed_forms.hpp"
#include "blepi/datum.hpp"
#include "blepi/estimate.hpp"
#include "blepi/finiteness.hpp"
#include "blepi/gauss.hpp"
#include "blepi/subspace.hpp"

namespace blepi {

using Json = nlohmann::ordered_json;

/// Entropy-valued fields are divided by `unit` (1 for nats, log 2 for bits).
struct JsonUnits {
  double unit = 1.0;
  double operator()(double nats) const { return nats / unit; }
};

/// {"rows": r, "cols": c, "data": [row-major entries]}.
Json matrix_to_json(const Matrix& m);
/// Accepts the object form above or nested row arrays. `field` names the location in errors.
Matrix matrix_from_json(const Json& j, const std::string& field);

/// Non-finite doubles become the strings "inf", "-inf" or null.
Json number(double x);

Json to_json(const BLEPDatum& datum);
BLEPDatum datum_from_json(const Json& j);

Json to_json(const ValidationReport& report);
Json to_json(const ProductSubspace& v);
Json to_json(const SlackResult& s);
Json to_json(const BlockCovariance& sigma);
Json to_json(const GaussianSolveResult& r, JsonUnits units = {});
Json to_json(const InfinitenessWitness& w);
Json to_json(const SplitTree& tree, JsonUnits units = {});
Json to_json(const FinitenessVerdict& v, JsonUnits units = {});
Json to_json(const EntropyEstimate& e, JsonUnits units = {});
Json to_json(const VerificationReport& r, JsonUnits units = {});

/// One row per entropy term of every report.
std::string reports_to_csv(const std::vector<VerificationReport>& reports, JsonUnits units = {});

}  // namespace blepi
