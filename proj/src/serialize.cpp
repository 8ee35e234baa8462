#include "blepi/serialize.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace blepi {

Json number(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) {
  throw DatumParseError(field, "field \"" + field + "\": " + message);
}

double as_number(const Json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  return j.get<double>();
}

std::vector<double> number_list(const Json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(as_number(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

const Json& require(const Json& j, const char* key, const std::string& prefix = "") {
  const std::string field = prefix.empty() ? key : prefix + "." + key;
  if (!j.is_object() || !j.contains(key)) fail(field, "missing required field");
  return j.at(key);
}

}  // namespace

Matrix matrix_from_json(const Json& j, const std::string& field) {
  if (j.is_object()) {
    const Json& rows = require(j, "rows", field);
    const Json& cols = require(j, "cols", field);
    if (!rows.is_number_integer() || rows.get<long>() < 0) fail(field + ".rows", "expected a nonnegative integer");
    if (!cols.is_number_integer() || cols.get<long>() < 0) fail(field + ".cols", "expected a nonnegative integer");
    const auto data = number_list(require(j, "data", field), field + ".data");
    const long r = rows.get<long>(), c = cols.get<long>();
    if (static_cast<long>(data.size()) != r * c) fail(field + ".data", "entry count does not equal rows * cols");
    Matrix m(r, c);
    for (long a = 0; a < r; ++a)
      for (long b = 0; b < c; ++b) m(a, b) = data[static_cast<std::size_t>(a * c + b)];
    return m;
  }
  if (j.is_array()) {
    const std::size_t r = j.size();
    const std::size_t c = r ? (j[0].is_array() ? j[0].size() : 0) : 0;
    Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (std::size_t a = 0; a < r; ++a) {
      const auto row = number_list(j[a], field + "[" + std::to_string(a) + "]");
      if (row.size() != c) fail(field, "rows have different lengths");
      for (std::size_t b = 0; b < c; ++b) m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = row[b];
    }
    return m;
  }
  fail(field, "expected a matrix object or an array of rows");
}

Json to_json(const BLEPDatum& datum) {
  Json maps = Json::array();
  for (const auto& a : datum.maps) maps.push_back(matrix_to_json(a));
  Json metadata = Json::object();
  for (const auto& [k, v] : datum.metadata) metadata[k] = v;
  return Json{{"partition", datum.partition.blocks},
              {"maps", std::move(maps)},
              {"c", datum.c},
              {"d", datum.d},
              {"metadata", std::move(metadata)}};
}

BLEPDatum datum_from_json(const Json& j) {
  if (!j.is_object()) fail("<document>", "expected a JSON object");
  BLEPDatum datum;
  const Json& partition = require(j, "partition");
  if (!partition.is_array()) fail("partition", "expected an array of block sizes");
  for (std::size_t i = 0; i < partition.size(); ++i) {
    if (!partition[i].is_number_integer())
      fail("partition[" + std::to_string(i) + "]", "expected an integer block size");
    datum.partition.blocks.push_back(partition[i].get<int>());
  }
  const Json& maps = require(j, "maps");
  if (!maps.is_array()) fail("maps", "expected an array of matrices");
  for (std::size_t i = 0; i < maps.size(); ++i)
    datum.maps.push_back(matrix_from_json(maps[i], "maps[" + std::to_string(i) + "]"));
  datum.c = number_list(require(j, "c"), "c");
  datum.d = number_list(require(j, "d"), "d");
  if (j.contains("metadata")) {
    const Json& meta = j.at("metadata");
    if (!meta.is_object()) fail("metadata", "expected an object of strings");
    for (const auto& [k, v] : meta.items()) {
      if (!v.is_string()) fail("metadata." + k, "expected a string");
      datum.metadata[k] = v.get<std::string>();
    }
  }
  return datum;
}

BLEPDatum parse_datum(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into a line number.
    const std::size_t upto = std::min(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    std::ostringstream os;
    os << "line " << line << ": " << e.what();
    throw DatumParseError("<document>", os.str());
  }
  return datum_from_json(j);
}

BLEPDatum load_datum(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open datum file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_datum(buffer.str());
}

std::string dump_datum(const BLEPDatum& datum) { return to_json(datum).dump(2) + "\n"; }

void save_datum(const BLEPDatum& datum, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write datum file " + path.string());
  out << dump_datum(datum);
  if (!out) throw std::ios_base::failure("write failed for " + path.string());
}

Json to_json(const ValidationReport& report) {
  Json issues = Json::array();
  for (const auto& issue : report.issues)
    issues.push_back({{"code", to_string(issue.code)}, {"message", issue.message}, {"location", issue.location}});
  return Json{{"ok", report.ok}, {"issues", std::move(issues)}};
}

Json to_json(const ProductSubspace& v) {
  Json bases = Json::array();
  for (const auto& b : v.bases) bases.push_back(matrix_to_json(b));
  return Json{{"block_dims", v.block_dims()}, {"bases", std::move(bases)}};
}

Json to_json(const SlackResult& s) {
  return Json{{"slack", s.slack},
              {"per_block_dims", s.per_block_dims},
              {"per_map_dims", s.per_map_dims},
              {"critical", s.critical()}};
}

Json to_json(const BlockCovariance& sigma) {
  Json blocks = Json::array();
  for (const auto& b : sigma.blocks) blocks.push_back(matrix_to_json(b));
  return blocks;
}

Json to_json(const GaussianSolveResult& r, JsonUnits units) {
  Json j{{"mg_value", number(units(r.mg_value))},
         {"best_value", number(units(r.best_value))},
         {"converged", r.converged},
         {"unbounded", r.unbounded},
         {"starts_used", r.starts_used},
         {"gradient_norm", number(r.gradient_norm)},
         {"iterations", r.iterations},
         {"sigma_star", to_json(r.sigma_star)}};
  if (r.escape_subspace) j["escape_subspace"] = to_json(*r.escape_subspace);
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

Json to_json(const InfinitenessWitness& w) {
  if (const auto* s = std::get_if<ScalingWitness>(&w))
    return Json{{"type", "scaling_residual"}, {"residual", s->residual}};
  const auto& v = std::get<SubspaceWitness>(w);
  return Json{{"type", "violating_subspace"}, {"slack", v.slack}, {"subspace", to_json(v.subspace)}};
}

Json to_json(const SplitTree& tree, JsonUnits units) {
  Json j{{"datum", to_json(tree.datum)}};
  if (tree.critical) j["critical_subspace"] = to_json(*tree.critical);
  if (tree.is_leaf()) {
    j["leaf_value"] = number(units(tree.leaf_value));
    j["leaf_reason"] = tree.leaf_reason;
  } else {
    Json children = Json::array();
    for (const auto& c : tree.children) children.push_back(to_json(c, units));
    j["children"] = std::move(children);
    j["bound"] = number(units(tree.bound()));
  }
  return j;
}

Json to_json(const FinitenessVerdict& v, JsonUnits units) {
  Json j{{"status", to_string(v.status)}, {"notes", v.notes}};
  if (v.witness) j["witness"] = to_json(*v.witness);
  if (v.probe) j["solver_probe"] = to_json(*v.probe, units);
  if (v.certificate) j["certificate"] = to_json(*v.certificate, units);
  return j;
}

Json to_json(const EntropyEstimate& e, JsonUnits units) {
  return Json{{"value", number(units(e.value))},
              {"std_error", number(units(e.std_error))},
              {"method", to_string(e.method)},
              {"n_samples", e.n_samples},
              {"k_neighbors", e.k_neighbors},
              {"jittered", e.jittered}};
}

Json to_json(const VerificationReport& r, JsonUnits units) {
  Json blocks = Json::array(), maps = Json::array();
  for (const auto& t : r.empirical.block_terms) blocks.push_back(to_json(t, units));
  for (const auto& t : r.empirical.map_terms) maps.push_back(to_json(t, units));
  return Json{{"model", r.model},
              {"empirical_f", to_json(r.empirical.total, units)},
              {"block_entropies", std::move(blocks)},
              {"map_entropies", std::move(maps)},
              {"mg_reference", number(units(r.mg_reference))},
              {"margin", number(units(r.margin))},
              {"z_score", number(r.z_score)},
              {"z_crit", r.z_crit},
              {"verdict", r.pass ? "pass" : "fail"},
              {"warnings", r.empirical.warnings}};
}

std::string reports_to_csv(const std::vector<VerificationReport>& reports, JsonUnits units) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "model,term,index,method,value,std_error\n";
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.empirical.block_terms.size(); ++i) {
      const auto& t = r.empirical.block_terms[i];
      os << r.model << ",block," << i << ',' << to_string(t.method) << ',' << units(t.value) << ','
         << units(t.std_error) << '\n';
    }
    for (std::size_t j = 0; j < r.empirical.map_terms.size(); ++j) {
      const auto& t = r.empirical.map_terms[j];
      os << r.model << ",map," << j << ',' << to_string(t.method) << ',' << units(t.value) << ','
         << units(t.std_error) << '\n';
    }
    os << r.model << ",total,," << to_string(r.empirical.total.method) << ','
       << units(r.empirical.total.value) << ',' << units(r.empirical.total.std_error) << '\n';
  }
  return os.str();
}

}  // namespace blepi
