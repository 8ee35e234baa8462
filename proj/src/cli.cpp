#include "blepi/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "blepi/closed_forms.hpp"
#include "blepi/datum.hpp"
#include "blepi/estimate.hpp"
#include "blepi/finiteness.hpp"
#include "blepi/serialize.hpp"

namespace blepi::cli {

namespace {

// Rounds to 12 significant digits for closed-form output.
double sig12(double x) {
  if (!std::isfinite(x)) return x;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::stod(buf);
}

class Emitter {
 public:
  Emitter(const RunConfig& config, std::ostream& out) : config_(config), out_(out) {}

  JsonUnits units() const { return JsonUnits{config_.bits ? std::numbers::ln2 : 1.0}; }

  void emit(const std::string& text) const {
    if (config_.out.empty()) {
      out_ << text;
      return;
    }
    std::ofstream file(config_.out);
    if (!file) throw std::ios_base::failure("cannot write " + config_.out);
    file << text;
  }

  void emit(const Json& j) const { emit(j.dump(2) + "\n"); }

 private:
  const RunConfig& config_;
  std::ostream& out_;
};

Matrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open matrix file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  Json j;
  try {
    j = Json::parse(buffer.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw DatumParseError("<document>", e.what());
  }
  // A datum file holding a single map also works.
  if (j.is_object() && j.contains("maps") && j["maps"].is_array() && j["maps"].size() == 1)
    return matrix_from_json(j["maps"][0], "maps[0]");
  return matrix_from_json(j, "matrix");
}

struct LoadedDatum {
  BLEPDatum datum;
  ValidationReport report;
};

LoadedDatum load_and_validate(const std::string& path) {
  LoadedDatum out{load_datum(path), {}};
  out.report = validate(out.datum);
  return out;
}

SampleModel model_for(const std::string& family, const BLEPDatum& datum, const BlockCovariance& extremal) {
  if (family == "uniform") return SampleModel::uniform(datum.partition);
  if (family == "laplace") return SampleModel::laplace(datum.partition);
  if (family == "mixture") return SampleModel::mixture(datum.partition);
  if (family == "gaussian") return SampleModel::gaussian(extremal);
  throw std::invalid_argument("unknown model family '" + family + "'");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig config;
  CLI::App app{"Gaussian constants, finiteness checks and Monte Carlo verification for BL-EPI data", "blepi"};
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--seed", config.seed, "Seed for every stochastic step");
  app.add_option("--starts", config.solver.starts, "Solver multi-start count")->check(CLI::PositiveNumber);
  app.add_option("--tol", config.solver.tol, "Gradient-norm tolerance")->check(CLI::PositiveNumber);
  app.add_option("--budget-profiles", config.budget.max_profiles, "Cap on enumerated subspaces per family")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--budget-random", config.budget.random_per_profile, "Random subspaces per dimension profile")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--samples", config.samples, "Monte Carlo sample size")->check(CLI::PositiveNumber);
  app.add_option("--knn-k", config.knn_k, "Neighbour index of the entropy estimator")->check(CLI::PositiveNumber);
  app.add_option("--confidence", config.confidence, "One-sided z multiplier for verification");
  app.add_option("--format", config.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--out", config.out, "Write the report to this file instead of stdout");
  app.add_flag("--bits", config.bits, "Report entropies in bits instead of nats");

  std::string datum_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a datum file against the datum invariants");
  validate_cmd->add_option("datum", datum_path, "Datum file")->required();

  auto* check_cmd = app.add_subcommand("check", "Decide whether the optimal constant is finite");
  check_cmd->add_option("datum", datum_path, "Datum file")->required();
  bool with_certificate = false;
  check_cmd->add_flag("--certify", with_certificate, "Attach a split certificate unless infiniteness is witnessed");

  auto* solve_cmd = app.add_subcommand("solve", "Compute the Gaussian constant by log-det ascent");
  solve_cmd->add_option("datum", datum_path, "Datum file")->required();

  auto* verify_cmd = app.add_subcommand("verify", "Monte Carlo check of the entropy inequality");
  verify_cmd->add_option("datum", datum_path, "Datum file")->required();
  std::vector<std::string> families;
  verify_cmd->add_option("--model", families, "Sample model family (uniform, laplace, mixture, gaussian)");
  double mg_override = 0.0;
  auto* override_opt = verify_cmd->add_option("--mg-override", mg_override, "Use this constant instead of the solver's (testing)");

  auto* make_cmd = app.add_subcommand("make-datum", "Write one of the named special-case data");
  std::string kind;
  double lambda = 0.5, alpha = 1.0, beta = 1.0, delta = 0.5, delta1 = 0.5, delta2 = 0.5;
  int dim = 1;
  std::string matrix_path;
  make_cmd->add_option("kind", kind, "epi | zamir-feder | dependent")->required()
      ->check(CLI::IsMember({"epi", "zamir-feder", "dependent"}));
  make_cmd->add_option("--lambda", lambda, "EPI weight");
  make_cmd->add_option("--dim", dim, "EPI dimension");
  make_cmd->add_option("--matrix", matrix_path, "Matrix file for zamir-feder");
  make_cmd->add_option("--alpha", alpha);
  make_cmd->add_option("--beta", beta);
  make_cmd->add_option("--delta1", delta1);
  make_cmd->add_option("--delta2", delta2);

  auto* epi_cmd = app.add_subcommand("epi", "Gaussian constant of the Lieb-form EPI");
  epi_cmd->add_option("--lambda", lambda)->required();
  epi_cmd->add_option("--dim", dim);

  auto* zf_coeffs_cmd = app.add_subcommand("zf-coeffs", "Squared column norms alpha_j^2 of an orthonormal-row matrix");
  zf_coeffs_cmd->add_option("--matrix", matrix_path)->required();

  auto* zf_f_cmd = app.add_subcommand("zf-f", "F(Lambda) = log|A Lambda A^T| - sum alpha_j^2 log lambda_j");
  std::vector<double> lambdas;
  zf_f_cmd->add_option("--matrix", matrix_path)->required();
  zf_f_cmd->add_option("--lambda", lambdas, "Diagonal of Lambda")->required();

  auto* cb_cmd = app.add_subcommand("cauchy-binet", "Both sides of the Cauchy-Binet expansion of det(B B^T)");
  cb_cmd->add_option("--matrix", matrix_path)->required();

  auto* s6_cmd = app.add_subcommand("section6", "Closed-form constant of the dependent-components inequality");
  s6_cmd->add_option("--alpha", alpha)->required();
  s6_cmd->add_option("--beta", beta)->required();
  s6_cmd->add_option("--delta", delta)->required();
  std::vector<double> sweep;
  s6_cmd->add_option("--sweep-beta", sweep, "CSV sweep: beta_lo beta_hi steps, delta fixed, alpha from condition (1)")
      ->expected(3);

  auto* s6f_cmd = app.add_subcommand("section6-feasible", "Evaluate the four feasibility conditions");
  s6f_cmd->add_option("--alpha", alpha)->required();
  s6f_cmd->add_option("--beta", beta)->required();
  s6f_cmd->add_option("--delta1", delta1)->required();
  s6f_cmd->add_option("--delta2", delta2)->required();

  auto* s6b_cmd = app.add_subcommand("section6-bruteforce", "Numerical supremum defining the constant");
  s6b_cmd->add_option("--alpha", alpha)->required();
  s6b_cmd->add_option("--beta", beta)->required();
  s6b_cmd->add_option("--delta", delta)->required();

  std::vector<std::string> argv_storage = args;
  if (argv_storage.empty()) argv_storage.emplace_back("blepi");
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  }
  if (*override_opt) config.mg_override = mg_override;
  config.solver.seed = config.seed;

  const Emitter emitter(config, out);
  const JsonUnits units = emitter.units();
  const CounterRng root(config.seed);

  try {
    if (*validate_cmd) {
      const auto loaded = load_and_validate(datum_path);
      emitter.emit(to_json(loaded.report));
      return loaded.report.ok ? kOk : kInvalid;
    }

    if (*check_cmd) {
      const auto loaded = load_and_validate(datum_path);
      if (!loaded.report.ok) {
        emitter.emit(Json{{"validation", to_json(loaded.report)}});
        return kInvalid;
      }
      CounterRng rng = root.split(1);
      FinitenessVerdict verdict = check_finiteness(loaded.datum, config.budget, rng, config.solver);
      if (with_certificate && verdict.status != FinitenessVerdict::Status::Infinite) {
        CounterRng tree_rng = root.split(2);
        verdict.certificate = certify(loaded.datum, config.budget, tree_rng, config.solver);
      }
      emitter.emit(to_json(verdict, units));
      switch (verdict.status) {
        case FinitenessVerdict::Status::Finite: return kOk;
        case FinitenessVerdict::Status::Infinite: return kInfinite;
        case FinitenessVerdict::Status::Unknown: return kUnknown;
      }
    }

    if (*solve_cmd) {
      const auto loaded = load_and_validate(datum_path);
      if (!loaded.report.ok) {
        emitter.emit(Json{{"validation", to_json(loaded.report)}});
        return kInvalid;
      }
      const GaussianSolveResult result = solve_mg(loaded.datum, config.solver);
      emitter.emit(to_json(result, units));
      return result.unbounded ? kUnbounded : kOk;
    }

    if (*verify_cmd) {
      const auto loaded = load_and_validate(datum_path);
      if (!loaded.report.ok) {
        emitter.emit(Json{{"validation", to_json(loaded.report)}});
        return kInvalid;
      }
      const GaussianSolveResult solved = solve_mg(loaded.datum, config.solver);
      if (solved.unbounded && !config.mg_override) {
        emitter.emit(Json{{"solver", to_json(solved, units)}, {"error", "constant is unbounded"}});
        return kUnbounded;
      }
      const double mg = config.mg_override ? *config.mg_override : solved.mg_value;
      if (families.empty()) families = {"uniform", "laplace", "mixture"};
      std::vector<SampleModel> models;
      for (const auto& f : families) models.push_back(model_for(f, loaded.datum, solved.sigma_star));
      CounterRng rng = root.split(3);
      const auto reports = verify_inequality(loaded.datum, models, mg, config.samples, config.knn_k,
                                             config.confidence, rng);
      bool all_pass = true;
      for (const auto& r : reports) {
        all_pass = all_pass && r.pass;
        for (const auto& w : r.empirical.warnings) err << "warning: " << r.model << ": " << w << "\n";
      }
      if (config.format == "csv") {
        emitter.emit(reports_to_csv(reports, units));
      } else {
        Json list = Json::array();
        for (const auto& r : reports) list.push_back(to_json(r, units));
        emitter.emit(Json{{"mg_reference", number(units(mg))},
                          {"mg_overridden", config.mg_override.has_value()},
                          {"solver", to_json(solved, units)},
                          {"reports", std::move(list)}});
      }
      return all_pass ? kOk : kVerifyFailed;
    }

    if (*make_cmd) {
      BLEPDatum datum;
      if (kind == "epi") datum = make_epi_datum(lambda, dim);
      else if (kind == "zamir-feder") datum = make_zamir_feder_datum(load_matrix(matrix_path));
      else datum = make_section6_datum(alpha, beta, delta1, delta2);
      emitter.emit(dump_datum(datum));
      return kOk;
    }

    if (*epi_cmd) {
      emitter.emit(Json{{"lambda", lambda}, {"dim", dim}, {"mg", sig12(units(epi_mg(lambda, dim)))}});
      return kOk;
    }

    if (*zf_coeffs_cmd) {
      const Vector alpha2 = zf_coefficients(load_matrix(matrix_path));
      Json list = Json::array();
      for (Eigen::Index j = 0; j < alpha2.size(); ++j) list.push_back(sig12(alpha2(j)));
      emitter.emit(Json{{"alpha_squared", std::move(list)}, {"sum", sig12(alpha2.sum())}});
      return kOk;
    }

    if (*zf_f_cmd) {
      const Matrix a = load_matrix(matrix_path);
      const Vector lam = Eigen::Map<const Vector>(lambdas.data(), static_cast<Eigen::Index>(lambdas.size()));
      emitter.emit(Json{{"F", sig12(zf_F(a, lam))}});
      return kOk;
    }

    if (*cb_cmd) {
      const CauchyBinet cb = cauchy_binet_check(load_matrix(matrix_path));
      emitter.emit(Json{{"det_BBt", sig12(cb.lhs)},
                        {"sum_squared_minors", sig12(cb.rhs)},
                        {"relative_error", cb.relative_error()}});
      return kOk;
    }

    if (*s6_cmd) {
      if (!sweep.empty()) {
        const int steps = std::max(2, static_cast<int>(sweep[2]));
        std::ostringstream os;
        os << std::setprecision(12) << "alpha,beta,delta,C\n";
        for (int s = 0; s < steps; ++s) {
          const double b = sweep[0] + (sweep[1] - sweep[0]) * s / (steps - 1);
          const double a = 1.0 + delta - 0.5 * b;
          try {
            os << a << ',' << b << ',' << delta << ',' << units(section6_constant(a, b, delta).c) << '\n';
          } catch (const Section6DomainError&) {
            os << a << ',' << b << ',' << delta << ",\n";
          }
        }
        emitter.emit(os.str());
        return kOk;
      }
      const Section6Constant k = section6_constant(alpha, beta, delta);
      emitter.emit(Json{{"alpha", alpha}, {"beta", beta}, {"delta", delta},
                        {"C", sig12(units(k.c))}, {"D", sig12(units(k.d))},
                        {"rho_star", sig12(k.rho_star)}, {"x_star", sig12(k.x_star)}});
      return kOk;
    }

    if (*s6f_cmd) {
      const auto f = section6_feasible({alpha, beta, delta1, delta2});
      emitter.emit(Json{{"feasible", f.feasible()},
                        {"conditions", {f.conditions[0], f.conditions[1], f.conditions[2], f.conditions[3]}},
                        {"violated", f.failures()}});
      return f.feasible() ? kOk : kInvalid;
    }

    if (*s6b_cmd) {
      const Section6Bruteforce b = section6_bruteforce(alpha, beta, delta);
      emitter.emit(Json{{"C_full", sig12(units(b.c_full))}, {"C_reduced", sig12(units(b.c_reduced))},
                        {"k1_over_k2", sig12(b.k1_over_k2)}, {"rho", sig12(b.rho)}});
      return kOk;
    }
  } catch (const DatumParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::ios_base::failure& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kOk;
}

}  // namespace blepi::cli
