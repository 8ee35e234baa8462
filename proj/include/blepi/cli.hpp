#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "blepi/gauss.hpp"
#include "blepi/subspace.hpp"

namespace blepi::cli {

enum ExitCode : int {
  kOk = 0,
  kIoError = 1,
  kInvalid = 2,
  kInfinite = 3,
  kUnknown = 4,
  kUnbounded = 5,
  kVerifyFailed = 6,
};

struct RunConfig {
  std::uint64_t seed = 0;
  SolverOptions solver;
  SearchBudget budget;
  int samples = 50000;
  int knn_k = 3;
  double confidence = 3.0;  // one-sided z multiplier
  std::string out;
  std::string format = "json";  // json | csv
  bool bits = false;
  std::optional<double> mg_override;
};

/// Runs one command line (args[0] is the program name). Reports go to `out`
/// (or --out), diagnostics to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace blepi::cli
