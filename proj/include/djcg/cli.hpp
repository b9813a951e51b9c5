#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "djcg/ed_oracle.hpp"
#include "djcg/model.hpp"
#include "djcg/qbe_solver.hpp"

namespace djcg::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kConfigError = 1, kConvergenceError = 2, kNormalizationError = 3, kVerifyFailed = 4 };

/// Exit code for an error of the given kind.
int exit_code_for(ErrorKind kind);

struct ModelBlock {
  Realization realization = Realization::SpinBoson;
  std::vector<double> epsilons;
  double omega = 0.0;
  double V = 0.0;
  double g = 0.0;
  double degeneracy_tol = kDefaultDegeneracyTol;
  /// Set when the levels were drawn from "random_epsilons".
  std::optional<std::uint64_t> seed;
};

struct ScanBlock {
  std::string parameter;  // "V", "g" or "omega"
  std::vector<double> grid;
  int substeps = 8;  // continuation intervals between grid points
};

struct FormFactorBlock {
  std::vector<std::string> operators{"Splus", "Bdag", "Sz", "Number"};
  std::optional<int> ket_sector;  // default: every configured sector
};

struct VerifyBlock {
  std::optional<double> tolerance;  // overrides every check tolerance
  std::map<std::string, double> tolerances;
  long long max_sector_dimension = kDefaultMaxSectorDimension;
  std::uint64_t ed_seed = kJointDiagonalizationSeed;
};

struct OutputBlock {
  std::string format = "json";
  std::string path;  // empty: stdout
  int precision = 17;
};

struct RunConfig {
  ModelBlock model;
  std::vector<int> sectors;
  SolverConfig solver;
  OutputBlock output;
  VerifyBlock verify;
  ScanBlock scan;
  FormFactorBlock formfactors;

  ModelParams params() const;
};

/// Parses a config document. Unknown keys, wrong types and invalid values
/// throw Error(Config) naming the offending key.
RunConfig parse_config(const Json& doc);
RunConfig load_config(const std::string& path);
/// The raw JSON document of a config file.
Json read_config_document(const std::string& path);

/// Model and sector blocks used by `verify` when the config has none.
Json default_verify_document();

/// The model used by `verify` when no model block is given: N = 3 levels
/// drawn uniformly in [0, 4] from seed 7, omega = 1.3, V = 0.7.
RunConfig default_verify_config();

struct CsvTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct CommandResult {
  int exit_code = kOk;
  Json document;
  std::vector<CsvTable> csv;
};

CommandResult cmd_spectrum(const RunConfig& cfg, const Json* seed_from = nullptr);
CommandResult cmd_formfactors(const RunConfig& cfg);
CommandResult cmd_verify(const RunConfig& cfg);
CommandResult cmd_scan(const RunConfig& cfg);

/// Writes the document (json) or the tables (csv). With csv and several
/// tables, table i > 0 goes to `<stem>_<name>.csv` next to `path`.
void write_result(const CommandResult& result, const OutputBlock& out);

/// Rounds every floating-point number in `doc` to `digits` significant digits.
Json round_numbers(const Json& doc, int digits);

}  // namespace djcg::cli
