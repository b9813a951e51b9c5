// djcg: spectra, form factors, coupling scans and the ED cross-check suite.

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "djcg/cli.hpp"

using namespace djcg;
using namespace djcg::cli;

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::string format;
  std::optional<int> precision;
  std::string seed_from;
};

RunConfig resolve(const Flags& f, bool allow_default) {
  if (f.config.empty() && !allow_default) throw Error(ErrorKind::Config, "--config is required");
  Json doc = f.config.empty() ? Json::object() : read_config_document(f.config);
  if (allow_default && doc.is_object() && !doc.contains("model")) {
    const Json defaults = default_verify_document();
    doc["model"] = defaults["model"];
    if (!doc.contains("sector")) doc["sector"] = defaults["sector"];
  }
  RunConfig cfg = parse_config(doc);
  if (!f.out.empty()) cfg.output.path = f.out;
  if (!f.format.empty()) cfg.output.format = f.format;
  if (f.precision) cfg.output.precision = *f.precision;
  return cfg;
}

int run(const std::string& command, const Flags& f) {
  RunConfig cfg = resolve(f, command == "verify");
  CommandResult res;
  if (command == "spectrum") {
    std::optional<Json> seeds;
    if (!f.seed_from.empty()) {
      std::ifstream in(f.seed_from);
      if (!in) throw Error(ErrorKind::Config, "cannot open --seed-from file " + f.seed_from);
      try {
        seeds = Json::parse(in);
      } catch (const Json::exception& e) {
        throw Error(ErrorKind::Config, std::string("--seed-from: ") + e.what());
      }
    }
    res = cmd_spectrum(cfg, seeds ? &*seeds : nullptr);
  } else if (command == "formfactors") {
    res = cmd_formfactors(cfg);
  } else if (command == "verify") {
    res = cmd_verify(cfg);
  } else {
    res = cmd_scan(cfg);
  }
  write_result(res, cfg.output);
  for (const Json& d : res.document["diagnostics"])
    if (d.value("kind", "") != "Runtime") std::cerr << "djcg: " << d.dump() << "\n";
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eigenvalue-based Bethe ansatz solver for Gaudin and spin-boson models"};
  app.require_subcommand(1);
  Flags flags;
  const char* names[] = {"spectrum", "formfactors", "verify", "scan"};
  const char* help[] = {"eigenstates of the configured sectors", "operator tables between eigenstates",
                        "cross-check every formula against exact diagonalization",
                        "follow the eigenstates along a parameter grid"};
  for (int i = 0; i < 4; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", flags.config, "JSON config file");
    sub->add_option("--out", flags.out, "output path (default stdout)");
    sub->add_option("--format", flags.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--precision", flags.precision, "significant digits")->check(CLI::Range(1, 17));
    if (i == 0) sub->add_option("--seed-from", flags.seed_from, "previous spectrum output used as Newton seeds");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, flags);
  } catch (const Error& e) {
    std::cerr << "djcg " << command << ": " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "djcg " << command << ": " << e.what() << "\n";
    return kConfigError;
  }
}
