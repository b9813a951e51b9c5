#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "djcg/cli.hpp"
#include "djcg/error.hpp"

namespace djcg::cli {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Convergence:
    case ErrorKind::Singularity:
    case ErrorKind::BranchCollision:
    case ErrorKind::Continuation: return kConvergenceError;
    case ErrorKind::UnreachableReference:
    case ErrorKind::DegenerateState: return kNormalizationError;
    default: return kConfigError;
  }
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::Config, where + ": " + what);
}

void only_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key())) fail(where, "unknown key \"" + it.key() + "\"");
}

double number(const Json& obj, const std::string& key, const std::string& where) {
  const Json& v = obj.at(key);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(where + "." + key, "must be finite");
  return x;
}

long long integer(const Json& obj, const std::string& key, const std::string& where) {
  const Json& v = obj.at(key);
  if (!v.is_number_integer()) fail(where + "." + key, "expected an integer");
  return v.get<long long>();
}

std::string text(const Json& obj, const std::string& key, const std::string& where) {
  const Json& v = obj.at(key);
  if (!v.is_string()) fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const Json& obj, const std::string& key, const std::string& where) {
  const Json& v = obj.at(key);
  if (!v.is_array()) fail(where + "." + key, "expected an array of numbers");
  std::vector<double> out;
  for (const Json& x : v) {
    if (!x.is_number()) fail(where + "." + key, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

void parse_model(const Json& m, ModelBlock& out) {
  only_keys(m, "model", {"realization", "epsilons", "random_epsilons", "omega", "V", "g", "degeneracy_tol"});
  const std::string r = m.contains("realization") ? text(m, "realization", "model") : "spin_boson";
  if (r == "spin_boson")
    out.realization = Realization::SpinBoson;
  else if (r == "spin_only")
    out.realization = Realization::SpinOnly;
  else
    fail("model.realization", "expected \"spin_boson\" or \"spin_only\", got \"" + r + "\"");

  if (m.contains("epsilons") == m.contains("random_epsilons"))
    fail("model", "give exactly one of \"epsilons\" and \"random_epsilons\"");
  if (m.contains("epsilons")) {
    out.epsilons = numbers(m, "epsilons", "model");
  } else {
    const Json& r = m.at("random_epsilons");
    only_keys(r, "model.random_epsilons", {"N", "seed", "low", "high"});
    const long long n = integer(r, "N", "model.random_epsilons");
    if (n < 1 || n > 62) fail("model.random_epsilons.N", "must lie in [1, 62]");
    const long long seed = r.contains("seed") ? integer(r, "seed", "model.random_epsilons") : 7;
    const double lo = r.contains("low") ? number(r, "low", "model.random_epsilons") : 0.0;
    const double hi = r.contains("high") ? number(r, "high", "model.random_epsilons") : 4.0;
    if (!(hi > lo)) fail("model.random_epsilons", "high must exceed low");
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    std::uniform_real_distribution<double> dist(lo, hi);
    for (long long i = 0; i < n; ++i) out.epsilons.push_back(dist(rng));
    out.seed = static_cast<std::uint64_t>(seed);
  }
  if (out.realization == Realization::SpinBoson) {
    if (!m.contains("omega") || !m.contains("V")) fail("model", "spin_boson needs \"omega\" and \"V\"");
    if (m.contains("g")) fail("model.g", "not used by spin_boson");
    out.omega = number(m, "omega", "model");
    out.V = number(m, "V", "model");
  } else {
    if (!m.contains("g")) fail("model", "spin_only needs \"g\"");
    if (m.contains("omega") || m.contains("V")) fail("model", "\"omega\" and \"V\" are not used by spin_only");
    out.g = number(m, "g", "model");
  }
  if (m.contains("degeneracy_tol")) out.degeneracy_tol = number(m, "degeneracy_tol", "model");
}

void parse_sector(const Json& s, std::vector<int>& out) {
  only_keys(s, "sector", {"M", "M_range", "M_list"});
  if (s.size() != 1) fail("sector", "give exactly one of \"M\", \"M_range\", \"M_list\"");
  auto as_int = [](const Json& v, const std::string& where) {
    if (!v.is_number_integer() || v.get<long long>() < 0) fail(where, "expected a nonnegative integer");
    return v.get<int>();
  };
  if (s.contains("M")) {
    out = {as_int(s.at("M"), "sector.M")};
  } else if (s.contains("M_range")) {
    const Json& r = s.at("M_range");
    if (!r.is_array() || r.size() != 2) fail("sector.M_range", "expected [first, last]");
    const int a = as_int(r[0], "sector.M_range"), b = as_int(r[1], "sector.M_range");
    if (b < a) fail("sector.M_range", "last is below first");
    for (int M = a; M <= b; ++M) out.push_back(M);
  } else {
    const Json& l = s.at("M_list");
    if (!l.is_array() || l.empty()) fail("sector.M_list", "expected a nonempty array");
    for (const Json& v : l) out.push_back(as_int(v, "sector.M_list"));
  }
}

void parse_solver(const Json& s, SolverConfig& cfg) {
  only_keys(s, "solver", {"newton_tol", "max_newton_iters", "homotopy_start_coupling", "homotopy_steps",
                          "step_backoff_factor", "min_step_fraction"});
  if (s.contains("newton_tol")) cfg.newton_tol = number(s, "newton_tol", "solver");
  if (s.contains("max_newton_iters")) cfg.max_newton_iters = static_cast<int>(integer(s, "max_newton_iters", "solver"));
  if (s.contains("homotopy_start_coupling"))
    cfg.homotopy_start_coupling = number(s, "homotopy_start_coupling", "solver");
  if (s.contains("homotopy_steps")) cfg.homotopy_steps = static_cast<int>(integer(s, "homotopy_steps", "solver"));
  if (s.contains("step_backoff_factor")) cfg.step_backoff_factor = number(s, "step_backoff_factor", "solver");
  if (s.contains("min_step_fraction")) cfg.min_step_fraction = number(s, "min_step_fraction", "solver");
  cfg.validate();
}

void parse_output(const Json& o, OutputBlock& out) {
  only_keys(o, "output", {"format", "path", "precision"});
  if (o.contains("format")) out.format = text(o, "format", "output");
  if (o.contains("path")) out.path = text(o, "path", "output");
  if (o.contains("precision")) out.precision = static_cast<int>(integer(o, "precision", "output"));
}

void parse_verify(const Json& v, VerifyBlock& out) {
  only_keys(v, "verify", {"tolerance", "tolerances", "max_sector_dimension", "ed_seed"});
  if (v.contains("tolerance")) out.tolerance = number(v, "tolerance", "verify");
  if (v.contains("tolerances")) {
    const Json& t = v.at("tolerances");
    if (!t.is_object()) fail("verify.tolerances", "expected an object");
    for (auto it = t.begin(); it != t.end(); ++it) out.tolerances[it.key()] = number(t, it.key(), "verify.tolerances");
  }
  if (v.contains("max_sector_dimension")) {
    out.max_sector_dimension = integer(v, "max_sector_dimension", "verify");
    if (out.max_sector_dimension < 1) fail("verify.max_sector_dimension", "must be positive");
  }
  if (v.contains("ed_seed")) out.ed_seed = static_cast<std::uint64_t>(integer(v, "ed_seed", "verify"));
}

void parse_scan(const Json& s, ScanBlock& out) {
  only_keys(s, "scan", {"parameter", "start", "stop", "points", "values", "substeps"});
  out.parameter = text(s, "parameter", "scan");
  if (out.parameter != "V" && out.parameter != "g" && out.parameter != "omega")
    fail("scan.parameter", "expected \"V\", \"g\" or \"omega\"");
  if (s.contains("values")) {
    if (s.contains("start") || s.contains("stop") || s.contains("points"))
      fail("scan", "give either \"values\" or \"start\"/\"stop\"/\"points\"");
    out.grid = numbers(s, "values", "scan");
  } else {
    const double a = number(s, "start", "scan");
    const double b = number(s, "stop", "scan");
    const long long n = integer(s, "points", "scan");
    if (n < 1) fail("scan.points", "must be positive");
    for (long long i = 0; i < n; ++i) out.grid.push_back(n == 1 ? a : a + (b - a) * double(i) / double(n - 1));
  }
  if (out.grid.empty()) fail("scan", "empty grid");
  if (s.contains("substeps")) {
    out.substeps = static_cast<int>(integer(s, "substeps", "scan"));
    if (out.substeps < 1) fail("scan.substeps", "must be positive");
  }
}

void parse_formfactors(const Json& f, FormFactorBlock& out) {
  only_keys(f, "formfactors", {"operators", "ket_sector"});
  if (f.contains("operators")) {
    const Json& ops = f.at("operators");
    if (!ops.is_array() || ops.empty()) fail("formfactors.operators", "expected a nonempty array");
    out.operators.clear();
    static const std::set<std::string> known{"Splus", "Sminus", "Sz", "Bdag", "B", "Number"};
    for (const Json& o : ops) {
      if (!o.is_string() || !known.count(o.get<std::string>()))
        fail("formfactors.operators", "unknown operator " + o.dump());
      out.operators.push_back(o.get<std::string>());
    }
  }
  if (f.contains("ket_sector")) out.ket_sector = static_cast<int>(integer(f, "ket_sector", "formfactors"));
}

}  // namespace

ModelParams RunConfig::params() const {
  if (model.realization == Realization::SpinBoson)
    return ModelParams::spin_boson(model.epsilons, model.omega, model.V, model.degeneracy_tol);
  return ModelParams::spin_only(model.epsilons, model.g, model.degeneracy_tol);
}

static RunConfig parse_config_unchecked(const Json& doc);

RunConfig parse_config(const Json& doc) {
  try {
    return parse_config_unchecked(doc);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Config, std::string("config: ") + e.what());
  }
}

static RunConfig parse_config_unchecked(const Json& doc) {
  only_keys(doc, "config", {"model", "sector", "solver", "output", "verify", "scan", "formfactors"});
  RunConfig cfg;
  if (!doc.contains("model")) fail("config", "missing \"model\" block");
  parse_model(doc.at("model"), cfg.model);
  if (doc.contains("sector")) {
    parse_sector(doc.at("sector"), cfg.sectors);
  } else {
    for (int M = 0; M <= static_cast<int>(cfg.model.epsilons.size()); ++M) cfg.sectors.push_back(M);
  }
  if (doc.contains("solver")) parse_solver(doc.at("solver"), cfg.solver);
  if (doc.contains("output")) parse_output(doc.at("output"), cfg.output);
  if (doc.contains("verify")) parse_verify(doc.at("verify"), cfg.verify);
  if (doc.contains("scan")) parse_scan(doc.at("scan"), cfg.scan);
  if (doc.contains("formfactors")) parse_formfactors(doc.at("formfactors"), cfg.formfactors);

  const ModelParams p = cfg.params();  // validates levels and couplings
  for (int M : cfg.sectors) validate_sector(p, Sector{M});
  if (cfg.output.format != "json" && cfg.output.format != "csv")
    fail("output.format", "expected \"json\" or \"csv\"");
  if (cfg.output.precision < 1 || cfg.output.precision > 17) fail("output.precision", "must lie in [1, 17]");
  if (!cfg.scan.parameter.empty()) {
    const bool sb = p.spin_boson();
    if ((cfg.scan.parameter == "g") == sb) fail("scan.parameter", cfg.scan.parameter + " does not belong to this realization");
  }
  return cfg;
}

Json read_config_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config file " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::Config, path + ": " + e.what());
  }
}

RunConfig load_config(const std::string& path) { return parse_config(read_config_document(path)); }

Json default_verify_document() {
  return Json::parse(R"({
    "model": {"realization": "spin_boson", "random_epsilons": {"N": 3, "seed": 7}, "omega": 1.3, "V": 0.7},
    "sector": {"M_range": [0, 4]}
  })");
}

RunConfig default_verify_config() { return parse_config(default_verify_document()); }

}  // namespace djcg::cli
