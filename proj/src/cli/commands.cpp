#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "common.hpp"
#include "djcg/determinants.hpp"
#include "djcg/error.hpp"
#include "djcg/formfactors.hpp"

namespace djcg::cli {

namespace {

using detail::base_document;
using detail::error_json;
using detail::fmt;
using detail::note;
using detail::vec;

struct SectorStates {
  std::vector<LabeledState> states;
  std::vector<EigenstateRecord> records;
  std::vector<std::string> references;
  std::vector<std::pair<int, Error>> failures;  // normalization, by record index
};

// Solves one sector and assembles the records. A state without a usable
// reference keeps norm_ratio = NaN, so its normalized entries come out NaN.
SectorStates solve_records(const ModelParams& p, int M, const SolverConfig& solver) {
  SectorStates s;
  s.states = solve_sector_labeled(p, Sector{M}, solver);
  for (const auto& ls : s.states) {
    EigenstateRecord r;
    r.lambda_particle = ls.state;
    r.lambda_hole = hole_from_particle(p, ls.state);
    r.charges = charges_from_lambda(p, ls.state);
    r.dlambda = lambda_derivatives(p, ls.state);
    r.norm_product = norm_product(p, r);
    try {
      const RatioChoice c = choose_norm_ratio(p, r);
      r.norm_ratio = c.ratio;
      s.references.push_back(to_string(c.reference));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UnreachableReference) throw;
      r.norm_ratio = NAN;
      s.references.push_back("");
      s.failures.push_back({int(s.records.size()), e});
    }
    s.records.push_back(std::move(r));
  }
  return s;
}

Json state_json(int index, const ModelParams& p, const LambdaState& st, const std::string& label) {
  Json j;
  j["index"] = index;
  j["M"] = st.M;
  if (!label.empty()) j["label"] = label;
  j["lambda"] = vec(st.values);
  j["mu"] = vec(hole_from_particle(p, st).values);
  j["charges"] = vec(charges_from_lambda(p, st));
  j["residual"] = st.residual;
  return j;
}

CsvTable states_table(const Json& states, int n, int precision) {
  CsvTable t;
  t.name = "states";
  t.header = {"index", "M", "label", "status", "residual", "norm_product", "norm_ratio"};
  for (const char* field : {"r", "lambda", "mu"})
    for (int i = 0; i < n; ++i) t.header.push_back(std::string(field) + "_" + std::to_string(i));
  for (const Json& s : states) {
    std::vector<std::string> row;
    row.push_back(s.contains("index") ? std::to_string(s["index"].get<int>()) : "");
    row.push_back(std::to_string(s["M"].get<int>()));
    row.push_back(s.value("label", ""));
    row.push_back(s.value("status", "ok"));
    for (const char* key : {"residual", "norm_product", "norm_ratio"})
      row.push_back(s.contains(key) && s[key].is_number() ? fmt(s[key].get<double>(), precision) : "");
    for (const char* key : {"charges", "lambda", "mu"})
      for (int i = 0; i < n; ++i)
        row.push_back(s.contains(key) ? fmt(s[key][i].get<double>(), precision) : "");
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<LambdaState> seeds_for_sector(const Json& seed_from, int M, int n) {
  std::vector<LambdaState> out;
  if (!seed_from.contains("states") || !seed_from["states"].is_array())
    throw Error(ErrorKind::Config, "--seed-from document has no \"states\" array");
  for (const Json& s : seed_from["states"]) {
    if (!s.contains("M") || !s.contains("lambda")) continue;
    if (s["M"].get<int>() != M) continue;
    LambdaState st;
    st.M = M;
    st.values.resize(n);
    if (static_cast<int>(s["lambda"].size()) != n)
      throw Error(ErrorKind::Config, "--seed-from state has the wrong number of levels");
    for (int i = 0; i < n; ++i) st.values(i) = s["lambda"][i].get<double>();
    out.push_back(std::move(st));
  }
  return out;
}

}  // namespace

CommandResult cmd_spectrum(const RunConfig& cfg, const Json* seed_from) {
  CommandResult res;
  res.document = base_document(cfg);
  const ModelParams p = cfg.params();
  Json& states = res.document["states"];
  Json& diag = res.document["diagnostics"];
  int index = 0;
  for (int M : cfg.sectors) {
    std::vector<LabeledState> solved;
    try {
      if (seed_from) {
        for (LambdaState& s : seeds_for_sector(*seed_from, M, p.size()))
          solved.push_back({BasisState{}, newton_solve(p, Sector{M}, Representation::Particle, s, cfg.solver)});
        std::vector<Eigen::VectorXd> charges;
        for (const auto& s : solved) charges.push_back(charges_from_lambda(p, s.state));
        std::vector<LabeledState> sorted;
        for (int i : charge_order(charges)) sorted.push_back(solved[i]);
        solved = std::move(sorted);
        if (static_cast<long long>(solved.size()) != sector_dimension(p, Sector{M}))
          diag.push_back({{"M", M},
                          {"kind", "Incomplete"},
                          {"message", "seed document holds " + std::to_string(solved.size()) + " of " +
                                          std::to_string(sector_dimension(p, Sector{M})) + " states"}});
      } else {
        solved = solve_sector_labeled(p, Sector{M}, cfg.solver);
      }
    } catch (const Error& e) {
      Json f = error_json(e);
      f["M"] = M;
      f["status"] = "failed";
      states.push_back(f);
      diag.push_back(f);
      note(res, exit_code_for(e.kind()));
      continue;
    }
    for (const LabeledState& ls : solved) {
      Json j = state_json(index++, p, ls.state, seed_from ? "" : to_string(ls.label));
      try {
        EigenstateRecord r;
        r.lambda_particle = ls.state;
        r.lambda_hole = hole_from_particle(p, ls.state);
        r.norm_product = norm_product(p, r);
        j["norm_product"] = r.norm_product;
        const RatioChoice c = choose_norm_ratio(p, r);
        j["norm_ratio"] = c.ratio;
        j["reference"] = to_string(c.reference);
      } catch (const Error& e) {
        // The spectrum itself is fine; only the ratio is missing.
        if (e.kind() != ErrorKind::UnreachableReference) throw;
        j["norm_ratio"] = nullptr;
        Json f = error_json(e);
        f["index"] = j["index"];
        diag.push_back(f);
      }
      states.push_back(std::move(j));
    }
  }
  res.csv.push_back(states_table(states, p.size(), cfg.output.precision));
  return res;
}

namespace {

struct OpSpec {
  std::string name;
  OperatorKind kind;
  bool site_resolved;
};

OpSpec op_spec(const std::string& name) {
  static const std::map<std::string, OpSpec> table{
      {"Splus", {"Splus", OperatorKind::Splus, true}}, {"Sminus", {"Sminus", OperatorKind::Sminus, true}},
      {"Sz", {"Sz", OperatorKind::Sz, true}},          {"Bdag", {"Bdag", OperatorKind::Bdag, false}},
      {"B", {"B", OperatorKind::B, false}},            {"Number", {"Number", OperatorKind::Number, false}}};
  return table.at(name);
}

FormFactor evaluate(const ModelParams& p, const OpSpec& op, const EigenstateRecord& bra, const EigenstateRecord& ket,
                    int k, bool same) {
  switch (op.kind) {
    case OperatorKind::Splus: return ff_splus(p, bra, ket, k);
    case OperatorKind::Sminus: return ff_sminus(p, bra, ket, k);
    case OperatorKind::Sz: return ff_sz(p, bra, ket, k, same);
    case OperatorKind::Bdag: return ff_bdagger(p, bra, ket);
    case OperatorKind::B: return ff_b(p, bra, ket);
    case OperatorKind::Number: return ff_number(p, bra, ket, same);
  }
  return {};
}

}  // namespace

CommandResult cmd_formfactors(const RunConfig& cfg) {
  CommandResult res;
  res.document = base_document(cfg);
  const ModelParams p = cfg.params();
  Json& diag = res.document["diagnostics"];

  std::vector<OpSpec> ops;
  for (const std::string& name : cfg.formfactors.operators) {
    OpSpec op = op_spec(name);
    if (!p.spin_boson() && !op.site_resolved)
      throw Error(ErrorKind::Realization, "operator " + name + " needs the spin-boson realization");
    ops.push_back(op);
  }
  std::vector<int> kets = cfg.formfactors.ket_sector ? std::vector<int>{*cfg.formfactors.ket_sector} : cfg.sectors;
  for (int M : kets) validate_sector(p, Sector{M});

  std::map<int, SectorStates> cache;
  std::map<int, int> first_index;
  int next_index = 0;
  auto sector = [&](int M) -> const SectorStates* {
    auto it = cache.find(M);
    if (it != cache.end()) return &it->second;
    try {
      SectorStates s = solve_records(p, M, cfg.solver);
      first_index[M] = next_index;
      for (std::size_t i = 0; i < s.records.size(); ++i) {
        Json j = state_json(next_index++, p, s.states[i].state, to_string(s.states[i].label));
        j["norm_product"] = s.records[i].norm_product;
        j["norm_ratio"] = s.records[i].norm_ratio;
        if (!s.references[i].empty()) j["reference"] = s.references[i];
        res.document["states"].push_back(std::move(j));
      }
      for (const auto& [i, e] : s.failures) {
        Json f = error_json(e);
        f["index"] = first_index[M] + i;
        diag.push_back(f);
        note(res, kNormalizationError);
      }
      return &cache.emplace(M, std::move(s)).first->second;
    } catch (const Error& e) {
      Json f = error_json(e);
      f["M"] = M;
      diag.push_back(f);
      note(res, exit_code_for(e.kind()));
      return nullptr;
    }
  };

  for (int K : kets) {
    for (const OpSpec& op : ops) {
      const int B = K + LocalOperator{op.kind, 0}.delta();
      if (B < 0 || (!p.spin_boson() && B > p.size())) {
        diag.push_back({{"kind", "EmptyTable"},
                        {"message", op.name + " maps sector " + std::to_string(K) + " outside the Hilbert space"}});
        continue;
      }
      const SectorStates* ket = sector(K);
      const SectorStates* bra = sector(B);
      if (!ket || !bra) continue;
      const int sites = op.site_resolved ? p.size() : 1;
      for (int k = 0; k < sites; ++k) {
        std::string key = op.name + (op.site_resolved ? "_k" + std::to_string(k) : "") + "_M" + std::to_string(B) +
                          "_M" + std::to_string(K);
        Json table;
        table["operator"] = op.name;
        if (op.site_resolved) table["site"] = k;
        table["bra_sector"] = B;
        table["ket_sector"] = K;
        table["bra_first_index"] = first_index[B];
        table["ket_first_index"] = first_index[K];
        Json norm = Json::array(), raw = Json::array();
        CsvTable csv;
        csv.name = key;
        csv.header = {"bra", "ket", "normalized", "unnormalized"};
        try {
          for (std::size_t a = 0; a < bra->records.size(); ++a) {
            Json nrow = Json::array(), rrow = Json::array();
            for (std::size_t b = 0; b < ket->records.size(); ++b) {
              const FormFactor f = evaluate(p, op, bra->records[a], ket->records[b], k, B == K && a == b);
              nrow.push_back(f.normalized);
              rrow.push_back(f.unnormalized);
              csv.rows.push_back({std::to_string(first_index[B] + a), std::to_string(first_index[K] + b),
                                  fmt(f.normalized, cfg.output.precision), fmt(f.unnormalized, cfg.output.precision)});
            }
            norm.push_back(nrow);
            raw.push_back(rrow);
          }
        } catch (const Error& e) {
          Json f = error_json(e);
          f["table"] = key;
          diag.push_back(f);
          note(res, exit_code_for(e.kind()) == kConfigError ? kNormalizationError : exit_code_for(e.kind()));
          continue;
        }
        table["normalized"] = norm;
        table["unnormalized"] = raw;
        res.document["tables"][key] = table;
        res.csv.push_back(std::move(csv));
      }
    }
  }
  res.csv.insert(res.csv.begin(), states_table(res.document["states"], p.size(), cfg.output.precision));
  return res;
}

namespace {

ModelParams at_grid(const ModelParams& base, const std::string& parameter, double x) {
  if (parameter == "omega") return base.with_omega(x);
  return base.with_coupling(x);
}

double relative_distance(const LambdaState& a, const LambdaState& b) {
  const double scale = std::max(1.0, std::max(a.values.lpNorm<Eigen::Infinity>(), b.values.lpNorm<Eigen::Infinity>()));
  return (a.values - b.values).lpNorm<Eigen::Infinity>() / scale;
}

// Greedy nearest-Lambda assignment of `fresh` onto the branches `prev`.
std::vector<LambdaState> match_branches(const std::vector<LambdaState>& prev, std::vector<LambdaState> fresh) {
  if (prev.size() != fresh.size()) return fresh;
  std::vector<LambdaState> out(prev.size());
  std::vector<bool> used(fresh.size(), false);
  for (std::size_t i = 0; i < prev.size(); ++i) {
    std::size_t best = 0;
    double dist = INFINITY;
    for (std::size_t j = 0; j < fresh.size(); ++j)
      if (!used[j] && relative_distance(prev[i], fresh[j]) < dist) {
        dist = relative_distance(prev[i], fresh[j]);
        best = j;
      }
    used[best] = true;
    out[i] = fresh[best];
  }
  return out;
}

}  // namespace

CommandResult cmd_scan(const RunConfig& cfg) {
  if (cfg.scan.grid.empty()) throw Error(ErrorKind::Config, "scan: config has no \"scan\" block");
  CommandResult res;
  res.document = base_document(cfg);
  const ModelParams base = cfg.params();
  Json& diag = res.document["diagnostics"];
  CsvTable csv;
  csv.name = "scan";
  csv.header = {"point", cfg.scan.parameter, "M", "branch", "residual"};
  for (const char* field : {"r", "lambda"})
    for (int i = 0; i < base.size(); ++i) csv.header.push_back(std::string(field) + "_" + std::to_string(i));

  Json scan;
  scan["parameter"] = cfg.scan.parameter;
  scan["grid"] = cfg.scan.grid;
  Json sectors = Json::array();
  for (int M : cfg.sectors) {
    Json points = Json::array();
    std::vector<LambdaState> prev;
    std::optional<ModelParams> prev_params;
    int collisions = 0, failures = 0;
    double worst = 0.0;
    for (std::size_t g = 0; g < cfg.scan.grid.size(); ++g) {
      Json point;
      point["value"] = cfg.scan.grid[g];
      std::vector<LambdaState> now;
      try {
        const ModelParams p = at_grid(base, cfg.scan.parameter, cfg.scan.grid[g]);
        if (prev.empty()) {
          now = match_branches(prev, solve_sector(p, Sector{M}, Representation::Particle, cfg.solver));
        } else {
          try {
            now = continue_states(*prev_params, prev, p, cfg.solver, cfg.scan.substeps);
          } catch (const Error& e) {
            if (e.kind() == ErrorKind::BranchCollision) {
              ++collisions;
              point["collision"] = true;
            }
            Json f = error_json(e);
            f["M"] = M;
            f["point"] = g;
            diag.push_back(f);
            note(res, kConvergenceError);
            now = match_branches(prev, solve_sector(p, Sector{M}, Representation::Particle, cfg.solver));
            point["restarted"] = true;
          }
          // Continuity: every branch is still closest to its own predecessor.
          bool continuous = true;
          for (std::size_t i = 0; i < now.size(); ++i)
            for (std::size_t j = 0; j < now.size(); ++j)
              if (j != i && relative_distance(now[j], prev[i]) < relative_distance(now[i], prev[i])) continuous = false;
          point["continuous"] = continuous;
        }
        Json st = Json::array();
        double point_worst = 0.0;
        for (std::size_t b = 0; b < now.size(); ++b) {
          const Eigen::VectorXd r = charges_from_lambda(p, now[b]);
          st.push_back({{"branch", b}, {"lambda", vec(now[b].values)}, {"charges", vec(r)}, {"residual", now[b].residual}});
          point_worst = std::max(point_worst, now[b].residual);
          std::vector<std::string> row{std::to_string(g), fmt(cfg.scan.grid[g], cfg.output.precision),
                                       std::to_string(M), std::to_string(b), fmt(now[b].residual, cfg.output.precision)};
          for (int i = 0; i < base.size(); ++i) row.push_back(fmt(r(i), cfg.output.precision));
          for (int i = 0; i < base.size(); ++i) row.push_back(fmt(now[b].values(i), cfg.output.precision));
          csv.rows.push_back(std::move(row));
        }
        point["max_residual"] = point_worst;
        point["states"] = st;
        worst = std::max(worst, point_worst);
        prev = std::move(now);
        prev_params = p;
      } catch (const Error& e) {
        ++failures;
        Json f = error_json(e);
        f["M"] = M;
        f["point"] = g;
        diag.push_back(f);
        point["failed"] = true;
        note(res, exit_code_for(e.kind()));
        prev.clear();
        prev_params.reset();
      }
      points.push_back(std::move(point));
    }
    sectors.push_back({{"M", M},
                       {"collisions", collisions},
                       {"failures", failures},
                       {"max_residual", worst},
                       {"points", std::move(points)}});
  }
  scan["sectors"] = std::move(sectors);
  res.document["tables"]["scan"] = std::move(scan);
  res.csv.push_back(std::move(csv));
  return res;
}

Json round_numbers(const Json& doc, int digits) {
  if (digits >= 17) return doc;
  if (doc.is_number_float()) {
    const double x = doc.get<double>();
    if (!std::isfinite(x)) return doc;
    return std::stod(fmt(x, digits));
  }
  if (doc.is_array() || doc.is_object()) {
    Json out = doc;
    for (auto it = out.begin(); it != out.end(); ++it) *it = round_numbers(*it, digits);
    return out;
  }
  return doc;
}

namespace {

void write_csv(std::ostream& os, const CsvTable& t) {
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::Config, "cannot write " + path);
  return f;
}

}  // namespace

void write_result(const CommandResult& result, const OutputBlock& out) {
  if (out.format == "json") {
    const std::string text = round_numbers(result.document, out.precision).dump(2) + "\n";
    if (out.path.empty()) {
      std::cout << text;
    } else {
      open_out(out.path) << text;
    }
    return;
  }
  if (out.path.empty()) {
    for (std::size_t i = 0; i < result.csv.size(); ++i) {
      if (i) std::cout << '\n';
      std::cout << "# " << result.csv[i].name << '\n';
      write_csv(std::cout, result.csv[i]);
    }
    return;
  }
  const std::filesystem::path first(out.path);
  for (std::size_t i = 0; i < result.csv.size(); ++i) {
    std::filesystem::path target = first;
    if (i > 0)
      target = first.parent_path() / (first.stem().string() + "_" + result.csv[i].name + first.extension().string());
    std::ofstream f = open_out(target.string());
    write_csv(f, result.csv[i]);
  }
}

}  // namespace djcg::cli
