#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "djcg/cli.hpp"
#include "djcg/error.hpp"

namespace djcg::cli::detail {

inline Json vec(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline std::string fmt(double x, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, x);
  return buf;
}

inline Json error_json(const Error& e) {
  Json d;
  d["kind"] = to_string(e.kind());
  d["message"] = e.what();
  if (std::isfinite(e.value())) d["value"] = e.value();
  return d;
}

inline Json base_document(const RunConfig& cfg) {
  Json m;
  m["realization"] = to_string(cfg.model.realization);
  m["epsilons"] = vec(cfg.params().epsilons());
  if (cfg.model.realization == Realization::SpinBoson) {
    m["omega"] = cfg.model.omega;
    m["V"] = cfg.model.V;
  } else {
    m["g"] = cfg.model.g;
  }
  if (cfg.model.seed) m["seed"] = *cfg.model.seed;
  Json doc;
  doc["model"] = m;
  doc["sector"] = Json{{"M", cfg.sectors}};
  doc["states"] = Json::array();
  doc["tables"] = Json::object();
  doc["diagnostics"] = Json::array();
  return doc;
}

inline void note(CommandResult& res, int code) {
  if (res.exit_code == kOk) res.exit_code = code;
}

}  // namespace djcg::cli::detail
