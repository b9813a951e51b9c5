#include <algorithm>
#include <chrono>
#include <deque>
#include <cmath>
#include <map>

#include "common.hpp"
#include "djcg/determinants.hpp"
#include "djcg/formfactors.hpp"
#include "djcg/repmap.hpp"

namespace djcg::cli {

namespace {

using detail::error_json;

// Scalar product with the determinant in extended precision, for the
// difference quotient of the overlap derivative.
double extended_product(const ModelParams& p, const LambdaState& hole, const LambdaState& particle) {
  const Eigen::Matrix<long double, Eigen::Dynamic, 1> sum =
      hole.values.cast<long double>() + particle.values.cast<long double>();
  const long double det = domain_wall_matrix(p, sum, all_sites(p)).partialPivLu().determinant();
  return static_cast<double>(det * std::exp(static_cast<long double>(log_overlap_prefactor(p, particle.M, p.size()))));
}

struct Check {
  std::string name;
  double tolerance = 0.0;
  double measured = 0.0;
  long samples = 0;
  std::string worst_at;
  std::vector<std::string> errors;

  void observe(double value, const std::string& where) {
    ++samples;
    if (std::isnan(value)) value = INFINITY;
    if (value > measured || samples == 1) {
      if (value >= measured) {
        measured = value;
        worst_at = where;
      }
    }
  }
  void error(const std::string& what) { errors.push_back(what); }
  bool passed() const { return errors.empty() && measured <= tolerance; }
};

class Checks {
 public:
  explicit Checks(const VerifyBlock& v) : v_(v) {}

  Check& operator()(const std::string& name, double default_tol) {
    if (auto it = index_.find(name); it != index_.end()) return list_[it->second];
    double tol = default_tol;
    if (auto t = v_.tolerances.find(name); t != v_.tolerances.end()) tol = t->second;
    if (v_.tolerance) tol = *v_.tolerance;
    index_[name] = list_.size();
    Check c;
    c.name = name;
    c.tolerance = tol;
    list_.push_back(std::move(c));
    return list_.back();
  }
  std::deque<Check>& all() { return list_; }

 private:
  const VerifyBlock& v_;
  std::map<std::string, std::size_t> index_;
  std::deque<Check> list_;
};

double maxabs(const std::vector<Complex>& v) {
  double m = 0.0;
  for (const Complex& x : v) m = std::max(m, std::abs(x));
  return m;
}

std::string at(int M, int i = -1, int j = -1) {
  std::string s = "M=" + std::to_string(M);
  if (i >= 0) s += " state " + std::to_string(i);
  if (j >= 0) s += "," + std::to_string(j);
  return s;
}

struct SectorData {
  int M = 0;
  std::vector<LambdaState> states;
  std::vector<EigenstateRecord> records;
  Eigen::MatrixXd aligned;  // ED eigenvectors, columns matched to `records`, sign N_lambda > 0
  std::vector<BasisState> basis;
  bool usable = false;
};

// omega for SpinBoson, V = 1/g for SpinOnly.
ModelParams shifted(const ModelParams& p, double delta) {
  if (p.spin_boson()) return p.with_omega(p.omega() + delta);
  return p.with_coupling(1.0 / (1.0 / p.g() + delta));
}

Eigen::MatrixXd ed_table(const ModelParams& p, const LocalOperator& op, const SectorData& bra, const SectorData& ket,
                         long long guard) {
  return bra.aligned.transpose() * operator_matrix(p, op, Sector{ket.M}, guard) * ket.aligned;
}

// One sector: solver vs ED, encoding, duality, determinants, derivatives,
// diagonal form factors.
SectorData check_sector(const ModelParams& p, int M, const RunConfig& cfg, Checks& checks) {
  const long long guard = cfg.verify.max_sector_dimension;
  SectorData d;
  d.M = M;
  const int n = p.size();
  const EDResult ed = joint_diagonalize(p, Sector{M}, guard, cfg.verify.ed_seed);
  for (int b = 0; b < ed.basis.size(); ++b) d.basis.push_back(ed.basis[b]);

  {
    double rnorm = 0.0;
    for (int k = 0; k < n; ++k)
      rnorm = std::max(rnorm, build_charge_matrix(p, k, Sector{M}, guard).cwiseAbs().rowwise().sum().maxCoeff());
    checks("commutation", 1e-12).observe(check_commutation(p, Sector{M}, guard) / std::max(rnorm, 1e-300), at(M));
  }

  Check& encoding = checks("qbe_encoding", 1e-8);
  for (std::size_t i = 0; i < ed.charges.size(); ++i) {
    const LambdaState L = lambda_from_ed(p, ed.charges[i], Sector{M});
    encoding.observe(qbe_residual(p, L).lpNorm<Eigen::Infinity>(), at(M, int(i)));
  }

  Check& complete = checks("completeness", 0.0);
  Check& match = checks("charges_vs_ed", 1e-8);
  Check& solver = checks("solver_residual", 1e-12);
  std::vector<LabeledState> solved;
  try {
    solved = solve_sector_labeled(p, Sector{M}, cfg.solver);
  } catch (const Error& e) {
    complete.error(at(M) + ": " + e.what());
    return d;
  }
  complete.observe(std::abs(double(solved.size()) - double(ed.charges.size())), at(M));
  if (solved.size() != ed.charges.size()) return d;

  // Nearest-charge assignment of ED columns to solver states.
  std::vector<int> assign(solved.size(), -1);
  std::vector<bool> taken(solved.size(), false);
  for (std::size_t i = 0; i < solved.size(); ++i) {
    d.states.push_back(solved[i].state);
    solver.observe(solved[i].state.residual, at(M, int(i)));
    const Eigen::VectorXd r = charges_from_lambda(p, solved[i].state);
    double best = INFINITY;
    for (std::size_t j = 0; j < ed.charges.size(); ++j) {
      const double dist = (r - ed.charges[j]).lpNorm<Eigen::Infinity>();
      if (!taken[j] && dist < best) {
        best = dist;
        assign[i] = int(j);
      }
    }
    taken[assign[i]] = true;
    match.observe(best, at(M, int(i)));
  }

  Check& hole_qbe = checks("hole_qbe_residual", 1e-10);
  Check& hole_bethe = checks("hole_bethe_residual", 1e-7);
  Check& part_bethe = checks("particle_bethe_residual", 1e-7);
  Check& brute = checks("partition_vs_brute_force", 1e-10);
  Check& inner = checks("norm_product_vs_basis_sum", 1e-10);
  Check& bethe_vec = checks("norm_product_vs_bethe_vectors", 1e-10);
  Check& positive = checks("norms_positive", 0.0);
  Check& normalization = checks("normalization", 0.0);
  Check& dlambda = checks("lambda_derivative_fd", 1e-6);
  Check& sum_rule = checks("sum_rule", 1e-10);

  // Central differences of Lambda in the derivative parameter.
  const double delta = 1e-5;
  std::vector<LambdaState> plus, minus;
  try {
    plus = continue_states(p, d.states, shifted(p, delta), cfg.solver, 1);
    minus = continue_states(p, d.states, shifted(p, -delta), cfg.solver, 1);
  } catch (const Error& e) {
    dlambda.error(at(M) + ": " + e.what());
  }

  d.aligned.resize(ed.basis.size(), solved.size());
  for (std::size_t i = 0; i < d.states.size(); ++i) {
    const LambdaState& st = d.states[i];
    const LambdaState hole = hole_from_particle(p, st);
    hole_qbe.observe(qbe_residual(p, hole).lpNorm<Eigen::Infinity>(), at(M, int(i)));
    try {
      const RapiditySet mu = rapidities_from_lambda(p, hole);
      hole_bethe.observe(maxabs(rapidity_bethe_residual(p, mu, Sector{M})), at(M, int(i)));
      if (st.rapidity_count(p) <= n) {
        const RapiditySet lam = rapidities_from_lambda(p, st);
        part_bethe.observe(maxabs(rapidity_bethe_residual(p, lam, Sector{M})), at(M, int(i)));
        if (M <= 6) {
          double scale = 0.0, worst = 0.0;
          for (const BasisState& b : d.basis) {
            const double x = partition_function(p, st, b);
            const double y = brute_force_partition(p, lam, b);
            scale = std::max(scale, std::abs(y));
            worst = std::max(worst, std::abs(x - y));
          }
          brute.observe(worst / std::max(scale, 1e-300), at(M, int(i)));
        }
        const Eigen::VectorXd vl = ed_state_from_rapidities(p, lam, Sector{M}, guard);
        const Eigen::VectorXd vm = ed_state_from_rapidities(p, mu, Sector{M}, guard);
        const double prod = scalar_product(p, hole, st);
        bethe_vec.observe(std::abs(vm.dot(vl) - prod) / std::abs(prod), at(M, int(i)));
      }
    } catch (const Error& e) {
      hole_bethe.error(at(M, int(i)) + ": " + e.what());
    }

    double sum = 0.0, scale = 0.0;
    Eigen::VectorXd on_basis(d.basis.size());
    for (std::size_t b = 0; b < d.basis.size(); ++b) {
      on_basis(b) = partition_function(p, st, d.basis[b]);
      const double t = on_basis(b) * hole_overlap(p, hole, d.basis[b]);
      sum += t;
      scale += std::abs(t);
    }
    const double prod = scalar_product(p, hole, st);
    inner.observe(std::abs(sum - prod) / std::max(std::abs(prod), 1e-300), at(M, int(i)));

    try {
      d.records.push_back(make_record(p, st));
    } catch (const Error& e) {
      normalization.error(at(M, int(i)) + ": " + e.what());
      continue;
    }
    const EigenstateRecord& r = d.records.back();
    const double nl2 = r.norm_product * r.norm_ratio;
    const double nm2 = r.norm_product / r.norm_ratio;
    positive.observe((nl2 > 0.0 && nm2 > 0.0) ? 0.0 : 1.0, at(M, int(i)));

    // Sign convention: <basis|lambda> / N_lambda on the heaviest component.
    Eigen::VectorXd v = ed.vectors.col(assign[i]);
    Eigen::Index big;
    v.cwiseAbs().maxCoeff(&big);
    if ((on_basis(big) > 0.0) != (v(big) > 0.0)) v = -v;
    d.aligned.col(i) = v;

    if (!plus.empty()) {
      const Eigen::VectorXd fd = (plus[i].values - minus[i].values) / (2.0 * delta);
      dlambda.observe((fd - r.dlambda).lpNorm<Eigen::Infinity>() / std::max(1.0, r.dlambda.lpNorm<Eigen::Infinity>()),
                      at(M, int(i)));
    }
    double total = 0.0;
    for (int k = 0; k < n; ++k) total += ff_sz(p, r, r, k, true).normalized;
    if (p.spin_boson()) total += ff_number(p, r, r, true).normalized;
    const double expected = M - 0.5 * n;
    sum_rule.observe(std::abs(total - expected), at(M, int(i)));
  }
  d.usable = d.records.size() == d.states.size();
  return d;
}

void check_formfactors(const ModelParams& p, const SectorData& lo, const SectorData& hi, Checks& checks,
                       long long guard) {
  Check& ff = checks("formfactors_vs_ed", 1e-8);
  const int n = p.size();
  auto compare = [&](const std::string& what, const Eigen::MatrixXd& ed, auto&& value) {
    for (int a = 0; a < ed.rows(); ++a)
      for (int b = 0; b < ed.cols(); ++b) ff.observe(std::abs(value(a, b) - ed(a, b)), what + " states " + std::to_string(a) + "," + std::to_string(b));
  };
  if (hi.M == lo.M) {
    for (int k = 0; k < n; ++k)
      compare("Sz_k" + std::to_string(k) + " M=" + std::to_string(lo.M),
              ed_table(p, {OperatorKind::Sz, k}, lo, lo, guard),
              [&](int a, int b) { return ff_sz(p, lo.records[a], lo.records[b], k, a == b).normalized; });
    if (p.spin_boson())
      compare("Number M=" + std::to_string(lo.M), ed_table(p, {OperatorKind::Number, 0}, lo, lo, guard),
              [&](int a, int b) { return ff_number(p, lo.records[a], lo.records[b], a == b).normalized; });
    return;
  }
  const std::string tag = " M=" + std::to_string(hi.M) + "<-" + std::to_string(lo.M);
  for (int k = 0; k < n; ++k)
    compare("Splus_k" + std::to_string(k) + tag, ed_table(p, {OperatorKind::Splus, k}, hi, lo, guard),
            [&](int a, int b) { return ff_splus(p, hi.records[a], lo.records[b], k).normalized; });
  if (p.spin_boson())
    compare("Bdag" + tag, ed_table(p, {OperatorKind::Bdag, 0}, hi, lo, guard),
            [&](int a, int b) { return ff_bdagger(p, hi.records[a], lo.records[b]).normalized; });
}

void check_overlap_derivative(const ModelParams& p, const SectorData& d, const RunConfig& cfg, Checks& checks) {
  Check& od = checks("overlap_derivative_fd", 1e-5);
  if (d.states.size() < 2) return;
  const double delta = 1e-5;
  std::vector<LambdaState> plus, minus;
  try {
    plus = continue_states(p, d.states, shifted(p, delta), cfg.solver, 1);
    minus = continue_states(p, d.states, shifted(p, -delta), cfg.solver, 1);
  } catch (const Error& e) {
    od.error(at(d.M) + ": " + e.what());
    return;
  }
  for (std::size_t m = 0; m < d.records.size(); ++m)
    for (std::size_t k = 0; k < d.records.size(); ++k) {
      if (m == k) continue;
      const double analytic = overlap_omega_derivative(p, d.records[m], d.records[k]);
      const double fd = (extended_product(p, d.records[m].lambda_hole, plus[k]) -
                         extended_product(p, d.records[m].lambda_hole, minus[k])) /
                        (2.0 * delta);
      // Relative to the norm scale of the pair; the derivative itself can vanish.
      const double scale = std::sqrt(std::abs(d.records[m].norm_product * d.records[k].norm_product));
      od.observe(std::abs(analytic - fd) / std::max(std::abs(analytic), 1e-3 * scale), at(d.M, int(m), int(k)));
    }
}

}  // namespace

CommandResult cmd_verify(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  CommandResult res;
  res.document = detail::base_document(cfg);
  const ModelParams p = cfg.params();
  const long long guard = cfg.verify.max_sector_dimension;
  for (int M : cfg.sectors) {
    const long long dim = sector_dimension(p, Sector{M});
    if (dim > guard)
      throw Error(ErrorKind::OracleTooLarge,
                  "verify: sector M=" + std::to_string(M) + " has dimension " + std::to_string(dim) +
                      " above max_sector_dimension " + std::to_string(guard),
                  double(dim));
  }

  Checks checks(cfg.verify);
  std::map<int, SectorData> data;
  for (int M : cfg.sectors) {
    try {
      data[M] = check_sector(p, M, cfg, checks);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::OracleTooLarge) throw;
      checks("sector_errors", 0.0).error(at(M) + ": " + e.what());
    }
  }
  for (auto& [M, d] : data) {
    if (!d.usable) continue;
    check_formfactors(p, d, d, checks, guard);
    if (auto it = data.find(M + 1); it != data.end() && it->second.usable)
      check_formfactors(p, d, it->second, checks, guard);
    check_overlap_derivative(p, d, cfg, checks);
  }

  Json report = Json::array();
  bool all = true;
  for (const Check& c : checks.all()) {
    Json j;
    j["check"] = c.name;
    j["measured"] = c.measured;
    j["tolerance"] = c.tolerance;
    j["samples"] = c.samples;
    j["pass"] = c.passed();
    if (!c.worst_at.empty()) j["worst_at"] = c.worst_at;
    if (!c.errors.empty()) j["errors"] = c.errors;
    report.push_back(j);
    all = all && c.passed();
  }
  res.document["tables"]["verify"] = report;
  res.document["diagnostics"].push_back(
      {{"kind", "Runtime"},
       {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}});
  if (!all) res.exit_code = kVerifyFailed;

  CsvTable t;
  t.name = "verify";
  t.header = {"check", "measured", "tolerance", "samples", "pass", "worst_at"};
  for (const Json& j : report)
    t.rows.push_back({j["check"].get<std::string>(), detail::fmt(j["measured"].get<double>(), cfg.output.precision),
                      detail::fmt(j["tolerance"].get<double>(), cfg.output.precision),
                      std::to_string(j["samples"].get<long>()), j["pass"].get<bool>() ? "pass" : "fail",
                      j.value("worst_at", "")});
  res.csv.push_back(std::move(t));
  return res;
}

}  // namespace djcg::cli
