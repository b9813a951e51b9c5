#include "djcg/qbe_solver.hpp"

#include "polyfit.hpp"
#include "subsets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

namespace djcg {

void SolverConfig::validate() const {
  if (!(newton_tol > 0.0)) throw Error(ErrorKind::Config, "newton_tol must be positive");
  if (max_newton_iters <= 0) throw Error(ErrorKind::Config, "max_newton_iters must be positive");
  if (homotopy_steps <= 0) throw Error(ErrorKind::Config, "homotopy_steps must be positive");
  if (!(step_backoff_factor > 0.0 && step_backoff_factor < 1.0))
    throw Error(ErrorKind::Config, "step_backoff_factor must lie in (0, 1)");
  if (!(min_step_fraction > 0.0 && min_step_fraction <= 1.0))
    throw Error(ErrorKind::Config, "min_step_fraction must lie in (0, 1]");
  if (!std::isfinite(homotopy_start_coupling)) throw Error(ErrorKind::Config, "homotopy_start_coupling must be finite");
}

namespace {

// Every equation set has the shape
//   F_j = -L_j^2 + sum_{i!=j} (L_j - L_i)/(e_j - e_i) + a_j L_j + c.
struct Coefficients {
  Eigen::VectorXd a;
  double c = 0.0;
};

double rep_sign(Representation rep) { return rep == Representation::Particle ? 1.0 : -1.0; }

Coefficients coefficients(const ModelParams& p, int M, Representation rep) {
  const int n = p.size();
  const double s = rep_sign(rep);
  Coefficients k;
  if (p.spin_boson()) {
    const double v2 = p.V() * p.V();
    k.a = s * (p.omega() - p.epsilons().array()) / v2;
    k.c = (rep == Representation::Particle ? M : M - n + 1) / v2;
  } else {
    k.a = Eigen::VectorXd::Constant(n, s * 2.0 / p.g());
    k.c = 0.0;
  }
  return k;
}

// dF/dt along a path where the coupling moves at rate dc and omega at rate dw.
Eigen::VectorXd parameter_derivative(const ModelParams& p, const LambdaState& st, double dc, double dw) {
  const Coefficients k = coefficients(p, st.M, st.rep);
  const double c = p.coupling();
  Eigen::VectorXd da = -k.a / c * dc;  // a ~ 1/V^2 or 1/g
  double dcst = 0.0;
  if (p.spin_boson()) {
    da *= 2.0;
    dcst = -2.0 * k.c / c * dc;
    if (dw != 0.0) da.array() += rep_sign(st.rep) / (c * c) * dw;
  }
  return da.cwiseProduct(st.values) + Eigen::VectorXd::Constant(p.size(), dcst);
}

Eigen::MatrixXd jacobian_from(const ModelParams& p, const LambdaState& st, const Coefficients& k) {
  Eigen::MatrixXd J = p.inverse_differences();
  J.diagonal() = -2.0 * st.values + p.level_sums() + k.a;
  return J;
}

}  // namespace

Eigen::VectorXd qbe_residual(const ModelParams& params, const LambdaState& state) {
  if (state.values.size() != params.size())
    throw Error(ErrorKind::Domain, "Lambda vector length does not match the number of levels");
  const Coefficients k = coefficients(params, state.M, state.rep);
  const Eigen::VectorXd& L = state.values;
  Eigen::VectorXd F = -L.cwiseProduct(L) + L.cwiseProduct(params.level_sums()) -
                      params.inverse_differences() * L + k.a.cwiseProduct(L);
  F.array() += k.c;
  return F;
}

double qbe_residual_norm(const ModelParams& params, const LambdaState& state) {
  const Eigen::VectorXd F = qbe_residual(params, state);
  const Coefficients k = coefficients(params, state.M, state.rep);
  const Eigen::VectorXd absL = state.values.cwiseAbs();
  const Eigen::MatrixXd absInv = params.inverse_differences().cwiseAbs();
  Eigen::VectorXd scale = absL.cwiseProduct(absL) + absL.cwiseProduct(absInv.rowwise().sum()) + absInv * absL +
                          k.a.cwiseAbs().cwiseProduct(absL);
  scale.array() += std::abs(k.c);
  double worst = 0.0;
  for (int j = 0; j < F.size(); ++j) worst = std::max(worst, std::abs(F(j)) / std::max(1.0, scale(j)));
  return worst;
}

Eigen::MatrixXd qbe_jacobian(const ModelParams& params, const LambdaState& state) {
  if (state.values.size() != params.size())
    throw Error(ErrorKind::Domain, "Lambda vector length does not match the number of levels");
  return jacobian_from(params, state, coefficients(params, state.M, state.rep));
}

namespace {

// Per-equation weights 1 / max(1, s_j) of qbe_residual_norm.
Eigen::VectorXd residual_weights(const ModelParams& p, const LambdaState& st) {
  const Coefficients k = coefficients(p, st.M, st.rep);
  const Eigen::VectorXd absL = st.values.cwiseAbs();
  const Eigen::MatrixXd absInv = p.inverse_differences().cwiseAbs();
  Eigen::VectorXd scale = absL.cwiseProduct(absL) + absL.cwiseProduct(absInv.rowwise().sum()) + absInv * absL +
                          k.a.cwiseAbs().cwiseProduct(absL);
  scale.array() += std::abs(k.c);
  return scale.cwiseMax(1.0).cwiseInverse();
}

// Quadratic equations stacked with the log-derivative conditions
// P'(e_i) = L_i P(e_i) on a monic degree-m polynomial, unknowns (L, a).
// The stacked system has full column rank where a Bethe branch crosses a
// non-Bethe solution of the quadratic equations alone.
struct StackedSystem {
  Eigen::MatrixXd jac;  // rows: N weighted F, then N weighted G
  Eigen::VectorXd rhs;  // weighted (F, G)
  double f_norm = 0.0;
  double g_norm = 0.0;
};

StackedSystem stacked(const ModelParams& p, const LambdaState& st, const detail::PolyFit& fit) {
  const int n = p.size();
  const int m = static_cast<int>(fit.coeffs.size());
  StackedSystem out;
  out.jac = Eigen::MatrixXd::Zero(2 * n, n + m);
  out.rhs.resize(2 * n);
  const Eigen::VectorXd w = residual_weights(p, st);
  const Eigen::VectorXd F = qbe_residual(p, st);
  out.jac.topLeftCorner(n, n) = w.asDiagonal() * qbe_jacobian(p, st).transpose();
  out.rhs.head(n) = w.cwiseProduct(F);
  out.f_norm = out.rhs.head(n).lpNorm<Eigen::Infinity>();
  for (int i = 0; i < n; ++i) {
    const double x = (p.epsilon(i) - fit.center) / fit.scale;
    const double l = st.values(i) * fit.scale;
    Eigen::VectorXd row(m + 1);
    double xk = 1.0, xkm1 = 0.0, poly = 0.0;
    for (int k = 0; k <= m; ++k) {
      row(k) = k * xkm1 - l * xk;
      poly += (k < m ? fit.coeffs(k) : 1.0) * xk;
      xkm1 = xk;
      xk *= x;
    }
    const double wg = 1.0 / std::max(std::hypot(row.norm(), fit.scale * poly), 1e-300);
    out.jac.block(n + i, n, 1, m) = wg * row.head(m).transpose();
    out.jac(n + i, i) = -wg * fit.scale * poly;
    out.rhs(n + i) = wg * (row.head(m).dot(fit.coeffs) + row(m));
  }
  out.g_norm = out.rhs.tail(n).lpNorm<Eigen::Infinity>();
  return out;
}

// qbe_residual in extended precision, coefficients included.
Eigen::VectorXd extended_residual(const ModelParams& p, const LambdaState& st) {
  using Real = long double;
  const int n = p.size();
  const Real s = rep_sign(st.rep);
  Eigen::VectorXd F(n);
  for (int j = 0; j < n; ++j) {
    const Real L = st.values(j);
    Real a, c;
    if (p.spin_boson()) {
      const Real v2 = Real(p.V()) * Real(p.V());
      a = s * (Real(p.omega()) - Real(p.epsilon(j))) / v2;
      c = Real(st.rep == Representation::Particle ? st.M : st.M - n + 1) / v2;
    } else {
      a = s * 2 / Real(p.g());
      c = 0;
    }
    Real f = -L * L + a * L + c;
    for (int i = 0; i < n; ++i)
      if (i != j) f += (L - Real(st.values(i))) / (Real(p.epsilon(j)) - Real(p.epsilon(i)));
    F(j) = static_cast<double>(f);
  }
  return F;
}

// Iterative refinement on a converged state. With |Lambda| large the double
// residual sits at its rounding floor before Lambda is accurate to the last
// bits; evaluating it in extended precision recovers them.
void polish(const ModelParams& p, LambdaState& st) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(qbe_jacobian(p, st).transpose());
  if (!(lu.rcond() > 1e-14)) return;
  Eigen::VectorXd F = extended_residual(p, st);
  double raw = F.lpNorm<Eigen::Infinity>();
  for (int k = 0; k < 4 && raw > 0.0; ++k) {
    LambdaState trial = st;
    trial.values -= lu.solve(F);
    const Eigen::VectorXd G = extended_residual(p, trial);
    const double r = G.lpNorm<Eigen::Infinity>();
    if (!(r < raw)) return;
    st = std::move(trial);
    F = G;
    raw = r;
  }
}

// Gauss-Newton on the stacked system; used whenever the state has fewer
// rapidities than levels.
NewtonOutcome stacked_newton(const ModelParams& p, LambdaState st, double tol, int max_iters) {
  NewtonOutcome out;
  const int n = p.size();
  const int m = st.rapidity_count(p);
  detail::PolyFit fit = detail::fit_log_derivative(p.epsilons(), st.values, m);
  StackedSystem sys = stacked(p, st, fit);
  auto merit = [](const StackedSystem& s) { return std::max(s.f_norm, s.g_norm); };
  while ((sys.f_norm > tol || sys.g_norm > 1e-10) && out.iterations < max_iters) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.jac);
    if (qr.rank() < n + m) {
      out.singular = true;
      break;
    }
    const Eigen::VectorXd delta = qr.solve(-sys.rhs);
    LambdaState trial = st;
    detail::PolyFit trial_fit = fit;
    StackedSystem trial_sys;
    double step = 1.0;
    for (int halvings = 0; halvings <= 10; ++halvings) {
      trial.values = st.values + step * delta.head(n);
      trial_fit.coeffs = fit.coeffs + step * delta.tail(m);
      trial_sys = stacked(p, trial, trial_fit);
      if (merit(trial_sys) < merit(sys)) break;
      step *= 0.5;
    }
    ++out.iterations;
    if (!std::isfinite(merit(trial_sys))) break;
    const bool stalled = merit(trial_sys) >= merit(sys);
    st = std::move(trial);
    fit = std::move(trial_fit);
    sys = std::move(trial_sys);
    if (stalled && delta.head(n).lpNorm<Eigen::Infinity>() <= 1e-15 * std::max(1.0, st.values.lpNorm<Eigen::Infinity>()))
      break;
  }
  if (st.values.allFinite()) polish(p, st);
  st.residual = qbe_residual_norm(p, st);
  out.converged = st.residual <= tol && sys.g_norm <= 1e-10;
  out.state = std::move(st);
  return out;
}

}  // namespace

NewtonOutcome newton_iterate(const ModelParams& params, LambdaState state, double tol, int max_iters) {
  if (state.rapidity_count(params) < params.size()) {
    NewtonOutcome out = stacked_newton(params, state, tol, max_iters);
    if (!out.singular) return out;
  }
  NewtonOutcome out;
  double norm = qbe_residual_norm(params, state);
  while (norm > tol && out.iterations < max_iters) {
    const Eigen::MatrixXd Jt = qbe_jacobian(params, state).transpose();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Jt);
    if (!(lu.rcond() > 1e-14)) {
      out.singular = true;
      break;
    }
    const Eigen::VectorXd delta = lu.solve(-qbe_residual(params, state));
    LambdaState trial = state;
    double step = 1.0;
    double trial_norm = 0.0;
    for (int halvings = 0; halvings <= 10; ++halvings) {
      trial.values = state.values + step * delta;
      trial_norm = qbe_residual_norm(params, trial);
      if (trial_norm < norm) break;
      step *= 0.5;
    }
    ++out.iterations;
    if (!std::isfinite(trial_norm)) break;
    const bool stalled = trial_norm >= norm;
    state = std::move(trial);
    norm = trial_norm;
    // Rounding floor: a full-length step that no longer reduces the residual.
    if (stalled && delta.lpNorm<Eigen::Infinity>() <= 1e-15 * std::max(1.0, state.values.lpNorm<Eigen::Infinity>()))
      break;
  }
  if (norm <= tol) polish(params, state);
  state.residual = qbe_residual_norm(params, state);
  out.converged = state.residual <= tol;
  out.state = std::move(state);
  return out;
}

LambdaState newton_solve(const ModelParams& params, Sector sector, Representation rep, const LambdaState& initial,
                         const SolverConfig& cfg) {
  validate_sector(params, sector);
  cfg.validate();
  if (initial.values.size() != params.size())
    throw Error(ErrorKind::Domain, "initial Lambda vector has the wrong length");
  LambdaState start = initial;
  start.M = sector.M;
  start.rep = rep;
  NewtonOutcome out = newton_iterate(params, start, cfg.newton_tol, cfg.max_newton_iters);
  if (out.singular) {
    // Step off the singular point along the null direction of the Jacobian
    // and retry once, if some distance lowers the residual.
    const LambdaState& at = out.state;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(qbe_jacobian(params, at).transpose(), Eigen::ComputeFullV);
    const Eigen::VectorXd dir = svd.matrixV().col(params.size() - 1);
    const double reach = std::max(1.0, at.values.lpNorm<Eigen::Infinity>());
    LambdaState best = at;
    double best_norm = qbe_residual_norm(params, at);
    for (double t = 1e-3; t <= 1e2; t *= 10.0)
      for (double sign : {1.0, -1.0}) {
        LambdaState trial = at;
        trial.values += sign * t * reach * dir;
        const double r = qbe_residual_norm(params, trial);
        if (r < best_norm) {
          best = trial;
          best_norm = r;
        }
      }
    if (best_norm < qbe_residual_norm(params, at)) {
      const int used = out.iterations;
      out = newton_iterate(params, best, cfg.newton_tol, std::max(1, cfg.max_newton_iters - used));
    }
  }
  if (out.singular)
    throw Error(ErrorKind::Singularity, "Jacobian of the quadratic equations is numerically singular",
                out.state.residual);
  if (!out.converged)
    throw Error(ErrorKind::Convergence,
                "Newton did not converge in " + std::to_string(out.iterations) + " iterations",
                out.state.residual);
  return out.state;
}

namespace {

double start_coupling(const ModelParams& params, const SolverConfig& cfg) {
  double c0 = cfg.homotopy_start_coupling > 0.0 ? cfg.homotopy_start_coupling : 1e-2 * params.mean_spacing();
  c0 = std::min(c0, std::abs(params.coupling()));
  return std::copysign(c0, params.coupling());
}

}  // namespace

std::vector<Seed> enumerate_weak_coupling_seeds(const ModelParams& params, Sector sector, const SolverConfig& cfg) {
  validate_sector(params, sector);
  const int n = params.size();
  const Eigen::VectorXd& e = params.epsilons();
  const double c0 = start_coupling(params, cfg);

  if (params.spin_boson()) {
    const double tol = params.degeneracy_tol() * std::max(1.0, e.cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i)
      if (std::abs(params.omega() - e(i)) <= tol)
        throw Error(ErrorKind::SeedDegeneracy, "omega is degenerate with level " + std::to_string(i), e(i));
  }

  std::vector<Seed> seeds;
  const int max_flipped = std::min(sector.M, n);
  const int min_flipped = params.spin_boson() ? 0 : sector.M;
  for (int m = min_flipped; m <= max_flipped; ++m) {
    const int nb = params.spin_boson() ? sector.M - m : 0;
    detail::for_each_subset(n, m, [&](const std::vector<int>& flipped) {
      std::vector<bool> in(n, false);
      for (int i : flipped) in[i] = true;
      Seed s;
      s.label = BasisState{nb, flipped};
      s.coupling = c0;
      s.state.M = sector.M;
      s.state.rep = Representation::Particle;
      s.state.values.resize(n);
      for (int i = 0; i < n; ++i) {
        // Lambda_i = (divergent part) + (finite part), leading two orders in
        // the coupling.
        double v = 0.0;
        if (!in[i]) {
          for (int j : flipped) v += 1.0 / (e(i) - e(j));
          if (params.spin_boson()) v += nb / (e(i) - params.omega());
        } else {
          for (int j = 0; j < n; ++j)
            if (!in[j]) v += 1.0 / (e(i) - e(j));
          if (params.spin_boson())
            v += (params.omega() - e(i)) / (c0 * c0) + (nb + 1) / (params.omega() - e(i));
          else
            v += 2.0 / c0;
        }
        s.state.values(i) = v;
      }
      seeds.push_back(std::move(s));
    });
  }
  return seeds;
}

namespace {

struct Path {
  ModelParams from;
  ModelParams to;
  double log_ratio = 0.0;  // log(coupling_to / coupling_from)
  double domega = 0.0;

  Path(const ModelParams& a, const ModelParams& b) : from(a), to(b) {
    if (a.realization() != b.realization() || a.size() != b.size() || a.epsilons() != b.epsilons())
      throw Error(ErrorKind::Continuation, "continuation endpoints must share realization and levels");
    if ((a.coupling() > 0) != (b.coupling() > 0))
      throw Error(ErrorKind::Continuation, "continuation cannot cross zero coupling");
    log_ratio = std::log(b.coupling() / a.coupling());
    domega = b.omega() - a.omega();
  }

  ModelParams at(double t) const {
    if (t >= 1.0) return to;
    ModelParams p = from.with_coupling(from.coupling() * std::exp(t * log_ratio));
    if (domega != 0.0) p = p.with_omega(from.omega() + t * domega);
    return p;
  }

  Eigen::VectorXd tangent(double t, const LambdaState& st) const {
    const ModelParams p = at(t);
    const Eigen::VectorXd dF = parameter_derivative(p, st, p.coupling() * log_ratio, domega);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(qbe_jacobian(p, st).transpose());
    return lu.solve(-dF);
  }
};

// With fewer rapidities than levels the quadratic equations admit solutions
// that are not log-derivatives of any polynomial. Physical branches cross
// them, so every accepted step is checked against the polynomial fit.
bool on_bethe_branch(const ModelParams& p, const LambdaState& st) {
  const int m = st.rapidity_count(p);
  if (m >= p.size()) return true;
  return detail::fit_log_derivative(p.epsilons(), st.values, m).residual <= 1e-7;
}

// Predictor-corrector from t0 to t1 with step subdivision. Returns false when
// the step would have to shrink below `min_h`.
bool advance(const Path& path, LambdaState& st, double t0, double t1, double min_h, const SolverConfig& cfg) {
  double t = t0;
  double h = t1 - t0;
  const double h_max = h;
  while (t < t1) {
    h = std::min(h, t1 - t);
    const Eigen::VectorXd dx = path.tangent(t, st);
    LambdaState pred = st;
    if (dx.allFinite()) pred.values += h * dx;
    const ModelParams p = path.at(t + h);
    NewtonOutcome out = newton_iterate(p, pred, cfg.newton_tol, std::min(cfg.max_newton_iters, 12));
    const double predicted = (pred.values - st.values).lpNorm<Eigen::Infinity>();
    const double corrected = (out.state.values - pred.values).lpNorm<Eigen::Infinity>();
    const double slack = 1e-8 * std::max(1.0, st.values.lpNorm<Eigen::Infinity>());
    if (out.converged && corrected <= 0.25 * predicted + slack && on_bethe_branch(p, out.state)) {
      st = std::move(out.state);
      t = (t1 - (t + h) <= 1e-15) ? t1 : t + h;
      if (out.iterations <= 3) h = std::min(2.0 * h, h_max);
    } else {
      h *= cfg.step_backoff_factor;
      if (h < min_h) return false;
    }
  }
  return true;
}

double path_coupling(const Path& path, double t) { return path.from.coupling() * std::exp(t * path.log_ratio); }

void check_collisions(const std::vector<LambdaState>& states, double coupling) {
  for (std::size_t a = 0; a < states.size(); ++a)
    for (std::size_t b = a + 1; b < states.size(); ++b)
      if ((states[a].values - states[b].values).lpNorm<Eigen::Infinity>() <= 1e-6)
        throw Error(ErrorKind::BranchCollision,
                    "branches " + std::to_string(a) + " and " + std::to_string(b) + " collided", coupling);
}

std::vector<LambdaState> continue_on_path(const Path& path, std::vector<LambdaState> states, const SolverConfig& cfg,
                                          int steps) {
  const double h0 = 1.0 / steps;
  const double min_h = h0 * cfg.min_step_fraction;
  for (int k = 0; k < steps; ++k) {
    const double t0 = k * h0;
    const double t1 = (k + 1 == steps) ? 1.0 : (k + 1) * h0;
    for (std::size_t s = 0; s < states.size(); ++s) {
      if (!advance(path, states[s], t0, t1, min_h, cfg))
        throw Error(ErrorKind::Continuation,
                    "continuation of branch " + std::to_string(s) + " failed near coupling " +
                        std::to_string(path_coupling(path, t0)),
                    path_coupling(path, t0));
    }
    check_collisions(states, path_coupling(path, t1));
  }
  return states;
}

}  // namespace

std::vector<LambdaState> continue_states(const ModelParams& from, const std::vector<LambdaState>& states,
                                         const ModelParams& to, const SolverConfig& cfg, int steps) {
  cfg.validate();
  if (steps <= 0) throw Error(ErrorKind::Config, "continuation needs a positive number of steps");
  for (const auto& s : states)
    if (s.values.size() != from.size()) throw Error(ErrorKind::Domain, "state has the wrong number of levels");
  Path path(from, to);
  if (path.log_ratio == 0.0 && path.domega == 0.0) {
    std::vector<LambdaState> out;
    for (const auto& s : states) out.push_back(newton_solve(to, Sector{s.M}, s.rep, s, cfg));
    check_collisions(out, to.coupling());
    return out;
  }
  return continue_on_path(path, states, cfg, steps);
}

namespace {

// Resonant omega: an omega halfway to the nearest other level, or half a
// spacing off for a single level. Empty when omega is not resonant.
std::optional<double> detuned_omega(const ModelParams& p) {
  if (!p.spin_boson()) return std::nullopt;
  const Eigen::VectorXd& e = p.epsilons();
  const double tol = p.degeneracy_tol() * std::max(1.0, e.cwiseAbs().maxCoeff());
  int hit = -1;
  for (int i = 0; i < p.size(); ++i)
    if (std::abs(p.omega() - e(i)) <= tol) hit = i;
  if (hit < 0) return std::nullopt;
  double best = p.omega() + 0.5 * p.mean_spacing();
  if (p.size() > 1) {
    double below = -INFINITY, above = INFINITY;
    for (int i = 0; i < p.size(); ++i) {
      if (i == hit) continue;
      if (e(i) < e(hit)) below = std::max(below, e(i));
      else above = std::min(above, e(i));
    }
    const double up = std::isfinite(above) ? 0.5 * (above - e(hit)) : INFINITY;
    const double down = std::isfinite(below) ? 0.5 * (e(hit) - below) : INFINITY;
    best = up >= down ? e(hit) + std::min(up, 4.0 * down) : e(hit) - std::min(down, 4.0 * up);
  }
  return best;
}

}  // namespace

std::vector<LabeledState> solve_sector_labeled(const ModelParams& params, Sector sector, const SolverConfig& cfg) {
  cfg.validate();
  if (const auto w = detuned_omega(params)) {
    // Seeds are degenerate at resonance: solve off resonance, then follow omega.
    const ModelParams off = params.with_omega(*w);
    std::vector<LabeledState> solved = solve_sector_labeled(off, sector, cfg);
    std::vector<LambdaState> states;
    for (const auto& ls : solved) states.push_back(ls.state);
    states = continue_on_path(Path(off, params), states, cfg, cfg.homotopy_steps);
    std::vector<Eigen::VectorXd> charges;
    for (const auto& st : states) charges.push_back(charges_from_lambda(params, st));
    std::vector<LabeledState> out;
    for (int idx : charge_order(charges)) out.push_back({solved[idx].label, states[idx]});
    return out;
  }
  const std::vector<Seed> seeds = enumerate_weak_coupling_seeds(params, sector, cfg);
  const ModelParams start = params.with_coupling(seeds.front().coupling);

  std::vector<LambdaState> states;
  states.reserve(seeds.size());
  for (const Seed& s : seeds) {
    NewtonOutcome out = newton_iterate(start, s.state, cfg.newton_tol, cfg.max_newton_iters);
    if (!out.converged || !on_bethe_branch(start, out.state))
      throw Error(ErrorKind::Continuation, "seed " + to_string(s.label) + " did not converge at weak coupling",
                  start.coupling());
    states.push_back(std::move(out.state));
  }
  check_collisions(states, start.coupling());
  if (start.coupling() != params.coupling()) states = continue_on_path(Path(start, params), states, cfg, cfg.homotopy_steps);

  std::vector<Eigen::VectorXd> charges;
  for (const auto& st : states) charges.push_back(charges_from_lambda(params, st));
  std::vector<LabeledState> out;
  for (int idx : charge_order(charges)) out.push_back({seeds[idx].label, states[idx]});
  return out;
}

std::vector<LambdaState> solve_sector(const ModelParams& params, Sector sector, Representation rep,
                                      const SolverConfig& cfg) {
  std::vector<LambdaState> out;
  for (auto& ls : solve_sector_labeled(params, sector, cfg))
    out.push_back(rep == Representation::Particle ? std::move(ls.state) : hole_from_particle(params, ls.state));
  return out;
}

Eigen::VectorXd charges_from_lambda(const ModelParams& params, const LambdaState& state) {
  const Eigen::VectorXd& L = state.values;
  if (L.size() != params.size()) throw Error(ErrorKind::Domain, "Lambda vector has the wrong length");
  if (params.spin_boson()) {
    const double v2 = params.V() * params.V();
    const double s = rep_sign(state.rep);
    // particle: -(e - w)/2 ; hole: -(w - e)/2
    return (0.5 * v2) * params.level_sums() - (0.5 * s) * (params.epsilons().array() - params.omega()).matrix() -
           v2 * L;
  }
  const double s = rep_sign(state.rep);
  return (-L + 0.5 * params.level_sums()).array() + s / params.g();
}

namespace {

Eigen::VectorXd representation_shift(const ModelParams& params) {
  if (params.spin_boson())
    return (params.omega() - params.epsilons().array()) / (params.V() * params.V());
  return Eigen::VectorXd::Constant(params.size(), 2.0 / params.g());
}

}  // namespace

LambdaState hole_from_particle(const ModelParams& params, const LambdaState& state) {
  if (state.rep != Representation::Particle) throw Error(ErrorKind::Domain, "expected a particle-representation state");
  LambdaState out = state;
  out.rep = Representation::Hole;
  out.values = state.values - representation_shift(params);
  out.residual = qbe_residual_norm(params, out);
  return out;
}

LambdaState particle_from_hole(const ModelParams& params, const LambdaState& state) {
  if (state.rep != Representation::Hole) throw Error(ErrorKind::Domain, "expected a hole-representation state");
  LambdaState out = state;
  out.rep = Representation::Particle;
  out.values = state.values + representation_shift(params);
  out.residual = qbe_residual_norm(params, out);
  return out;
}

Eigen::VectorXd lambda_derivatives(const ModelParams& params, const LambdaState& state) {
  Eigen::VectorXd dF;
  if (params.spin_boson()) {
    dF = parameter_derivative(params, state, 0.0, 1.0);
  } else {
    // V = 1/g, a = 2 s V
    dF = 2.0 * rep_sign(state.rep) * state.values;
  }
  const int n = params.size();
  const int m = state.rapidity_count(params);
  if (m < n) {
    // Differentiate the stacked system; the log-derivative rows carry no
    // explicit parameter dependence.
    const StackedSystem sys = stacked(params, state, detail::fit_log_derivative(params.epsilons(), state.values, m));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * n);
    rhs.head(n) = -residual_weights(params, state).cwiseProduct(dF);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.jac);
    if (qr.rank() < n + m)
      throw Error(ErrorKind::DegenerateState, "derivative system is singular for this state", qr.rank());
    return qr.solve(rhs).head(n);
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(qbe_jacobian(params, state).transpose());
  if (!(lu.rcond() > 1e-14))
    throw Error(ErrorKind::DegenerateState, "derivative system is singular for this state", lu.rcond());
  return lu.solve(-dF);
}

std::vector<int> charge_order(const std::vector<Eigen::VectorXd>& charges) {
  std::vector<int> idx(charges.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto key = [](double x) { return std::round(x * 1e9); };
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    const auto& x = charges[a];
    const auto& y = charges[b];
    for (int i = 0; i < x.size(); ++i) {
      const double kx = key(x(i)), ky = key(y(i));
      if (kx != ky) return kx < ky;
    }
    return false;
  });
  return idx;
}

}  // namespace djcg
