#pragma once

#include <vector>

#include <Eigen/Dense>

#include "djcg/model.hpp"

namespace djcg {

/// Tuning knobs for Newton polishing and coupling continuation.
struct SolverConfig {
  double newton_tol = 1e-13;  // on the scaled residual, see qbe_residual_norm
  int max_newton_iters = 50;
  /// Weak-coupling starting point; <= 0 selects 1e-2 * mean level spacing.
  double homotopy_start_coupling = 0.0;
  int homotopy_steps = 64;
  double step_backoff_factor = 0.5;
  double min_step_fraction = 1e-4;

  void validate() const;
};

/// Raw residuals F_j of the quadratic equations selected by the realization
/// and the state's representation. For the spin-boson particle form
///   F_j = -L_j^2 + sum_{i!=j} (L_j - L_i)/(e_j - e_i) - (e_j - w) L_j / V^2 + M / V^2.
Eigen::VectorXd qbe_residual(const ModelParams& params, const LambdaState& state);

/// max_j |F_j| / max(1, s_j), where s_j sums the magnitudes of the terms of
/// equation j. Equals the plain infinity norm when every term is O(1) and
/// stays meaningful when Lambda ~ 1/V^2 near weak coupling.
double qbe_residual_norm(const ModelParams& params, const LambdaState& state);

/// J(i, j) = dF_j / dLambda_i.
Eigen::MatrixXd qbe_jacobian(const ModelParams& params, const LambdaState& state);

/// Damped Newton on the quadratic equations. Throws Convergence (value = last
/// scaled residual) or Singularity.
LambdaState newton_solve(const ModelParams& params, Sector sector, Representation rep,
                         const LambdaState& initial, const SolverConfig& cfg = {});

struct NewtonOutcome {
  LambdaState state;
  int iterations = 0;
  bool converged = false;
  bool singular = false;
};

/// Non-throwing Newton used inside continuation loops. With fewer rapidities
/// than levels the log-derivative conditions on a degree-M polynomial are
/// solved together with the quadratic equations (Gauss-Newton).
NewtonOutcome newton_iterate(const ModelParams& params, LambdaState state, double tol, int max_iters);

struct Seed {
  BasisState label;
  LambdaState state;  // particle representation at `coupling`
  double coupling = 0.0;
};

/// One weak-coupling seed per unperturbed product state of the sector, in
/// SectorBasis order (boson count descending, flipped set ascending).
std::vector<Seed> enumerate_weak_coupling_seeds(const ModelParams& params, Sector sector,
                                                const SolverConfig& cfg = {});

struct LabeledState {
  BasisState label;  // weak-coupling product state the branch starts from
  LambdaState state;
};

/// Every eigenstate of the sector, continued from weak coupling, sorted by
/// charge vector. Throws BranchCollision (value = coupling) or Continuation.
std::vector<LabeledState> solve_sector_labeled(const ModelParams& params, Sector sector,
                                               const SolverConfig& cfg = {});
std::vector<LambdaState> solve_sector(const ModelParams& params, Sector sector,
                                      Representation rep = Representation::Particle,
                                      const SolverConfig& cfg = {});

/// Follows each state from `from` to `to`, which may differ in the coupling
/// (same sign, geometric path) and/or omega (linear path). `steps` is the
/// number of base grid intervals; each may be subdivided on Newton trouble.
std::vector<LambdaState> continue_states(const ModelParams& from, const std::vector<LambdaState>& states,
                                         const ModelParams& to, const SolverConfig& cfg, int steps);

/// Eigenvalues r_i of the conserved charges.
Eigen::VectorXd charges_from_lambda(const ModelParams& params, const LambdaState& state);

LambdaState hole_from_particle(const ModelParams& params, const LambdaState& state);
LambdaState particle_from_hole(const ModelParams& params, const LambdaState& state);

/// dLambda/domega (SpinBoson) or dLambda/dV with V = 1/g (SpinOnly), from the
/// linear system obtained by differentiating the quadratic equations.
Eigen::VectorXd lambda_derivatives(const ModelParams& params, const LambdaState& state);

/// Indices that sort charge vectors lexicographically after rounding to 1e-9.
std::vector<int> charge_order(const std::vector<Eigen::VectorXd>& charges);

}  // namespace djcg
