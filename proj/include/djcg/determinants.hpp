#pragma once

#include <vector>

#include <Eigen/Dense>

#include "djcg/linalg.hpp"
#include "djcg/model.hpp"

namespace djcg {

/// Matrix J over the sites `sites`:
///   J_aa = sum_{c in sites, c != a} 1/(e_a - e_c) - lambda_a,   J_ab = 1/(e_a - e_b).
/// `lambda` is indexed by site over all N levels.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> domain_wall_matrix(
    const ModelParams& params, const Eigen::MatrixBase<Derived>& lambda, const std::vector<int>& sites) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index m = static_cast<Eigen::Index>(sites.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> J(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    Scalar diag = -lambda(sites[a]);
    for (Eigen::Index b = 0; b < m; ++b) {
      if (a == b) continue;
      const double inv = params.inverse_differences()(sites[a], sites[b]);
      J(a, b) = inv;
      diag += inv;
    }
    J(a, a) = diag;
  }
  return J;
}

std::vector<int> all_sites(const ModelParams& params);
std::vector<int> complement_sites(const ModelParams& params, const std::vector<int>& sites);

/// log of sqrt(n!) V^m (V = 1 for SpinOnly, where the boson factor is absent).
double log_overlap_prefactor(const ModelParams& params, int n_factorial, int m);

/// <n_b; up on flipped | lambda> from the particle Lambda of the state
/// (Lambda summed over ALL rapidities): sqrt(n_b!) V^|flipped| det J.
/// Throws SectorMismatch when the basis state lies in another sector.
template <typename Scalar>
LogDet<Scalar> partition_log(const ModelParams& params, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& lambda,
                             const BasisState& basis) {
  LogDet<Scalar> d = log_determinant(domain_wall_matrix(params, lambda, basis.flipped));
  d.log_abs += log_overlap_prefactor(params, params.spin_boson() ? basis.n_b : 0,
                                     static_cast<int>(basis.flipped.size()));
  return d;
}

double partition_function(const ModelParams& params, const LambdaState& particle, const BasisState& basis);
/// Same from explicit rapidities; the value must be real (conjugation-closed set).
double partition_function(const ModelParams& params, const RapiditySet& rapidities, const BasisState& basis);

/// Permutation-sum expansion of the same overlap. At most 8 excitations.
double brute_force_partition(const ModelParams& params, const RapiditySet& rapidities, const BasisState& basis);

/// <n_b; up on flipped | mu> from the hole Lambda: sqrt(M!/n_b!) V^|D| det J_D
/// with D the sites left down (SpinOnly: det J_D).
double hole_overlap(const ModelParams& params, const LambdaState& hole, const BasisState& basis);

/// <mu_bra | lambda_ket> for two states of one sector:
/// sqrt(M!) V^N det J(Lambda^lambda_ket + Lambda^mu_bra).
LogDet<double> scalar_product_log(const ModelParams& params, const LambdaState& bra_hole,
                                  const LambdaState& ket_particle);
double scalar_product(const ModelParams& params, const LambdaState& bra_hole, const LambdaState& ket_particle);

/// N_lambda N_mu of one eigenstate; negative when the two representations
/// differ by a pi phase.
double norm_product(const ModelParams& params, const EigenstateRecord& record);

/// N_lambda / N_mu = <ref|lambda> / <ref|mu>. Throws UnreachableReference when
/// the state has (numerically) no weight on `reference`.
double norm_ratio(const ModelParams& params, const EigenstateRecord& record, const BasisState& reference);

/// min(M, N) spins up at the lowest levels, the rest in the boson.
BasisState default_reference(const ModelParams& params, Sector sector);

struct RatioChoice {
  BasisState reference;
  double ratio = 0.0;
  double weight = 0.0;  // |<ref|psi>|^2 for the normalized state
};

/// Tries default_reference first, then the sector basis in order, and keeps
/// the first reference carrying weight >= 1e-3 (else the heaviest one).
RatioChoice choose_norm_ratio(const ModelParams& params, const EigenstateRecord& record);

/// det of `J` without row and column k (0-based); 1 for a 1x1 matrix.
double minor_determinant(const Eigen::MatrixXd& J, int k);

/// Hole map, charges, Lambda derivatives, norm product and ratio of one
/// particle-representation state.
EigenstateRecord make_record(const ModelParams& params, const LambdaState& particle);

}  // namespace djcg
