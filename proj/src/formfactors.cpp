#include "djcg/formfactors.hpp"

#include <cmath>

#include "djcg/determinants.hpp"
#include "djcg/error.hpp"

namespace djcg {

namespace {

void check_site(const ModelParams& params, int k) {
  if (k < 0 || k >= params.size()) throw Error(ErrorKind::Domain, "site index out of range");
}

void check_raising(const EigenstateRecord& bra, const EigenstateRecord& ket) {
  if (bra.M() != ket.M() + 1)
    throw Error(ErrorKind::SectorMismatch, "raising form factor needs bra.M = ket.M + 1 (got " +
                                               std::to_string(bra.M()) + ", " + std::to_string(ket.M()) + ")");
}

void check_same(const EigenstateRecord& bra, const EigenstateRecord& ket) {
  if (bra.M() != ket.M())
    throw Error(ErrorKind::SectorMismatch, "form factor needs states of one sector (got " + std::to_string(bra.M()) +
                                               ", " + std::to_string(ket.M()) + ")");
}

void check_derivatives(const ModelParams& params, const EigenstateRecord& r) {
  if (r.dlambda.size() != params.size()) throw Error(ErrorKind::Domain, "record has no Lambda derivatives");
}

FormFactor finish(double raw, const EigenstateRecord& bra, const EigenstateRecord& ket) {
  return {raw, raw / (bra.n_mu() * ket.n_lambda())};
}

FormFactor transpose(FormFactor f, const EigenstateRecord& bra, const EigenstateRecord& ket) {
  // Normalized matrices are real, so <bra|A^dag|ket> = <ket|A|bra>; the
  // unnormalized value is rescaled to the (bra, ket) representation pair.
  return {f.normalized * bra.n_mu() * ket.n_lambda(), f.normalized};
}

// Mixed matrix of the off-diagonal overlap: Lambda^lambda_ket + Lambda^mu_bra.
Eigen::MatrixXd mixed_matrix(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket) {
  const Eigen::VectorXd sum = ket.lambda_particle.values + bra.lambda_hole.values;
  return domain_wall_matrix(params, sum, all_sites(params));
}

}  // namespace

FormFactor ff_splus(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket, int k) {
  check_site(params, k);
  check_raising(bra, ket);
  std::vector<int> sites;
  for (int i = 0; i < params.size(); ++i)
    if (i != k) sites.push_back(i);
  const Eigen::VectorXd sum = ket.lambda_particle.values + bra.lambda_hole.values;
  LogDet<double> d = log_determinant(domain_wall_matrix(params, sum, sites));
  d.log_abs += log_overlap_prefactor(params, bra.M(), params.size() - 1);
  return finish(d.value(), bra, ket);
}

FormFactor ff_bdagger(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket) {
  if (!params.spin_boson()) throw Error(ErrorKind::Realization, "b^dag form factor on a spin-only model");
  check_raising(bra, ket);
  LogDet<double> d = log_determinant(mixed_matrix(params, bra, ket));
  d.log_abs += log_overlap_prefactor(params, bra.M(), params.size());
  return finish(d.value(), bra, ket);
}

FormFactor ff_sminus(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket, int k) {
  return transpose(ff_splus(params, ket, bra, k), bra, ket);
}

FormFactor ff_b(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket) {
  return transpose(ff_bdagger(params, ket, bra), bra, ket);
}

double ff_sz_diagonal(const ModelParams& params, const EigenstateRecord& state, int k) {
  check_site(params, k);
  check_derivatives(params, state);
  if (!params.spin_boson()) throw Error(ErrorKind::Realization, "use ff_sz_spin_only on a spin-only model");
  return -0.5 + params.V() * params.V() * state.dlambda(k);
}

double overlap_omega_derivative(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket) {
  check_same(bra, ket);
  check_derivatives(params, ket);
  if ((bra.charges - ket.charges).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, ket.charges.cwiseAbs().maxCoeff()))
    throw Error(ErrorKind::DegenerateState, "identical states; use the diagonal form factor");
  const Eigen::MatrixXd J = mixed_matrix(params, bra, ket);
  // Each minor is evaluated relative to the shared prefactor.
  const double log_pref = log_overlap_prefactor(params, ket.M(), params.size());
  double sum = 0.0;
  for (int k = 0; k < params.size(); ++k) {
    if (ket.dlambda(k) == 0.0) continue;
    LogDet<double> m = log_determinant(remove_row_col(J, k));
    m.log_abs += log_pref;
    sum += ket.dlambda(k) * m.value();
  }
  return -sum;
}

FormFactor ff_sz_offdiagonal(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket,
                             int k) {
  check_site(params, k);
  if (!params.spin_boson()) throw Error(ErrorKind::Realization, "use ff_sz_spin_only on a spin-only model");
  const double v2 = params.V() * params.V();
  const double diff = params.epsilon(k) - params.omega() + v2 * ket.lambda_particle.values(k) -
                      v2 * bra.lambda_hole.values(k);
  return finish(diff * overlap_omega_derivative(params, bra, ket), bra, ket);
}

FormFactor ff_number(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket,
                     bool same_state) {
  if (!params.spin_boson()) throw Error(ErrorKind::Realization, "b^dag b form factor on a spin-only model");
  check_same(bra, ket);
  if (same_state) {
    check_derivatives(params, ket);
    const double v = ket.M() - params.V() * params.V() * ket.dlambda.sum();
    return {v * bra.n_mu() * ket.n_lambda(), v};
  }
  // r^n - r^m summed over sites
  const double v2 = params.V() * params.V();
  double diff = 0.0;
  for (int k = 0; k < params.size(); ++k)
    diff -= params.epsilon(k) - params.omega() + v2 * ket.lambda_particle.values(k) - v2 * bra.lambda_hole.values(k);
  return finish(diff * overlap_omega_derivative(params, bra, ket), bra, ket);
}

FormFactor ff_sz_spin_only(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket, int k,
                           bool same_state) {
  if (params.spin_boson()) throw Error(ErrorKind::Realization, "ff_sz_spin_only needs a spin-only model");
  check_site(params, k);
  check_same(bra, ket);
  if (same_state) {
    check_derivatives(params, ket);
    const double v = -0.5 + 0.5 * ket.dlambda(k);
    return {v * bra.n_mu() * ket.n_lambda(), v};
  }
  const double diff = ket.lambda_particle.values(k) - bra.lambda_hole.values(k) - 2.0 / params.g();
  return finish(0.5 * diff * overlap_omega_derivative(params, bra, ket), bra, ket);
}

FormFactor ff_sz(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket, int k,
                 bool same_state) {
  if (!params.spin_boson()) return ff_sz_spin_only(params, bra, ket, k, same_state);
  if (same_state) {
    check_same(bra, ket);
    const double v = ff_sz_diagonal(params, ket, k);
    return {v * bra.n_mu() * ket.n_lambda(), v};
  }
  return ff_sz_offdiagonal(params, bra, ket, k);
}

}  // namespace djcg
