#pragma once

#include "djcg/model.hpp"

namespace djcg {

struct FormFactor {
  double unnormalized = 0.0;  // <mu-rep(bra)| O |lambda-rep(ket)>
  double normalized = 0.0;    // divided by N_mu(bra) N_lambda(ket)
};

/// <bra| S^+_k |ket>, bra one excitation above ket.
FormFactor ff_splus(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket, int k);

/// <bra| b^dag |ket>, SpinBoson only.
FormFactor ff_bdagger(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket);

/// S^- and b as transposes of the raising form factors.
FormFactor ff_sminus(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket, int k);
FormFactor ff_b(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket);

/// Normalized <S^z_k> = -1/2 + V^2 dLambda_k/domega (Hellmann-Feynman).
double ff_sz_diagonal(const ModelParams& params, const EigenstateRecord& state, int k);

/// d/d(domega) <mu_m(omega)|lambda_n(omega + domega)> at domega = 0,
///   -sqrt(M!) V^N sum_k dLambda^lambda_n(e_k)/domega * minor_k(J(Lambda^lambda_n + Lambda^mu_m)).
/// SpinOnly: derivative in V = 1/g, no prefactor.
double overlap_omega_derivative(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket);

/// <m| S^z_k |n> for m != n, via the charge difference times the overlap derivative.
FormFactor ff_sz_offdiagonal(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket,
                             int k);

/// <m| b^dag b |n>; diagonal M - V^2 sum_k dLambda_k/domega when `same_state`.
FormFactor ff_number(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket,
                     bool same_state);

/// SpinOnly S^z_k, diagonal (same_state) or off-diagonal.
FormFactor ff_sz_spin_only(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket, int k,
                           bool same_state);

/// Dispatches on the realization: SpinBoson off-diagonal or diagonal S^z_k.
FormFactor ff_sz(const ModelParams& params, const EigenstateRecord& bra, const EigenstateRecord& ket, int k,
                 bool same_state);

}  // namespace djcg
