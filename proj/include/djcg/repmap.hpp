#pragma once

#include <vector>

#include "djcg/model.hpp"

namespace djcg {

/// Roots of the monic polynomial P with P'(eps_i) = Lambda_i P(eps_i).
/// Throws Underdetermined when the state has more rapidities than levels and
/// Inconsistency when the fit residual exceeds 1e-8.
RapiditySet rapidities_from_lambda(const ModelParams& params, const LambdaState& state);

/// Per-rapidity residual of the Bethe equations in "lhs - rhs" form. The
/// sector is needed by the spin-boson hole equations only.
std::vector<Complex> rapidity_bethe_residual(const ModelParams& params, const RapiditySet& rapidities, Sector sector);

/// Eigenvalue of the generating function S^2(u) on the state.
Complex generating_eigenvalue(const ModelParams& params, const EigenstateRecord& record, Complex u);

}  // namespace djcg
