#include "djcg/repmap.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "djcg/error.hpp"
#include "polyfit.hpp"

namespace djcg {

namespace {

// Horner evaluation of the monic polynomial and its derivative.
void eval_monic(const Eigen::VectorXd& a, Complex x, Complex& p, Complex& dp) {
  p = 1.0;
  dp = 0.0;
  for (Eigen::Index k = a.size() - 1; k >= 0; --k) {
    dp = dp * x + p;
    p = p * x + a(k);
  }
}

}  // namespace

RapiditySet rapidities_from_lambda(const ModelParams& params, const LambdaState& state) {
  const int n = params.size();
  if (state.values.size() != n) throw Error(ErrorKind::Domain, "Lambda vector length does not match the number of levels");
  const int m = state.rapidity_count(params);
  if (m > n)
    throw Error(ErrorKind::Underdetermined,
                "state has " + std::to_string(m) + " particle rapidities but only " + std::to_string(n) +
                    " levels; use the hole representation",
                m);
  RapiditySet out;
  out.rep = state.rep;
  if (m == 0) {
    const double worst = state.values.cwiseAbs().maxCoeff();
    if (worst > 1e-8) throw Error(ErrorKind::Inconsistency, "Lambda must vanish without rapidities", worst);
    return out;
  }
  const detail::PolyFit fit = detail::fit_log_derivative(params.epsilons(), state.values, m);
  if (!(fit.residual <= 1e-8))
    throw Error(ErrorKind::Inconsistency, "Lambda is not the log-derivative of a degree-" + std::to_string(m) +
                                              " polynomial (not a Bethe solution)",
                fit.residual);

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(m, m);
  companion.block(1, 0, m - 1, m - 1).setIdentity();
  companion.col(m - 1) = -fit.coeffs;
  Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::Convergence, "companion eigenvalue solver failed");

  for (Eigen::Index i = 0; i < m; ++i) {
    Complex x = es.eigenvalues()(i);
    const bool real = x.imag() == 0.0;
    for (int it = 0; it < 3; ++it) {  // Newton polish on P
      Complex p, dp;
      eval_monic(fit.coeffs, x, p, dp);
      if (std::abs(dp) == 0.0) break;
      const Complex step = p / dp;
      if (!(std::abs(step) < 1e-6 * std::max(1.0, std::abs(x)))) break;
      x -= step;
      if (real) x.imag(0.0);
    }
    out.values.push_back(fit.center + fit.scale * x);
  }
  // Conjugate pairs leave the real Schur form exactly paired; re-pair after
  // the independent polishing.
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (out.values[i].imag() <= 0.0) continue;
    std::size_t best = i;
    double dist = INFINITY;
    for (std::size_t j = 0; j < out.values.size(); ++j) {
      const double d = std::abs(out.values[j] - std::conj(out.values[i]));
      if (j != i && out.values[j].imag() < 0.0 && d < dist) {
        dist = d;
        best = j;
      }
    }
    if (best != i) {
      const Complex mid = 0.5 * (out.values[i] + std::conj(out.values[best]));
      out.values[i] = mid;
      out.values[best] = std::conj(mid);
    }
  }
  return out;
}

std::vector<Complex> rapidity_bethe_residual(const ModelParams& params, const RapiditySet& rap, Sector sector) {
  const int n = params.size();
  const auto& z = rap.values;
  const std::size_t m = z.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (int k = 0; k < n; ++k)
      if (std::abs(z[i] - params.epsilon(k)) <= 1e-10)
        throw Error(ErrorKind::Pole, "rapidity coincides with a level energy", z[i].real());
    for (std::size_t j = i + 1; j < m; ++j)
      if (std::abs(z[i] - z[j]) <= 1e-10) throw Error(ErrorKind::Pole, "coincident rapidities", z[i].real());
  }
  const bool particle = rap.rep == Representation::Particle;
  std::vector<Complex> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    Complex level = 0.0, mutual = 0.0;
    for (int k = 0; k < n; ++k) level += 1.0 / (z[j] - params.epsilon(k));
    for (std::size_t a = 0; a < m; ++a)
      if (a != j) mutual += 1.0 / (z[j] - z[a]);
    if (params.spin_boson()) {
      const double V = params.V();
      if (particle) {
        out[j] = (params.omega() - z[j]) / (2.0 * V * V) + 0.5 * level - mutual;
      } else {
        // B_j + ((M+1)/V) prod_k (e_k - mu_j) / prod_{a!=j} (mu_a - mu_j)
        const Complex B = (z[j] - params.omega()) / V + V * level - 2.0 * V * mutual;
        Complex ratio = (sector.M + 1.0) / V;
        for (int k = 0; k < n; ++k) ratio *= params.epsilon(k) - z[j];
        for (std::size_t a = 0; a < m; ++a)
          if (a != j) ratio /= z[a] - z[j];
        out[j] = B + ratio;
      }
    } else {
      const double s = particle ? 1.0 : -1.0;
      out[j] = 0.5 * level + s / params.g() - mutual;
    }
  }
  return out;
}

Complex generating_eigenvalue(const ModelParams& params, const EigenstateRecord& record, Complex u) {
  const int n = params.size();
  if (record.charges.size() != n) throw Error(ErrorKind::Domain, "record has no charges");
  Complex poles = 0.0, doubles = 0.0;
  for (int k = 0; k < n; ++k) {
    const Complex d = u - params.epsilon(k);
    if (std::abs(d) <= 1e-10) throw Error(ErrorKind::Pole, "generating function evaluated at a level energy", u.real());
    poles += record.charges(k) / d;
    doubles += 1.0 / (d * d);
  }
  if (params.spin_boson()) {
    const double V = params.V();
    const Complex shift = (params.omega() - u) / (2.0 * V);
    return poles + double(record.M()) - 0.5 * n + 0.5 + shift * shift + 0.75 * V * V * doubles;
  }
  const double invg = 1.0 / params.g();
  return poles + invg * invg + 0.75 * doubles;
}

}  // namespace djcg
