#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "djcg/error.hpp"

namespace djcg {

using Complex = std::complex<double>;

enum class Realization { SpinBoson, SpinOnly };
enum class Representation { Particle, Hole };

std::string to_string(Realization r);
std::string to_string(Representation r);

/// Minimum relative level separation, in units of max|eps|.
inline constexpr double kDefaultDegeneracyTol = 1e-8;

/// Parameters of one integrable model.
///
/// SpinBoson: N spins-1/2 at energies eps_i coupled with strength V to one
/// bosonic mode of frequency omega. SpinOnly: the rational Gaudin magnet with
/// coupling g. Energies are kept sorted ascending; every per-site vector in the
/// library is indexed in that order.
class ModelParams {
 public:
  static ModelParams spin_boson(std::vector<double> epsilons, double omega, double V,
                                double degeneracy_tol = kDefaultDegeneracyTol);
  static ModelParams spin_only(std::vector<double> epsilons, double g,
                               double degeneracy_tol = kDefaultDegeneracyTol);

  Realization realization() const { return realization_; }
  bool spin_boson() const { return realization_ == Realization::SpinBoson; }
  int size() const { return static_cast<int>(eps_.size()); }

  const Eigen::VectorXd& epsilons() const { return eps_; }
  double epsilon(int i) const { return eps_(i); }
  double omega() const { return omega_; }
  double V() const { return coupling_; }
  double g() const { return coupling_; }
  /// V for SpinBoson, g for SpinOnly.
  double coupling() const { return coupling_; }
  double degeneracy_tol() const { return degeneracy_tol_; }

  /// 1/(eps_i - eps_j) off the diagonal, 0 on it.
  const Eigen::MatrixXd& inverse_differences() const { return inv_diff_; }
  /// sum_{j != i} 1/(eps_i - eps_j)
  double level_sum(int i) const { return level_sums_(i); }
  const Eigen::VectorXd& level_sums() const { return level_sums_; }

  double mean_spacing() const;

  ModelParams with_coupling(double coupling) const;
  ModelParams with_omega(double omega) const;

 private:
  ModelParams(Realization r, std::vector<double> eps, double omega, double coupling, double tol);

  Realization realization_;
  Eigen::VectorXd eps_;
  double omega_ = 0.0;
  double coupling_ = 0.0;
  double degeneracy_tol_ = kDefaultDegeneracyTol;
  Eigen::MatrixXd inv_diff_;
  Eigen::VectorXd level_sums_;
};

/// Fixed total excitation number M = b^dag b + sum_i (S^z_i + 1/2).
struct Sector {
  int M = 0;
  friend bool operator==(Sector, Sector) = default;
};

void validate_sector(const ModelParams& params, Sector sector);

/// Product basis state |n_b; up on `flipped`>, boson Fock state normalized.
struct BasisState {
  int n_b = 0;
  std::vector<int> flipped;  // sorted site indices (0-based)

  int excitations() const { return n_b + static_cast<int>(flipped.size()); }
  friend bool operator==(const BasisState&, const BasisState&) = default;
};

std::string to_string(const BasisState& b);

/// The N eigenvalue-based variables Lambda(eps_i) of one eigenstate.
struct LambdaState {
  Eigen::VectorXd values;
  int M = 0;  // sector, not the number of rapidities
  Representation rep = Representation::Particle;
  double residual = std::numeric_limits<double>::quiet_NaN();

  /// Number of rapidities behind `values` in this representation.
  int rapidity_count(const ModelParams& params) const;
};

struct RapiditySet {
  std::vector<Complex> values;
  Representation rep = Representation::Particle;
};

/// Both representations of one eigenstate plus the data every determinant
/// formula consumes.
struct EigenstateRecord {
  LambdaState lambda_particle;
  LambdaState lambda_hole;
  Eigen::VectorXd charges;
  /// dLambda/domega (SpinBoson) or dLambda/dV with V = 1/g (SpinOnly).
  Eigen::VectorXd dlambda;
  double norm_product = 0.0;  // N_lambda N_mu
  double norm_ratio = 0.0;    // N_lambda / N_mu

  int M() const { return lambda_particle.M; }
  /// Convention: N_lambda > 0.
  double n_lambda() const;
  double n_mu() const;
};

/// Dimension of the fixed-M subspace.
long long sector_dimension(const ModelParams& params, Sector sector);

/// Lambda(eps_i) = sum_j 1/(eps_i - nu_j). The sector defaults to the rapidity
/// count for particle sets and N - count for spin-only hole sets; spin-boson
/// hole sets (always N rapidities) need it explicitly.
LambdaState lambda_from_rapidities(const RapiditySet& rapidities, const ModelParams& params,
                                   std::optional<Sector> sector = std::nullopt);

/// True when the multiset is closed under complex conjugation.
bool is_conjugation_closed(const std::vector<Complex>& values, double tol = 1e-9);

}  // namespace djcg
