#include "djcg/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace djcg {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidModel: return "invalid-model";
    case ErrorKind::InvalidSector: return "invalid-sector";
    case ErrorKind::Pole: return "pole";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::Singularity: return "singularity";
    case ErrorKind::SeedDegeneracy: return "seed-degeneracy";
    case ErrorKind::BranchCollision: return "branch-collision";
    case ErrorKind::Continuation: return "continuation";
    case ErrorKind::Underdetermined: return "underdetermined";
    case ErrorKind::Inconsistency: return "inconsistency";
    case ErrorKind::SectorMismatch: return "sector-mismatch";
    case ErrorKind::OracleTooLarge: return "oracle-too-large";
    case ErrorKind::UnreachableReference: return "unreachable-reference";
    case ErrorKind::DegenerateState: return "degenerate-state";
    case ErrorKind::Realization: return "realization";
    case ErrorKind::DegenerateSpectrum: return "degenerate-spectrum";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

std::string to_string(Realization r) {
  return r == Realization::SpinBoson ? "spin_boson" : "spin_only";
}

std::string to_string(Representation r) {
  return r == Representation::Particle ? "particle" : "hole";
}

ModelParams::ModelParams(Realization r, std::vector<double> eps, double omega, double coupling, double tol)
    : realization_(r), omega_(omega), coupling_(coupling), degeneracy_tol_(tol) {
  if (eps.empty()) throw Error(ErrorKind::InvalidModel, "model needs at least one level");
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidModel, "degeneracy tolerance must be positive");
  for (double e : eps)
    if (!std::isfinite(e)) throw Error(ErrorKind::InvalidModel, "non-finite level energy");
  if (!std::isfinite(coupling) || coupling == 0.0)
    throw Error(ErrorKind::InvalidModel, r == Realization::SpinBoson ? "coupling V must be nonzero and finite"
                                                                      : "coupling g must be nonzero and finite");
  if (!std::isfinite(omega)) throw Error(ErrorKind::InvalidModel, "omega must be finite");

  std::vector<double> sorted = eps;
  std::sort(sorted.begin(), sorted.end());
  double scale = 0.0;
  for (double e : sorted) scale = std::max(scale, std::abs(e));
  const double min_gap = tol * (scale > 0.0 ? scale : 1.0);
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] - sorted[i - 1] <= min_gap) {
      std::ostringstream os;
      os.precision(17);
      os << "degenerate levels: eps=" << sorted[i - 1] << " and eps=" << sorted[i]
         << " are closer than " << min_gap;
      throw Error(ErrorKind::InvalidModel, os.str(), sorted[i] - sorted[i - 1]);
    }
  }

  const int n = static_cast<int>(sorted.size());
  eps_ = Eigen::Map<const Eigen::VectorXd>(sorted.data(), n);
  inv_diff_ = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) inv_diff_(i, j) = 1.0 / (eps_(i) - eps_(j));
  level_sums_ = inv_diff_.rowwise().sum();
}

ModelParams ModelParams::spin_boson(std::vector<double> epsilons, double omega, double V, double degeneracy_tol) {
  return ModelParams(Realization::SpinBoson, std::move(epsilons), omega, V, degeneracy_tol);
}

ModelParams ModelParams::spin_only(std::vector<double> epsilons, double g, double degeneracy_tol) {
  return ModelParams(Realization::SpinOnly, std::move(epsilons), 0.0, g, degeneracy_tol);
}

double ModelParams::mean_spacing() const {
  const int n = size();
  if (n < 2) return eps_(0) != 0.0 ? std::abs(eps_(0)) : 1.0;
  return (eps_(n - 1) - eps_(0)) / (n - 1);
}

ModelParams ModelParams::with_coupling(double coupling) const {
  std::vector<double> e(eps_.data(), eps_.data() + eps_.size());
  return ModelParams(realization_, std::move(e), omega_, coupling, degeneracy_tol_);
}

ModelParams ModelParams::with_omega(double omega) const {
  if (realization_ != Realization::SpinBoson)
    throw Error(ErrorKind::Realization, "omega is only defined for the spin-boson realization");
  std::vector<double> e(eps_.data(), eps_.data() + eps_.size());
  return ModelParams(realization_, std::move(e), omega, coupling_, degeneracy_tol_);
}

void validate_sector(const ModelParams& params, Sector sector) {
  if (sector.M < 0) throw Error(ErrorKind::InvalidSector, "excitation number must be nonnegative");
  if (!params.spin_boson() && sector.M > params.size())
    throw Error(ErrorKind::InvalidSector,
                "spin-only sector M=" + std::to_string(sector.M) + " exceeds N=" + std::to_string(params.size()));
}

std::string to_string(const BasisState& b) {
  std::ostringstream os;
  os << "|" << b.n_b << ";{";
  for (std::size_t i = 0; i < b.flipped.size(); ++i) os << (i ? "," : "") << b.flipped[i];
  os << "}>";
  return os.str();
}

int LambdaState::rapidity_count(const ModelParams& params) const {
  if (rep == Representation::Particle) return M;
  return params.spin_boson() ? params.size() : params.size() - M;
}

// The M = 0 particle state is the bare vacuum, of unit norm even where the
// hole representation degenerates (resonant single level).
double EigenstateRecord::n_lambda() const { return M() == 0 ? 1.0 : std::sqrt(norm_product * norm_ratio); }

double EigenstateRecord::n_mu() const { return norm_product / n_lambda(); }

namespace {

long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

long long sector_dimension(const ModelParams& params, Sector sector) {
  validate_sector(params, sector);
  const int n = params.size();
  if (!params.spin_boson()) return binomial(n, sector.M);
  long long total = 0;
  for (int m = 0; m <= std::min(sector.M, n); ++m) total += binomial(n, m);
  return total;
}

bool is_conjugation_closed(const std::vector<Complex>& values, double tol) {
  std::vector<bool> used(values.size(), false);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (used[i]) continue;
    const Complex z = values[i];
    const double t = tol * std::max(1.0, std::abs(z));
    if (std::abs(z.imag()) <= t) {
      used[i] = true;
      continue;
    }
    bool found = false;
    for (std::size_t j = i + 1; j < values.size(); ++j) {
      if (!used[j] && std::abs(values[j] - std::conj(z)) <= t) {
        used[i] = used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

LambdaState lambda_from_rapidities(const RapiditySet& rapidities, const ModelParams& params,
                                   std::optional<Sector> sector) {
  const int n = params.size();
  const int count = static_cast<int>(rapidities.values.size());
  LambdaState out;
  out.rep = rapidities.rep;
  if (sector) {
    out.M = sector->M;
  } else if (rapidities.rep == Representation::Particle) {
    out.M = count;
  } else if (!params.spin_boson()) {
    out.M = n - count;
  } else {
    throw Error(ErrorKind::InvalidSector, "spin-boson hole rapidities need an explicit sector");
  }
  validate_sector(params, Sector{out.M});
  if (out.rapidity_count(params) != count)
    throw Error(ErrorKind::InvalidSector, "rapidity count " + std::to_string(count) +
                                              " does not match the sector for this representation");

  if (!is_conjugation_closed(rapidities.values))
    throw Error(ErrorKind::Domain, "rapidities are not closed under complex conjugation");

  out.values.resize(n);
  for (int i = 0; i < n; ++i) {
    Complex sum = 0.0;
    double magnitude = 0.0;
    for (const Complex& nu : rapidities.values) {
      const Complex d = params.epsilon(i) - nu;
      if (std::abs(d) < 1e-12) throw Error(ErrorKind::Pole, "rapidity coincides with a level energy", nu.real());
      sum += 1.0 / d;
      magnitude += 1.0 / std::abs(d);
    }
    if (std::abs(sum.imag()) > 1e-12 * std::max(1.0, magnitude))
      throw Error(ErrorKind::Domain, "Lambda has a non-vanishing imaginary part", sum.imag());
    out.values(i) = sum.real();
  }
  return out;
}

}  // namespace djcg
