#include "djcg/determinants.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "djcg/error.hpp"
#include "djcg/qbe_solver.hpp"
#include "subsets.hpp"

namespace djcg {

std::vector<int> all_sites(const ModelParams& params) {
  std::vector<int> s(params.size());
  std::iota(s.begin(), s.end(), 0);
  return s;
}

std::vector<int> complement_sites(const ModelParams& params, const std::vector<int>& sites) {
  std::vector<int> out;
  for (int i = 0; i < params.size(); ++i)
    if (std::find(sites.begin(), sites.end(), i) == sites.end()) out.push_back(i);
  return out;
}

double log_overlap_prefactor(const ModelParams& params, int n_factorial, int m) {
  if (!params.spin_boson()) return 0.0;
  return 0.5 * std::lgamma(n_factorial + 1.0) + m * std::log(params.V());
}

namespace {

void check_basis(const ModelParams& params, const BasisState& basis) {
  for (int i : basis.flipped)
    if (i < 0 || i >= params.size()) throw Error(ErrorKind::Domain, "basis state names a site out of range");
  if (!std::is_sorted(basis.flipped.begin(), basis.flipped.end()) ||
      std::adjacent_find(basis.flipped.begin(), basis.flipped.end()) != basis.flipped.end())
    throw Error(ErrorKind::Domain, "flipped sites must be sorted and distinct");
  if (basis.n_b < 0) throw Error(ErrorKind::Domain, "negative boson count");
}

int basis_sector(const ModelParams& params, const BasisState& basis) {
  return params.spin_boson() ? basis.excitations() : static_cast<int>(basis.flipped.size());
}

void check_same_sector(const ModelParams& params, const BasisState& basis, int M) {
  check_basis(params, basis);
  const int b = basis_sector(params, basis);
  if (b != M)
    throw Error(ErrorKind::SectorMismatch, "basis state " + to_string(basis) + " lies in sector " + std::to_string(b) +
                                               ", the state in sector " + std::to_string(M));
}

Eigen::VectorXcd lambda_at_levels(const ModelParams& params, const RapiditySet& rap) {
  Eigen::VectorXcd L = Eigen::VectorXcd::Zero(params.size());
  for (int i = 0; i < params.size(); ++i)
    for (const Complex& z : rap.values) {
      const Complex d = params.epsilon(i) - z;
      if (std::abs(d) < 1e-12) throw Error(ErrorKind::Pole, "rapidity coincides with a level energy", z.real());
      L(i) += 1.0 / d;
    }
  return L;
}

double real_value(Complex v) {
  if (std::abs(v.imag()) > 1e-9 * std::max(1e-300, std::abs(v)))
    throw Error(ErrorKind::Domain, "overlap is not real; rapidities are not conjugation-closed", v.imag());
  return v.real();
}

}  // namespace

double partition_function(const ModelParams& params, const LambdaState& particle, const BasisState& basis) {
  if (particle.rep != Representation::Particle) throw Error(ErrorKind::Domain, "expected a particle-representation state");
  if (particle.values.size() != params.size()) throw Error(ErrorKind::Domain, "Lambda vector has the wrong length");
  check_same_sector(params, basis, particle.M);
  return partition_log<double>(params, particle.values, basis).value();
}

double partition_function(const ModelParams& params, const RapiditySet& rapidities, const BasisState& basis) {
  if (rapidities.rep != Representation::Particle) throw Error(ErrorKind::Domain, "expected particle rapidities");
  check_same_sector(params, basis, static_cast<int>(rapidities.values.size()));
  return real_value(partition_log<Complex>(params, lambda_at_levels(params, rapidities), basis).value());
}

double brute_force_partition(const ModelParams& params, const RapiditySet& rapidities, const BasisState& basis) {
  const int count = static_cast<int>(rapidities.values.size());
  if (count > 8)
    throw Error(ErrorKind::OracleTooLarge, "brute-force partition function is limited to 8 excitations", count);
  if (rapidities.rep != Representation::Particle) throw Error(ErrorKind::Domain, "expected particle rapidities");
  check_same_sector(params, basis, count);
  const int nb = params.spin_boson() ? basis.n_b : 0;
  const int m = static_cast<int>(basis.flipped.size());

  Complex sum = 0.0;
  // Rapidities in `spin` carry the spin flips; the others create bosons.
  detail::for_each_subset(count, m, [&](const std::vector<int>& spin) {
    std::vector<int> sites = basis.flipped;
    do {
      Complex term = 1.0;
      for (int a = 0; a < m; ++a) term /= rapidities.values[spin[a]] - params.epsilon(sites[a]);
      sum += term;
    } while (std::next_permutation(sites.begin(), sites.end()));
  });
  return real_value(sum * std::exp(log_overlap_prefactor(params, nb, m)));
}

double hole_overlap(const ModelParams& params, const LambdaState& hole, const BasisState& basis) {
  if (hole.rep != Representation::Hole) throw Error(ErrorKind::Domain, "expected a hole-representation state");
  if (hole.values.size() != params.size()) throw Error(ErrorKind::Domain, "Lambda vector has the wrong length");
  check_same_sector(params, basis, hole.M);
  const std::vector<int> down = complement_sites(params, basis.flipped);
  LogDet<double> d = log_determinant(domain_wall_matrix(params, hole.values, down));
  if (params.spin_boson())
    d.log_abs += 0.5 * (std::lgamma(hole.M + 1.0) - std::lgamma(basis.n_b + 1.0)) +
                 static_cast<double>(down.size()) * std::log(params.V());
  return d.value();
}

LogDet<double> scalar_product_log(const ModelParams& params, const LambdaState& bra_hole,
                                  const LambdaState& ket_particle) {
  if (bra_hole.rep != Representation::Hole || ket_particle.rep != Representation::Particle)
    throw Error(ErrorKind::Domain, "scalar product takes a hole bra and a particle ket");
  if (bra_hole.M != ket_particle.M)
    throw Error(ErrorKind::SectorMismatch, "scalar product between sectors " + std::to_string(bra_hole.M) + " and " +
                                               std::to_string(ket_particle.M));
  const Eigen::VectorXd sum = bra_hole.values + ket_particle.values;
  LogDet<double> d = log_determinant(domain_wall_matrix(params, sum, all_sites(params)));
  d.log_abs += log_overlap_prefactor(params, ket_particle.M, params.size());
  return d;
}

double scalar_product(const ModelParams& params, const LambdaState& bra_hole, const LambdaState& ket_particle) {
  return scalar_product_log(params, bra_hole, ket_particle).value();
}

double norm_product(const ModelParams& params, const EigenstateRecord& record) {
  return scalar_product(params, record.lambda_hole, record.lambda_particle);
}

namespace {

struct Projection {
  double ratio = 0.0;
  double weight = 0.0;
};

Projection project(const ModelParams& params, const EigenstateRecord& record, const BasisState& reference,
                   const LogDet<double>& product) {
  const LogDet<double> num = partition_log<double>(params, record.lambda_particle.values, reference);
  const double den = hole_overlap(params, record.lambda_hole, reference);
  Projection p;
  if (den == 0.0 || num.phase == 0.0 || product.phase == 0.0) return p;
  p.ratio = num.value() / den;
  // <ref|lambda><ref|mu> / <mu|lambda> = |<ref|psi>|^2
  p.weight = num.phase * product.phase * std::exp(num.log_abs - product.log_abs) * den;
  return p;
}

}  // namespace

double norm_ratio(const ModelParams& params, const EigenstateRecord& record, const BasisState& reference) {
  check_same_sector(params, reference, record.M());
  const Projection p = project(params, record, reference, scalar_product_log(params, record.lambda_hole,
                                                                             record.lambda_particle));
  if (!(std::abs(p.weight) >= 1e-10))
    throw Error(ErrorKind::UnreachableReference,
                "state has no weight on reference " + to_string(reference), p.weight);
  return p.ratio;
}

BasisState default_reference(const ModelParams& params, Sector sector) {
  validate_sector(params, sector);
  BasisState b;
  const int m = std::min(sector.M, params.size());
  for (int i = 0; i < m; ++i) b.flipped.push_back(i);
  b.n_b = params.spin_boson() ? sector.M - m : 0;
  return b;
}

RatioChoice choose_norm_ratio(const ModelParams& params, const EigenstateRecord& record) {
  const Sector sector{record.M()};
  const LogDet<double> product = scalar_product_log(params, record.lambda_hole, record.lambda_particle);
  RatioChoice best;
  auto consider = [&](const BasisState& ref) {
    const Projection p = project(params, record, ref, product);
    if (p.weight > best.weight) best = RatioChoice{ref, p.ratio, p.weight};
    return best.weight >= 1e-3;
  };
  if (consider(default_reference(params, sector))) return best;

  const int n = params.size();
  const int lo = params.spin_boson() ? 0 : sector.M;
  const int hi = std::min(sector.M, n);
  bool done = false;
  for (int m = lo; m <= hi && !done; ++m) {
    const int nb = params.spin_boson() ? sector.M - m : 0;
    detail::for_each_subset(n, m, [&](const std::vector<int>& flipped) {
      if (!done) done = consider(BasisState{nb, flipped});
    });
  }
  if (!(best.weight >= 1e-10))
    throw Error(ErrorKind::UnreachableReference, "no reference state carries weight for this eigenstate", best.weight);
  return best;
}

double minor_determinant(const Eigen::MatrixXd& J, int k) {
  if (J.rows() != J.cols()) throw Error(ErrorKind::Domain, "minor of a non-square matrix");
  if (k < 0 || k >= J.rows()) throw Error(ErrorKind::Domain, "minor index out of range");
  return determinant(remove_row_col(J, k));
}

EigenstateRecord make_record(const ModelParams& params, const LambdaState& particle) {
  if (particle.rep != Representation::Particle) throw Error(ErrorKind::Domain, "expected a particle-representation state");
  EigenstateRecord r;
  r.lambda_particle = particle;
  r.lambda_hole = hole_from_particle(params, particle);
  r.charges = charges_from_lambda(params, particle);
  r.dlambda = lambda_derivatives(params, particle);
  r.norm_product = norm_product(params, r);
  r.norm_ratio = choose_norm_ratio(params, r).ratio;
  return r;
}

}  // namespace djcg
