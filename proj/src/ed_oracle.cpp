#include "djcg/ed_oracle.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <random>

#include "djcg/qbe_solver.hpp"
#include "subsets.hpp"

namespace djcg {

SectorBasis::SectorBasis(const ModelParams& params, Sector sector, long long max_dim) : sector_(sector) {
  const long long dim = sector_dimension(params, sector);
  if (dim > max_dim)
    throw Error(ErrorKind::OracleTooLarge,
                "sector dimension " + std::to_string(dim) + " exceeds the oracle guard " + std::to_string(max_dim),
                static_cast<double>(dim));
  const int n = params.size();
  if (n > 62) throw Error(ErrorKind::OracleTooLarge, "too many levels for the product basis");
  const int lo = params.spin_boson() ? 0 : sector.M;
  const int hi = std::min(sector.M, n);
  for (int m = lo; m <= hi; ++m) {
    const int nb = params.spin_boson() ? sector.M - m : 0;
    detail::for_each_subset(n, m, [&](const std::vector<int>& flipped) {
      std::uint64_t mask = 0;
      for (int i : flipped) mask |= std::uint64_t{1} << i;
      index_.emplace(std::make_pair(nb, mask), static_cast<int>(states_.size()));
      states_.push_back(BasisState{nb, flipped});
      masks_.push_back(mask);
    });
  }
}

int SectorBasis::index_of(int n_b, std::uint64_t mask) const {
  auto it = index_.find({n_b, mask});
  return it == index_.end() ? -1 : it->second;
}

int SectorBasis::index_of(const BasisState& b) const {
  std::uint64_t mask = 0;
  for (int i : b.flipped) mask |= std::uint64_t{1} << i;
  return index_of(b.n_b, mask);
}

namespace {

using Mask = std::uint64_t;

bool up(Mask m, int i) { return (m >> i) & 1u; }
Mask flip(Mask m, int i) { return m ^ (Mask{1} << i); }
double sz(Mask m, int i) { return up(m, i) ? 0.5 : -0.5; }

bool sector_exists(const ModelParams& p, int M) { return M >= 0 && (p.spin_boson() || M <= p.size()); }

// Builds <to| A |from> where `act(n_b, mask, emit)` calls emit(n_b', mask', c)
// for every term of A acting on |n_b; mask>.
template <typename Scalar, typename Action>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> assemble(const ModelParams& p, Sector from, int to_M,
                                                               long long max_dim, Action act) {
  const SectorBasis src(p, from, max_dim);
  if (!sector_exists(p, to_M)) return Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(0, src.size());
  const SectorBasis dst(p, Sector{to_M}, max_dim);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(dst.size(), src.size());
  for (int col = 0; col < src.size(); ++col) {
    act(src[col].n_b, src.mask(col), [&](int nb, Mask mask, Scalar c) {
      const int row = dst.index_of(nb, mask);
      if (row < 0) throw Error(ErrorKind::SectorMismatch, "operator term left the target sector");
      out(row, col) += c;
    });
  }
  return out;
}

// sum_{j != k} coef_j S_k . S_j acting on one product state.
template <typename Emit>
void heisenberg_terms(const ModelParams& p, int k, double prefactor, int nb, Mask m, Emit&& emit) {
  for (int j = 0; j < p.size(); ++j) {
    if (j == k) continue;
    const double c = prefactor * p.inverse_differences()(k, j);
    emit(nb, m, c * sz(m, k) * sz(m, j));
    if (up(m, k) != up(m, j)) emit(nb, flip(flip(m, k), j), 0.5 * c);
  }
}

}  // namespace

Eigen::MatrixXd build_charge_matrix(const ModelParams& p, int k, Sector sector, long long max_dim) {
  if (k < 0 || k >= p.size()) throw Error(ErrorKind::Domain, "site index out of range");
  if (p.spin_boson()) {
    const double V = p.V();
    return assemble<double>(p, sector, sector.M, max_dim, [&](int nb, Mask m, auto emit) {
      emit(nb, m, (p.epsilon(k) - p.omega()) * sz(m, k));
      if (up(m, k)) emit(nb + 1, flip(m, k), V * std::sqrt(nb + 1.0));  // b^dag S^-_k
      if (!up(m, k) && nb > 0) emit(nb - 1, flip(m, k), V * std::sqrt(double(nb)));  // b S^+_k
      heisenberg_terms(p, k, 2.0 * V * V, nb, m, emit);
    });
  }
  const double g = p.g();
  return assemble<double>(p, sector, sector.M, max_dim, [&](int nb, Mask m, auto emit) {
    emit(nb, m, -2.0 * sz(m, k) / g);
    heisenberg_terms(p, k, 2.0, nb, m, emit);
  });
}

double check_commutation(const ModelParams& p, Sector sector, long long max_dim) {
  std::vector<Eigen::MatrixXd> R;
  for (int k = 0; k < p.size(); ++k) R.push_back(build_charge_matrix(p, k, sector, max_dim));
  double worst = 0.0;
  for (std::size_t i = 0; i < R.size(); ++i)
    for (std::size_t j = i + 1; j < R.size(); ++j) {
      const Eigen::MatrixXd c = R[i] * R[j] - R[j] * R[i];
      worst = std::max(worst, c.cwiseAbs().rowwise().sum().maxCoeff());
    }
  return worst;
}

EDResult joint_diagonalize(const ModelParams& p, Sector sector, long long max_dim, std::uint64_t seed) {
  SectorBasis basis(p, sector, max_dim);
  const int n = p.size();
  std::vector<Eigen::MatrixXd> R;
  std::vector<double> norms;
  for (int k = 0; k < n; ++k) {
    R.push_back(build_charge_matrix(p, k, sector, max_dim));
    norms.push_back(std::max(R.back().cwiseAbs().rowwise().sum().maxCoeff(), 1e-300));
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double last_residual = 0.0;
  for (int attempt = 0; attempt < 5; ++attempt) {
    Eigen::VectorXd c(n);
    for (int k = 0; k < n; ++k) c(k) = normal(rng);
    c.normalize();
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(basis.size(), basis.size());
    for (int k = 0; k < n; ++k) T += c(k) * R[k];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    if (es.info() != Eigen::Success) continue;

    std::vector<Eigen::VectorXd> charges;
    double worst = 0.0;
    for (int col = 0; col < basis.size(); ++col) {
      const Eigen::VectorXd v = es.eigenvectors().col(col);
      Eigen::VectorXd r(n);
      for (int k = 0; k < n; ++k) {
        const Eigen::VectorXd Rv = R[k] * v;
        r(k) = v.dot(Rv);
        worst = std::max(worst, (Rv - r(k) * v).norm() / norms[k]);
      }
      charges.push_back(std::move(r));
    }
    last_residual = worst;
    if (worst > 1e-9) continue;

    EDResult out{sector, basis, Eigen::MatrixXd(basis.size(), basis.size()), {}, worst};
    const std::vector<int> order = charge_order(charges);
    for (int i = 0; i < basis.size(); ++i) {
      out.vectors.col(i) = es.eigenvectors().col(order[i]);
      out.charges.push_back(charges[order[i]]);
    }
    return out;
  }
  throw Error(ErrorKind::DegenerateSpectrum,
              "no simultaneous eigenbasis found in sector M=" + std::to_string(sector.M) +
                  " (degenerate charge spectrum?)",
              last_residual);
}

LambdaState lambda_from_ed(const ModelParams& p, const Eigen::VectorXd& charges, Sector sector) {
  validate_sector(p, sector);
  if (charges.size() != p.size()) throw Error(ErrorKind::Domain, "charge vector has the wrong length");
  LambdaState out;
  out.M = sector.M;
  out.rep = Representation::Particle;
  if (p.spin_boson()) {
    const double v2 = p.V() * p.V();
    out.values = ((0.5 * v2) * p.level_sums() - 0.5 * (p.epsilons().array() - p.omega()).matrix() - charges) / v2;
  } else {
    out.values = (0.5 * p.level_sums() - charges).array() + 1.0 / p.g();
  }
  return out;
}

int LocalOperator::delta() const {
  switch (kind) {
    case OperatorKind::Splus:
    case OperatorKind::Bdag: return 1;
    case OperatorKind::Sminus:
    case OperatorKind::B: return -1;
    default: return 0;
  }
}

bool LocalOperator::bosonic() const {
  return kind == OperatorKind::Bdag || kind == OperatorKind::B || kind == OperatorKind::Number;
}

std::string to_string(const LocalOperator& op) {
  switch (op.kind) {
    case OperatorKind::Splus: return "Splus(" + std::to_string(op.site) + ")";
    case OperatorKind::Sminus: return "Sminus(" + std::to_string(op.site) + ")";
    case OperatorKind::Sz: return "Sz(" + std::to_string(op.site) + ")";
    case OperatorKind::Bdag: return "Bdag";
    case OperatorKind::B: return "B";
    case OperatorKind::Number: return "NumberB";
  }
  return "?";
}

Eigen::MatrixXd operator_matrix(const ModelParams& p, const LocalOperator& op, Sector ket, long long max_dim) {
  if (op.bosonic() && !p.spin_boson())
    throw Error(ErrorKind::Realization, "bosonic operator requested on a spin-only model");
  if (!op.bosonic() && (op.site < 0 || op.site >= p.size())) throw Error(ErrorKind::Domain, "site index out of range");
  const int k = op.site;
  const int to = ket.M + op.delta();
  return assemble<double>(p, ket, to, max_dim, [&](int nb, Mask m, auto emit) {
    switch (op.kind) {
      case OperatorKind::Splus:
        if (!up(m, k)) emit(nb, flip(m, k), 1.0);
        break;
      case OperatorKind::Sminus:
        if (up(m, k)) emit(nb, flip(m, k), 1.0);
        break;
      case OperatorKind::Sz: emit(nb, m, sz(m, k)); break;
      case OperatorKind::Bdag: emit(nb + 1, m, std::sqrt(nb + 1.0)); break;
      case OperatorKind::B:
        if (nb > 0) emit(nb - 1, m, std::sqrt(double(nb)));
        break;
      case OperatorKind::Number: emit(nb, m, double(nb)); break;
    }
  });
}

double ed_matrix_element(const ModelParams& p, const LocalOperator& op, const SectorVector& bra,
                         const SectorVector& ket) {
  if (bra.sector.M != ket.sector.M + op.delta())
    throw Error(ErrorKind::SectorMismatch, "bra sector M=" + std::to_string(bra.sector.M) +
                                               " incompatible with " + to_string(op) + " on ket sector M=" +
                                               std::to_string(ket.sector.M));
  const Eigen::MatrixXd A = operator_matrix(p, op, ket.sector);
  if (A.cols() != ket.coeffs.size() || A.rows() != bra.coeffs.size())
    throw Error(ErrorKind::SectorMismatch, "vector length does not match its sector");
  return bra.coeffs.dot(A * ket.coeffs);
}

namespace {

Complex pole_weight(const ModelParams& p, Complex u, int j) {
  const Complex d = u - p.epsilon(j);
  if (std::abs(d) < 1e-12) throw Error(ErrorKind::Pole, "Gaudin operator evaluated at a level energy", u.real());
  return (p.spin_boson() ? p.V() : 1.0) / d;
}

}  // namespace

Eigen::MatrixXcd gaudin_raising(const ModelParams& p, Complex u, Sector ket, long long max_dim) {
  std::vector<Complex> w;
  for (int j = 0; j < p.size(); ++j) w.push_back(pole_weight(p, u, j));
  return assemble<Complex>(p, ket, ket.M + 1, max_dim, [&](int nb, Mask m, auto emit) {
    if (p.spin_boson()) emit(nb + 1, m, Complex(std::sqrt(nb + 1.0)));
    for (int j = 0; j < p.size(); ++j)
      if (!up(m, j)) emit(nb, flip(m, j), w[j]);
  });
}

Eigen::MatrixXcd gaudin_lowering(const ModelParams& p, Complex u, Sector ket, long long max_dim) {
  std::vector<Complex> w;
  for (int j = 0; j < p.size(); ++j) w.push_back(pole_weight(p, u, j));
  return assemble<Complex>(p, ket, ket.M - 1, max_dim, [&](int nb, Mask m, auto emit) {
    if (p.spin_boson() && nb > 0) emit(nb - 1, m, Complex(std::sqrt(double(nb))));
    for (int j = 0; j < p.size(); ++j)
      if (up(m, j)) emit(nb, flip(m, j), w[j]);
  });
}

Eigen::MatrixXcd gaudin_casimir(const ModelParams& p, Complex u, Sector sector, long long max_dim) {
  std::vector<Complex> w;
  for (int j = 0; j < p.size(); ++j) w.push_back(pole_weight(p, u, j));
  const Complex offset = p.spin_boson() ? (p.omega() - u) / (2.0 * p.V()) : Complex(1.0 / p.g());
  const Eigen::MatrixXcd Sz = assemble<Complex>(p, sector, sector.M, max_dim, [&](int nb, Mask m, auto emit) {
    Complex v = offset;
    for (int j = 0; j < p.size(); ++j) v -= w[j] * sz(m, j);
    emit(nb, m, v);
  });
  Eigen::MatrixXcd out = Sz * Sz;
  const Eigen::MatrixXcd lower = gaudin_lowering(p, u, sector, max_dim);
  if (lower.rows() > 0) out += 0.5 * gaudin_raising(p, u, Sector{sector.M - 1}, max_dim) * lower;
  const Eigen::MatrixXcd raise = gaudin_raising(p, u, sector, max_dim);
  if (raise.rows() > 0) out += 0.5 * gaudin_lowering(p, u, Sector{sector.M + 1}, max_dim) * raise;
  return out;
}

Eigen::VectorXd ed_state_from_rapidities(const ModelParams& p, const RapiditySet& rap, Sector sector,
                                         long long max_dim) {
  validate_sector(p, sector);
  const int n = p.size();
  const int count = static_cast<int>(rap.values.size());
  Eigen::VectorXcd v;
  int M = 0;
  if (rap.rep == Representation::Particle) {
    if (count != sector.M) throw Error(ErrorKind::SectorMismatch, "particle rapidity count must equal M");
    v = Eigen::VectorXcd::Ones(1);
    M = 0;
    for (const Complex& lam : rap.values) {
      v = gaudin_raising(p, lam, Sector{M}, max_dim) * v;
      ++M;
    }
  } else {
    const int expected = p.spin_boson() ? n : n - sector.M;
    if (count != expected) throw Error(ErrorKind::SectorMismatch, "hole rapidity count does not match the sector");
    M = sector.M + count;
    const SectorBasis top(p, Sector{M}, max_dim);
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    v = Eigen::VectorXcd::Zero(top.size());
    v(top.index_of(BasisState{p.spin_boson() ? sector.M : 0, all})) = 1.0;
    for (const Complex& mu : rap.values) {
      v = gaudin_lowering(p, mu, Sector{M}, max_dim) * v;
      --M;
    }
  }
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  if (v.imag().cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw Error(ErrorKind::Domain, "Bethe vector is not real; rapidities are not conjugation-closed",
                v.imag().cwiseAbs().maxCoeff());
  return v.real();
}

}  // namespace djcg
