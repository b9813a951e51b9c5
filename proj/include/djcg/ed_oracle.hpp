#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "djcg/model.hpp"

namespace djcg {

inline constexpr long long kDefaultMaxSectorDimension = 5000;

/// Product basis of one fixed-M sector, ordered by boson count descending and
/// then flipped set ascending (lexicographic).
class SectorBasis {
 public:
  SectorBasis(const ModelParams& params, Sector sector, long long max_dim = kDefaultMaxSectorDimension);

  Sector sector() const { return sector_; }
  int size() const { return static_cast<int>(states_.size()); }
  const BasisState& operator[](int i) const { return states_[i]; }
  std::uint64_t mask(int i) const { return masks_[i]; }
  /// -1 when the state is not in this sector.
  int index_of(int n_b, std::uint64_t mask) const;
  int index_of(const BasisState& b) const;

 private:
  Sector sector_;
  std::vector<BasisState> states_;
  std::vector<std::uint64_t> masks_;
  std::map<std::pair<int, std::uint64_t>, int> index_;
};

/// Dense matrix of the conserved charge R_k on one sector.
Eigen::MatrixXd build_charge_matrix(const ModelParams& params, int k, Sector sector,
                                    long long max_dim = kDefaultMaxSectorDimension);

/// max_{i,j} ||R_i R_j - R_j R_i||_inf on the sector.
double check_commutation(const ModelParams& params, Sector sector, long long max_dim = kDefaultMaxSectorDimension);

struct EDResult {
  Sector sector;
  SectorBasis basis;
  Eigen::MatrixXd vectors;               // columns, orthonormal, sorted by charge vector
  std::vector<Eigen::VectorXd> charges;  // r_1..r_N per column
  double max_residual = 0.0;             // worst ||R_i v - r_i v|| / ||R_i||
};

inline constexpr std::uint64_t kJointDiagonalizationSeed = 0x5EED;

/// Diagonalizes a random combination sum_i c_i R_i and reads the charges off
/// as Rayleigh quotients. Retries with fresh coefficients up to five times.
EDResult joint_diagonalize(const ModelParams& params, Sector sector, long long max_dim = kDefaultMaxSectorDimension,
                           std::uint64_t seed = kJointDiagonalizationSeed);

/// Inverts the particle charge formula for Lambda.
LambdaState lambda_from_ed(const ModelParams& params, const Eigen::VectorXd& charges, Sector sector);

enum class OperatorKind { Splus, Sminus, Sz, Bdag, B, Number };

struct LocalOperator {
  OperatorKind kind = OperatorKind::Sz;
  int site = 0;  // ignored for bosonic operators

  /// Change of the excitation number.
  int delta() const;
  bool bosonic() const;
};

std::string to_string(const LocalOperator& op);

/// Matrix of `op` from sector `ket` to sector ket.M + op.delta().
Eigen::MatrixXd operator_matrix(const ModelParams& params, const LocalOperator& op, Sector ket,
                                long long max_dim = kDefaultMaxSectorDimension);

struct SectorVector {
  Sector sector;
  Eigen::VectorXd coeffs;
};

double ed_matrix_element(const ModelParams& params, const LocalOperator& op, const SectorVector& bra,
                         const SectorVector& ket);

/// Gaudin raising S^+(u) from sector `ket` to ket.M + 1.
Eigen::MatrixXcd gaudin_raising(const ModelParams& params, Complex u, Sector ket,
                                long long max_dim = kDefaultMaxSectorDimension);
/// Gaudin lowering S^-(u) from sector `ket` to ket.M - 1.
Eigen::MatrixXcd gaudin_lowering(const ModelParams& params, Complex u, Sector ket,
                                 long long max_dim = kDefaultMaxSectorDimension);
/// S^2(u) = S^z(u)^2 + (S^+(u) S^-(u) + S^-(u) S^+(u)) / 2 on one sector.
Eigen::MatrixXcd gaudin_casimir(const ModelParams& params, Complex u, Sector sector,
                                long long max_dim = kDefaultMaxSectorDimension);

/// Unnormalized Bethe vector in SectorBasis(sector): the product of Gaudin
/// raising operators on the particle vacuum, or of lowering operators on the
/// hole vacuum.
Eigen::VectorXd ed_state_from_rapidities(const ModelParams& params, const RapiditySet& rapidities, Sector sector,
                                         long long max_dim = kDefaultMaxSectorDimension);

}  // namespace djcg
