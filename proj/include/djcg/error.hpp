#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace djcg {

enum class ErrorKind {
  InvalidModel,
  InvalidSector,
  Pole,
  Domain,
  Convergence,
  Singularity,
  SeedDegeneracy,
  BranchCollision,
  Continuation,
  Underdetermined,
  Inconsistency,
  SectorMismatch,
  OracleTooLarge,
  UnreachableReference,
  DegenerateState,
  Realization,
  DegenerateSpectrum,
  Config,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library. `value` carries the number that
// triggered the failure (last residual, coupling at a collision, ...), or NaN.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, double value = std::numeric_limits<double>::quiet_NaN())
      : std::runtime_error(what), kind_(kind), value_(value) {}

  ErrorKind kind() const noexcept { return kind_; }
  double value() const noexcept { return value_; }

 private:
  ErrorKind kind_;
  double value_;
};

}  // namespace djcg
