#pragma once

#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Dense>

namespace djcg {

namespace detail {
template <typename T> struct real_of { using type = T; };
template <typename T> struct real_of<std::complex<T>> { using type = T; };
}  // namespace detail

/// det = phase * exp(log_abs). For real matrices the phase is +-1 (or 0 when
/// the matrix is exactly singular).
template <typename Scalar>
struct LogDet {
  Scalar phase{1};
  double log_abs = 0.0;

  Scalar value() const {
    if (phase == Scalar(0)) return Scalar(0);
    return phase * static_cast<typename detail::real_of<Scalar>::type>(std::exp(log_abs));
  }

  LogDet& operator*=(const LogDet& o) {
    phase *= o.phase;
    log_abs += o.log_abs;
    return *this;
  }

  /// Multiply by a positive or negative real factor.
  LogDet& scale(double factor) {
    if (factor == 0.0) {
      phase = Scalar(0);
    } else {
      if (factor < 0.0) phase = -phase;
      log_abs += std::log(std::abs(factor));
    }
    return *this;
  }
};

/// Determinant by LU with partial pivoting, accumulated as sign/phase and
/// log-magnitude. The empty matrix has determinant 1.
template <typename Derived>
LogDet<typename Derived::Scalar> log_determinant(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  LogDet<Scalar> out;
  const Eigen::Index n = m.rows();
  if (n == 0) return out;
  Eigen::PartialPivLU<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> lu(m);
  out.phase = Scalar(lu.permutationP().determinant());
  const auto& packed = lu.matrixLU();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar d = packed(i, i);
    const double a = std::abs(d);
    if (a == 0.0 || !std::isfinite(a)) {
      out.phase = Scalar(0);
      out.log_abs = -std::numeric_limits<double>::infinity();
      return out;
    }
    out.phase *= d / static_cast<typename detail::real_of<Scalar>::type>(a);
    out.log_abs += std::log(a);
  }
  return out;
}

template <typename Derived>
typename Derived::Scalar determinant(const Eigen::MatrixBase<Derived>& m) {
  return log_determinant(m).value();
}

/// Copy of `m` with row and column `k` (0-based) removed.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> remove_row_col(
    const Eigen::MatrixBase<Derived>& m, Eigen::Index k) {
  const Eigen::Index n = m.rows();
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(n - 1, n - 1);
  for (Eigen::Index i = 0, oi = 0; i < n; ++i) {
    if (i == k) continue;
    for (Eigen::Index j = 0, oj = 0; j < n; ++j) {
      if (j == k) continue;
      out(oi, oj++) = m(i, j);
    }
    ++oi;
  }
  return out;
}

}  // namespace djcg
