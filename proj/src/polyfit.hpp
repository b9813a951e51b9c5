#pragma once

#include <vector>

#include <Eigen/Dense>

namespace djcg::detail {

/// Monic polynomial P of degree m with P'(e_i) = L_i P(e_i), fitted in the
/// variable x = (e - center) / scale. `coeffs` holds the non-leading
/// coefficients a_0..a_{m-1} in that variable.
struct PolyFit {
  double center = 0.0;
  double scale = 1.0;
  Eigen::VectorXd coeffs;
  double residual = 0.0;  // max_i |row_i . a - rhs_i| / (|row_i| |(a,1)|)
};

inline PolyFit fit_log_derivative(const Eigen::VectorXd& e, const Eigen::VectorXd& lambda, int m) {
  const Eigen::Index n = e.size();
  PolyFit out;
  out.center = e.mean();
  out.scale = std::max((e.array() - out.center).abs().maxCoeff(), 1e-300);
  out.coeffs = Eigen::VectorXd::Zero(m);
  if (m == 0) {
    out.residual = lambda.cwiseAbs().maxCoeff() * out.scale / std::max(1.0, lambda.cwiseAbs().maxCoeff() * out.scale);
    return out;
  }
  // Row i of the linear system, augmented with the leading term as the last
  // column: sum_k a_k (k x^{k-1} - l x^k) + (m x^{m-1} - l x^m) = 0.
  Eigen::MatrixXd A(n, m + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = (e(i) - out.center) / out.scale;
    const double l = lambda(i) * out.scale;
    double xk = 1.0, xkm1 = 0.0;  // x^k, x^{k-1}
    for (int k = 0; k <= m; ++k) {
      A(i, k) = k * xkm1 - l * xk;
      xkm1 = xk;
      xk *= x;
    }
    const double norm = A.row(i).norm();
    if (norm > 0.0) A.row(i) /= norm;
  }
  const Eigen::MatrixXd lhs = A.leftCols(m);
  const Eigen::VectorXd rhs = -A.col(m);
  out.coeffs = lhs.colPivHouseholderQr().solve(rhs);
  Eigen::VectorXd full(m + 1);
  full << out.coeffs, 1.0;
  out.residual = (A * full).cwiseAbs().maxCoeff() / full.norm();
  return out;
}

}  // namespace djcg::detail
