#pragma once

// Row-wise building blocks shared by the router and the frozen mixer.

#include <Eigen/Core>
#include <cmath>
#include <numbers>

namespace memrouter {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kInvSqrt2 = 0.70710678118654752440;

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  const double pdf = std::exp(-0.5 * x * x) * kInvSqrt2 * std::numbers::inv_sqrtpi;
  return cdf + x * pdf;
}

/// Normalizes each row to zero mean / unit variance (biased variance).
/// `rstd` receives 1/sqrt(var + eps) per row.
inline Matrix layer_norm_rows(const Matrix& x, Vector& rstd) {
  const auto n = static_cast<double>(x.cols());
  Matrix out(x.rows(), x.cols());
  rstd.resize(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).sum() / n;
    const RowVector centered = x.row(i).array() - mean;
    const double var = centered.squaredNorm() / n;
    rstd(i) = 1.0 / std::sqrt(var + kLayerNormEps);
    out.row(i) = centered * rstd(i);
  }
  return out;
}

/// Gradient through layer_norm_rows given its output `normed` and `rstd`.
inline Matrix layer_norm_rows_backward(const Matrix& normed, const Vector& rstd,
                                       const Matrix& grad_normed) {
  const auto n = static_cast<double>(normed.cols());
  Matrix out(normed.rows(), normed.cols());
  for (Eigen::Index i = 0; i < normed.rows(); ++i) {
    const double mean_g = grad_normed.row(i).sum() / n;
    const double mean_gx = grad_normed.row(i).dot(normed.row(i)) / n;
    out.row(i) = rstd(i) * (grad_normed.row(i).array() - mean_g - normed.row(i).array() * mean_gx);
  }
  return out;
}

/// Numerically stable softmax of a row.
inline RowVector softmax(const RowVector& logits) {
  const double m = logits.maxCoeff();
  RowVector e = (logits.array() - m).exp();
  return e / e.sum();
}

/// log(sum(exp(logits))) computed stably.
inline double log_sum_exp(const RowVector& logits) {
  const double m = logits.maxCoeff();
  return m + std::log((logits.array() - m).exp().sum());
}

}  // namespace memrouter
