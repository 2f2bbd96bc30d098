#ifndef SEQMARKOV_LOGMATH_HPP
#define SEQMARKOV_LOGMATH_HPP

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace seqmarkov {

template <typename Scalar>
constexpr Scalar neg_inf() {
  return -std::numeric_limits<Scalar>::infinity();
}

// log(sum(exp(x))) over all coefficients; returns -inf when every entry is
// -inf (no NaN from inf - inf).
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0) return neg_inf<Scalar>();
  const Scalar m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.derived().array() - m).exp().sum());
}

template <typename Scalar>
Scalar log_add(Scalar a, Scalar b) {
  if (a < b) std::swap(a, b);
  if (!std::isfinite(a)) return a;
  return a + std::log1p(std::exp(b - a));
}

// Elementwise log where exact zeros map to -inf.
template <typename Derived>
Eigen::Array<typename Derived::Scalar, Derived::RowsAtCompileTime,
             Derived::ColsAtCompileTime>
safe_log(const Eigen::DenseBase<Derived>& x) {
  return x.derived().array().log();
}

// Numerically stable softmax of a vector of logits.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(
    const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = logits;
  const Scalar m = out.maxCoeff();
  out = (out.array() - m).exp();
  out /= out.sum();
  return out;
}

// Row-wise softmax of a logit matrix.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(logits.rows(),
                                                           logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    out.row(i) = softmax(logits.row(i).transpose()).transpose();
  return out;
}

template <typename Derived>
bool is_probability_vector(const Eigen::MatrixBase<Derived>& v,
                           typename Derived::Scalar tol = 1e-9) {
  if (v.size() == 0) return false;
  if ((v.array() < 0).any() || !v.allFinite()) return false;
  return std::abs(v.sum() - 1) <= tol;
}

template <typename Derived>
bool is_row_stochastic(const Eigen::MatrixBase<Derived>& m,
                       typename Derived::Scalar tol = 1e-9) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    if (!is_probability_vector(m.row(r), tol)) return false;
  return true;
}

// Divides each row by its sum; rows summing to zero are left untouched.
template <typename Derived>
void normalize_rows(Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const auto s = m.row(r).sum();
    if (s > 0) m.row(r) /= s;
  }
}

}  // namespace seqmarkov

#endif  // SEQMARKOV_LOGMATH_HPP
