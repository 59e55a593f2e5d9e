#pragma once

#include <span>

#include <Eigen/Core>

#include "progsearch/vecstore.hpp"

namespace progsearch {

enum class Metric { euclidean, cosine };

namespace detail {

/// The one squared-L2 kernel every search path goes through. Accumulates in
/// double over eight fixed lanes, so a given (a, b, d) yields the same bits no
/// matter where the rows live or which caller asks.
double sq_l2(const float* a, const float* b, Index d) noexcept;

template <typename Derived>
Eigen::RowVectorXf to_row(const Eigen::DenseBase<Derived>& v) {
  EIGEN_STATIC_ASSERT_VECTOR_ONLY(Derived);
  Eigen::RowVectorXf out(v.size());
  for (Index i = 0; i < v.size(); ++i) out(i) = static_cast<float>(v.derived().coeff(i));
  return out;
}

}  // namespace detail

/// Sum over the first d coordinates of (a_i - b_i)^2.
double sq_euclidean_prefix(std::span<const float> a, std::span<const float> b, Index d);
double euclidean(std::span<const float> a, std::span<const float> b);
/// dot(a, b) / (|a| |b|), clamped to [-1, 1]. Throws on a zero vector.
double cosine_sim(std::span<const float> a, std::span<const float> b);

template <typename DA, typename DB>
double sq_euclidean_prefix(const Eigen::DenseBase<DA>& a, const Eigen::DenseBase<DB>& b, Index d) {
  const Eigen::RowVectorXf ra = detail::to_row(a), rb = detail::to_row(b);
  return sq_euclidean_prefix(std::span<const float>(ra.data(), ra.size()),
                             std::span<const float>(rb.data(), rb.size()), d);
}

template <typename DA, typename DB>
double euclidean(const Eigen::DenseBase<DA>& a, const Eigen::DenseBase<DB>& b) {
  const Eigen::RowVectorXf ra = detail::to_row(a), rb = detail::to_row(b);
  return euclidean(std::span<const float>(ra.data(), ra.size()), std::span<const float>(rb.data(), rb.size()));
}

template <typename DA, typename DB>
double cosine_sim(const Eigen::DenseBase<DA>& a, const Eigen::DenseBase<DB>& b) {
  const Eigen::RowVectorXf ra = detail::to_row(a), rb = detail::to_row(b);
  return cosine_sim(std::span<const float>(ra.data(), ra.size()), std::span<const float>(rb.data(), rb.size()));
}

/// Entry (q, m) is sq_euclidean_prefix(queries row q, corpus row m, d) where d
/// is the shared column count. Throws ValidationError if column counts differ.
Eigen::MatrixXd batch_sq_euclidean(const ConstRowsRef& queries, const ConstRowsRef& corpus);

}  // namespace progsearch
