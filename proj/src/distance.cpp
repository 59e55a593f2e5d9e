#include "progsearch/distance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "progsearch/errors.hpp"

namespace progsearch {

namespace detail {

__attribute__((noinline)) double sq_l2(const float* a, const float* b, Index d) noexcept {
  // Eight double lanes held as two 4-wide halves; lane l accumulates the
  // coordinates i with i % 8 == l.
  using Half = Eigen::Array<double, 4, 1>;
  using FloatHalf = Eigen::Array<float, 4, 1>;
  Half lo = Half::Zero(), hi = Half::Zero();
  Index i = 0;
  for (; i + 8 <= d; i += 8) {
    const Half tl = FloatHalf::Map(a + i).cast<double>() - FloatHalf::Map(b + i).cast<double>();
    const Half th = FloatHalf::Map(a + i + 4).cast<double>() - FloatHalf::Map(b + i + 4).cast<double>();
    lo += tl * tl;
    hi += th * th;
  }
  double lanes[8] = {lo(0), lo(1), lo(2), lo(3), hi(0), hi(1), hi(2), hi(3)};
  for (Index l = 0; i < d; ++i, ++l) {
    const double t = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    lanes[l] += t * t;
  }
  return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
}

}  // namespace detail

double sq_euclidean_prefix(std::span<const float> a, std::span<const float> b, Index d) {
  if (d < 0 || static_cast<std::size_t>(d) > a.size() || static_cast<std::size_t>(d) > b.size()) {
    throw ValidationError("prefix width " + std::to_string(d) + " exceeds vector lengths " +
                          std::to_string(a.size()) + "/" + std::to_string(b.size()));
  }
  return detail::sq_l2(a.data(), b.data(), d);
}

double euclidean(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw ValidationError("length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  return std::sqrt(detail::sq_l2(a.data(), b.data(), static_cast<Index>(a.size())));
}

double cosine_sim(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw ValidationError("length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  const auto n = static_cast<Index>(a.size());
  const Eigen::VectorXd va = Eigen::Map<const Eigen::VectorXf>(a.data(), n).cast<double>();
  const Eigen::VectorXd vb = Eigen::Map<const Eigen::VectorXf>(b.data(), n).cast<double>();
  const double na = va.norm(), nb = vb.norm();
  if (na == 0.0 || nb == 0.0) {
    throw ValidationError("cosine similarity of a zero-norm vector");
  }
  return std::clamp(va.dot(vb) / (na * nb), -1.0, 1.0);
}

Eigen::MatrixXd batch_sq_euclidean(const ConstRowsRef& queries, const ConstRowsRef& corpus) {
  if (queries.cols() != corpus.cols()) {
    throw ValidationError("block widths differ: " + std::to_string(queries.cols()) + " vs " +
                          std::to_string(corpus.cols()));
  }
  const Index d = queries.cols();
  Eigen::MatrixXd out(queries.rows(), corpus.rows());
  for (Index q = 0; q < queries.rows(); ++q) {
    for (Index m = 0; m < corpus.rows(); ++m) {
      out(q, m) = detail::sq_l2(queries.row(q).data(), corpus.row(m).data(), d);
    }
  }
  return out;
}

}  // namespace progsearch
