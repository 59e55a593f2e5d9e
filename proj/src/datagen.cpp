#include "progsearch/datagen.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "progsearch/errors.hpp"

namespace progsearch {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
  for (auto& word : s_) word = splitmix64(seed);
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
}

void validate(const SynthSpec& spec) {
  if (spec.n_docs < 1 || spec.dim < 1 || spec.n_clusters < 1 || spec.n_queries < 1) {
    throw ValidationError("synthetic spec counts must all be at least 1");
  }
  if (spec.n_queries > spec.n_docs) {
    throw ValidationError("n_queries " + std::to_string(spec.n_queries) + " exceeds n_docs " +
                          std::to_string(spec.n_docs));
  }
  if (!(spec.noise_sigma >= 0.0) || !(spec.query_sigma >= 0.0) || !std::isfinite(spec.noise_sigma) ||
      !std::isfinite(spec.query_sigma)) {
    throw ValidationError("sigmas must be finite and non-negative");
  }
  if (!(spec.decay > 0.0 && spec.decay <= 1.0)) {
    throw ValidationError("decay must lie in (0, 1]");
  }
}

SynthData generate(const SynthSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);

  Eigen::VectorXd scale(spec.dim);
  for (Index i = 0; i < spec.dim; ++i) scale(i) = std::pow(spec.decay, static_cast<double>(i));

  Eigen::MatrixXd centers(spec.n_clusters, spec.dim);
  for (Index c = 0; c < spec.n_clusters; ++c) {
    for (Index i = 0; i < spec.dim; ++i) centers(c, i) = scale(i) * rng.normal();
  }

  RowMatrixXf docs(spec.n_docs, spec.dim);
  for (Index r = 0; r < spec.n_docs; ++r) {
    const auto c = static_cast<Index>(rng.below(static_cast<std::uint64_t>(spec.n_clusters)));
    for (Index i = 0; i < spec.dim; ++i) {
      docs(r, i) = static_cast<float>(centers(c, i) + spec.noise_sigma * scale(i) * rng.normal());
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(spec.n_docs));
  std::iota(order.begin(), order.end(), Index{0});
  for (Index i = 0; i < spec.n_queries; ++i) {
    const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(spec.n_docs - i)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }

  RowMatrixXf queries(spec.n_queries, spec.dim);
  std::vector<DocId> truth(static_cast<std::size_t>(spec.n_queries));
  for (Index q = 0; q < spec.n_queries; ++q) {
    const Index src = order[static_cast<std::size_t>(q)];
    truth[static_cast<std::size_t>(q)] = static_cast<DocId>(src);
    for (Index i = 0; i < spec.dim; ++i) {
      queries(q, i) = static_cast<float>(static_cast<double>(docs(src, i)) + spec.query_sigma * rng.normal());
    }
  }

  return SynthData{EmbeddingMatrix(std::move(docs)), QueryBatch{std::move(queries), std::move(truth)}};
}

}  // namespace progsearch
