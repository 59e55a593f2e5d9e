#pragma once

#include <cstdint>
#include <string>

#include "progsearch/vecstore.hpp"

namespace progsearch {

/// Identifies the generator so corpora can be regenerated bit-for-bit:
/// xoshiro256** seeded through splitmix64, Box-Muller normals, multiply-shift
/// bounded integers, partial Fisher-Yates query selection.
inline constexpr const char* kGeneratorAlgorithm = "xoshiro256ss-splitmix64-boxmuller-v1";

/// xoshiro256** with splitmix64 seeding.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  /// Uniform integer in [0, n), n >= 1.
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Clustered corpus whose coordinate spread shrinks geometrically with index,
/// so leading coordinates carry the most signal.
struct SynthSpec {
  Index n_docs = 10000;
  Index dim = 256;
  Index n_clusters = 50;
  /// Within-cluster spread; coordinate i uses noise_sigma * decay^i.
  double noise_sigma = 0.5;
  /// Per-coordinate standard deviation factor, in (0, 1].
  double decay = 0.97;
  Index n_queries = 500;
  /// Isotropic perturbation added to each query's source document.
  double query_sigma = 0.05;
  std::uint64_t seed = 1;
};

void validate(const SynthSpec& spec);

struct SynthData {
  EmbeddingMatrix corpus;
  /// ground_truth holds each query's source document id.
  QueryBatch queries;
};

/// Cluster centres use standard deviation decay^i in coordinate i; each
/// document adds noise_sigma * decay^i Gaussian noise to a uniformly chosen
/// centre. Queries are distinct documents plus N(0, query_sigma^2) noise in
/// every coordinate. Document ids are row indices.
SynthData generate(const SynthSpec& spec);

}  // namespace progsearch
