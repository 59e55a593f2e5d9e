#pragma once

#include <string>
#include <vector>

#include "progsearch/exact_knn.hpp"
#include "progsearch/vecstore.hpp"

namespace progsearch {

/// How surviving candidates are carried between stages. `per_query` keeps one
/// pool per query; `shared` unions every query's neighbours into one pool that
/// the whole batch searches at the next stage.
enum class PoolMode { per_query, shared };

const char* to_string(PoolMode mode);
/// Accepts "per_query", "per-query" and "shared".
PoolMode parse_pool_mode(const std::string& s);

struct ProgressiveConfig {
  Index start_dim = 0;
  Index max_dim = 0;
  Index initial_k = 0;
  PoolMode pool_mode = PoolMode::per_query;

  bool operator==(const ProgressiveConfig&) const = default;
};

/// Throws ValidationError unless 1 <= start_dim <= max_dim and initial_k >= 1,
/// and, when corpus_dim > 0, max_dim <= corpus_dim.
void validate(const ProgressiveConfig& cfg, Index corpus_dim = 0);

struct Stage {
  Index dim;
  Index k;

  bool operator==(const Stage&) const = default;
};

/// Filtering stages followed by the closing 1-NN pass at max_dim.
///
/// The first stage searches at start_dim with initial_k. Each further stage
/// doubles the width and halves k (never below 1), for as long as the doubled
/// width stays under max_dim. When start_dim == max_dim there are no filtering
/// stages at all.
struct StageSchedule {
  std::vector<Stage> stages;
  Stage final_stage{0, 1};

  /// Filtering stages followed by the final stage.
  std::vector<Stage> all() const;
  bool operator==(const StageSchedule&) const = default;
};

StageSchedule build_schedule(const ProgressiveConfig& cfg);

/// Coarse-to-fine search. Returns one neighbour per query with its squared
/// distance at max_dim.
std::vector<Neighbor> progressive_search(const MatrixView& corpus, const ConstRowsRef& queries,
                                         const ProgressiveConfig& cfg);
std::vector<Neighbor> progressive_search(const EmbeddingMatrix& corpus, const QueryBatch& queries,
                                         const ProgressiveConfig& cfg);

struct StageTrace {
  Index dim;
  Index k;
  Index pool_before;  // candidates entering the stage (corpus size for the first)
  Index pool_after;   // candidates surviving it
  bool answer_present;  // final answer is among the survivors
};

struct SearchTrace {
  std::vector<Neighbor> answers;
  /// stages[q] lists every stage, final included, as seen by query q. In
  /// shared mode the pool sizes are batch-wide and identical for all queries.
  std::vector<std::vector<StageTrace>> stages;
};

SearchTrace explain_search(const MatrixView& corpus, const ConstRowsRef& queries, const ProgressiveConfig& cfg);
SearchTrace explain_search(const EmbeddingMatrix& corpus, const QueryBatch& queries, const ProgressiveConfig& cfg);

}  // namespace progsearch
