#include "progsearch/progressive.hpp"

#include <algorithm>

#include "progsearch/errors.hpp"

namespace progsearch {

const char* to_string(PoolMode mode) { return mode == PoolMode::shared ? "shared" : "per_query"; }

PoolMode parse_pool_mode(const std::string& s) {
  if (s == "shared") return PoolMode::shared;
  if (s == "per_query" || s == "per-query") return PoolMode::per_query;
  throw ValidationError("unknown pool mode '" + s + "' (expected shared or per-query)");
}

void validate(const ProgressiveConfig& cfg, Index corpus_dim) {
  if (cfg.start_dim < 1) throw ValidationError("start dim must be at least 1");
  if (cfg.start_dim > cfg.max_dim) {
    throw ValidationError("start dim " + std::to_string(cfg.start_dim) + " exceeds max dim " +
                          std::to_string(cfg.max_dim));
  }
  if (cfg.initial_k < 1) throw ValidationError("initial k must be at least 1");
  if (corpus_dim > 0 && cfg.max_dim > corpus_dim) {
    throw ValidationError("max dim " + std::to_string(cfg.max_dim) + " exceeds corpus dim " +
                          std::to_string(corpus_dim));
  }
}

std::vector<Stage> StageSchedule::all() const {
  std::vector<Stage> out = stages;
  out.push_back(final_stage);
  return out;
}

StageSchedule build_schedule(const ProgressiveConfig& cfg) {
  validate(cfg);
  StageSchedule schedule;
  schedule.final_stage = {cfg.max_dim, 1};
  if (cfg.start_dim == cfg.max_dim) return schedule;

  Index dim = cfg.start_dim;
  Index k = cfg.initial_k;
  schedule.stages.push_back({dim, k});
  for (dim *= 2; dim < cfg.max_dim; dim *= 2) {
    k = std::max<Index>(1, k / 2);
    schedule.stages.push_back({dim, k});
  }
  return schedule;
}

namespace {

std::vector<Index> rows_of(const std::vector<RowHit>& hits) {
  std::vector<Index> rows;
  rows.reserve(hits.size());
  for (const RowHit& h : hits) rows.push_back(h.row);
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::vector<Index> union_rows(const std::vector<std::vector<RowHit>>& hits) {
  std::vector<Index> rows;
  for (const auto& list : hits) {
    for (const RowHit& h : list) rows.push_back(h.row);
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

std::vector<Neighbor> answers_of(const std::vector<std::vector<RowHit>>& hits) {
  std::vector<Neighbor> out;
  out.reserve(hits.size());
  for (const auto& list : hits) out.push_back({list.front().id, list.front().sq_distance});
  return out;
}

void check_inputs(const MatrixView& corpus, const ConstRowsRef& queries, const ProgressiveConfig& cfg) {
  validate(cfg, corpus.dim());
  if (queries.cols() < cfg.max_dim) {
    throw ValidationError("query dim " + std::to_string(queries.cols()) + " below max dim " +
                          std::to_string(cfg.max_dim));
  }
  if (corpus.n_rows() == 0) throw EmptyInputError("corpus is empty");
}

// Pools hold row positions, sorted ascending. Row order never affects results:
// every stage re-ranks by (distance, id).

SearchTrace run_per_query(const MatrixView& corpus, const ConstRowsRef& queries, const StageSchedule& schedule,
                          bool trace) {
  const auto n_queries = static_cast<std::size_t>(queries.rows());
  SearchTrace out;
  std::vector<std::vector<std::vector<Index>>> history;  // [stage][query] surviving rows
  std::vector<std::vector<Index>> pools;
  std::vector<std::vector<RowHit>> hits;

  bool first = true;
  for (const Stage& stage : schedule.all()) {
    hits = first ? scan_shared(corpus, queries, stage.dim, stage.k)
                 : scan_per_query(corpus, queries, stage.dim, stage.k, pools);
    if (trace) {
      if (out.stages.empty()) out.stages.resize(n_queries);
      for (std::size_t q = 0; q < n_queries; ++q) {
        const Index before = first ? corpus.n_rows() : static_cast<Index>(pools[q].size());
        out.stages[q].push_back({stage.dim, stage.k, before, static_cast<Index>(hits[q].size()), false});
      }
    }
    pools.resize(n_queries);
    for (std::size_t q = 0; q < n_queries; ++q) pools[q] = rows_of(hits[q]);
    if (trace) history.push_back(pools);
    first = false;
  }

  out.answers = answers_of(hits);
  if (trace) {
    for (std::size_t q = 0; q < n_queries; ++q) {
      const Index answer_row = hits[q].front().row;
      for (std::size_t s = 0; s < history.size(); ++s) {
        out.stages[q][s].answer_present = std::binary_search(history[s][q].begin(), history[s][q].end(), answer_row);
      }
    }
  }
  return out;
}

SearchTrace run_shared(const MatrixView& corpus, const ConstRowsRef& queries, const StageSchedule& schedule,
                       bool trace) {
  const auto n_queries = static_cast<std::size_t>(queries.rows());
  SearchTrace out;
  std::vector<std::vector<Index>> history;  // [stage] surviving rows
  std::vector<Index> pool;
  std::vector<std::vector<RowHit>> hits;
  std::vector<StageTrace> batch_trace;

  bool first = true;
  for (const Stage& stage : schedule.all()) {
    const Index before = first ? corpus.n_rows() : static_cast<Index>(pool.size());
    hits = first ? scan_shared(corpus, queries, stage.dim, stage.k)
                 : scan_shared(corpus, queries, stage.dim, stage.k, std::span<const Index>(pool));
    first = false;
    pool = union_rows(hits);
    if (trace) {
      batch_trace.push_back({stage.dim, stage.k, before, static_cast<Index>(pool.size()), false});
      history.push_back(pool);
    }
  }

  out.answers = answers_of(hits);
  if (trace) {
    out.stages.assign(n_queries, batch_trace);
    for (std::size_t q = 0; q < n_queries; ++q) {
      const Index answer_row = hits[q].front().row;
      for (std::size_t s = 0; s < history.size(); ++s) {
        out.stages[q][s].answer_present = std::binary_search(history[s].begin(), history[s].end(), answer_row);
      }
    }
  }
  return out;
}

SearchTrace run(const MatrixView& corpus, const ConstRowsRef& queries, const ProgressiveConfig& cfg, bool trace) {
  check_inputs(corpus, queries, cfg);
  const StageSchedule schedule = build_schedule(cfg);
  return cfg.pool_mode == PoolMode::shared ? run_shared(corpus, queries, schedule, trace)
                                           : run_per_query(corpus, queries, schedule, trace);
}

}  // namespace

std::vector<Neighbor> progressive_search(const MatrixView& corpus, const ConstRowsRef& queries,
                                         const ProgressiveConfig& cfg) {
  return run(corpus, queries, cfg, false).answers;
}

std::vector<Neighbor> progressive_search(const EmbeddingMatrix& corpus, const QueryBatch& queries,
                                         const ProgressiveConfig& cfg) {
  return progressive_search(corpus.view(), ConstRowsRef(queries.data), cfg);
}

SearchTrace explain_search(const MatrixView& corpus, const ConstRowsRef& queries, const ProgressiveConfig& cfg) {
  return run(corpus, queries, cfg, true);
}

SearchTrace explain_search(const EmbeddingMatrix& corpus, const QueryBatch& queries, const ProgressiveConfig& cfg) {
  return explain_search(corpus.view(), ConstRowsRef(queries.data), cfg);
}

}  // namespace progsearch
