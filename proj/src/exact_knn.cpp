#include "progsearch/exact_knn.hpp"

#include <algorithm>
#include <string>

#include "progsearch/distance.hpp"
#include "progsearch/errors.hpp"

namespace progsearch {

namespace {

bool hit_before(const RowHit& a, const RowHit& b) {
  return a.sq_distance < b.sq_distance || (a.sq_distance == b.sq_distance && a.id < b.id);
}

/// Bounded max-heap keeping the k best hits seen so far.
class TopK {
 public:
  explicit TopK(Index k) : k_(static_cast<std::size_t>(k)) { heap_.reserve(k_); }

  void offer(double dist, DocId id, Index row) {
    if (heap_.size() < k_) {
      heap_.push_back({dist, id, row});
      std::push_heap(heap_.begin(), heap_.end(), hit_before);
      return;
    }
    const RowHit& worst = heap_.front();
    if (dist > worst.sq_distance || (dist == worst.sq_distance && id > worst.id)) return;
    std::pop_heap(heap_.begin(), heap_.end(), hit_before);
    heap_.back() = {dist, id, row};
    std::push_heap(heap_.begin(), heap_.end(), hit_before);
  }

  std::vector<RowHit> take_sorted() {
    std::sort_heap(heap_.begin(), heap_.end(), hit_before);
    return std::move(heap_);
  }

 private:
  std::size_t k_;
  std::vector<RowHit> heap_;
};

void check_width(const MatrixView& corpus, const ConstRowsRef& queries, Index d) {
  const Index limit = std::min(corpus.dim(), queries.cols());
  if (d < 1 || d > limit) {
    throw ValidationError("search width " + std::to_string(d) + " outside [1, " + std::to_string(limit) + "]");
  }
}

void check_k(Index k) {
  if (k < 1) throw ValidationError("k must be at least 1, got " + std::to_string(k));
}

// Query tile and row block sizes for the shared scan. A block of rows is about
// 128 KiB at width d so it stays cache resident while the tile's queries pass
// over it.
constexpr Index kQueryTile = 8;
Index row_block(Index d) { return std::max<Index>(16, 32768 / d); }

std::vector<NeighborList> to_neighbors(std::vector<std::vector<RowHit>>&& hits) {
  std::vector<NeighborList> out(hits.size());
  for (std::size_t q = 0; q < hits.size(); ++q) {
    out[q].reserve(hits[q].size());
    for (const RowHit& h : hits[q]) out[q].push_back({h.id, h.sq_distance});
  }
  return out;
}

std::vector<Index> rows_for(const MatrixView& corpus, std::span<const DocId> subset) {
  if (subset.empty()) throw EmptyInputError("candidate subset is empty");
  IdIndex index(corpus.ids());
  std::vector<Index> rows;
  rows.reserve(subset.size());
  for (DocId id : subset) {
    auto row = index.find(id);
    if (!row) throw ValidationError("subset id " + std::to_string(id) + " not in corpus");
    rows.push_back(*row);
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

}  // namespace

std::vector<std::vector<RowHit>> scan_shared(const MatrixView& corpus, const ConstRowsRef& queries, Index d,
                                             Index k, std::optional<std::span<const Index>> rows) {
  check_width(corpus, queries, d);
  check_k(k);
  const Index n = rows ? static_cast<Index>(rows->size()) : corpus.n_rows();
  if (n == 0) throw EmptyInputError("no candidate rows to search");

  const Index kk = std::min(k, n);
  const Index n_queries = queries.rows();
  const Index block = row_block(d);
  const Index n_tiles = (n_queries + kQueryTile - 1) / kQueryTile;
  const float* base = corpus.data();
  const Index stride = corpus.stride();
  const auto ids = corpus.ids();
  const Index* row_list = rows ? rows->data() : nullptr;

  std::vector<std::vector<RowHit>> out(static_cast<std::size_t>(n_queries));

#pragma omp parallel for schedule(dynamic, 1)
  for (Index tile = 0; tile < n_tiles; ++tile) {
    const Index q0 = tile * kQueryTile;
    const Index q1 = std::min(n_queries, q0 + kQueryTile);
    std::vector<TopK> heaps(static_cast<std::size_t>(q1 - q0), TopK(kk));
    for (Index b0 = 0; b0 < n; b0 += block) {
      const Index b1 = std::min(n, b0 + block);
      for (Index q = q0; q < q1; ++q) {
        const float* qp = queries.row(q).data();
        TopK& heap = heaps[static_cast<std::size_t>(q - q0)];
        for (Index j = b0; j < b1; ++j) {
          const Index r = row_list ? row_list[j] : j;
          heap.offer(detail::sq_l2(qp, base + r * stride, d), ids[static_cast<std::size_t>(r)], r);
        }
      }
    }
    for (Index q = q0; q < q1; ++q) out[static_cast<std::size_t>(q)] = heaps[static_cast<std::size_t>(q - q0)].take_sorted();
  }
  return out;
}

std::vector<std::vector<RowHit>> scan_per_query(const MatrixView& corpus, const ConstRowsRef& queries, Index d,
                                                Index k, const std::vector<std::vector<Index>>& pools) {
  check_width(corpus, queries, d);
  check_k(k);
  if (static_cast<Index>(pools.size()) != queries.rows()) {
    throw ValidationError("one candidate pool per query required");
  }
  for (const auto& pool : pools) {
    if (pool.empty()) throw EmptyInputError("a query has an empty candidate pool");
  }

  const Index n_queries = queries.rows();
  const float* base = corpus.data();
  const Index stride = corpus.stride();
  const auto ids = corpus.ids();
  std::vector<std::vector<RowHit>> out(static_cast<std::size_t>(n_queries));

#pragma omp parallel for schedule(dynamic, 16)
  for (Index q = 0; q < n_queries; ++q) {
    const auto& pool = pools[static_cast<std::size_t>(q)];
    TopK heap(std::min<Index>(k, static_cast<Index>(pool.size())));
    const float* qp = queries.row(q).data();
    for (Index r : pool) heap.offer(detail::sq_l2(qp, base + r * stride, d), ids[static_cast<std::size_t>(r)], r);
    out[static_cast<std::size_t>(q)] = heap.take_sorted();
  }
  return out;
}

std::vector<NeighborList> topk(const MatrixView& corpus, const ConstRowsRef& queries, Index d, Index k,
                               std::optional<std::span<const DocId>> subset) {
  if (corpus.n_rows() == 0) throw EmptyInputError("corpus is empty");
  if (subset) {
    const std::vector<Index> rows = rows_for(corpus, *subset);
    return to_neighbors(scan_shared(corpus, queries, d, k, std::span<const Index>(rows)));
  }
  return to_neighbors(scan_shared(corpus, queries, d, k));
}

std::vector<NeighborList> topk(const EmbeddingMatrix& corpus, const QueryBatch& queries, Index d, Index k,
                               std::optional<std::span<const DocId>> subset) {
  return topk(corpus.view(), ConstRowsRef(queries.data), d, k, subset);
}

std::vector<Neighbor> top1(const MatrixView& corpus, const ConstRowsRef& queries, Index d,
                           std::optional<std::span<const DocId>> subset) {
  auto lists = topk(corpus, queries, d, 1, subset);
  std::vector<Neighbor> out;
  out.reserve(lists.size());
  for (auto& list : lists) out.push_back(list.front());
  return out;
}

std::vector<Neighbor> top1(const EmbeddingMatrix& corpus, const QueryBatch& queries, Index d,
                           std::optional<std::span<const DocId>> subset) {
  return top1(corpus.view(), ConstRowsRef(queries.data), d, subset);
}

}  // namespace progsearch
